//! Built-in numerical self-checks.
//!
//! Each check exercises a cross-cutting invariant end to end and reports a
//! measured figure next to its threshold, so a failure localizes the broken
//! layer without a debugger. The quick variants shrink grids, not checks:
//! every suite runs in both modes.

use std::f64::consts::PI;

use crate::beam::BeamQuadratureConfig;
use crate::fields::{integrate_2d, ScalarField};
use crate::geometry::{LineCoord, SinogramGrid};
use crate::hilbert::spectral_signed;
use crate::plancherel::{
    identity_check_ibp, identity_check_total_derivative, pair_quadrature, PairingConfig,
};
use crate::radon::{forward_sinogram, radon_classical, LineQuadratureConfig};

/// Outcome of one self-check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn from_measure(name: &'static str, measured: f64, threshold: f64) -> Self {
        CheckResult {
            name,
            passed: measured <= threshold,
            detail: format!("measured {measured:.3e}, threshold {threshold:.3e}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One line per check, stable formatting: `ok`/`FAIL`, name, detail.
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {} ({})",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.detail
                )
            })
            .collect()
    }
}

/// Hilbert checks with an explicit multiplier sign, so a deliberately
/// injected sign flip can be shown to fail. Anti-self-adjointness alone
/// cannot catch the flip (−H is also anti-self-adjoint); the closed-form
/// check pins the sign.
pub(crate) fn hilbert_suite(mult_sign: f64, quick: bool) -> Vec<CheckResult> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let n = 256;
    let pairs = if quick { 10 } else { 50 };
    let mut worst_adj = 0.0f64;
    for _ in 0..pairs {
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hf = spectral_signed(&f, 4, mult_sign);
        let hg = spectral_signed(&g, 4, mult_sign);
        let lhs: f64 = hf.iter().zip(&g).map(|(x, y)| x * y).sum();
        let rhs: f64 = f.iter().zip(&hg).map(|(x, y)| x * y).sum();
        worst_adj = worst_adj.max((lhs + rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-30));
    }

    let m = 1024;
    let ps: Vec<f64> = (0..m)
        .map(|j| -20.0 + 40.0 * j as f64 / (m - 1) as f64)
        .collect();
    let row: Vec<f64> = ps.iter().map(|p| 1.0 / (1.0 + p * p)).collect();
    let out = spectral_signed(&row, 8, mult_sign);
    let mut worst_sign = 0.0f64;
    for (j, &p) in ps.iter().enumerate() {
        if p.abs() <= 5.0 {
            worst_sign = worst_sign.max((out[j] - p / (1.0 + p * p)).abs());
        }
    }

    vec![
        CheckResult::from_measure("hilbert_anti_self_adjoint", worst_adj, 1e-6),
        CheckResult::from_measure("hilbert_sign_closed_form", worst_sign, 1e-3),
    ]
}

fn a0_reduction_check(quick: bool) -> CheckResult {
    let (na, np) = if quick { (8, 33) } else { (16, 65) };
    let f = ScalarField::gaussian([0.3, -0.2], 0.9, 1.2).unwrap();
    let z = ScalarField::zero();
    let grid = SinogramGrid::new(na, np, 5.0).unwrap();
    let cfg = LineQuadratureConfig::for_support(f.support_radius());
    let bcfg = BeamQuadratureConfig::with_step(0.01);
    let att = forward_sinogram(&f, &z, grid, &cfg, &bcfg);
    let mut mismatched = 0usize;
    for k in 0..na {
        for j in 0..np {
            let cls = radon_classical(&f, grid.line(k, j), &cfg);
            if att.value(k, j).to_bits() != cls.to_bits() {
                mismatched += 1;
            }
        }
    }
    CheckResult {
        name: "zero_attenuation_reduces_to_classical",
        passed: mismatched == 0,
        detail: format!("{mismatched} of {} samples differ bitwise", na * np),
    }
}

fn fubini_check(quick: bool) -> CheckResult {
    let np = if quick { 257 } else { 513 };
    let f = ScalarField::gaussian([0.4, -0.3], 0.8, 1.0).unwrap();
    let z = ScalarField::zero();
    let grid = SinogramGrid::new(16, np, 6.0).unwrap();
    let cfg = LineQuadratureConfig::for_support(f.support_radius());
    let bcfg = BeamQuadratureConfig::with_step(0.05);
    let s = forward_sinogram(&f, &z, grid, &cfg, &bcfg);
    let mass = integrate_2d(&f, [-6.0, -6.0], [6.0, 6.0], if quick { 256 } else { 512 })
        .expect("fixed quadrature size");
    let mut worst = 0.0f64;
    for k in 0..grid.n_angles() {
        let row_sum: f64 = s.row(k).iter().sum::<f64>() * grid.dp();
        worst = worst.max((row_sum - mass).abs() / mass.abs());
    }
    CheckResult::from_measure("fubini_row_mass", worst, 1e-4)
}

fn identity_checks(quick: bool) -> Vec<CheckResult> {
    let np = if quick { 257 } else { 513 };
    let f = ScalarField::gaussian([0.0, 0.0], 1.0, 1.0).unwrap();
    let g = ScalarField::gaussian([0.2, 0.1], 0.9, 1.0).unwrap();
    let a = ScalarField::gaussian([0.0, 0.0], 1.5, 0.3).unwrap();
    let grid = SinogramGrid::new(24, np, 6.0).unwrap();
    let cfg = PairingConfig::new(0.03);
    let lines = if quick { 2 } else { 4 };
    let td = identity_check_total_derivative(&f, &g, &a, grid, &cfg, lines, 21)
        .expect("analytic fields carry gradients");
    let ibp = identity_check_ibp(&f, &g, &a, grid, &cfg, lines, 33)
        .expect("analytic fields carry gradients");
    let td_tol = if quick { 2.5e-3 } else { 1e-3 };
    vec![
        CheckResult::from_measure("total_derivative_identity", td.max_rel_residual, td_tol),
        CheckResult::from_measure("integration_by_parts_identity", ibp.max_rel_residual, 1e-8),
        CheckResult::from_measure("integration_by_parts_boundary", ibp.boundary_max, 1e-8),
    ]
}

fn pairing_oracle_check(quick: bool) -> CheckResult {
    // f = g = unit Gaussian, a = 0: the pairing must return π/2.
    let f = ScalarField::gaussian([0.0, 0.0], 1.0, 1.0).unwrap();
    let z = ScalarField::zero();
    let (na, np, step, tol) = if quick {
        (48, 257, 0.03, 8e-3)
    } else {
        (90, 513, 0.02, 2e-3)
    };
    let grid = SinogramGrid::new(na, np, 6.0).unwrap();
    let cfg = PairingConfig::new(step);
    let sino = forward_sinogram(&f, &z, grid, &cfg.data_line, &cfg.beam);
    let r = pair_quadrature(&sino, &f, &z, &cfg).expect("gaussian probe has a gradient");
    CheckResult::from_measure("pairing_gaussian_oracle", (r.value - PI / 2.0).abs(), tol)
}

fn classical_oracle_check() -> CheckResult {
    // R[e^{−|x|²}](ω, p) = √π e^{−p²} at a handful of lines.
    let f = ScalarField::gaussian([0.0, 0.0], 1.0, 1.0).unwrap();
    let cfg = LineQuadratureConfig::for_support(f.support_radius());
    let mut worst = 0.0f64;
    for (k, p) in [(0.0, 0.0), (1.1, 0.6), (2.7, -1.2), (5.0, 2.2)] {
        let v = radon_classical(
            &f,
            LineCoord::new(crate::geometry::Direction::new(k), p),
            &cfg,
        );
        let expect = PI.sqrt() * (-p * p).exp();
        worst = worst.max((v - expect).abs());
    }
    CheckResult::from_measure("classical_gaussian_closed_form", worst, 1e-8)
}

/// Runs every self-check suite; `quick` shrinks grids and sample counts to
/// keep the run under a second or two.
pub fn run_selftest(quick: bool) -> SelftestReport {
    let mut checks = Vec::new();
    checks.push(classical_oracle_check());
    checks.extend(hilbert_suite(1.0, quick));
    checks.push(a0_reduction_check(quick));
    checks.push(fubini_check(quick));
    checks.extend(identity_checks(quick));
    checks.push(pairing_oracle_check(quick));
    SelftestReport { checks }
}
