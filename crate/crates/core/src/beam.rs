//! The divergent beam transform: the integral of an attenuation map along a
//! half-line, Da(x, ω) = ∫₀^∞ a(x + tω) dt, truncated at the ray's exit from
//! the field's effective support disc.

use crate::fields::ScalarField;
use crate::geometry::Direction;

/// Quadrature controls for ray integrals.
///
/// `step` is the largest allowed Simpson step along the ray. `cutoff`
/// replaces the infinite upper limit; `None` lets each ray integrate to its
/// exit from the support disc plus one step of padding. A finite cutoff
/// below the exit distance truncates the integral (logged at debug level).
#[derive(Clone, Copy, Debug)]
pub struct BeamQuadratureConfig {
    pub step: f64,
    pub cutoff: Option<f64>,
}

impl BeamQuadratureConfig {
    /// Resolution-independent default tied to the field's scale:
    /// step = support_radius/1024, automatic cutoff.
    pub fn for_field(a: &ScalarField) -> Self {
        let r = a.support_radius();
        BeamQuadratureConfig {
            step: if r > 0.0 { r / 1024.0 } else { 1.0 },
            cutoff: None,
        }
    }

    pub fn with_step(step: f64) -> Self {
        BeamQuadratureConfig { step, cutoff: None }
    }
}

/// Composite Simpson rule over [t0, t1] with step at most `step`.
/// Node placement is deterministic: the interval count is the smallest even
/// n with (t1−t0)/n ≤ step.
pub(crate) fn simpson<F: Fn(f64) -> f64>(f: F, t0: f64, t1: f64, step: f64) -> f64 {
    debug_assert!(step > 0.0);
    if t1 <= t0 {
        return 0.0;
    }
    let mut n = ((t1 - t0) / step).ceil() as usize;
    n = n.max(2);
    n += n % 2;
    let h = (t1 - t0) / n as f64;
    let mut acc = f(t0) + f(t1);
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(t0 + i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    acc += 4.0 * odd + 2.0 * even;
    acc * h / 3.0
}

/// Entry and exit parameters of the ray x + t·d, t ≥ 0, through the disc of
/// radius `r` about the origin, or `None` when the ray misses it.
pub(crate) fn ray_disc_clip(x: [f64; 2], d: [f64; 2], r: f64) -> Option<(f64, f64)> {
    if r <= 0.0 {
        return None;
    }
    let b = x[0] * d[0] + x[1] * d[1];
    let c = x[0] * x[0] + x[1] * x[1] - r * r;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let t1 = -b + s;
    if t1 <= 0.0 {
        return None;
    }
    Some(((-b - s).max(0.0), t1))
}

/// Da(x, ω): the integral of `a` along the ray from `x` in direction ω.
///
/// Exact zero when the ray never meets the support disc.
pub fn divergent_beam(
    a: &ScalarField,
    x: [f64; 2],
    omega: Direction,
    cfg: &BeamQuadratureConfig,
) -> f64 {
    let d = omega.unit_vector();
    let Some((t0, mut t1)) = ray_disc_clip(x, d, a.support_radius()) else {
        return 0.0;
    };
    t1 += cfg.step;
    if let Some(cut) = cfg.cutoff {
        if cut < t1 {
            log::debug!("beam cutoff {cut} below support exit {t1}; truncating");
            t1 = cut;
        }
    }
    if t1 <= t0 {
        return 0.0;
    }
    simpson(
        |t| a.value([x[0] + t * d[0], x[1] + t * d[1]]),
        t0,
        t1,
        cfg.step,
    )
}

/// The weight e^{−Da(x, ω⊥)} applied to a source point on the line l(ω, p).
/// The beam direction is the perpendicular ω⊥, matching the orientation in
/// which the line is traced.
pub fn attenuation_weight(
    a: &ScalarField,
    x: [f64; 2],
    omega: Direction,
    cfg: &BeamQuadratureConfig,
) -> f64 {
    (-divergent_beam(a, x, omega.perp_direction(), cfg)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const SQRT_PI_HALF: f64 = 0.886_226_925_452_758; // ∫₀^∞ e^{−t²} dt

    fn unit_gaussian() -> ScalarField {
        ScalarField::gaussian([0.0, 0.0], 1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_field_gives_zero() {
        let z = ScalarField::zero();
        let cfg = BeamQuadratureConfig::for_field(&z);
        for k in 0..8 {
            assert_eq!(
                divergent_beam(&z, [0.3, -0.2], Direction::new(k as f64), &cfg),
                0.0
            );
        }
    }

    #[test]
    fn half_chord_through_disc_center() {
        let a = ScalarField::smoothed_disc([0.0, 0.0], 1.0, 0.005, 0.7).unwrap();
        let cfg = BeamQuadratureConfig::for_field(&a);
        for k in 0..6 {
            let v = divergent_beam(&a, [0.0, 0.0], Direction::new(1.1 * k as f64), &cfg);
            assert!((v - 0.7).abs() < 5e-3, "got {v}");
        }
    }

    #[test]
    fn gaussian_half_line_integral() {
        let a = unit_gaussian();
        let cfg = BeamQuadratureConfig::for_field(&a);
        for k in 0..6 {
            let v = divergent_beam(&a, [0.0, 0.0], Direction::new(0.9 * k as f64), &cfg);
            assert!((v - SQRT_PI_HALF).abs() < 1e-8, "got {v}");
        }
    }

    #[test]
    fn gaussian_beam_matches_closed_form_off_center() {
        // For a = A·e^{−|x−c|²/σ²} the beam along direction d has the closed
        // form A·e^{−q²/σ²}·(σ√π/2)·erfc(b/σ) with b = ⟨x−c, d⟩ and
        // q² = |x−c|² − b².
        let amp = 0.8;
        let sigma = 1.3;
        let c = [0.4, -0.6];
        let a = ScalarField::gaussian(c, sigma, amp).unwrap();
        let cfg = BeamQuadratureConfig::for_field(&a);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let om = Direction::new(rng.gen_range(0.0..std::f64::consts::TAU));
            let d = om.unit_vector();
            let rx = [x[0] - c[0], x[1] - c[1]];
            let b = rx[0] * d[0] + rx[1] * d[1];
            let q2 = rx[0] * rx[0] + rx[1] * rx[1] - b * b;
            let expect = amp
                * (-q2 / (sigma * sigma)).exp()
                * (sigma * std::f64::consts::PI.sqrt() / 2.0)
                * libm::erfc(b / sigma);
            let got = divergent_beam(&a, x, om, &cfg);
            assert!(
                (got - expect).abs() < 1e-8 * (1.0 + expect),
                "got {got}, expected {expect}"
            );
        }
    }

    #[test]
    fn weight_examples() {
        let z = ScalarField::zero();
        let cfg = BeamQuadratureConfig::for_field(&z);
        assert_eq!(
            attenuation_weight(&z, [1.0, 1.0], Direction::new(0.4), &cfg),
            1.0
        );

        let a = unit_gaussian();
        let cfg = BeamQuadratureConfig::for_field(&a);
        for k in 0..6 {
            let w = attenuation_weight(&a, [0.0, 0.0], Direction::new(0.7 * k as f64), &cfg);
            assert!((w - (-SQRT_PI_HALF).exp()).abs() < 1e-8);
            assert!((w - 0.412_208_114_266_963_7).abs() < 1e-8);
        }
    }

    #[test]
    fn weight_in_unit_interval_for_nonnegative_a() {
        let a = ScalarField::gaussian([0.5, 0.2], 0.8, 2.0).unwrap();
        let cfg = BeamQuadratureConfig::for_field(&a);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let w = attenuation_weight(
                &a,
                x,
                Direction::new(rng.gen_range(0.0..std::f64::consts::TAU)),
                &cfg,
            );
            assert!(w > 0.0 && w <= 1.0);
        }
    }

    #[test]
    fn additivity_along_the_ray() {
        let a = ScalarField::gaussian([0.1, -0.3], 1.1, 0.9).unwrap();
        let cfg = BeamQuadratureConfig::for_field(&a);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let om = Direction::new(rng.gen_range(0.0..std::f64::consts::TAU));
            let d = om.unit_vector();
            let s = rng.gen_range(0.1..3.0);
            let whole = divergent_beam(&a, x, om, &cfg);
            let head = simpson(
                |t| a.value([x[0] + t * d[0], x[1] + t * d[1]]),
                0.0,
                s,
                cfg.step,
            );
            let tail = divergent_beam(&a, [x[0] + s * d[0], x[1] + s * d[1]], om, &cfg);
            assert!((whole - (head + tail)).abs() < 1e-8, "split at {s}");
        }
    }

    #[test]
    fn scaling_linearity_with_identical_nodes() {
        // Same sigma and center give the same support radius, hence the same
        // node placement, so the quadratures scale exactly.
        let a1 = ScalarField::gaussian([0.2, 0.1], 0.9, 1.0).unwrap();
        let a3 = ScalarField::gaussian([0.2, 0.1], 0.9, 3.0).unwrap();
        assert_eq!(a1.support_radius(), a3.support_radius());
        let cfg = BeamQuadratureConfig::for_field(&a1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let om = Direction::new(rng.gen_range(0.0..std::f64::consts::TAU));
            let v1 = divergent_beam(&a1, x, om, &cfg);
            let v3 = divergent_beam(&a3, x, om, &cfg);
            assert!((v3 - 3.0 * v1).abs() <= 1e-13 * v3.abs().max(1e-300));
        }
    }

    #[test]
    fn cutoff_truncates() {
        let a = unit_gaussian();
        let mut cfg = BeamQuadratureConfig::for_field(&a);
        cfg.cutoff = Some(1.0);
        let v = divergent_beam(&a, [0.0, 0.0], Direction::new(0.0), &cfg);
        // ∫₀¹ e^{−t²} dt = (√π/2)·erf(1)
        let expect = SQRT_PI_HALF * libm::erf(1.0);
        assert!((v - expect).abs() < 1e-8);
    }

    #[test]
    fn ray_misses_support() {
        let a = unit_gaussian();
        let cfg = BeamQuadratureConfig::for_field(&a);
        let r = a.support_radius();
        // Start outside, pointing away.
        assert_eq!(
            divergent_beam(&a, [r + 1.0, 0.0], Direction::new(0.0), &cfg),
            0.0
        );
    }
}
