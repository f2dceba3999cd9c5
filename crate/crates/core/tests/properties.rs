//! Property-based checks over the public surface: coordinate round trips,
//! gradient consistency, transform linearity, parity, and byte-exact file
//! format round trips.

use proptest::prelude::*;
use std::f64::consts::TAU;

use attrad::fields::{phantom_from_spec, GridField, ScalarField};
use attrad::geometry::{line_coords_of_point, point_on_line, Direction, LineCoord, SinogramGrid};
use attrad::hilbert::{hilbert_1d, HilbertConfig};
use attrad::plancherel::pair_contract;
use attrad::radon::{radon_classical, LineQuadratureConfig, Sinogram};
use attrad::Error;

fn central_fd(f: &ScalarField, x: [f64; 2], h: f64) -> [f64; 2] {
    [
        (f.value([x[0] + h, x[1]]) - f.value([x[0] - h, x[1]])) / (2.0 * h),
        (f.value([x[0], x[1] + h]) - f.value([x[0], x[1] - h])) / (2.0 * h),
    ]
}

proptest! {
    #[test]
    fn direction_angle_is_normalized(angle in -1e4f64..1e4) {
        let d = Direction::new(angle);
        prop_assert!(d.angle() >= 0.0 && d.angle() < TAU);
        let [c, s] = d.unit_vector();
        prop_assert!((c - angle.cos()).abs() < 1e-8);
        prop_assert!((s - angle.sin()).abs() < 1e-8);
        let [pc, ps] = d.perp();
        prop_assert!((c * pc + s * ps).abs() < 1e-15);
        prop_assert!((pc * pc + ps * ps - 1.0).abs() < 1e-12);
    }

    #[test]
    fn line_coordinates_round_trip(angle in 0.0f64..TAU, p in -50.0f64..50.0, u in -50.0f64..50.0) {
        let omega = Direction::new(angle);
        let x = point_on_line(LineCoord::new(omega, p), u);
        let (p2, u2) = line_coords_of_point(x, omega);
        prop_assert!((p2 - p).abs() < 1e-9, "p {p} -> {p2}");
        prop_assert!((u2 - u).abs() < 1e-9, "u {u} -> {u2}");
    }

    #[test]
    fn grid_offsets_are_symmetric(n_angles in 2usize..48, n_p in 2usize..300, p_max in 0.1f64..20.0) {
        let grid = SinogramGrid::new(n_angles, n_p, p_max).unwrap();
        let offs = grid.offsets();
        prop_assert_eq!(offs.len(), n_p);
        prop_assert_eq!(offs[0], -p_max);
        prop_assert!((offs[n_p - 1] - p_max).abs() < 1e-12 * p_max);
        for j in 0..n_p {
            prop_assert!((offs[j] + offs[n_p - 1 - j]).abs() < 1e-12 * p_max);
        }
        prop_assert!((grid.dp() * (n_p - 1) as f64 - 2.0 * p_max).abs() < 1e-12 * p_max);
        prop_assert!((grid.domega() * n_angles as f64 - TAU).abs() < 1e-12);
    }

    #[test]
    fn phantom_gradients_match_finite_differences(
        which in 0usize..4,
        x in -4.0f64..4.0,
        y in -4.0f64..4.0,
    ) {
        let spec = [
            "gaussian:cx=0.4,cy=-0.3,sigma=0.8,amp=1.2",
            "smoothed_disc:radius=1.2,eps=0.1",
            "constant_disc_smoothed:cx=0.2",
            "shifted_gaussian_mixture",
        ][which];
        let f = phantom_from_spec(spec).unwrap();
        let g = f.gradient([x, y]).unwrap();
        let fd = central_fd(&f, [x, y], 1e-5);
        for c in 0..2 {
            prop_assert!(
                (g[c] - fd[c]).abs() <= 1e-5 * (1.0 + g[c].abs()),
                "{spec} at ({x}, {y}): analytic {:?} vs fd {:?}", g, fd
            );
        }
    }

    #[test]
    fn hilbert_is_linear(
        vals_f in prop::collection::vec(-10.0f64..10.0, 64),
        vals_g in prop::collection::vec(-10.0f64..10.0, 64),
        alpha in -5.0f64..5.0,
        beta in -5.0f64..5.0,
    ) {
        for cfg in [HilbertConfig::spectral(4), HilbertConfig::direct()] {
            let combo: Vec<f64> = vals_f
                .iter()
                .zip(&vals_g)
                .map(|(a, b)| alpha * a + beta * b)
                .collect();
            let h_combo = hilbert_1d(&combo, &cfg).unwrap();
            let hf = hilbert_1d(&vals_f, &cfg).unwrap();
            let hg = hilbert_1d(&vals_g, &cfg).unwrap();
            let peak = h_combo.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..combo.len() {
                prop_assert!(
                    (h_combo[i] - (alpha * hf[i] + beta * hg[i])).abs() <= 1e-10 * peak
                );
            }
        }
    }

    #[test]
    fn direct_hilbert_maps_even_to_odd(vals in prop::collection::vec(-10.0f64..10.0, 33)) {
        let n = vals.len();
        let even: Vec<f64> = (0..n).map(|i| vals[i] + vals[n - 1 - i]).collect();
        let h = hilbert_1d(&even, &HilbertConfig::direct()).unwrap();
        let peak = h.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            prop_assert!((h[i] + h[n - 1 - i]).abs() <= 1e-11 * peak);
        }
    }

    #[test]
    fn sinogram_file_round_trips_bit_exactly(
        n_angles in 2usize..24,
        n_p in 2usize..24,
        p_max in 0.1f64..100.0,
        seed in any::<u32>(),
    ) {
        let grid = SinogramGrid::new(n_angles, n_p, p_max).unwrap();
        let vals: Vec<f64> = (0..n_angles * n_p)
            .map(|i| ((i as u64 + 1) * (seed as u64 + 7)) as f64 * 1e-3 - 1e3)
            .collect();
        let sino = Sinogram::new(grid, vals).unwrap();
        let mut buf = Vec::new();
        sino.write_asg1(&mut buf).unwrap();
        let back = Sinogram::read_asg1(&buf[..]).unwrap();
        prop_assert_eq!(back.grid(), grid);
        let same = back
            .values()
            .iter()
            .zip(sino.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn field_file_round_trips_bit_exactly(
        n_x in 2usize..24,
        n_y in 2usize..24,
        half in 0.1f64..100.0,
        seed in any::<u32>(),
    ) {
        let vals: Vec<f64> = (0..n_x * n_y)
            .map(|i| ((i as u64 + 3) * (seed as u64 + 11)) as f64 * 1e-4 - 5e2)
            .collect();
        let field = GridField::new(n_x, n_y, half, vals).unwrap();
        let mut buf = Vec::new();
        field.write_afg1(&mut buf).unwrap();
        let back = GridField::read_afg1(&buf[..]).unwrap();
        prop_assert_eq!(back.n_x(), n_x);
        prop_assert_eq!(back.n_y(), n_y);
        prop_assert_eq!(back.half_extent(), half);
        let same = back
            .values()
            .iter()
            .zip(field.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn pgm_header_and_extremes(
        n_x in 2usize..16,
        n_y in 2usize..16,
        seed in any::<u32>(),
    ) {
        let vals: Vec<f64> = (0..n_x * n_y)
            .map(|i| (((i as u64 + 1) * (seed as u64 % 997 + 13)) % 10_000) as f64)
            .collect();
        let field = GridField::new(n_x, n_y, 1.0, vals.clone()).unwrap();
        let mut buf = Vec::new();
        field.write_pgm(&mut buf).unwrap();
        let header = format!("P5\n{n_x} {n_y}\n255\n");
        prop_assert!(buf.starts_with(header.as_bytes()));
        prop_assert_eq!(buf.len(), header.len() + n_x * n_y);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            let payload = &buf[header.len()..];
            prop_assert!(payload.contains(&0u8));
            prop_assert!(payload.contains(&255u8));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn classical_radon_is_linear(
        cx in -1.0f64..1.0,
        cy in -1.0f64..1.0,
        sigma in 0.3f64..1.5,
        amp in 0.1f64..3.0,
        angle in 0.0f64..TAU,
        p in -2.0f64..2.0,
    ) {
        // A pinned integration window makes the quadrature nodes identical
        // for all three fields, so linearity holds to rounding.
        let mut cfg = LineQuadratureConfig::with_step(0.01);
        cfg.u_max = Some(8.0);
        let line = LineCoord::new(Direction::new(angle), p);
        let fa = ScalarField::gaussian([cx, cy], sigma, amp).unwrap();
        let f1 = ScalarField::gaussian([cx, cy], sigma, 1.0).unwrap();
        let fb = ScalarField::gaussian([-cy, cx], 0.9, 0.7).unwrap();
        let sum = ScalarField::add(&fa, &fb);
        let va = radon_classical(&fa, line, &cfg);
        let v1 = radon_classical(&f1, line, &cfg);
        let vb = radon_classical(&fb, line, &cfg);
        let vs = radon_classical(&sum, line, &cfg);
        prop_assert!((va - amp * v1).abs() <= 1e-12 * (1.0 + va.abs()));
        prop_assert!((vs - (va + vb)).abs() <= 1e-12 * (1.0 + vs.abs()));
    }

    #[test]
    fn pair_contract_scales_and_rejects_mismatch(
        n_angles in 2usize..8,
        n_p in 2usize..10,
        lambda in -4.0f64..4.0,
        seed in any::<u32>(),
    ) {
        let grid = SinogramGrid::new(n_angles, n_p, 3.0).unwrap();
        let n = n_angles * n_p;
        let sv: Vec<f64> = (0..n).map(|i| ((i * 7 + seed as usize % 13) % 19) as f64 - 9.0).collect();
        let kv: Vec<f64> = (0..n).map(|i| ((i * 5 + 3) % 17) as f64 - 8.0).collect();
        let s = Sinogram::new(grid, sv.clone()).unwrap();
        let k = Sinogram::new(grid, kv).unwrap();
        let scaled = Sinogram::new(grid, sv.iter().map(|v| lambda * v).collect()).unwrap();
        let v = pair_contract(&s, &k).unwrap().value;
        let vl = pair_contract(&scaled, &k).unwrap().value;
        prop_assert!((vl - lambda * v).abs() <= 1e-12 * (1.0 + vl.abs()));

        let other = SinogramGrid::new(n_angles, n_p + 1, 3.0).unwrap();
        let k2 = Sinogram::zeros(other);
        prop_assert!(matches!(pair_contract(&s, &k2), Err(Error::GridMismatch(_))));
    }
}
