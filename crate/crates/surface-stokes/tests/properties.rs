//! Property tests for the geometric transforms and filtering policies.

use proptest::prelude::*;
use surface_stokes::experiments::{rows_from_csv, rows_to_csv, LevelRow};
use surface_stokes::fem::FeFunction;
use surface_stokes::geometry::SurfaceGeometry;
use surface_stokes::killing::threshold_select;
use surface_stokes::linalg::{add, cross, dot, norm, normalize, scale, sub};
use surface_stokes::solver::EigenSet;

fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// piola_pullback after piola_lift is the identity on face-tangent
    /// vectors, and the lift is tangent to the surface.
    #[test]
    fn piola_round_trip(
        c in 1.0f64..2.0,
        theta in 0.2f64..2.9,
        phi in -3.1f64..3.1,
        offset in -0.08f64..0.08,
        tilt in 0.0f64..0.08,
        tilt_dir in -3.1f64..3.1,
        qa in -2.0f64..2.0,
        qb in -2.0f64..2.0,
    ) {
        let geom = SurfaceGeometry::new(c).unwrap();
        // a point near the surface
        let on_surface = {
            let u = unit_vector(theta, phi);
            [u[0], u[1], c * u[2]]
        };
        let ev0 = geom.closest_point(on_surface).unwrap();
        let x = add(on_surface, scale(offset, ev0.nu));
        let ev = geom.closest_point(x).unwrap();
        // a face normal tilted a few degrees from nu
        let t_ref = if ev.nu[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let e1 = normalize(cross(ev.nu, t_ref));
        let e2 = cross(ev.nu, e1);
        let tilt_vec = add(scale(tilt * tilt_dir.cos(), e1), scale(tilt * tilt_dir.sin(), e2));
        let nu_face = normalize(add(ev.nu, tilt_vec));
        // a face-tangent vector
        let raw = add(scale(qa, e1), scale(qb, e2));
        let q_bar = sub(raw, scale(dot(raw, nu_face), nu_face));
        let q = geom.piola_lift(&ev, nu_face, q_bar).unwrap();
        prop_assert!(dot(q, ev.nu).abs() <= 1e-12 * (1.0 + norm(q)));
        let back = geom.piola_pullback(&ev, nu_face, q).unwrap();
        prop_assert!(norm(sub(back, q_bar)) <= 1e-10 * (1.0 + norm(q_bar)));
        // and the reverse composition
        let lifted = geom.piola_lift(&ev, nu_face, back).unwrap();
        prop_assert!(norm(sub(lifted, q)) <= 1e-10 * (1.0 + norm(q)));
    }

    /// Enlarging the threshold never removes indices from the selected set.
    #[test]
    fn threshold_selection_monotone(
        l1 in -1e-3f64..0.05,
        d2 in 0.0f64..0.05,
        d3 in 0.0f64..0.05,
        h1 in 1e-3f64..0.45,
        h2 in 1e-3f64..0.45,
        alpha in 1.0f64..1.99,
    ) {
        let vals = vec![l1, l1 + d2, l1 + d2 + d3];
        let eigs = EigenSet {
            eigenvalues: vals,
            eigenvectors: (0..3).map(|_| FeFunction::zeros(1)).collect(),
            residuals: vec![0.0; 3],
        };
        let (lo, hi) = if h1.powf(alpha) - 2.0 * h1 * h1 <= h2.powf(alpha) - 2.0 * h2 * h2 {
            (h1, h2)
        } else {
            (h2, h1)
        };
        let small = threshold_select(&eigs, lo, alpha);
        let large = threshold_select(&eigs, hi, alpha);
        prop_assert!(small.iter().all(|i| large.contains(i)), "{small:?} not within {large:?}");
    }

    /// CSV serialization round-trips rows bit-exactly.
    #[test]
    fn csv_round_trip(
        h in 1e-6f64..1.0,
        energy in proptest::num::f64::POSITIVE,
        l2 in 1e-12f64..1e3,
        lam1 in -1e-2f64..1.0,
        eoc in proptest::option::of(-3.0f64..3.0),
    ) {
        let row = LevelRow {
            level: 3,
            h,
            energy,
            l2,
            h1: l2 * 3.0,
            pk_norm: l2 / 7.0,
            lam: [lam1, lam1 + 0.1, lam1 + 0.2],
            selected: vec![1, 3],
            eoc_energy: eoc,
            eoc_l2: None,
        };
        let text = rows_to_csv(std::slice::from_ref(&row));
        let parsed = rows_from_csv(&text).unwrap();
        prop_assert_eq!(parsed.len(), 1);
        prop_assert_eq!(&parsed[0], &row);
        prop_assert_eq!(rows_to_csv(&parsed), text);
    }
}
