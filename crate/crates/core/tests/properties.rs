use approx::assert_relative_eq;
use proptest::prelude::*;
use rug::Float;

use skewpoly::analysis::gram_report;
use skewpoly::analysis::roots::real_roots;
use skewpoly::bootstrap::bootstrap_d2;
use skewpoly::moments::{moments_quadrature, moments_recursion};
use skewpoly::polynomials::{moment_form, psi_from_phi, z_entry, Poly};
use skewpoly::recursion_integral::{required_k_max, run_integral};
use skewpoly::weight::WeightSpec;

const PREC: u32 = 160;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn skew_form_is_antisymmetric(
        alpha in -1.0f64..2.0,
        a in prop::collection::vec(-3.0f64..3.0, 1..7),
        b in prop::collection::vec(-3.0f64..3.0, 1..7),
    ) {
        let spec = WeightSpec::quartic(alpha);
        let moments = moments_quadrature(&spec, 24, PREC).unwrap();
        let (p, q) = (Poly::from_f64(PREC, &a), Poly::from_f64(PREC, &b));
        let pq = moment_form(&p, &psi_from_phi(&q, &spec), &moments).unwrap();
        let qp = moment_form(&q, &psi_from_phi(&p, &spec), &moments).unwrap();
        let scale = 1.0 + pq.to_f64().abs();
        prop_assert!((pq + qp).to_f64().abs() <= 1e-30 * scale);
    }

    #[test]
    fn moment_recursion_tracks_quadrature(alpha in -1.0f64..3.0) {
        let spec = WeightSpec::quartic(alpha);
        let quad = moments_quadrature(&spec, 30, PREC).unwrap();
        let rec = moments_recursion(quad.get(0), quad.get(2), &spec, 30).unwrap();
        for k in (0..=30).step_by(2) {
            assert_relative_eq!(rec.get(k).to_f64(), quad.get(k).to_f64(), max_relative = 1e-12);
        }
    }

    #[test]
    fn gram_is_block_diagonal(alpha in -0.5f64..2.0, half in 2usize..5) {
        let n_max = 2 * half;
        let spec = WeightSpec::quartic(alpha);
        let moments = moments_quadrature(&spec, required_k_max(n_max), PREC).unwrap();
        let boot = bootstrap_d2(&spec, &moments).unwrap();
        let run = run_integral(&spec, &moments, &boot, n_max).unwrap();
        let g = gram_report(&run.pairs, n_max + 2, &moments).unwrap();
        prop_assert!(g.max_residual <= 1e-25, "{}", g.max_residual);
        prop_assert!(g.g_sequence.iter().all(|v| v.is_sign_positive()));
    }

    #[test]
    fn distinct_real_roots_are_all_found(mut rs in prop::collection::vec(-4.0f64..4.0, 1..8)) {
        rs.sort_by(f64::total_cmp);
        rs.dedup_by(|a, b| (*a - *b).abs() < 1e-2);
        let mut p = Poly::one(PREC);
        for r in &rs {
            p = p.mul(&Poly::from_f64(PREC, &[-r, 1.0]));
        }
        let scan = real_roots(&p, 1.0);
        prop_assert!(scan.complete);
        prop_assert_eq!(scan.roots.len(), rs.len());
        for (found, want) in scan.roots.iter().zip(&rs) {
            prop_assert!((found.x.to_f64() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn z_is_antisymmetric_with_unit_blocks(n in 0usize..50, m in 0usize..50) {
        prop_assert_eq!(z_entry(n, m), -z_entry(m, n));
        let expect = if n / 2 == m / 2 && n != m { if n % 2 == 0 { 1 } else { -1 } } else { 0 };
        prop_assert_eq!(z_entry(n, m), expect);
    }
}

#[test]
fn precision_is_carried_through() {
    let p = Poly::from_f64(PREC, &[1.0, 2.0]);
    let x = Float::with_val(PREC, 0.5);
    assert_eq!(p.eval(&x).prec(), PREC);
}
