//! Skew Gram-Schmidt construction of the first `2d` pairs, which the banded
//! recursion needs before it can start.

use rug::Float;

use crate::error::{Error, Result};
use crate::moments::MomentTable;
use crate::num::exact_string;
use crate::polynomials::{moment_form_with_scale, skew_product, Poly, SkewPolyPair};
use crate::weight::WeightSpec;

#[derive(Clone, Debug)]
pub struct BootstrapResult {
    /// `φ₀ = w`, `φ₁ = xw`, `φ₂ = (x² + c₀⁽²⁾)w`, `φ₃ = (x³ + c₁⁽³⁾x)w`.
    pub pairs: Vec<SkewPolyPair>,
    pub g0: Float,
    pub g2: Float,
    pub c02: Float,
    pub c13: Float,
}

impl BootstrapResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "c0_2": exact_string(&self.c02),
            "c1_3": exact_string(&self.c13),
            "g0": exact_string(&self.g0),
            "g2": exact_string(&self.g2),
            "pairs": self.pairs.iter().map(SkewPolyPair::to_json).collect::<Vec<_>>(),
        })
    }
}

/// `-num / den` where both are `∫ a b w²`, failing when the denominator has
/// cancelled down to rounding level.
fn ratio(
    num: (&Poly, &Poly),
    den: (&Poly, &Poly),
    moments: &MomentTable,
    what: &str,
) -> Result<Float> {
    let (n, _) = moment_form_with_scale(num.0, num.1, moments)?;
    let (d, d_scale) = moment_form_with_scale(den.0, den.1, moments)?;
    let floor = Float::with_val(moments.prec(), &d_scale * crate::num::epsilon(moments.prec() / 2));
    if Float::with_val(moments.prec(), d.abs_ref()) <= floor {
        return Err(Error::DegenerateWeight(format!(
            "denominator of {what} vanished ({:e})",
            d.to_f64()
        )));
    }
    Ok(-(n / d))
}

/// The two Gram-Schmidt conditions `∫φ₂ψ₁ = 0` and `∫φ₃ψ₀ = 0` fix
/// `c₀⁽²⁾` and `c₁⁽³⁾`; every other relation among indices `< 4` holds by parity.
pub fn bootstrap_d2(spec: &WeightSpec, moments: &MomentTable) -> Result<BootstrapResult> {
    if !spec.is_quartic() {
        return Err(Error::Unsupported(format!(
            "bootstrap is wired for d = 2 only, got d = {}",
            spec.degree_d
        )));
    }
    if moments.k_max() < 10 {
        return Err(Error::InsufficientMoments {
            required: 10,
            available: moments.k_max(),
        });
    }
    let prec = moments.prec();
    let v_prime = spec.v_prime_poly(prec);
    let x = Poly::monomial(prec, 1);
    let x_vp = x.mul(&v_prime);
    // 1 - x V'(x), the polynomial part of ψ₁
    let one_minus_xvp = Poly::one(prec).sub(&x_vp);

    let c02 = ratio(
        (&Poly::monomial(prec, 2), &one_minus_xvp),
        (&Poly::one(prec), &one_minus_xvp),
        moments,
        "c0^(2)",
    )?;
    let c13 = ratio(
        (&Poly::monomial(prec, 3), &v_prime),
        (&x, &v_prime),
        moments,
        "c1^(3)",
    )?;

    let zero = Float::new(prec);
    let one = Float::with_val(prec, 1);
    let phis = [
        Poly::one(prec),
        Poly::monomial(prec, 1),
        Poly::from_coeffs(prec, vec![c02.clone(), zero.clone(), one.clone()]),
        Poly::from_coeffs(prec, vec![zero.clone(), c13.clone(), zero, one]),
    ];
    let pairs = phis
        .into_iter()
        .enumerate()
        .map(|(n, p)| SkewPolyPair::from_phi(n, p, spec))
        .collect::<Result<Vec<_>>>()?;

    let g0 = skew_product(&pairs[0], &pairs[1], moments)?;
    let g2 = skew_product(&pairs[2], &pairs[3], moments)?;
    for (idx, g) in [(0, &g0), (2, &g2)] {
        if g.cmp0() != Some(std::cmp::Ordering::Greater) {
            return Err(Error::DegenerateNormalization {
                index: idx,
                value: g.to_f64(),
            });
        }
    }

    let tol = Float::with_val(prec, &g0 * 1e-12);
    for (a, b) in [(2, 1), (3, 0)] {
        let s = skew_product(&pairs[a], &pairs[b], moments)?;
        if Float::with_val(prec, s.abs_ref()) > tol {
            return Err(Error::InternalConsistency(format!(
                "Gram-Schmidt condition on (phi_{a}, psi_{b}) left {:e}",
                s.to_f64()
            )));
        }
    }

    Ok(BootstrapResult {
        pairs,
        g0,
        g2,
        c02,
        c13,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{moments_closed_form_alpha0, moments_quadrature};
    use crate::num::rel_diff;

    const P: u32 = 256;

    #[test]
    fn alpha0_coefficients_reduce_to_moment_ratio() {
        let m = moments_closed_form_alpha0(16, P);
        let b = bootstrap_d2(&WeightSpec::quartic(0.0), &m).unwrap();
        let ratio = Float::with_val(P, m.get(2) / m.get(0));
        assert!(rel_diff(&b.c02, &ratio) < 1e-70);
        assert!(rel_diff(&b.c13, &Float::with_val(P, &ratio * -3i32)) < 1e-70);
        assert!((b.c02.to_f64() - 0.477_988_797_486_125).abs() < 1e-14);
        assert!((b.c13.to_f64() + 1.433_966_392_458_375).abs() < 1e-14);
    }

    #[test]
    fn g0_is_half_m0_for_any_alpha() {
        for alpha in [0.0, 1.0, -1.0, 2.0] {
            let spec = WeightSpec::quartic(alpha);
            let m = moments_quadrature(&spec, 16, P).unwrap();
            let b = bootstrap_d2(&spec, &m).unwrap();
            let half = Float::with_val(P, m.get(0) / 2u32);
            assert!(rel_diff(&b.g0, &half) < 1e-60, "alpha = {alpha}");
            assert!(b.g2 > 0);
            assert!(b.c02.is_finite() && b.c13.is_finite());
        }
    }

    #[test]
    fn four_by_four_gram_is_block_diagonal() {
        let spec = WeightSpec::quartic(1.0);
        let m = moments_quadrature(&spec, 16, P).unwrap();
        let b = bootstrap_d2(&spec, &m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let s = skew_product(&b.pairs[i], &b.pairs[j], &m).unwrap();
                let g = if i < 2 { &b.g0 } else { &b.g2 };
                let expect = Float::with_val(P, g * crate::polynomials::z_entry(i, j));
                let r = Float::with_val(P, &s - &expect).abs() / g;
                assert!(r < 1e-10, "({i}, {j}) residual {r}");
            }
        }
    }

    #[test]
    fn needs_moments_through_ten() {
        let m = moments_closed_form_alpha0(8, P);
        assert!(matches!(
            bootstrap_d2(&WeightSpec::quartic(0.0), &m),
            Err(Error::InsufficientMoments { required: 10, .. })
        ));
    }

    #[test]
    fn other_degrees_refused() {
        let spec = WeightSpec::new(vec![0.0, 0.0, 1.0]).unwrap();
        let m = moments_quadrature(&spec, 16, 128).unwrap();
        assert!(matches!(bootstrap_d2(&spec, &m), Err(Error::Unsupported(_))));
    }
}
