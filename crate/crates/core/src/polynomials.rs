//! Monic skew-orthogonal pairs `φₙ = pₙ w`, `ψₙ = φₙ' = qₙ w` and the skew
//! product `∫ φₙ ψₘ dx`, evaluated as a bilinear form over the moment table.

use rug::{Assign, Float};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::MomentTable;
use crate::num::exact_string;
use crate::weight::WeightSpec;

/// Dense polynomial in the monomial basis, ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    prec: u32,
    coeffs: Vec<Float>,
}

impl Poly {
    pub fn from_coeffs(prec: u32, coeffs: Vec<Float>) -> Self {
        let mut coeffs: Vec<Float> = coeffs
            .into_iter()
            .map(|c| if c.prec() == prec { c } else { Float::with_val(prec, c) })
            .collect();
        if coeffs.is_empty() {
            coeffs.push(Float::new(prec));
        }
        Poly { prec, coeffs }
    }

    pub fn from_f64(prec: u32, coeffs: &[f64]) -> Self {
        Poly::from_coeffs(prec, coeffs.iter().map(|&c| Float::with_val(prec, c)).collect())
    }

    pub fn zero(prec: u32) -> Self {
        Poly::from_coeffs(prec, Vec::new())
    }

    pub fn one(prec: u32) -> Self {
        Poly::monomial(prec, 0)
    }

    /// `x^k`.
    pub fn monomial(prec: u32, k: usize) -> Self {
        let mut c = vec![Float::new(prec); k + 1];
        c[k] = Float::with_val(prec, 1);
        Poly::from_coeffs(prec, c)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn coeffs(&self) -> &[Float] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Float {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| Float::new(self.prec))
    }

    /// Index of the highest non-zero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn leading(&self) -> &Float {
        &self.coeffs[self.degree()]
    }

    /// Drop trailing zero coefficients.
    pub fn trimmed(mut self) -> Self {
        let len = self.degree() + 1;
        self.coeffs.truncate(len);
        self
    }

    pub fn eval(&self, x: &Float) -> Float {
        let mut acc = Float::new(self.prec.max(x.prec()));
        for c in self.coeffs.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| Float::with_val(self.prec, c * k as u64))
            .collect();
        Poly::from_coeffs(self.prec, c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![Float::new(self.prec); self.coeffs.len() + other.coeffs.len() - 1];
        let mut tmp = Float::new(self.prec);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                tmp.assign(a * b);
                out[i + j] += &tmp;
            }
        }
        Poly::from_coeffs(self.prec, out)
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Poly, scale: &Float) {
        if other.coeffs.len() > self.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), Float::new(self.prec));
        }
        let mut tmp = Float::new(self.prec);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            if b.is_zero() {
                continue;
            }
            tmp.assign(b * scale);
            *a += &tmp;
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_scaled(other, &Float::with_val(self.prec, 1));
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_scaled(other, &Float::with_val(self.prec, -1));
        out
    }

    pub fn neg(&self) -> Poly {
        Poly::from_coeffs(self.prec, self.coeffs.iter().map(|c| Float::with_val(self.prec, -c)).collect())
    }

    pub fn scale(&self, s: &Float) -> Poly {
        Poly::from_coeffs(self.prec, self.coeffs.iter().map(|c| Float::with_val(self.prec, c * s)).collect())
    }

    pub fn multiply_by_x(&self) -> Poly {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(Float::new(self.prec));
        c.extend(self.coeffs.iter().cloned());
        Poly::from_coeffs(self.prec, c)
    }

    pub fn max_abs_coeff(&self) -> Float {
        let mut m = Float::new(self.prec);
        for c in &self.coeffs {
            let a = Float::with_val(self.prec, c.abs_ref());
            if a > m {
                m = a;
            }
        }
        m
    }

    /// True when every coefficient of the parity opposite to `parity` is exactly zero.
    pub fn has_parity(&self, parity: Parity) -> bool {
        let wrong = match parity {
            Parity::Even => 1,
            Parity::Odd => 0,
        };
        self.coeffs.iter().skip(wrong).step_by(2).all(|c| c.is_zero())
    }

    /// Same polynomial at another precision.
    pub fn with_prec(&self, prec: u32) -> Poly {
        Poly::from_coeffs(prec, self.coeffs.iter().map(|c| Float::with_val(prec, c)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// `multiply_by_x` on a bare coefficient list.
pub fn multiply_by_x(coeffs: &Poly) -> Poly {
    coeffs.multiply_by_x()
}

/// Polynomial part of `ψ = (p w)'`: `q = p' - V' p`.
pub fn psi_from_phi(phi: &Poly, spec: &WeightSpec) -> Poly {
    let v_prime = spec.v_prime_poly(phi.prec());
    phi.derivative().sub(&phi.mul(&v_prime)).trimmed()
}

/// `∫ p(x) q(x) w²(x) dx = Σ pᵢ qⱼ M_{i+j}`.
pub fn moment_form(p: &Poly, q: &Poly, moments: &MomentTable) -> Result<Float> {
    moment_form_with_scale(p, q, moments).map(|(v, _)| v)
}

/// The bilinear form together with `Σ |pᵢ qⱼ| M_{i+j}`, the magnitude that
/// rounding errors scale with.
pub fn moment_form_with_scale(p: &Poly, q: &Poly, moments: &MomentTable) -> Result<(Float, Float)> {
    let required = p.degree() + q.degree();
    if required > moments.k_max() {
        return Err(Error::InsufficientMoments {
            required,
            available: moments.k_max(),
        });
    }
    let prec = p.prec().max(q.prec());
    let mut acc = Float::new(prec);
    let mut scale = Float::new(prec);
    let mut inner = Float::new(prec);
    let mut tmp = Float::new(prec);
    let qc = &q.coeffs()[..=q.degree()];
    for (i, a) in p.coeffs()[..=p.degree()].iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        inner.assign(0);
        let mut inner_abs = Float::new(prec);
        for (j, b) in qc.iter().enumerate() {
            if (i + j) % 2 == 1 || b.is_zero() {
                continue;
            }
            tmp.assign(b * moments.get(i + j));
            inner += &tmp;
            tmp.abs_mut();
            inner_abs += &tmp;
        }
        tmp.assign(a * &inner);
        acc += &tmp;
        tmp.assign(a.abs_ref());
        tmp *= &inner_abs;
        scale += &tmp;
    }
    Ok((acc, scale))
}

/// One monic skew-orthogonal pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewPolyPair {
    pub index_n: usize,
    pub phi: Poly,
    pub psi: Poly,
    pub parity: Parity,
}

impl SkewPolyPair {
    /// Build the pair from the polynomial part of `φₙ`, checking it is monic
    /// of degree `n` with parity `n`.
    pub fn from_phi(index_n: usize, phi: Poly, spec: &WeightSpec) -> Result<Self> {
        let phi = phi.trimmed();
        let parity = Parity::of(index_n);
        if phi.degree() != index_n || *phi.leading() != 1 {
            return Err(Error::InternalConsistency(format!(
                "phi_{index_n} is not monic of degree {index_n} (degree {}, leading {})",
                phi.degree(),
                phi.leading().to_f64()
            )));
        }
        if !phi.has_parity(parity) {
            return Err(Error::InternalConsistency(format!(
                "phi_{index_n} has coefficients of the wrong parity"
            )));
        }
        let psi = psi_from_phi(&phi, spec);
        Ok(SkewPolyPair {
            index_n,
            phi,
            psi,
            parity,
        })
    }

    pub fn phi_coeffs(&self) -> &[Float] {
        self.phi.coeffs()
    }

    pub fn psi_coeffs(&self) -> &[Float] {
        self.psi.coeffs()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.index_n,
            "parity": self.parity,
            "phi": self.phi.coeffs().iter().map(exact_string).collect::<Vec<_>>(),
            "psi": self.psi.coeffs().iter().map(exact_string).collect::<Vec<_>>(),
        })
    }
}

/// `∫ φₙ ψₘ dx`.
pub fn skew_product(pair_n: &SkewPolyPair, pair_m: &SkewPolyPair, moments: &MomentTable) -> Result<Float> {
    moment_form(&pair_n.phi, &pair_m.psi, moments)
}

/// `∫ x ψₐ ψ_b dx`, the integrand behind every recursion coefficient.
pub fn x_psi_product(a: &SkewPolyPair, b: &SkewPolyPair, moments: &MomentTable) -> Result<Float> {
    moment_form(&a.psi.multiply_by_x(), &b.psi, moments)
}

/// Matrix of skew products `∫ φₙ ψₘ` against the block form `gₙ Zₙₘ`.
#[derive(Clone, Debug)]
pub struct GramReport {
    pub dimension_n: usize,
    pub matrix: Vec<Vec<Float>>,
    /// `g_{2i} = ∫φ_{2i}ψ_{2i+1}` and `g_{2i+1} = -∫φ_{2i+1}ψ_{2i}`, one per index.
    pub g_sequence: Vec<Float>,
    /// Largest `|entry - gₙ Zₙₘ| / gₙ`, with `gₙ` taken from the even row of the block.
    pub max_residual: f64,
    /// Largest `|g_{2i} - g_{2i+1}| / g_{2i}`.
    pub g_pair_gap: f64,
    /// Largest `|∫φₙψₘ + ∫φₘψₙ| / max(1, |∫φₙψₘ|)`.
    pub antisymmetry_residual: f64,
}

/// `Zₙₘ` for the block-diagonal `[[0, 1], [-1, 0]]` matrix.
pub fn z_entry(n: usize, m: usize) -> i32 {
    if n % 2 == 0 && m == n + 1 {
        1
    } else if n % 2 == 1 && m + 1 == n {
        -1
    } else {
        0
    }
}

impl GramReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "N": self.dimension_n,
            "max_residual": self.max_residual,
            "g_pair_gap": self.g_pair_gap,
            "antisymmetry_residual": self.antisymmetry_residual,
            "g": self.g_sequence.iter().map(exact_string).collect::<Vec<_>>(),
            "matrix": self
                .matrix
                .iter()
                .map(|row| row.iter().map(exact_string).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::moments_closed_form_alpha0;

    const P: u32 = 256;

    fn f(p: &Poly) -> Vec<f64> {
        p.coeffs().iter().map(|c| c.to_f64()).collect()
    }

    #[test]
    fn multiply_by_x_shifts() {
        assert_eq!(f(&multiply_by_x(&Poly::from_f64(P, &[1.0]))), vec![0.0, 1.0]);
        assert_eq!(f(&multiply_by_x(&Poly::from_f64(P, &[0.0, 1.0]))), vec![0.0, 0.0, 1.0]);
        assert_eq!(
            f(&multiply_by_x(&Poly::from_f64(P, &[0.3, 0.0, 1.0]))),
            vec![0.0, 0.3, 0.0, 1.0]
        );
    }

    #[test]
    fn psi_of_low_order_phis() {
        let alpha = 0.75;
        let spec = WeightSpec::quartic(alpha);
        assert_eq!(f(&psi_from_phi(&Poly::one(P), &spec)), vec![0.0, -alpha, 0.0, -1.0]);
        assert_eq!(
            f(&psi_from_phi(&Poly::monomial(P, 1), &spec)),
            vec![1.0, 0.0, -alpha, 0.0, -1.0]
        );
        // 2x - (x² + c)(x³ + αx)
        let c = 0.4;
        let q = psi_from_phi(&Poly::from_f64(P, &[c, 0.0, 1.0]), &spec);
        assert_eq!(f(&q), vec![0.0, 2.0 - c * alpha, 0.0, -c - alpha, 0.0, -1.0]);
    }

    #[test]
    fn psi_degree_parity_and_lead() {
        let spec = WeightSpec::quartic(-0.5);
        for n in 0..9 {
            let mut c = vec![0.0; n + 1];
            c[n] = 1.0;
            for k in (0..n.saturating_sub(1)).rev().step_by(2) {
                c[k] = 0.1 * (k as f64 + 1.0);
            }
            let pair = SkewPolyPair::from_phi(n, Poly::from_f64(P, &c), &spec).unwrap();
            assert_eq!(pair.psi.degree(), n + 3);
            assert_eq!(*pair.psi.leading(), -1);
            assert!(pair.psi.has_parity(pair.parity.flip()));
        }
    }

    #[test]
    fn rejects_non_monic_or_mixed_parity() {
        let spec = WeightSpec::quartic(0.0);
        assert!(SkewPolyPair::from_phi(2, Poly::from_f64(P, &[0.0, 0.0, 2.0]), &spec).is_err());
        assert!(SkewPolyPair::from_phi(2, Poly::from_f64(P, &[0.0, 1.0, 1.0]), &spec).is_err());
        assert!(SkewPolyPair::from_phi(3, Poly::from_f64(P, &[0.0, 1.0, 1.0]), &spec).is_err());
    }

    #[test]
    fn low_order_skew_products() {
        let spec = WeightSpec::quartic(0.0);
        let m = moments_closed_form_alpha0(20, P);
        let p0 = SkewPolyPair::from_phi(0, Poly::one(P), &spec).unwrap();
        let p1 = SkewPolyPair::from_phi(1, Poly::monomial(P, 1), &spec).unwrap();
        assert!(skew_product(&p0, &p0, &m).unwrap().is_zero());
        let g0 = skew_product(&p0, &p1, &m).unwrap();
        let half_m0 = Float::with_val(P, m.get(0) / 2u32);
        assert!(crate::num::rel_diff(&g0, &half_m0) < 1e-70);
        let back = skew_product(&p1, &p0, &m).unwrap();
        assert!(crate::num::rel_diff(&back, &Float::with_val(P, -&g0)) < 1e-70);
    }

    #[test]
    fn insufficient_moments_named() {
        let m = moments_closed_form_alpha0(6, P);
        let err = moment_form(&Poly::monomial(P, 4), &Poly::monomial(P, 4), &m).unwrap_err();
        assert!(matches!(err, Error::InsufficientMoments { required: 8, available: 6 }));
    }

    #[test]
    fn z_is_block_antisymmetric() {
        for n in 0..8 {
            for m in 0..8 {
                assert_eq!(z_entry(n, m), -z_entry(m, n));
                // Z² = -1
                let sq: i32 = (0..8).map(|k| z_entry(n, k) * z_entry(k, m)).sum();
                assert_eq!(sq, if n == m { -1 } else { 0 });
            }
        }
    }
}
