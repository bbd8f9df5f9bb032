//! Monic orthogonal polynomials `P_k` of `w²` from the string equation
//! `k/2 = b_k (b_{k-1} + b_k + b_{k+1} + α)`, and the banded operators the
//! skew factorization is built from. Everything is expressed in the `P` basis,
//! so no integral is evaluated past `M₀` and `M₂`.

use rug::Float;

use crate::error::{Error, Result};
use crate::polynomials::Poly;

/// Square matrix stored by diagonals `-width ..= width`.
#[derive(Clone, Debug)]
pub struct Banded {
    size: usize,
    width: usize,
    rows: Vec<Vec<Float>>,
}

impl Banded {
    pub fn zeros(prec: u32, size: usize, width: usize) -> Self {
        Banded {
            size,
            width,
            rows: vec![vec![Float::new(prec); 2 * width + 1]; size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.size || j >= self.size || i.abs_diff(j) > self.width {
            None
        } else {
            Some(j + self.width - i)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&Float> {
        self.slot(i, j).map(|s| &self.rows[i][s])
    }

    /// Entry, with zero outside the band.
    pub fn at(&self, i: usize, j: usize) -> Float {
        let prec = self.rows[0][0].prec();
        self.get(i, j).cloned().unwrap_or_else(|| Float::new(prec))
    }

    pub fn set(&mut self, i: usize, j: usize, v: Float) {
        let s = self.slot(i, j).expect("entry inside the band");
        self.rows[i][s] = v;
    }

    pub fn mul(&self, other: &Banded) -> Banded {
        let prec = self.rows[0][0].prec();
        let width = self.width + other.width;
        let mut out = Banded::zeros(prec, self.size, width);
        for i in 0..self.size {
            let lo = i.saturating_sub(width);
            let hi = (i + width).min(self.size - 1);
            for j in lo..=hi {
                let mut acc = Float::new(prec);
                let k_lo = i.saturating_sub(self.width).max(j.saturating_sub(other.width));
                let k_hi = (i + self.width).min(j + other.width).min(self.size - 1);
                for k in k_lo..=k_hi {
                    if let (Some(a), Some(b)) = (self.get(i, k), other.get(k, j)) {
                        acc += Float::with_val(prec, a * b);
                    }
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

/// Recurrence data of the monic orthogonal polynomials, `x P_k = P_{k+1} + b_k P_{k-1}`.
#[derive(Clone, Debug)]
pub struct OrthogonalBasis {
    pub prec: u32,
    /// `b_0 = 0`, then `b_1 .. b_{len-1}`, all positive.
    pub b: Vec<Float>,
    /// `h_k = ∫ P_k² w²`.
    pub h: Vec<Float>,
}

/// Forward string-equation recursion from `M₀`, `M₂`. A non-positive `b_k`
/// means the forward recursion has lost every significant digit.
pub fn string_recursion(m0: &Float, m2: &Float, alpha: f64, len: usize) -> Result<OrthogonalBasis> {
    let prec = m0.prec();
    let alpha = Float::with_val(prec, alpha);
    let mut b = vec![Float::new(prec), Float::with_val(prec, m2 / m0)];
    while b.len() < len {
        let n = b.len() - 1;
        let bn = &b[n];
        let mut next = Float::with_val(prec, n as u32) / bn;
        next /= 2u32;
        next -= bn;
        next -= &b[n - 1];
        next -= &alpha;
        b.push(next);
    }
    // the first non-positive entry is where the recursion broke down
    let bad = b.iter().enumerate().skip(1).find(|(_, v)| v.cmp0() != Some(std::cmp::Ordering::Greater));
    if let Some((n, bn)) = bad {
        return Err(Error::PrecisionExhausted {
            stage: "recursion_diffeq",
            index: n,
            detail: format!("string equation produced b_{n} = {:e}", bn.to_f64()),
        });
    }
    let mut h = vec![m0.clone()];
    for k in 1..len {
        let next = Float::with_val(prec, &h[k - 1] * &b[k]);
        h.push(next);
    }
    Ok(OrthogonalBasis { prec, b, h })
}

impl OrthogonalBasis {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Multiplication by `x` in the `P` basis: `(J)_{k,k+1} = 1`, `(J)_{k,k-1} = b_k`.
    pub fn jacobi(&self) -> Banded {
        let n = self.len();
        let mut j = Banded::zeros(self.prec, n, 1);
        for k in 0..n {
            if k + 1 < n {
                j.set(k, k + 1, Float::with_val(self.prec, 1));
            }
            if k >= 1 {
                j.set(k, k - 1, self.b[k].clone());
            }
        }
        j
    }

    /// `P_0 .. P_{count-1}` as coefficient polynomials.
    pub fn polynomials(&self, count: usize) -> Vec<Poly> {
        let prec = self.prec;
        let mut out: Vec<Poly> = Vec::with_capacity(count);
        for k in 0..count {
            let p = match k {
                0 => Poly::one(prec),
                1 => Poly::monomial(prec, 1),
                _ => {
                    let mut p = out[k - 1].multiply_by_x();
                    p.add_scaled(&out[k - 2], &Float::with_val(prec, -&self.b[k - 1]));
                    p
                }
            };
            out.push(p);
        }
        out
    }
}

/// The operators used by the factorization.
#[derive(Clone, Debug)]
pub struct BasisOperators {
    pub basis: OrthogonalBasis,
    /// `ψ[P_k] = P_k' - V' P_k = Σ_j D_{kj} P_j`.
    pub d: Banded,
    /// `x ψ[P_k] = Σ_j T_{kj} P_j`.
    pub t: Banded,
}

impl BasisOperators {
    pub fn new(basis: OrthogonalBasis, alpha: f64) -> Self {
        let prec = basis.prec;
        let j = basis.jacobi();
        let j3 = j.mul(&j).mul(&j);
        let a = Float::with_val(prec, alpha);
        let n = basis.len();
        // V'(J) = J³ + αJ; P_k' carries twice the lower part, so D = lower - upper.
        let mut d = Banded::zeros(prec, n, 3);
        for r in 0..n {
            for c in r.saturating_sub(3)..(r + 4).min(n) {
                let mut k = j3.at(r, c);
                if let Some(v) = j.get(r, c) {
                    k += Float::with_val(prec, v * &a);
                }
                if c >= r {
                    k = -k;
                }
                d.set(r, c, k);
            }
        }
        let t = d.mul(&j);
        BasisOperators { basis, d, t }
    }

    /// `∫ P_i ψ[P_j] w² = D_{ji} h_i`, antisymmetric.
    pub fn skew(&self, i: usize, j: usize) -> Float {
        let d = self.d.at(j, i);
        d * &self.basis.h[i]
    }

    /// Indices whose operator entries are free of truncation effects.
    pub fn reliable_len(&self) -> usize {
        self.basis.len().saturating_sub(8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{moments_closed_form_alpha0, moments_quadrature};
    use crate::num::rel_diff;
    use crate::polynomials::moment_form;
    use crate::weight::WeightSpec;

    #[test]
    fn string_equation_holds() {
        let m = moments_closed_form_alpha0(4, 256);
        let basis = string_recursion(m.get(0), m.get(2), 0.0, 30).unwrap();
        for k in 1..29 {
            let s = Float::with_val(256, &basis.b[k - 1] + &basis.b[k]) + &basis.b[k + 1];
            let lhs = s * &basis.b[k] * 2u32;
            assert!((lhs.to_f64() - k as f64).abs() < 1e-40, "k = {k}");
        }
    }

    #[test]
    fn polynomials_are_orthogonal() {
        let spec = WeightSpec::quartic(1.0);
        let m = moments_quadrature(&spec, 40, 256).unwrap();
        let basis = string_recursion(m.get(0), m.get(2), 1.0, 14).unwrap();
        let p = basis.polynomials(12);
        for i in 0..12 {
            for j in 0..12 {
                let v = moment_form(&p[i], &p[j], &m).unwrap();
                if i == j {
                    assert!(rel_diff(&v, &basis.h[i]) < 1e-50);
                } else {
                    assert!(v.to_f64().abs() < 1e-50, "({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn skew_form_is_antisymmetric_and_matches_direct() {
        let spec = WeightSpec::quartic(-1.0);
        let m = moments_quadrature(&spec, 40, 256).unwrap();
        let basis = string_recursion(m.get(0), m.get(2), -1.0, 24).unwrap();
        let p = basis.polynomials(10);
        let ops = BasisOperators::new(basis, -1.0);
        for i in 0..10 {
            for j in 0..10 {
                let direct = moment_form(&p[i], &crate::polynomials::psi_from_phi(&p[j], &spec), &m).unwrap();
                let via = ops.skew(i, j);
                let scale = ops.basis.h[i.max(j)].to_f64();
                assert!((direct.to_f64() - via.to_f64()).abs() < 1e-40 * scale, "({i}, {j})");
                let swapped = ops.skew(j, i).to_f64();
                assert!((via.to_f64() + swapped).abs() < 1e-40 * scale);
            }
        }
        // the string equation is 2 D_{k,k-1} = k
        for k in 1..12 {
            let twice = Float::with_val(256, ops.d.at(k, k - 1) * 2u32);
            assert!((twice.to_f64() - k as f64).abs() < 1e-40);
        }
    }

    #[test]
    fn non_positive_b_is_precision_exhaustion() {
        let m0 = Float::with_val(64, 1.0);
        let m2 = Float::with_val(64, 5.0);
        let err = string_recursion(&m0, &m2, 0.0, 10).unwrap_err();
        assert!(err.is_precision_exhaustion());
    }

    #[test]
    fn banded_product_matches_dense() {
        let prec = 64;
        let mut a = Banded::zeros(prec, 6, 1);
        for i in 0..6usize {
            for j in i.saturating_sub(1)..(i + 2).min(6) {
                a.set(i, j, Float::with_val(prec, (i * 7 + j * 3) as u32 % 5 + 1));
            }
        }
        let c = a.mul(&a);
        for i in 0..6 {
            for j in 0..6 {
                let dense: f64 = (0..6).map(|k| a.at(i, k).to_f64() * a.at(k, j).to_f64()).sum();
                assert_eq!(c.at(i, j).to_f64(), dense);
            }
        }
    }
}
