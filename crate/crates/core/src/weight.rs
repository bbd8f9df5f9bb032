//! Even polynomial potentials `V(x) = Σ u_{2k} x^{2k} / (2k)` and the weights
//! `w = exp(-V)`, `w² = exp(-2V)`.

use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomials::Poly;

/// The even potential. `u_coeffs[k-1]` holds `u_{2k}`; the last entry is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub alpha: f64,
    #[serde(rename = "d")]
    pub degree_d: usize,
    #[serde(rename = "u")]
    pub u_coeffs: Vec<f64>,
}

/// `V`, `V'`, `w` and `w²` at one point.
#[derive(Clone, Debug)]
pub struct WeightValues {
    pub v: Float,
    pub v_prime: Float,
    pub w: Float,
    pub w_squared: Float,
}

impl WeightSpec {
    /// `V(x) = x⁴/4 + α x²/2`.
    pub fn quartic(alpha: f64) -> Self {
        WeightSpec {
            alpha,
            degree_d: 2,
            u_coeffs: vec![alpha, 1.0],
        }
    }

    pub fn new(u_coeffs: Vec<f64>) -> Result<Self> {
        let spec = WeightSpec {
            alpha: u_coeffs.first().copied().unwrap_or(0.0),
            degree_d: u_coeffs.len(),
            u_coeffs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree_d == 0 {
            return Err(Error::InvalidSpec("degree d must be positive".into()));
        }
        if self.u_coeffs.len() != self.degree_d {
            return Err(Error::InvalidSpec(format!(
                "expected {} coefficients u_2..u_2d, got {}",
                self.degree_d,
                self.u_coeffs.len()
            )));
        }
        if self.u_coeffs.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidSpec("non-finite coefficient".into()));
        }
        let leading = self.u_coeffs[self.degree_d - 1];
        if leading <= 0.0 {
            return Err(Error::NonIntegrable { leading });
        }
        if leading != 1.0 {
            return Err(Error::InvalidSpec(format!(
                "leading coefficient u_2d must be 1, got {leading}"
            )));
        }
        if self.alpha != self.u_coeffs[0] {
            return Err(Error::InvalidSpec(format!(
                "alpha = {} disagrees with u_2 = {}",
                self.alpha, self.u_coeffs[0]
            )));
        }
        Ok(())
    }

    pub fn is_quartic(&self) -> bool {
        self.degree_d == 2
    }

    /// `u_{2k}` for `k = 1..=d`.
    pub fn u(&self, k: usize) -> f64 {
        self.u_coeffs[k - 1]
    }

    /// Polynomial `V(x)`, degree `2d`.
    pub fn potential_poly(&self, prec: u32) -> Poly {
        let mut c = vec![Float::new(prec); 2 * self.degree_d + 1];
        for k in 1..=self.degree_d {
            c[2 * k] = Float::with_val(prec, self.u(k)) / (2 * k) as u32;
        }
        Poly::from_coeffs(prec, c)
    }

    /// Polynomial `V'(x)`, degree `2d - 1`, odd.
    pub fn v_prime_poly(&self, prec: u32) -> Poly {
        let mut c = vec![Float::new(prec); 2 * self.degree_d];
        for k in 1..=self.degree_d {
            c[2 * k - 1] = Float::with_val(prec, self.u(k));
        }
        Poly::from_coeffs(prec, c)
    }

    /// `V(x)` as an `f64`, used for truncation-radius estimates only.
    pub fn v_f64(&self, x: f64) -> f64 {
        let x2 = x * x;
        let mut pow = 1.0;
        let mut acc = 0.0;
        for k in 1..=self.degree_d {
            pow *= x2;
            acc += self.u(k) * pow / (2 * k) as f64;
        }
        acc
    }

    pub fn evaluate(&self, x: &Float) -> Result<WeightValues> {
        let prec = x.prec();
        let x2 = Float::with_val(prec, x.square_ref());
        let mut pow_even = Float::with_val(prec, 1); // x^{2k-2}
        let mut v = Float::new(prec);
        let mut v_prime = Float::new(prec);
        let mut term = Float::new(prec);
        for k in 1..=self.degree_d {
            let u = Float::with_val(prec, self.u(k));
            // x^{2k-1} u_{2k}
            term.assign(&pow_even * x);
            term *= &u;
            v_prime += &term;
            pow_even *= &x2;
            term.assign(&pow_even * &u);
            term /= (2 * k) as u32;
            v += &term;
        }
        let w = Float::with_val(prec, -&v).exp();
        let w_squared = Float::with_val(prec, &w * &w);
        // exp(-2V) leaving the exponent range shows up as an exact zero
        if !v.is_finite() || w_squared.is_zero() {
            return Err(Error::OutOfRange { x: x.to_f64() });
        }
        Ok(WeightValues {
            v,
            v_prime,
            w,
            w_squared,
        })
    }
}
