//! Skew factorization `B = U (G Z) Uᵗ` of the `P`-basis skew form, where
//! `U` is unit lower triangular with parity offsets 2 and 4 only. Row `n` of
//! `U` holds the expansion `Pₙ = φₙ + U_{n,n-2} φ_{n-2} + U_{n,n-4} φ_{n-4}`.
//!
//! Block `m` (rows `2m`, `2m+1`) depends only on blocks `m-1`, `m-2`, which is
//! the five-term structure of the normalization recursion.

use rug::Float;

use super::string::BasisOperators;
use crate::error::{Error, Result};
use crate::polynomials::Poly;

#[derive(Clone, Debug)]
pub struct SkewFactor {
    pub ops: BasisOperators,
    /// `U_{i,i-2}` (zero for `i < 2`).
    u2: Vec<Float>,
    /// `U_{i,i-4}` (zero for `i < 4`).
    u4: Vec<Float>,
    /// `g[m] = g_{2m}`.
    g: Vec<Float>,
}

impl SkewFactor {
    pub fn new(ops: BasisOperators) -> Self {
        SkewFactor {
            ops,
            u2: Vec::new(),
            u4: Vec::new(),
            g: Vec::new(),
        }
    }

    fn prec(&self) -> u32 {
        self.ops.basis.prec
    }

    pub fn blocks(&self) -> usize {
        self.g.len()
    }

    /// Largest block the truncated operators can support.
    pub fn max_blocks(&self) -> usize {
        self.ops.reliable_len() / 2
    }

    pub fn g(&self, m: usize) -> &Float {
        &self.g[m]
    }

    /// `U_{i,j}`, requiring the block of `i` to be factorized.
    pub fn u(&self, i: usize, j: usize) -> Float {
        let prec = self.prec();
        match i.checked_sub(j) {
            Some(0) => Float::with_val(prec, 1),
            Some(2) => self.u2[i].clone(),
            Some(4) => self.u4[i].clone(),
            _ => Float::new(prec),
        }
    }

    fn push_block(&mut self) -> Result<()> {
        let m = self.g.len();
        if m >= self.max_blocks() {
            return Err(Error::InternalConsistency(format!(
                "factor block {m} is past the reliable size of the string-equation basis"
            )));
        }
        let prec = self.prec();
        let b = |i, j| self.ops.skew(i, j);
        let (e, o) = (2 * m, 2 * m + 1);
        let zero = || Float::new(prec);

        let (u4e, u4o) = if m >= 2 {
            let g4 = &self.g[m - 2];
            (b(e, e - 3) / g4, b(e - 4, o) / g4)
        } else {
            (zero(), zero())
        };
        let (u2e, u2o) = if m >= 1 {
            let g2 = &self.g[m - 1];
            let mut ue = b(e, e - 1);
            let mut uo = b(e - 2, o);
            if m >= 2 {
                let g4 = &self.g[m - 2];
                ue -= Float::with_val(prec, g4 * &u4e) * &self.u2[e - 1];
                uo -= Float::with_val(prec, g4 * &self.u2[e - 2]) * &u4o;
            }
            (ue / g2, uo / g2)
        } else {
            (zero(), zero())
        };
        let mut g = b(e, o);
        if m >= 1 {
            g -= Float::with_val(prec, &self.g[m - 1] * &u2e) * &u2o;
        }
        if m >= 2 {
            g -= Float::with_val(prec, &self.g[m - 2] * &u4e) * &u4o;
        }
        if g.cmp0() != Some(std::cmp::Ordering::Greater) {
            return Err(Error::PrecisionExhausted {
                stage: "recursion_diffeq",
                index: e,
                detail: format!("skew factorization produced g_{e} = {:e}", g.to_f64()),
            });
        }
        self.u2.extend([u2e, u2o]);
        self.u4.extend([u4e, u4o]);
        self.g.push(g);
        Ok(())
    }

    /// Factorize through block `m`.
    pub fn ensure(&mut self, m: usize) -> Result<()> {
        while self.g.len() <= m {
            self.push_block()?;
        }
        Ok(())
    }

    /// `R_{k,k+2} = T_{k,k+2} - U_{k+4,k+2} + U_{k,k-2}`.
    pub fn r_upper(&mut self, k: usize) -> Result<Float> {
        self.ensure((k + 4) / 2)?;
        let mut r = self.ops.t.at(k, k + 2);
        r -= self.u(k + 4, k + 2);
        r += self.u(k, k.wrapping_sub(2));
        Ok(r)
    }

    /// `R_{e,e}` for even `e`, given `R_{e-2,e}` (ignored for `e = 0`).
    pub fn r_diag(&mut self, e: usize, r_prev_upper: &Float) -> Result<Float> {
        self.ensure((e + 4) / 2)?;
        let prec = self.prec();
        let mut r = self.ops.t.at(e, e);
        r += Float::with_val(prec, self.ops.t.at(e, e + 2) * self.u(e + 2, e));
        r -= self.u(e + 4, e);
        if e >= 2 {
            r -= Float::with_val(prec, self.u(e, e - 2) * r_prev_upper);
        }
        if e >= 4 {
            r += self.u(e, e - 4);
        }
        Ok(r)
    }

    /// `φ₀ .. φ_{count-1}` assembled from the `P` basis.
    pub fn phis(&mut self, count: usize) -> Result<Vec<Poly>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        self.ensure((count - 1) / 2)?;
        let p = self.ops.basis.polynomials(count);
        let mut out: Vec<Poly> = Vec::with_capacity(count);
        for (n, pn) in p.into_iter().enumerate() {
            let mut phi = pn;
            if n >= 2 {
                phi.add_scaled(&out[n - 2], &Float::with_val(self.prec(), -&self.u2[n]));
            }
            if n >= 4 {
                phi.add_scaled(&out[n - 4], &Float::with_val(self.prec(), -&self.u4[n]));
            }
            out.push(phi);
        }
        Ok(out)
    }
}
