//! Integral-free pipeline: normalizations `g_{2n}` and recursion coefficients
//! `R_{k,k+2}`, `R_{k,k}` from difference equations seeded by the bootstrap.
//!
//! The recursions run on the string equation for the orthogonal polynomials of
//! `w²` and on the banded skew factorization in that basis (see [`factor`]).
//! The literal normalization recursions with `γₙ = R_{2n,2n+2} R_{2n+1,2n+3}`
//! are kept in [`unweighted`] as a diagnostic.

pub mod factor;
pub mod string;
pub mod unweighted;

use std::collections::BTreeMap;
use std::io::Write;

use rug::Float;

use crate::bootstrap::bootstrap_d2;
use crate::error::{Error, Result};
use crate::moments::{moments_quadrature, MomentTable};
use crate::num::{exact_string, rel_diff};
use crate::polynomials::{moment_form_with_scale, psi_from_phi, SkewPolyPair};
use crate::recursion_integral::{r_row, RecursionBand, BAND};
use crate::weight::WeightSpec;

use factor::SkewFactor;
use string::{string_recursion, BasisOperators};

/// Extra string-equation terms beyond `n_max`, covering the factorization
/// look-ahead and the truncation of the banded operator products.
pub const BASIS_MARGIN: usize = 16;

/// Starting values, all from the integral code path at the pipeline's precision.
#[derive(Clone, Debug)]
pub struct DiffeqSeeds {
    pub m0: Float,
    pub m2: Float,
    pub g0: Float,
    pub g2: Float,
    pub r00: Float,
    pub r02: Float,
    pub r13: Float,
}

impl DiffeqSeeds {
    pub fn compute(spec: &WeightSpec, prec: u32) -> Result<Self> {
        let moments = moments_quadrature(spec, 16, prec)?;
        Self::from_moments(&moments)
    }

    pub fn from_moments(moments: &MomentTable) -> Result<Self> {
        let boot = bootstrap_d2(moments.spec(), moments)?;
        let g = vec![boot.g0.clone(), boot.g2.clone()];
        let row0 = r_row(0, &boot.pairs, &g, &[], moments)?;
        let row1 = r_row(1, &boot.pairs, &g, std::slice::from_ref(&row0), moments)?;
        Ok(DiffeqSeeds {
            m0: moments.get(0).clone(),
            m2: moments.get(2).clone(),
            g0: boot.g0,
            g2: boot.g2,
            r00: row0.get(0).expect("diagonal").clone(),
            r02: row0.get(2).expect("upper band").clone(),
            r13: row1.get(3).expect("upper band").clone(),
        })
    }
}

/// Output of the difference-equation pipeline, one row per block `n`.
#[derive(Clone, Debug)]
pub struct NormalizationLedger {
    pub spec: WeightSpec,
    pub prec: u32,
    /// `g_{2n}`.
    pub g: Vec<Float>,
    /// `γₙ = R_{2n,2n+2} R_{2n+1,2n+3}`.
    pub gamma: Vec<Float>,
    /// `R_{2n,2n+2}`.
    pub r_off_even: Vec<Float>,
    /// `R_{2n+1,2n+3}`.
    pub r_off_odd: Vec<Float>,
    /// `R_{2n,2n}`; `R_{2n+1,2n+1} = -R_{2n,2n}`.
    pub r_diag: Vec<Float>,
    /// Largest relative gap between the copied seeds and the factorization's
    /// own values for them.
    pub seed_deviation: f64,
    factor: SkewFactor,
}

impl NormalizationLedger {
    /// Ledger holding the seeds, with a string-equation basis sized for `n_max`.
    pub fn seeded(spec: &WeightSpec, seeds: &DiffeqSeeds, n_max: usize) -> Result<Self> {
        if !spec.is_quartic() {
            return Err(Error::Unsupported(format!(
                "difference equations are wired for d = 2 only, got d = {}",
                spec.degree_d
            )));
        }
        let prec = seeds.m0.prec();
        let basis = string_recursion(&seeds.m0, &seeds.m2, spec.alpha, n_max + BASIS_MARGIN)?;
        let mut factor = SkewFactor::new(BasisOperators::new(basis, spec.alpha));

        let own = [
            (factor.r_upper(0)?, &seeds.r02),
            (factor.r_upper(1)?, &seeds.r13),
            (factor.g(0).clone(), &seeds.g0),
            (factor.g(1).clone(), &seeds.g2),
            (factor.r_diag(0, &Float::new(prec))?, &seeds.r00),
        ];
        let seed_deviation = own.iter().map(|(a, b)| rel_diff(a, b)).fold(0.0, f64::max);

        Ok(NormalizationLedger {
            spec: spec.clone(),
            prec,
            g: vec![seeds.g0.clone(), seeds.g2.clone()],
            gamma: vec![Float::with_val(prec, &seeds.r02 * &seeds.r13)],
            r_off_even: vec![seeds.r02.clone()],
            r_off_odd: vec![seeds.r13.clone()],
            r_diag: vec![seeds.r00.clone()],
            seed_deviation,
            factor,
        })
    }

    pub fn rows(&self) -> usize {
        self.r_diag.len().min(self.g.len())
    }

    /// `g_{2n+4}` from the two preceding blocks of the factorization.
    pub fn g_step(&mut self, n: usize) -> Result<Float> {
        if self.g.len() != n + 2 {
            return Err(Error::InternalConsistency(format!(
                "g_step({n}) needs g through g_{} and no further",
                2 * n + 2
            )));
        }
        self.factor.ensure(n + 2)?;
        let g = self.factor.g(n + 2).clone();
        self.g.push(g.clone());
        Ok(g)
    }

    /// `(R_{2n+3,2n+5}, R_{2n+2,2n+4})`, appending `γ_{n+1}`.
    pub fn r_offdiag_step(&mut self, n: usize) -> Result<(Float, Float)> {
        if self.r_off_even.len() != n + 1 || self.r_off_odd.len() != n + 1 {
            return Err(Error::InternalConsistency(format!(
                "r_offdiag_step({n}) needs off-diagonal rows through {n}"
            )));
        }
        let odd = self.factor.r_upper(2 * n + 3)?;
        let even = self.factor.r_upper(2 * n + 2)?;
        self.gamma.push(Float::with_val(self.prec, &even * &odd));
        self.r_off_even.push(even.clone());
        self.r_off_odd.push(odd.clone());
        Ok((odd, even))
    }

    /// `R_{2n+3,2n+3}`, appending `R_{2n+2,2n+2} = -R_{2n+3,2n+3}`.
    pub fn r_diag_step(&mut self, n: usize) -> Result<Float> {
        if self.r_diag.len() != n + 1 || self.r_off_even.len() < n + 1 {
            return Err(Error::InternalConsistency(format!(
                "r_diag_step({n}) needs R_2k_2k through k = {n}"
            )));
        }
        let e = 2 * n + 2;
        let even = self.factor.r_diag(e, &self.r_off_even[n])?;
        let odd = Float::with_val(self.prec, -&even);
        self.r_diag.push(even);
        Ok(odd)
    }

    /// Full band rows `0 .. rows`, with the lower entries from the
    /// `g`-weighted duality. No entry is re-integrated.
    pub fn bands(&self, rows: usize) -> Result<Vec<RecursionBand>> {
        if rows > 2 * self.rows() {
            return Err(Error::InternalConsistency(format!(
                "ledger has {} blocks, {rows} band rows requested",
                self.rows()
            )));
        }
        let prec = self.prec;
        let mut out: Vec<RecursionBand> = Vec::with_capacity(rows);
        for n in 0..rows {
            let k = n / 2;
            let mut entries = BTreeMap::new();
            entries.insert(n + BAND, Float::with_val(prec, -1));
            let (upper, diag) = if n % 2 == 0 {
                (&self.r_off_even[k], self.r_diag[k].clone())
            } else {
                (&self.r_off_odd[k], Float::with_val(prec, -&self.r_diag[k]))
            };
            entries.insert(n + 2, upper.clone());
            entries.insert(n, diag);
            if k >= 1 {
                let partner = if n % 2 == 0 { n - 1 } else { n - 3 };
                let up = out[partner].get(partner + 2).expect("partner upper band");
                let ratio = Float::with_val(prec, &self.g[k] / &self.g[k - 1]);
                entries.insert(n - 2, -(ratio * up));
            }
            if k >= 2 {
                entries.insert(n - BAND, Float::with_val(prec, &self.g[k] / &self.g[k - 2]));
            }
            out.push(RecursionBand {
                row_n: n,
                entries,
                reintegrated: BTreeMap::new(),
                g_row: self.g[k].clone(),
            });
        }
        Ok(out)
    }

    /// Pairs `0 .. count` from the factorization, without any integral.
    pub fn pairs(&mut self, count: usize) -> Result<Vec<SkewPolyPair>> {
        let spec = self.spec.clone();
        self.factor
            .phis(count)?
            .into_iter()
            .enumerate()
            .map(|(n, phi)| SkewPolyPair::from_phi(n, phi, &spec))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,g_2n,gamma_n,R_2n_2n2,R_2n1_2n3,R_2n_2n")?;
        for n in 0..self.rows() {
            writeln!(
                out,
                "{n},{},{},{},{},{}",
                exact_string(&self.g[n]),
                exact_string(&self.gamma[n]),
                exact_string(&self.r_off_even[n]),
                exact_string(&self.r_off_odd[n]),
                exact_string(&self.r_diag[n]),
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let col = |v: &[Float]| -> Vec<String> { v[..self.rows()].iter().map(exact_string).collect() };
        serde_json::json!({
            "precision_bits": self.prec,
            "g": col(&self.g),
            "gamma": col(&self.gamma),
            "r_off_even": col(&self.r_off_even),
            "r_off_odd": col(&self.r_off_odd),
            "r_diag": col(&self.r_diag),
            "seed_deviation": self.seed_deviation,
        })
    }
}

/// Ledger rows `0 ..= n_max / 2`: `g_0 .. g_{n_max}` and the band entries of
/// rows `0 .. n_max + 1`.
pub fn run_diffeq(spec: &WeightSpec, seeds: &DiffeqSeeds, n_max: usize) -> Result<NormalizationLedger> {
    if n_max % 2 != 0 {
        return Err(Error::Config(format!("n_max must be even, got {n_max}")));
    }
    let mut ledger = NormalizationLedger::seeded(spec, seeds, n_max)?;
    let last = n_max / 2;
    for n in 0..last {
        if n + 2 <= last {
            ledger.g_step(n)?;
        }
        ledger.r_offdiag_step(n)?;
        ledger.r_diag_step(n)?;
    }
    Ok(ledger)
}

/// `|∫[x(xψⱼ)']'φₖ + ∫(xψₖ)(xψⱼ)'|` divided by the sum of the absolute terms of
/// both moment forms. The identity is exact, so this sits at rounding level.
pub fn identity_residual(j: usize, k: usize, pairs: &[SkewPolyPair], moments: &MomentTable) -> Result<f64> {
    let spec = moments.spec();
    let (pj, pk) = (&pairs[j], &pairs[k]);
    // (x ψⱼ)' = D[x qⱼ] w with D[a] = a' - V'a
    let d_xq = psi_from_phi(&pj.psi.multiply_by_x(), spec);
    let outer = psi_from_phi(&d_xq.multiply_by_x(), spec);
    let (a, sa) = moment_form_with_scale(&outer, &pk.phi, moments)?;
    let (b, sb) = moment_form_with_scale(&pk.psi.multiply_by_x(), &d_xq, moments)?;
    let scale = sa + sb;
    if scale.is_zero() {
        // both integrands vanish by parity
        return Ok(0.0);
    }
    Ok((Float::with_val(moments.prec(), a + b).abs() / scale).to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::bootstrap_d2;
    use crate::num::round_to;
    use crate::polynomials::skew_product;
    use crate::recursion_integral::run_integral;

    fn integral(alpha: f64, n_max: usize, prec: u32) -> crate::recursion_integral::IntegralRun {
        let spec = WeightSpec::quartic(alpha);
        let m = moments_quadrature(&spec, 2 * n_max + 16, prec).unwrap();
        let b = bootstrap_d2(&spec, &m).unwrap();
        run_integral(&spec, &m, &b, n_max).unwrap()
    }

    fn ledger(alpha: f64, n_max: usize, prec: u32) -> NormalizationLedger {
        let spec = WeightSpec::quartic(alpha);
        let seeds = DiffeqSeeds::compute(&spec, prec).unwrap();
        run_diffeq(&spec, &seeds, n_max).unwrap()
    }

    #[test]
    fn seeds_agree_with_factorization() {
        for alpha in [0.0, 1.0, -1.0] {
            let l = ledger(alpha, 4, 256);
            assert!(l.seed_deviation < 1e-60, "alpha {alpha}: {}", l.seed_deviation);
        }
    }

    #[test]
    fn ledger_shape() {
        let l = ledger(1.0, 40, 384);
        assert_eq!(l.rows(), 21);
        assert_eq!(l.g.len(), 21);
        for n in 0..l.rows() {
            let expect = Float::with_val(l.prec, &l.r_off_even[n] * &l.r_off_odd[n]);
            assert_eq!(l.gamma[n], expect);
            assert!(l.g[n] > 0);
        }
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 22);
        assert!(s.starts_with("n,g_2n,gamma_n,R_2n_2n2,R_2n1_2n3,R_2n_2n\n"));
    }

    #[test]
    fn matches_integral_pipeline() {
        for alpha in [0.0, 1.0] {
            let r = integral(alpha, 16, 256);
            let l = ledger(alpha, 16, 512);
            for n in 0..l.rows() {
                let c = |x: &Float| round_to(x, 256);
                assert!(rel_diff(&c(&l.g[n]), r.g_of(2 * n)) < 1e-50, "g_{}", 2 * n);
                assert!(rel_diff(&c(&l.r_off_even[n]), r.r(2 * n, 2 * n + 2).unwrap()) < 1e-50);
                assert!(rel_diff(&c(&l.r_off_odd[n]), r.r(2 * n + 1, 2 * n + 3).unwrap()) < 1e-50);
                assert!(rel_diff(&c(&l.r_diag[n]), r.r(2 * n, 2 * n).unwrap()) < 1e-50);
            }
        }
    }

    #[test]
    fn g4_at_alpha0() {
        let l = ledger(0.0, 8, 256);
        assert!((l.g[2].to_f64() - 1.026_743_502_73).abs() < 1e-10);
    }

    #[test]
    fn pairs_and_bands_reproduce_integral_ones() {
        let spec = WeightSpec::quartic(1.0);
        let r = integral(1.0, 10, 256);
        let mut l = ledger(1.0, 10, 256);
        let pairs = l.pairs(12).unwrap();
        for (a, b) in pairs.iter().zip(&r.pairs) {
            let gap = a.phi.sub(&b.phi).max_abs_coeff().to_f64();
            assert!(gap < 1e-50 * b.phi.max_abs_coeff().to_f64(), "phi_{}", a.index_n);
        }
        let bands = l.bands(12).unwrap();
        for (a, b) in bands.iter().zip(&r.bands) {
            assert_eq!(a.entries.len(), b.entries.len());
            for (m, v) in &a.entries {
                assert!(rel_diff(v, b.get(*m).unwrap()) < 1e-50, "R_{},{m}", a.row_n);
            }
        }
        let m = moments_quadrature(&spec, 40, 256).unwrap();
        let g = skew_product(&pairs[6], &pairs[7], &m).unwrap();
        assert!(rel_diff(&g, &l.g[3]) < 1e-50);
    }

    #[test]
    fn step_preconditions() {
        let spec = WeightSpec::quartic(0.0);
        let seeds = DiffeqSeeds::compute(&spec, 256).unwrap();
        let mut l = NormalizationLedger::seeded(&spec, &seeds, 8).unwrap();
        assert!(l.g_step(1).is_err());
        assert!(l.r_diag_step(1).is_err());
        l.g_step(0).unwrap();
        l.r_offdiag_step(0).unwrap();
        let r33 = l.r_diag_step(0).unwrap();
        assert_eq!(r33, Float::with_val(256, -&l.r_diag[1]));
    }

    #[test]
    fn identity_holds_for_small_indices() {
        let r = integral(1.0, 8, 256);
        let spec = WeightSpec::quartic(1.0);
        let m = moments_quadrature(&spec, 50, 256).unwrap();
        for (j, k) in [(0, 1), (5, 5), (2, 7), (8, 3)] {
            let res = identity_residual(j, k, &r.pairs, &m).unwrap();
            assert!(res < 1e-60, "({j}, {k}): {res}");
        }
    }

    #[test]
    fn sextic_refused() {
        let spec = WeightSpec::new(vec![0.0, 0.0, 1.0]).unwrap();
        let seeds = DiffeqSeeds::compute(&WeightSpec::quartic(0.0), 128).unwrap();
        assert!(matches!(
            NormalizationLedger::seeded(&spec, &seeds, 4),
            Err(Error::Unsupported(_))
        ));
    }
}
