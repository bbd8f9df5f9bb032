//! The moment-integral pipeline: evaluate the free recursion coefficients
//! `R_{k,k}` and `R_{k,k+2}` as bilinear forms over the moment table, take the
//! rest of each band from anti-self-duality, and solve
//! `x ψₙ = Σₘ Rₙₘ φₘ` for the highest `φ`.
//!
//! For monic pairs the band edges carry normalization ratios:
//! `R_{n,n+4} = -1`, `R_{2k,2k-4} = R_{2k+1,2k-3} = g_{2k}/g_{2k-4}`, and the
//! second band is `R_{2k,2k-2} = -(g_{2k}/g_{2k-2}) R_{2k-1,2k+1}`,
//! `R_{2k+1,2k-1} = -(g_{2k}/g_{2k-2}) R_{2k-2,2k}`.

use std::collections::BTreeMap;
use std::io::Write;

use rug::Float;

use crate::bootstrap::BootstrapResult;
use crate::error::{Error, Result};
use crate::moments::MomentTable;
use crate::num::exact_string;
use crate::polynomials::{skew_product, x_psi_product, Poly, SkewPolyPair};
use crate::weight::WeightSpec;

/// Half-width of the band for the quartic weight (`2d`).
pub const BAND: usize = 4;

/// Non-zero entries of row `n` of `R`.
#[derive(Clone, Debug)]
pub struct RecursionBand {
    pub row_n: usize,
    /// Data used by the recursion, keyed by column.
    pub entries: BTreeMap<usize, Float>,
    /// Integral values of the entries that `entries` takes from duality.
    pub reintegrated: BTreeMap<usize, Float>,
    pub g_row: Float,
}

impl RecursionBand {
    pub fn get(&self, m: usize) -> Option<&Float> {
        self.entries.get(&m)
    }

    /// Entry with duality-filled values replaced by their integrals.
    pub fn get_reintegrated(&self, m: usize) -> Option<&Float> {
        self.reintegrated.get(&m).or_else(|| self.entries.get(&m))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let map = |m: &BTreeMap<usize, Float>| -> serde_json::Map<String, serde_json::Value> {
            m.iter()
                .map(|(k, v)| (k.to_string(), serde_json::Value::String(exact_string(v))))
                .collect()
        };
        serde_json::json!({
            "n": self.row_n,
            "g": exact_string(&self.g_row),
            "entries": map(&self.entries),
            "reintegrated": map(&self.reintegrated),
        })
    }
}

/// Pairs, normalizations and bands produced by [`run_integral`].
#[derive(Clone, Debug)]
pub struct IntegralRun {
    pub spec: WeightSpec,
    pub n_max: usize,
    pub pairs: Vec<SkewPolyPair>,
    /// `g[i] = g_{2i} = g_{2i+1}`.
    pub g: Vec<Float>,
    pub bands: Vec<RecursionBand>,
}

impl IntegralRun {
    pub fn g_of(&self, n: usize) -> &Float {
        &self.g[n / 2]
    }

    pub fn r(&self, n: usize, m: usize) -> Option<&Float> {
        self.bands.get(n).and_then(|b| b.get(m))
    }

    pub fn write_bands_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,m,R_nm")?;
        for band in &self.bands {
            for (m, v) in &band.entries {
                writeln!(out, "{},{m},{}", band.row_n, exact_string(v))?;
            }
        }
        Ok(())
    }

    pub fn bands_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.bands.iter().map(RecursionBand::to_json).collect())
    }

    /// `‖xψₙ - Σₘ Rₙₘ φₘ‖∞ / ‖xψₙ‖∞` for a row whose top pair exists. With
    /// `reintegrated` set, the duality-filled entries are replaced by their
    /// integral values, which makes this a genuine check rather than an identity.
    pub fn band_residual(&self, row: usize, reintegrated: bool) -> Option<f64> {
        let band = self.bands.get(row)?;
        if row + BAND >= self.pairs.len() {
            return None;
        }
        let x_psi = self.pairs[row].psi.multiply_by_x();
        let mut acc = x_psi.clone();
        for m in band.entries.keys() {
            let r = if reintegrated {
                band.get_reintegrated(*m)?
            } else {
                band.get(*m)?
            };
            acc.add_scaled(&self.pairs[*m].phi, &Float::with_val(r.prec(), -r));
        }
        Some((acc.max_abs_coeff() / x_psi.max_abs_coeff()).to_f64())
    }
}

fn check_divisor<'a>(g: &'a [Float], n: usize) -> Result<&'a Float> {
    let gn = &g[n / 2];
    let floor = Float::with_val(gn.prec(), &g[0] * 1e-30);
    if *gn <= floor {
        return Err(Error::DegenerateNormalization {
            index: n,
            value: gn.to_f64(),
        });
    }
    Ok(gn)
}

/// `R_{n,m}` from its integral: `(1/g_m) ∫xψₙψ_{m+1}` for even `m`,
/// `-(1/g_{m-1}) ∫xψₙψ_{m-1}` for odd `m`.
fn integral_entry(n: usize, m: usize, pairs: &[SkewPolyPair], g: &[Float], moments: &MomentTable) -> Result<Float> {
    if m % 2 == 0 {
        let gm = check_divisor(g, m)?;
        Ok(x_psi_product(&pairs[n], &pairs[m + 1], moments)? / gm)
    } else {
        let gm = check_divisor(g, m - 1)?;
        Ok(-(x_psi_product(&pairs[n], &pairs[m - 1], moments)? / gm))
    }
}

/// Band of row `n`. Needs pairs through `n + 3` (`n + 2` for odd rows), `g` through `n + 2`, and the
/// bands of every earlier row.
pub fn r_row(
    n: usize,
    pairs: &[SkewPolyPair],
    g: &[Float],
    bands: &[RecursionBand],
    moments: &MomentTable,
) -> Result<RecursionBand> {
    let prec = moments.prec();
    let top_pair = if n % 2 == 0 { n + 3 } else { n + 2 };
    if pairs.len() <= top_pair || g.len() * 2 < n + 3 || bands.len() < n {
        return Err(Error::InternalConsistency(format!(
            "row {n} requested before its inputs exist"
        )));
    }
    let k = n / 2;
    let g_n = check_divisor(g, n)?.clone();
    let mut entries = BTreeMap::new();
    let mut reintegrated = BTreeMap::new();

    entries.insert(n + BAND, Float::with_val(prec, -1));
    entries.insert(n + 2, integral_entry(n, n + 2, pairs, g, moments)?);
    if n % 2 == 0 {
        entries.insert(n, integral_entry(n, n, pairs, g, moments)?);
    } else {
        let diag = Float::with_val(prec, -bands[n - 1].get(n - 1).expect("diagonal of even row"));
        entries.insert(n, diag);
        reintegrated.insert(n, integral_entry(n, n, pairs, g, moments)?);
    }
    if k >= 1 {
        // second band from the partner row's first upper band
        let partner = if n % 2 == 0 { n - 1 } else { n - 3 };
        let upper = bands[partner].get(partner + 2).expect("upper band of partner row");
        let ratio = Float::with_val(prec, &g_n / check_divisor(g, n - 2)?);
        entries.insert(n - 2, -(ratio * upper));
        reintegrated.insert(n - 2, integral_entry(n, n - 2, pairs, g, moments)?);
    }
    if k >= 2 {
        let ratio = Float::with_val(prec, &g_n / check_divisor(g, n - BAND)?);
        entries.insert(n - BAND, ratio);
        reintegrated.insert(n - BAND, integral_entry(n, n - BAND, pairs, g, moments)?);
    }
    Ok(RecursionBand {
        row_n: n,
        entries,
        reintegrated,
        g_row: g_n,
    })
}

/// Solve the band relations of rows `2k` and `2k+1` for `φ_{2k+4}` and `φ_{2k+5}`.
pub fn advance(
    band_even: &RecursionBand,
    band_odd: &RecursionBand,
    pairs: &[SkewPolyPair],
    spec: &WeightSpec,
) -> Result<(SkewPolyPair, SkewPolyPair)> {
    let mut out = Vec::with_capacity(2);
    for band in [band_even, band_odd] {
        let r = band.row_n;
        let mut phi: Poly = pairs[r].psi.multiply_by_x().neg();
        for (m, coeff) in band.entries.range(..r + BAND) {
            phi.add_scaled(&pairs[*m].phi, coeff);
        }
        let phi = phi.trimmed();
        let lead = phi.leading().to_f64();
        if phi.degree() != r + BAND || (lead - 1.0).abs() > 1e-20 {
            return Err(Error::InternalConsistency(format!(
                "phi_{} came out with degree {} and leading coefficient {lead}",
                r + BAND,
                phi.degree()
            )));
        }
        let mut phi = phi;
        // force exact monicity; the deviation was checked above
        let deg = phi.degree();
        let mut c = phi.coeffs().to_vec();
        c[deg] = Float::with_val(phi.prec(), 1);
        phi = Poly::from_coeffs(phi.prec(), c);
        out.push(SkewPolyPair::from_phi(r + BAND, phi, spec)?);
    }
    let odd = out.pop().expect("two pairs");
    let even = out.pop().expect("two pairs");
    Ok((even, odd))
}

/// `g_{2k} = ∫ φ_{2k} ψ_{2k+1}`, required positive.
pub fn g_next(pair_even: &SkewPolyPair, pair_odd: &SkewPolyPair, moments: &MomentTable) -> Result<Float> {
    let g = skew_product(pair_even, pair_odd, moments)?;
    if g.cmp0() != Some(std::cmp::Ordering::Greater) {
        return Err(Error::PrecisionExhausted {
            stage: "recursion_integral",
            index: pair_even.index_n,
            detail: format!("g = {:e} is not positive", g.to_f64()),
        });
    }
    Ok(g)
}

/// Moment order needed by [`run_integral`] for a given `n_max`.
pub fn required_k_max(n_max: usize) -> usize {
    2 * n_max + 10
}

/// Build pairs `0 ..= n_max + 3`, normalizations `g_0 ..= g_{n_max+2}` and bands
/// for rows `0 ..= n_max + 1`.
pub fn run_integral(
    spec: &WeightSpec,
    moments: &MomentTable,
    boot: &BootstrapResult,
    n_max: usize,
) -> Result<IntegralRun> {
    if n_max % 2 != 0 {
        return Err(Error::Config(format!("n_max must be even, got {n_max}")));
    }
    let need = required_k_max(n_max);
    if moments.k_max() < need {
        return Err(Error::InsufficientMoments {
            required: need,
            available: moments.k_max(),
        });
    }
    let mut pairs = boot.pairs.clone();
    let mut g = vec![boot.g0.clone(), boot.g2.clone()];
    let mut bands: Vec<RecursionBand> = Vec::with_capacity(n_max + 2);
    for k in 0..=n_max / 2 {
        let even = r_row(2 * k, &pairs, &g, &bands, moments)?;
        bands.push(even);
        let odd = r_row(2 * k + 1, &pairs, &g, &bands, moments)?;
        bands.push(odd);
        if 2 * k + BAND <= n_max + 3 {
            let (pe, po) = advance(&bands[2 * k], &bands[2 * k + 1], &pairs, spec)?;
            let gn = g_next(&pe, &po, moments)?;
            pairs.push(pe);
            pairs.push(po);
            g.push(gn);
        }
    }
    Ok(IntegralRun {
        spec: spec.clone(),
        n_max,
        pairs,
        g,
        bands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::bootstrap_d2;
    use crate::moments::moments_quadrature;
    use crate::num::rel_diff;

    const P: u32 = 256;

    fn run(alpha: f64, n_max: usize) -> IntegralRun {
        let spec = WeightSpec::quartic(alpha);
        let m = moments_quadrature(&spec, 4 * n_max + 16, P).unwrap();
        let b = bootstrap_d2(&spec, &m).unwrap();
        run_integral(&spec, &m, &b, n_max).unwrap()
    }

    #[test]
    fn band_edges_and_parity_gaps() {
        let r = run(0.0, 12);
        for band in &r.bands {
            let n = band.row_n;
            assert_eq!(*band.get(n + 4).unwrap(), -1);
            for m in band.entries.keys() {
                assert_eq!((m + n) % 2, 0, "row {n} has column {m}");
                assert!(*m + 4 >= n);
            }
            if n >= 4 {
                // lower edge is g_n / g_{n-4}
                let expect = Float::with_val(P, r.g_of(n) / r.g_of(n - 4));
                assert!(rel_diff(band.get(n - 4).unwrap(), &expect) < 1e-60);
            } else {
                assert!(band.get(n.wrapping_sub(4)).is_none());
            }
        }
    }

    #[test]
    fn diagonal_relations() {
        let r = run(1.0, 8);
        // R_{1,1} = -R_{0,0} and R_{2,2} = -R_{3,3}
        assert_eq!(*r.r(1, 1).unwrap(), Float::with_val(P, -r.r(0, 0).unwrap()));
        assert_eq!(*r.r(3, 3).unwrap(), Float::with_val(P, -r.r(2, 2).unwrap()));
        // the second band carries a normalization ratio
        let expect = Float::with_val(P, r.g_of(2) / r.g_of(0)) * r.r(1, 3).unwrap();
        assert!(rel_diff(r.r(2, 0).unwrap(), &Float::with_val(P, -expect)) < 1e-60);
    }

    #[test]
    fn alpha0_low_rows() {
        let r = run(0.0, 8);
        // R_{0,0} = (1/g₀)∫xψ₀ψ₁ = 3/2 at α = 0
        assert!((r.r(0, 0).unwrap().to_f64() - 1.5).abs() < 1e-15);
        assert!((r.r(0, 2).unwrap().to_f64() + 1.209_669_609).abs() < 1e-9);
        assert!((r.r(1, 3).unwrap().to_f64() + 2.822_562_421).abs() < 1e-9);
        assert!((r.g_of(4).to_f64() - 1.026_743_502_73).abs() < 1e-10);
    }

    #[test]
    fn new_pairs_are_monic_with_parity() {
        let r = run(0.0, 8);
        for (n, p) in r.pairs.iter().enumerate() {
            assert_eq!(p.index_n, n);
            assert_eq!(p.phi.degree(), n);
            assert_eq!(*p.phi.leading(), 1);
            assert!(p.phi.has_parity(p.parity));
        }
        // φ₄ at α = 0 has exactly-zero odd coefficients
        assert!(r.pairs[4].phi.coeffs().iter().skip(1).step_by(2).all(|c| c.is_zero()));
    }

    #[test]
    fn reintegrated_bands_close() {
        let r = run(1.0, 12);
        for row in 0..r.bands.len() {
            if let Some(res) = r.band_residual(row, true) {
                assert!(res < 1e-40, "row {row}: {res}");
            }
        }
        for band in &r.bands {
            for (m, v) in &band.reintegrated {
                assert!(rel_diff(v, band.get(*m).unwrap()) < 1e-40);
            }
        }
    }

    #[test]
    fn output_sizes() {
        let r = run(0.0, 6);
        assert_eq!(r.pairs.len(), 10);
        assert_eq!(r.g.len(), 5);
        assert_eq!(r.bands.len(), 8);
    }

    #[test]
    fn csv_header() {
        let r = run(0.0, 4);
        let mut buf = Vec::new();
        r.write_bands_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("n,m,R_nm"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&first[..2], &["0", "0"]);
        assert!((first[2].parse::<f64>().unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(s.lines().count(), 1 + 3 + 3 + 4 + 4 + 5 + 5);
    }
}
