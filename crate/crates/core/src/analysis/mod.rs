//! Global checks on a finished run: the skew Gram matrix, anti-self-duality of
//! `R`, agreement of the two pipelines, the integration-by-parts identity, and
//! the real-zero structure of each pair.

pub mod roots;

use std::io::Write;

use rug::Float;
use serde::Serialize;

use crate::error::Result;
use crate::moments::MomentTable;
use crate::num::{exact_string, rel_diff, round_to};
use crate::polynomials::{skew_product, z_entry, GramReport, Poly, SkewPolyPair};
use crate::recursion_diffeq::{identity_residual, NormalizationLedger};
use crate::recursion_integral::{IntegralRun, RecursionBand};

/// Skew products of the first `n` pairs against `gₙ Zₙₘ`.
pub fn gram_report(pairs: &[SkewPolyPair], n: usize, moments: &MomentTable) -> Result<GramReport> {
    let prec = moments.prec();
    let n = n.min(pairs.len()) & !1;
    let mut matrix = vec![vec![Float::new(prec); n]; n];
    for i in 0..n {
        for j in 0..n {
            matrix[i][j] = skew_product(&pairs[i], &pairs[j], moments)?;
        }
    }
    let g_sequence: Vec<Float> = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                matrix[i][i + 1].clone()
            } else {
                Float::with_val(prec, -&matrix[i][i - 1])
            }
        })
        .collect();
    let mut max_residual = 0.0f64;
    let mut g_pair_gap = 0.0f64;
    let mut antisymmetry_residual = 0.0f64;
    for i in 0..n {
        let g = &g_sequence[i & !1];
        if i % 2 == 0 {
            g_pair_gap = worse(g_pair_gap, rel_diff(&g_sequence[i + 1], g));
        }
        for j in 0..n {
            let expect = Float::with_val(prec, g * z_entry(i, j));
            let r = (Float::with_val(prec, &matrix[i][j] - &expect).abs() / g).to_f64();
            max_residual = worse(max_residual, r);
            let sum = Float::with_val(prec, &matrix[i][j] + &matrix[j][i]).abs().to_f64();
            antisymmetry_residual = antisymmetry_residual.max(sum / matrix[i][j].to_f64().abs().max(1.0));
        }
    }
    Ok(GramReport {
        dimension_n: n,
        matrix,
        g_sequence,
        max_residual,
        g_pair_gap,
        antisymmetry_residual,
    })
}

/// Anti-self-duality of the leading `N × N` block of `R`.
///
/// For monic pairs the relation is `R = G Z Rᵗ Z G⁻¹`; the rescaling
/// `R̃ₙₘ = Rₙₘ √(gₘ/gₙ)` turns it into `R̃ = Z R̃ᵗ Z`.
#[derive(Clone, Debug, Serialize)]
pub struct DualityReport {
    pub dimension_n: usize,
    /// `max |R̃ - ZR̃ᵗZ| / max |R̃|` with duality-filled entries replaced by
    /// their integrals.
    pub reintegrated_residual: f64,
    /// The same on the entries as stored, which holds by construction.
    pub copied_residual: f64,
    /// `max |R - ZRᵗZ| / max |R|` on re-integrated entries, i.e. the relation
    /// without the normalization weights.
    pub unweighted_residual: f64,
    /// `|R₀₀ + R₁₁|`.
    pub r00_plus_r11: f64,
    pub compared_entries: usize,
}

fn sign_z(n: usize) -> i32 {
    if n % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn duality_report(bands: &[RecursionBand], n: usize) -> DualityReport {
    let n = n.min(bands.len()) & !1;
    let prec = bands[0].g_row.prec();
    let g = |k: usize| &bands[k].g_row;
    let scaled = |v: &Float, row: usize, col: usize| -> Float {
        let ratio = Float::with_val(prec, g(col) / g(row)).sqrt();
        ratio * v
    };
    let mut max_r = 0.0f64;
    let mut max_plain = 0.0f64;
    let (mut re, mut cp, mut plain) = (0.0f64, 0.0f64, 0.0f64);
    let mut compared = 0;
    for row in 0..n {
        for m in bands[row].entries.keys().copied().filter(|m| *m < n) {
            let (pr, pc) = (m ^ 1, row ^ 1);
            let sign = sign_z(row) * -sign_z(m);
            let (Some(a), Some(b)) = (bands[row].get_reintegrated(m), bands[pr].get_reintegrated(pc)) else {
                continue;
            };
            let lhs = scaled(a, row, m);
            let rhs = Float::with_val(prec, scaled(b, pr, pc) * sign);
            max_r = max_r.max(lhs.to_f64().abs());
            re = worse(re, Float::with_val(prec, &lhs - &rhs).abs().to_f64());
            max_plain = max_plain.max(a.to_f64().abs());
            plain = worse(plain, Float::with_val(prec, a - Float::with_val(prec, b * sign)).abs().to_f64());

            // stored entries, in the same arithmetic used to fill them
            let a = bands[row].get(m).expect("key from entries");
            if let Some(b) = bands[pr].get(pc) {
                let ratio = Float::with_val(prec, g(row) / g(m));
                let expect = Float::with_val(prec, &ratio * b) * sign;
                let d = Float::with_val(prec, a - &expect).abs().to_f64();
                let filled = m + 2 == row || m + 4 == row || (m == row && row % 2 == 1);
                if filled {
                    cp = worse(cp, d);
                }
            }
            compared += 1;
        }
    }
    let r00 = bands[0].get(0).expect("diagonal");
    let r11 = bands[1].get(1).expect("diagonal");
    DualityReport {
        dimension_n: n,
        reintegrated_residual: if max_r > 0.0 { re / max_r } else { re },
        copied_residual: cp,
        unweighted_residual: if max_plain > 0.0 { plain / max_plain } else { plain },
        r00_plus_r11: Float::with_val(prec, r00 + r11).abs().to_f64(),
        compared_entries: compared,
    }
}

/// Worst relative disagreement between the two pipelines, after rounding the
/// difference-equation values to the integral pipeline's precision.
#[derive(Clone, Debug, Serialize)]
pub struct CrossCheck {
    pub rows: usize,
    pub g_max: f64,
    pub r_upper_max: f64,
    pub r_diag_max: f64,
    pub worst_entry: String,
}

impl CrossCheck {
    pub fn max(&self) -> f64 {
        worse(worse(self.g_max, self.r_upper_max), self.r_diag_max)
    }
}

/// `max` that keeps a NaN.
fn worse(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

pub fn cross_check(ledger: &NormalizationLedger, integral: &IntegralRun) -> CrossCheck {
    let prec = integral.g[0].prec();
    let rows = ledger.rows().min(integral.g.len()).min(integral.bands.len() / 2);
    let mut out = CrossCheck {
        rows,
        g_max: 0.0,
        r_upper_max: 0.0,
        r_diag_max: 0.0,
        worst_entry: String::new(),
    };
    let mut worst = 0.0f64;
    let mut worst_name = String::new();
    for n in 0..rows {
        let e = 2 * n;
        let items = [
            (0, &ledger.g[n], integral.g_of(e), format!("g_{e}")),
            (1, &ledger.r_off_even[n], integral.r(e, e + 2).expect("band"), format!("R_{e},{}", e + 2)),
            (1, &ledger.r_off_odd[n], integral.r(e + 1, e + 3).expect("band"), format!("R_{},{}", e + 1, e + 3)),
            (2, &ledger.r_diag[n], integral.r(e, e).expect("band"), format!("R_{e},{e}")),
        ];
        for (kind, a, b, name) in items {
            let d = rel_diff(&round_to(a, prec), b);
            let slot = match kind {
                0 => &mut out.g_max,
                1 => &mut out.r_upper_max,
                _ => &mut out.r_diag_max,
            };
            *slot = worse(*slot, d);
            if d.is_nan() || d > worst {
                worst = d;
                worst_name = name;
            }
        }
    }
    out.worst_entry = worst_name;
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentitySweep {
    pub max_index: usize,
    pub max_residual: f64,
    pub worst: (usize, usize),
}

/// The integration-by-parts identity for every `j, k ≤ max_index`.
pub fn identity_sweep(pairs: &[SkewPolyPair], max_index: usize, moments: &MomentTable) -> Result<IdentitySweep> {
    let mut out = IdentitySweep {
        max_index,
        max_residual: 0.0,
        worst: (0, 0),
    };
    for j in 0..=max_index {
        for k in 0..=max_index {
            let r = identity_residual(j, k, pairs, moments)?;
            if r > out.max_residual || r.is_nan() {
                out.max_residual = r;
                out.worst = (j, k);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Phi,
    Psi,
}

impl Which {
    pub fn as_str(self) -> &'static str {
        match self {
            Which::Phi => "phi",
            Which::Psi => "psi",
        }
    }
}

/// Real zeros of the polynomial part of `φₙ` or `ψₙ` (the weight never vanishes).
#[derive(Clone, Debug)]
pub struct ZeroReport {
    pub index_n: usize,
    pub which: Which,
    pub degree: usize,
    /// Distinct real zeros; multiple roots are counted once.
    pub real_zero_count: usize,
    pub zeros: Vec<Float>,
    pub multiple: Vec<bool>,
    /// `n` for `φₙ`, `2m+1` for `ψ_{2m}`, `2m` for `ψ_{2m+1}`.
    pub claimed_count: usize,
    pub matches_claim: bool,
    pub sturm_count: usize,
    pub has_zero_at_origin: bool,
    /// Largest `|p(root)| / Σ|aᵢ||root|ⁱ`.
    pub max_root_residual: f64,
    pub complete: bool,
}

pub fn claimed_zero_count(index_n: usize, which: Which) -> usize {
    match which {
        Which::Phi => index_n,
        Which::Psi if index_n % 2 == 0 => index_n + 1,
        Which::Psi => index_n - 1,
    }
}

pub fn zero_report(pair: &SkewPolyPair, which: Which, radius: f64) -> ZeroReport {
    let p: &Poly = match which {
        Which::Phi => &pair.phi,
        Which::Psi => &pair.psi,
    };
    let scan = roots::real_roots(p, radius);
    let prec = p.prec();
    let mut max_root_residual = 0.0f64;
    for r in &scan.roots {
        let scale: f64 = p
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| c.to_f64().abs() * r.x.to_f64().abs().powi(i as i32))
            .sum();
        max_root_residual = max_root_residual.max(p.eval(&r.x).to_f64().abs() / scale.max(f64::MIN_POSITIVE));
    }
    let claimed = claimed_zero_count(pair.index_n, which);
    let count = scan.roots.len();
    ZeroReport {
        index_n: pair.index_n,
        which,
        degree: p.degree(),
        real_zero_count: count,
        has_zero_at_origin: scan.roots.iter().any(|r| r.x.is_zero()),
        zeros: scan.roots.iter().map(|r| Float::with_val(prec, &r.x)).collect(),
        multiple: scan.roots.iter().map(|r| r.multiple).collect(),
        claimed_count: claimed,
        matches_claim: count == claimed,
        sturm_count: scan.sturm_count,
        max_root_residual,
        complete: scan.complete,
    }
}

impl ZeroReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.index_n,
            "which": self.which.as_str(),
            "degree": self.degree,
            "real_zero_count": self.real_zero_count,
            "zeros": self.zeros.iter().map(exact_string).collect::<Vec<_>>(),
            "multiple": self.multiple,
            "claimed_count": self.claimed_count,
            "matches_claim": self.matches_claim,
            "sturm_count": self.sturm_count,
            "has_zero_at_origin": self.has_zero_at_origin,
            "max_root_residual": self.max_root_residual,
            "complete": self.complete,
        })
    }
}

/// `φ` and `ψ` reports for every pair, in index order.
pub fn zero_reports(pairs: &[SkewPolyPair], radius: f64) -> Vec<ZeroReport> {
    pairs
        .iter()
        .flat_map(|p| [zero_report(p, Which::Phi, radius), zero_report(p, Which::Psi, radius)])
        .collect()
}

pub fn write_zeros_csv<W: Write>(reports: &[ZeroReport], mut out: W) -> Result<()> {
    writeln!(out, "n,which,degree,count,claim,match")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.index_n,
            r.which.as_str(),
            r.degree,
            r.real_zero_count,
            r.claimed_count,
            r.matches_claim
        )?;
    }
    Ok(())
}

pub fn zeros_json(reports: &[ZeroReport]) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for r in reports {
        let entry = map
            .entry(r.index_n.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
        entry[r.which.as_str()] = r.to_json();
    }
    serde_json::Value::Object(map)
}
