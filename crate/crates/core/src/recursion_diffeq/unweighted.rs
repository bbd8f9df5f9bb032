//! The normalization recursions in their unweighted form,
//!
//! ```text
//! g₄ + γ₀g₂ - (1+γ₀)g₀ = 0
//! g₆ + γ₁g₄ - (1+γ₀+γ₁)g₂ + γ₀g₀ = 0
//! g_{2n+4} + γₙg_{2n+2} - (2+γₙ+γ_{n-1})g_{2n} + γ_{n-1}g_{2n-2} + g_{2n-4} = 0
//! ```
//!
//! together with the matching first-order relations for `R_{2n+3,2n+5}`,
//! `R_{2n+2,2n+4}` and `R_{2n+3,2n+3}`. They treat the band edges as `±1`,
//! which monic pairs do not satisfy, so these are evaluated against real data
//! and reported rather than used.

use rug::Float;
use serde::Serialize;

use super::{DiffeqSeeds, NormalizationLedger};

/// Residuals of the four relations at block `n`, each divided by the sum of
/// the absolute values of its terms.
#[derive(Clone, Debug, Serialize)]
pub struct UnweightedResidual {
    pub n: usize,
    pub g_relation: f64,
    pub r_odd_relation: f64,
    pub r_even_relation: f64,
    pub r_diag_relation: f64,
}

impl UnweightedResidual {
    pub fn max(&self) -> f64 {
        [self.g_relation, self.r_odd_relation, self.r_even_relation, self.r_diag_relation]
            .into_iter()
            .fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
    }
}

/// Data needed by the relations, indexed by block; missing indices are zero.
struct Columns<'a> {
    prec: u32,
    g: &'a [Float],
    gamma: &'a [Float],
    r_even: &'a [Float],
    r_odd: &'a [Float],
    r_diag: &'a [Float],
}

impl Columns<'_> {
    fn at(&self, v: &[Float], i: isize) -> Float {
        if i < 0 {
            Float::new(self.prec)
        } else {
            v[i as usize].clone()
        }
    }
    fn g(&self, i: isize) -> Float {
        self.at(self.g, i)
    }
    fn gamma(&self, i: isize) -> Float {
        self.at(self.gamma, i)
    }
    fn even(&self, i: isize) -> Float {
        self.at(self.r_even, i)
    }
    fn odd(&self, i: isize) -> Float {
        self.at(self.r_odd, i)
    }
    fn diag(&self, i: isize) -> Float {
        self.at(self.r_diag, i)
    }

    /// Terms of the `g` relation at `n`, highest index first.
    fn g_terms(&self, n: isize) -> Vec<Float> {
        let p = self.prec;
        let (gn, gn1) = (self.gamma(n), self.gamma(n - 1));
        match n {
            0 => vec![
                self.g(2),
                Float::with_val(p, &gn * self.g(1)),
                -((Float::with_val(p, &gn) + 1u32) * self.g(0)),
            ],
            1 => vec![
                self.g(3),
                Float::with_val(p, &gn * self.g(2)),
                -((Float::with_val(p, &gn + &gn1) + 1u32) * self.g(1)),
                Float::with_val(p, &gn1 * self.g(0)),
            ],
            _ => vec![
                self.g(n + 2),
                Float::with_val(p, &gn * self.g(n + 1)),
                -((Float::with_val(p, &gn + &gn1) + 2u32) * self.g(n)),
                Float::with_val(p, &gn1 * self.g(n - 1)),
                self.g(n - 2),
            ],
        }
    }

    fn r_odd_terms(&self, n: isize) -> Vec<Float> {
        let p = self.prec;
        let r11 = -self.diag(n);
        vec![
            self.odd(n + 1) * Float::with_val(p, self.g(n + 2) - self.g(n + 1)),
            -(r11 * self.even(n) * Float::with_val(p, self.g(n) - self.g(n + 1))),
            self.odd(n - 1) * Float::with_val(p, self.g(n - 1) - self.g(n + 1)),
        ]
    }

    fn r_even_terms(&self, n: isize) -> Vec<Float> {
        let p = self.prec;
        vec![
            self.even(n + 1) * Float::with_val(p, self.g(n + 2) - self.g(n + 1)),
            -(self.diag(n) * self.odd(n) * Float::with_val(p, self.g(n) - self.g(n + 1))),
            self.even(n - 1) * Float::with_val(p, self.g(n - 1) - self.g(n + 1)),
        ]
    }

    fn r_diag_terms(&self, n: isize) -> Vec<Float> {
        let p = self.prec;
        let r33 = -self.diag(n + 1);
        vec![
            r33 * self.even(n) * Float::with_val(p, self.g(n + 1) - self.g(n)),
            self.odd(n + 1) * Float::with_val(p, self.g(n) - self.g(n + 2)),
            self.odd(n - 1) * Float::with_val(p, self.g(n) - self.g(n - 1)),
        ]
    }
}

fn relative(terms: &[Float], prec: u32) -> f64 {
    let mut sum = Float::new(prec);
    let mut scale = Float::new(prec);
    for t in terms {
        sum += t;
        scale += Float::with_val(prec, t.abs_ref());
    }
    if scale.is_zero() {
        return 0.0;
    }
    (sum.abs() / scale).to_f64()
}

/// Plug ledger data (or any consistent set) into the unweighted relations.
pub fn residuals(ledger: &NormalizationLedger) -> Vec<UnweightedResidual> {
    let cols = Columns {
        prec: ledger.prec,
        g: &ledger.g,
        gamma: &ledger.gamma,
        r_even: &ledger.r_off_even,
        r_odd: &ledger.r_off_odd,
        r_diag: &ledger.r_diag,
    };
    let rows = ledger.rows();
    (0..rows.saturating_sub(2))
        .map(|n| {
            let n_i = n as isize;
            UnweightedResidual {
                n,
                g_relation: relative(&cols.g_terms(n_i), cols.prec),
                r_odd_relation: relative(&cols.r_odd_terms(n_i), cols.prec),
                r_even_relation: relative(&cols.r_even_terms(n_i), cols.prec),
                r_diag_relation: relative(&cols.r_diag_terms(n_i), cols.prec),
            }
        })
        .collect()
}

/// Forward solve of the unweighted relations from the seeds.
#[derive(Clone, Debug)]
pub struct UnweightedRun {
    pub g: Vec<Float>,
    pub r_off_even: Vec<Float>,
    pub r_off_odd: Vec<Float>,
    pub r_diag: Vec<Float>,
    /// First block whose value came out non-finite or with `g ≤ 0`.
    pub broke_at: Option<usize>,
}

pub fn forward(seeds: &DiffeqSeeds, blocks: usize) -> UnweightedRun {
    let p = seeds.m0.prec();
    let mut g = vec![seeds.g0.clone(), seeds.g2.clone()];
    let mut even = vec![seeds.r02.clone()];
    let mut odd = vec![seeds.r13.clone()];
    let mut diag = vec![seeds.r00.clone()];
    let mut gamma = vec![Float::with_val(p, &seeds.r02 * &seeds.r13)];
    let mut broke_at = None;
    let tail = |terms: Vec<Float>| terms[1..].iter().fold(Float::new(p), |a, t| a + t);

    // Each relation is linear in its unknown, which sits in the first term.
    // A zero placeholder stands in for the unknown while the rest is summed.
    for n in 0..blocks.saturating_sub(1) {
        let ni = n as isize;
        macro_rules! cols {
            () => {
                Columns { prec: p, g: &g, gamma: &gamma, r_even: &even, r_odd: &odd, r_diag: &diag }
            };
        }
        if g.len() == n + 2 {
            g.push(Float::new(p));
            let v = -tail(cols!().g_terms(ni));
            if !v.is_finite() || v.cmp0() != Some(std::cmp::Ordering::Greater) {
                broke_at.get_or_insert(n + 2);
            }
            g[n + 2] = v;
        }

        odd.push(Float::new(p));
        even.push(Float::new(p));
        let denom = Float::with_val(p, &g[n + 2] - &g[n + 1]);
        let r_odd = -tail(cols!().r_odd_terms(ni)) / &denom;
        let r_even = -tail(cols!().r_even_terms(ni)) / &denom;
        gamma.push(Float::with_val(p, &r_even * &r_odd));
        odd[n + 1] = r_odd;
        even[n + 1] = r_even;

        diag.push(Float::new(p));
        let lead = Float::with_val(p, &even[n] * Float::with_val(p, &g[n + 1] - &g[n]));
        // R_{2n+3,2n+3} lead + rest = 0 and R_{2n+2,2n+2} = -R_{2n+3,2n+3}
        let r_diag = tail(cols!().r_diag_terms(ni)) / lead;
        if !odd[n + 1].is_finite() || !even[n + 1].is_finite() || !r_diag.is_finite() {
            broke_at.get_or_insert(n + 1);
        }
        diag[n + 1] = r_diag;
    }
    UnweightedRun {
        g,
        r_off_even: even,
        r_off_odd: odd,
        r_diag: diag,
        broke_at,
    }
}

/// Largest relative distance between the forward solve and reference ledger
/// values over the blocks both hold.
pub fn forward_deviation(run: &UnweightedRun, reference: &NormalizationLedger) -> f64 {
    let rows = reference.rows().min(run.r_diag.len()).min(run.g.len());
    let mut worst: f64 = 0.0;
    for n in 0..rows {
        for (a, b) in [
            (&run.g[n], &reference.g[n]),
            (&run.r_off_even[n], &reference.r_off_even[n]),
            (&run.r_off_odd[n], &reference.r_off_odd[n]),
            (&run.r_diag[n], &reference.r_diag[n]),
        ] {
            let d = crate::num::rel_diff(a, b);
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursion_diffeq::run_diffeq;
    use crate::weight::WeightSpec;

    #[test]
    fn relations_fail_on_true_data() {
        for (alpha, at_least) in [(0.0, 1e-2), (1.0, 1e-2)] {
            let spec = WeightSpec::quartic(alpha);
            let seeds = DiffeqSeeds::compute(&spec, 256).unwrap();
            let ledger = run_diffeq(&spec, &seeds, 12).unwrap();
            let res = residuals(&ledger);
            assert_eq!(res.len(), 5);
            assert!(res[0].g_relation > at_least, "alpha {alpha}: {:?}", res[0]);
        }
    }

    #[test]
    fn forward_solve_satisfies_its_own_relations() {
        let spec = WeightSpec::quartic(0.0);
        let seeds = DiffeqSeeds::compute(&spec, 256).unwrap();
        let run = forward(&seeds, 4);
        let cols = Columns {
            prec: 256,
            g: &run.g,
            gamma: &run
                .r_off_even
                .iter()
                .zip(&run.r_off_odd)
                .map(|(a, b)| Float::with_val(256, a * b))
                .collect::<Vec<_>>(),
            r_even: &run.r_off_even,
            r_odd: &run.r_off_odd,
            r_diag: &run.r_diag,
        };
        assert!(relative(&cols.g_terms(0), 256) < 1e-70);
        assert!(relative(&cols.r_odd_terms(0), 256) < 1e-70);
        assert!(relative(&cols.r_even_terms(0), 256) < 1e-70);
        assert!(relative(&cols.r_diag_terms(0), 256) < 1e-70);
        let ledger = run_diffeq(&spec, &seeds, 6).unwrap();
        assert!(forward_deviation(&run, &ledger) > 1e-3);
    }
}
