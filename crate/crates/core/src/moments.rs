//! Even moments `M_k = ∫ x^k exp(-2V(x)) dx` of the squared weight.
//!
//! Three independent constructions are provided: composite trapezoid
//! quadrature with step halving, forward integration-by-parts recursion
//! seeded from `M₀` and `M₂`, and the `α = 0` Γ-function closed form.

use std::io::Write;

use rug::ops::Pow;
use rug::{Assign, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{epsilon, exact_string};
use crate::weight::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    Quadrature,
    Recursion,
    ClosedFormAlpha0,
}

impl MomentMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            MomentMethod::Quadrature => "quadrature",
            MomentMethod::Recursion => "recursion",
            MomentMethod::ClosedFormAlpha0 => "closed_form_alpha0",
        }
    }
}

/// Immutable table of `M_0 ..= M_{k_max}`; odd entries are exact zeros.
#[derive(Clone, Debug)]
pub struct MomentTable {
    spec: WeightSpec,
    k_max: usize,
    prec: u32,
    all: Vec<Float>,
    est_rel_error: Vec<f64>,
    method: MomentMethod,
    truncation_radius: f64,
}

impl MomentTable {
    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn method(&self) -> MomentMethod {
        self.method
    }

    /// Radius beyond which `x^{k_max} w²(x)` is negligible at working precision.
    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    /// `M_k`; exactly zero for odd `k`. Panics past `k_max`.
    pub fn get(&self, k: usize) -> &Float {
        &self.all[k]
    }

    pub fn try_get(&self, k: usize) -> Result<&Float> {
        self.all.get(k).ok_or(Error::InsufficientMoments {
            required: k,
            available: self.k_max,
        })
    }

    /// `(k, M_k, estimated relative error)` for even `k`.
    pub fn values(&self) -> impl Iterator<Item = (usize, &Float, f64)> {
        self.all
            .iter()
            .enumerate()
            .step_by(2)
            .map(move |(k, m)| (k, m, self.est_rel_error[k / 2]))
    }

    /// Largest relative residual of `k M_{k-1} = 2 Σ u_{2i} M_{k+2i-1}` over odd `k`,
    /// which comes from integrating `(x^k w²)'` over the line.
    pub fn ibp_residual(&self) -> f64 {
        let d = self.spec.degree_d;
        let mut worst = 0.0f64;
        let mut k = 1;
        while k + 2 * d - 1 <= self.k_max {
            let lhs = Float::with_val(self.prec, &self.all[k - 1] * k as u64);
            let mut rhs = Float::new(self.prec);
            for i in 1..=d {
                let u = Float::with_val(self.prec, self.spec.u(i));
                rhs += u * &self.all[k + 2 * i - 1] * 2u32;
            }
            let r = crate::num::rel_diff(&rhs, &lhs);
            worst = worst.max(r);
            k += 2;
        }
        worst
    }

    /// Table invariants: positive even moments and the integration-by-parts residual.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        for (k, m, _) in self.values() {
            if m.cmp0() != Some(std::cmp::Ordering::Greater) {
                return Err(Error::CatastrophicCancellation { index: k });
            }
        }
        let r = self.ibp_residual();
        if r > tol {
            return Err(Error::InternalConsistency(format!(
                "moment integration-by-parts residual {r:e} exceeds {tol:e}"
            )));
        }
        Ok(())
    }

    /// The same table rounded to a lower precision.
    pub fn with_prec(&self, prec: u32) -> MomentTable {
        MomentTable {
            prec,
            all: self.all.iter().map(|m| Float::with_val(prec, m)).collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,M_k,method,est_rel_error")?;
        for (k, m, e) in self.values() {
            writeln!(out, "{k},{},{},{e:e}", exact_string(m), self.method.as_str())?;
        }
        Ok(())
    }
}

/// Knobs for [`moments_quadrature_with`].
#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    pub initial_intervals: usize,
    /// Refinements performed after the convergence test first passes.
    pub extra_levels: usize,
    pub max_levels: usize,
    pub guard_bits: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            initial_intervals: 64,
            extra_levels: 0,
            max_levels: 12,
            guard_bits: 64,
        }
    }
}

/// Radius `X` with `X^{k_max} exp(-2V(X))` below `2^-bits` and decreasing.
pub fn truncation_radius(spec: &WeightSpec, k_max: usize, bits: u32) -> f64 {
    let target = -(bits as f64) * std::f64::consts::LN_2 - 20.0;
    let mut x: f64 = 1.0;
    loop {
        let log_f = k_max as f64 * x.ln() - 2.0 * spec.v_f64(x);
        let h = 1e-6 * x;
        let slope = (k_max as f64 * (x + h).ln() - 2.0 * spec.v_f64(x + h) - log_f) / h;
        if log_f < target && slope < 0.0 {
            return x;
        }
        x += 0.125;
    }
}

pub fn moments_quadrature(spec: &WeightSpec, k_max: usize, precision_bits: u32) -> Result<MomentTable> {
    moments_quadrature_with(spec, k_max, precision_bits, QuadratureOptions::default())
}

/// Composite trapezoid rule on `[0, X]` for the even integrand, halving the
/// step (nested nodes) until successive estimates agree at working precision.
///
/// The integrand is entire and decays faster than a Gaussian, so the error
/// falls off like `exp(-c h^{-4/3})`.
pub fn moments_quadrature_with(
    spec: &WeightSpec,
    k_max: usize,
    precision_bits: u32,
    opts: QuadratureOptions,
) -> Result<MomentTable> {
    spec.validate()?;
    if k_max % 2 != 0 {
        return Err(Error::Config(format!("k_max must be even, got {k_max}")));
    }
    let wp = precision_bits + opts.guard_bits;
    let radius = truncation_radius(spec, k_max, wp);
    let n_even = k_max / 2 + 1;
    let target = epsilon(precision_bits + 4);

    let mut sums = vec![Float::new(wp); n_even];
    let add_node = |x: &Float, sums: &mut [Float]| -> Result<()> {
        let mut pow = spec.evaluate(x)?.w_squared;
        let x2 = Float::with_val(wp, x.square_ref());
        for s in sums.iter_mut() {
            *s += &pow;
            pow *= &x2;
        }
        Ok(())
    };

    let x_max = Float::with_val(wp, radius);
    let mut intervals = opts.initial_intervals.max(4);
    let mut h = Float::with_val(wp, &x_max / intervals as u64);
    let mut x = Float::new(wp);
    for i in 1..=intervals {
        x.assign(&h * i as u64);
        add_node(&x, &mut sums)?;
    }
    let estimate = |sums: &[Float], h: &Float| -> Vec<Float> {
        sums.iter()
            .enumerate()
            .map(|(j, s)| {
                // f(0)/2 only contributes to M_0, where f(0) = w²(0) = 1
                let mut t = s.clone();
                if j == 0 {
                    t += 0.5;
                }
                Float::with_val(wp, t * h) * 2u32
            })
            .collect()
    };
    let mut prev = estimate(&sums, &h);
    let mut converged_at: Option<usize> = None;
    let mut rel_err = vec![f64::INFINITY; n_even];
    let mut level = 0;
    loop {
        level += 1;
        if level > opts.max_levels {
            let achieved = rel_err.iter().cloned().fold(0.0, f64::max);
            return Err(Error::QuadratureNotConverged {
                achieved,
                levels: opts.max_levels,
            });
        }
        // new nodes sit at the odd multiples of the halved step
        h /= 2u32;
        for i in 0..intervals {
            x.assign(&h * (2 * i + 1) as u64);
            add_node(&x, &mut sums)?;
        }
        intervals *= 2;
        let cur = estimate(&sums, &h);
        for j in 0..n_even {
            rel_err[j] = crate::num::rel_diff(&cur[j], &prev[j]);
        }
        prev = cur;
        let worst = rel_err.iter().cloned().fold(0.0, f64::max);
        if converged_at.is_none() && level >= 2 && worst <= target {
            converged_at = Some(level);
        }
        if let Some(at) = converged_at {
            if level >= at + opts.extra_levels {
                break;
            }
        }
    }

    let mut all = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k % 2 == 0 {
            all.push(Float::with_val(precision_bits, &prev[k / 2]));
        } else {
            all.push(Float::new(precision_bits));
        }
    }
    let floor = epsilon(precision_bits);
    Ok(MomentTable {
        spec: spec.clone(),
        k_max,
        prec: precision_bits,
        all,
        est_rel_error: rel_err.into_iter().map(|e| e.max(floor)).collect(),
        method: MomentMethod::Quadrature,
        truncation_radius: radius,
    })
}

/// Forward recursion `M_{2j+4} = ((2j+1) M_{2j} - 2α M_{2j+2}) / 2` for the quartic weight.
pub fn moments_recursion(m0: &Float, m2: &Float, spec: &WeightSpec, k_max: usize) -> Result<MomentTable> {
    spec.validate()?;
    if !spec.is_quartic() {
        return Err(Error::Unsupported(format!(
            "moment recursion is wired for d = 2 only, got d = {}",
            spec.degree_d
        )));
    }
    if k_max % 2 != 0 {
        return Err(Error::Config(format!("k_max must be even, got {k_max}")));
    }
    let prec = m0.prec().max(m2.prec());
    let alpha = Float::with_val(prec, spec.alpha);
    let mut even = vec![Float::with_val(prec, m0), Float::with_val(prec, m2)];
    even.truncate(k_max / 2 + 1);
    let eps = epsilon(prec);
    let mut err = vec![eps; even.len()];
    let mut j = 0;
    while 2 * j + 4 <= k_max {
        let a = Float::with_val(prec, &even[j] * (2 * j + 1) as u64);
        let b = Float::with_val(prec, &alpha * &even[j + 1]) * 2u32;
        let next = Float::with_val(prec, &a - &b) / 2u32;
        if next.cmp0() != Some(std::cmp::Ordering::Greater) {
            return Err(Error::CatastrophicCancellation { index: 2 * j + 4 });
        }
        // first-order propagation of the relative errors of the two inputs
        let e = (a.to_f64().abs() * err[j] + b.to_f64().abs() * err[j + 1]) / (2.0 * next.to_f64()) + eps;
        err.push(e);
        even.push(next);
        j += 1;
    }
    let mut all = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k % 2 == 0 {
            all.push(even[k / 2].clone());
        } else {
            all.push(Float::new(prec));
        }
    }
    Ok(MomentTable {
        spec: spec.clone(),
        k_max,
        prec,
        all,
        est_rel_error: err,
        method: MomentMethod::Recursion,
        truncation_radius: truncation_radius(spec, k_max, prec),
    })
}

/// `M_{2k} = 2^{(2k+1)/4} Γ((2k+1)/4) / 2` for `V = x⁴/4`.
pub fn moments_closed_form_alpha0(k_max: usize, precision_bits: u32) -> MomentTable {
    let prec = precision_bits;
    let spec = WeightSpec::quartic(0.0);
    let mut all = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k % 2 == 1 {
            all.push(Float::new(prec));
            continue;
        }
        let s = Float::with_val(prec + 16, (k + 1) as u32) / 4u32;
        let two_pow = Float::with_val(prec + 16, 2u32).pow(&s);
        let gamma = s.gamma();
        all.push(Float::with_val(prec, two_pow * gamma / 2u32));
    }
    let n_even = k_max / 2 + 1;
    MomentTable {
        spec: spec.clone(),
        k_max,
        prec,
        all,
        est_rel_error: vec![epsilon(prec); n_even],
        method: MomentMethod::ClosedFormAlpha0,
        truncation_radius: truncation_radius(&spec, k_max, prec),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rel_diff;

    #[test]
    fn closed_form_values() {
        let m = moments_closed_form_alpha0(6, 256);
        let expect = [
            "2.155800549540927944938755465879210262571",
            "1.030448512294995582815862173576546895381",
            "1.077900274770463972469377732939605131285",
            "1.545672768442493374223793260364820343072",
        ];
        for (j, e) in expect.iter().enumerate() {
            let e = Float::with_val(256, Float::parse(e).unwrap());
            assert!(rel_diff(m.get(2 * j), &e) < 1e-38, "M_{}", 2 * j);
        }
        assert!(m.get(1).is_zero());
        assert!(m.get(5).is_zero());
    }

    #[test]
    fn quadrature_matches_closed_form_at_alpha0() {
        let q = moments_quadrature(&WeightSpec::quartic(0.0), 60, 256).unwrap();
        let c = moments_closed_form_alpha0(60, 256);
        for (k, m, e) in q.values() {
            assert!(rel_diff(m, c.get(k)) < 1e-70, "k = {k}");
            assert!(e < 1e-30);
        }
        assert!(q.get(3).is_zero());
    }

    #[test]
    fn recursion_steps() {
        let c = moments_closed_form_alpha0(8, 256);
        let r = moments_recursion(c.get(0), c.get(2), &WeightSpec::quartic(0.0), 8).unwrap();
        // M4 = M0/2, M6 = 3 M2 / 2
        assert_eq!(*r.get(4), Float::with_val(256, c.get(0) / 2u32));
        assert_eq!(*r.get(6), Float::with_val(256, c.get(2) * 3u32) / 2u32);
        assert!(rel_diff(r.get(8), c.get(8)) < 1e-70);

        let spec = WeightSpec::quartic(1.0);
        let q = moments_quadrature(&spec, 8, 256).unwrap();
        let r = moments_recursion(q.get(0), q.get(2), &spec, 8).unwrap();
        let m4 = Float::with_val(256, q.get(0) - Float::with_val(256, q.get(2) * 2u32)) / 2u32;
        assert_eq!(*r.get(4), m4);
    }

    #[test]
    fn recursion_reports_cancellation() {
        // a second seed inconsistent with the first drives M_4 negative
        let spec = WeightSpec::quartic(1.0);
        let m0 = Float::with_val(128, 1.0);
        let m2 = Float::with_val(128, 1.0);
        let err = moments_recursion(&m0, &m2, &spec, 10).unwrap_err();
        assert!(matches!(err, Error::CatastrophicCancellation { index: 4 }));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            moments_quadrature(&WeightSpec::quartic(0.0), 7, 128),
            Err(Error::Config(_))
        ));
        let bad = WeightSpec {
            alpha: 0.0,
            degree_d: 2,
            u_coeffs: vec![0.0, -1.0],
        };
        assert!(matches!(
            moments_quadrature(&bad, 8, 128),
            Err(Error::NonIntegrable { .. })
        ));
    }

    #[test]
    fn ibp_invariant_holds_for_quadrature() {
        for alpha in [-1.0, 0.0, 2.0] {
            let q = moments_quadrature(&WeightSpec::quartic(alpha), 40, 256).unwrap();
            assert!(q.ibp_residual() < 1e-60, "alpha = {alpha}");
            q.check_invariants(1e-12).unwrap();
        }
    }

    #[test]
    fn sextic_quadrature_satisfies_its_own_ibp_relation() {
        let spec = WeightSpec::new(vec![0.0, -1.0, 1.0]).unwrap();
        let q = moments_quadrature(&spec, 20, 192).unwrap();
        assert!(q.ibp_residual() < 1e-45);
    }

    #[test]
    fn csv_layout() {
        let m = moments_closed_form_alpha0(4, 64);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "k,M_k,method,est_rel_error");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,2.15580054954092794"));
        assert!(lines[2].contains(",closed_form_alpha0,"));
    }
}
