//! Real roots of a polynomial: Sturm-sequence isolation followed by bisection.

use std::cmp::Ordering;

use rug::Float;

use crate::polynomials::Poly;

/// Bisection stops once the bracket is narrower than this (relative to `max(1, |x|)`).
pub const BISECTION_TOL: f64 = 1e-20;

#[derive(Clone, Debug)]
pub struct Root {
    pub x: Float,
    /// Touching or higher-order root (`p` and `p'` vanish together).
    pub multiple: bool,
}

#[derive(Clone, Debug)]
pub struct RootScan {
    /// Distinct real roots, ascending.
    pub roots: Vec<Root>,
    /// Distinct real roots in `(-X, X]` by Sturm's theorem.
    pub sturm_count: usize,
    pub radius: Float,
    /// Every isolating interval held exactly one root.
    pub complete: bool,
}

/// `1 + max |aᵢ / aₙ|`, which bounds every root.
pub fn cauchy_bound(p: &Poly) -> Float {
    let prec = p.prec();
    let lead = Float::with_val(prec, p.leading().abs_ref());
    let mut m = Float::new(prec);
    for c in &p.coeffs()[..p.degree()] {
        let r = Float::with_val(prec, c.abs_ref()) / &lead;
        if r > m {
            m = r;
        }
    }
    m + 1u32
}

/// Fujiwara's bound `2 max_k |a_{n-k} / aₙ|^{1/k}`, usually far tighter than
/// the Cauchy bound when coefficients grow with degree.
pub fn fujiwara_bound(p: &Poly) -> Float {
    let prec = p.prec();
    let n = p.degree();
    let lead = Float::with_val(prec, p.leading().abs_ref());
    let mut m = Float::new(prec);
    for k in 1..=n {
        let mut r = Float::with_val(prec, p.coeffs()[n - k].abs_ref()) / &lead;
        if k == n {
            r /= 2u32;
        }
        if r.is_zero() {
            continue;
        }
        let r = Float::with_val(prec, r.ln() / k as u32).exp();
        if r > m {
            m = r;
        }
    }
    m * 2u32
}

/// `Σ |aᵢ| |x|ⁱ`, the natural scale for `|p(x)|`.
fn magnitude_at(p: &Poly, x: &Float) -> Float {
    let prec = p.prec();
    let ax = Float::with_val(prec, x.abs_ref());
    let mut acc = Float::new(prec);
    for c in p.coeffs().iter().rev() {
        acc *= &ax;
        acc += Float::with_val(prec, c.abs_ref());
    }
    acc
}

fn sign(v: &Float) -> Ordering {
    v.cmp0().unwrap_or(Ordering::Equal)
}

fn bisect(p: &Poly, lo: &Float, hi: &Float) -> Float {
    let prec = p.prec();
    let (mut a, mut b) = (lo.clone(), hi.clone());
    let sa = sign(&p.eval(&a));
    for _ in 0..400 {
        let mid = Float::with_val(prec, &a + &b) / 2u32;
        let width = Float::with_val(prec, &b - &a).to_f64();
        if width <= BISECTION_TOL * mid.to_f64().abs().max(1.0) {
            return mid;
        }
        let sm = sign(&p.eval(&mid));
        if sm == Ordering::Equal {
            return mid;
        }
        if sm == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    Float::with_val(prec, &a + &b) / 2u32
}

/// Sturm sequence of `p`, with remainders cleaned of cancelled coefficients.
struct Sturm {
    seq: Vec<Poly>,
}

impl Sturm {
    fn new(p: &Poly) -> Self {
        let mut seq = vec![p.clone(), p.derivative().trimmed()];
        let scale = p.max_abs_coeff();
        while !seq.last().expect("nonempty").is_zero() && seq.last().expect("nonempty").degree() > 0 {
            let n = seq.len();
            let rem = remainder(&seq[n - 2], &seq[n - 1], &scale);
            seq.push(rem.neg());
        }
        Sturm { seq }
    }

    fn variations(&self, x: &Float) -> usize {
        let mut count = 0usize;
        let mut prev = Ordering::Equal;
        for q in &self.seq {
            if q.is_zero() {
                continue;
            }
            let s = sign(&q.eval(x));
            if s == Ordering::Equal {
                continue;
            }
            if prev != Ordering::Equal && s != prev {
                count += 1;
            }
            prev = s;
        }
        count
    }
}

/// Remainder of `a / b`, dropping coefficients that have cancelled to the
/// rounding level of `scale`.
fn remainder(a: &Poly, b: &Poly, scale: &Float) -> Poly {
    let prec = a.prec();
    let floor = Float::with_val(prec, scale * crate::num::epsilon(prec * 3 / 4));
    let mut r: Vec<Float> = a.coeffs().to_vec();
    let db = b.degree();
    let lead = b.leading().clone();
    while r.len() > db {
        let dr = r.len() - 1;
        let q = Float::with_val(prec, &r[dr] / &lead);
        for (i, c) in b.coeffs().iter().enumerate() {
            r[dr - db + i] -= Float::with_val(prec, &q * c);
        }
        r.pop();
        while r.last().map(|c| Float::with_val(prec, c.abs_ref()) <= floor).unwrap_or(false) {
            r.pop();
        }
    }
    for c in r.iter_mut() {
        if Float::with_val(prec, c.abs_ref()) <= floor {
            *c = Float::new(prec);
        }
    }
    Poly::from_coeffs(prec, if r.is_empty() { vec![Float::new(prec)] } else { r }).trimmed()
}

fn narrow(a: &Float, b: &Float) -> bool {
    let mid = Float::with_val(a.prec(), a + b) / 2u32;
    let width = Float::with_val(a.prec(), b - a).to_f64();
    width <= BISECTION_TOL * mid.to_f64().abs().max(1.0)
}

/// All distinct real roots of `p`, isolated in `(-X, X]` with
/// `X = max(radius, root bound)` by Sturm counts and refined by bisection.
pub fn real_roots(p: &Poly, radius: f64) -> RootScan {
    let prec = p.prec();
    let p = p.clone().trimmed();
    let bound = if p.degree() == 0 {
        Float::new(prec)
    } else {
        let (c, f) = (cauchy_bound(&p), fujiwara_bound(&p));
        // both bounds can be attained (Fujiwara for a linear p), and a root on
        // the window edge would fall outside the half-open Sturm interval
        let b = if f < c { f } else { c };
        b * 1.0625f64
    };
    let r = if bound.to_f64() > radius {
        bound
    } else {
        Float::with_val(prec, radius)
    };
    if p.degree() == 0 {
        return RootScan {
            roots: Vec::new(),
            sturm_count: 0,
            radius: r,
            complete: true,
        };
    }
    let dp = p.derivative().trimmed();
    let sturm = Sturm::new(&p);
    let touch_tol = crate::num::epsilon(prec / 2);
    let neg_r = Float::with_val(prec, -&r);
    let (v_lo, v_hi) = (sturm.variations(&neg_r), sturm.variations(&r));
    let total = v_lo.saturating_sub(v_hi);

    let mut roots = Vec::new();
    let mut verified = true;
    // (a, b] with its variation counts; popped left to right
    let mut stack = vec![(neg_r, v_lo, r.clone(), v_hi)];
    while let Some((a, va, b, vb)) = stack.pop() {
        let count = va.saturating_sub(vb);
        if count == 0 {
            continue;
        }
        let (sa, sb) = (sign(&p.eval(&a)), sign(&p.eval(&b)));
        if count == 1 && sb == Ordering::Equal {
            roots.push(b);
            continue;
        }
        if count == 1 && sa != Ordering::Equal && sa != sb {
            roots.push(bisect(&p, &a, &b));
            continue;
        }
        if narrow(&a, &b) {
            // a cluster below the bisection tolerance, or an even-order root
            let mid = Float::with_val(prec, &a + &b) / 2u32;
            verified &= count == 1;
            roots.push(mid);
            continue;
        }
        let mid = Float::with_val(prec, &a + &b) / 2u32;
        let vm = sturm.variations(&mid);
        stack.push((mid.clone(), vm, b, vb));
        stack.push((a, va, mid, vm));
    }

    let roots: Vec<Root> = roots
        .into_iter()
        .map(|x| {
            let d = dp.eval(&x).abs().to_f64();
            let multiple = d <= touch_tol * magnitude_at(&dp, &x).to_f64();
            Root { x, multiple }
        })
        .collect();
    let complete = verified && roots.len() == total;
    RootScan {
        roots,
        sturm_count: total,
        radius: r,
        complete,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(scan: &RootScan) -> Vec<f64> {
        scan.roots.iter().map(|r| r.x.to_f64()).collect()
    }

    #[test]
    fn simple_roots() {
        // (x - 1)(x + 2)(x - 3) = x³ - 2x² - 5x + 6
        let p = Poly::from_f64(128, &[6.0, -5.0, -2.0, 1.0]);
        let s = real_roots(&p, 1.0);
        assert!(s.complete);
        assert_eq!(s.sturm_count, 3);
        let r = xs(&s);
        for (a, b) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-18);
        }
    }

    #[test]
    fn no_real_roots() {
        let p = Poly::from_f64(128, &[0.478, 0.0, 1.0]);
        let s = real_roots(&p, 5.0);
        assert!(s.roots.is_empty());
        assert_eq!(s.sturm_count, 0);
        assert!(s.complete);
    }

    #[test]
    fn exact_zero_at_origin_and_triple_root() {
        let p = Poly::from_f64(128, &[0.0, -1.0, 0.0, 1.0]);
        let s = real_roots(&p, 3.0);
        assert_eq!(xs(&s).len(), 3);
        assert_eq!(s.roots[1].x, 0);
        let t = real_roots(&Poly::from_f64(128, &[0.0, 0.0, 0.0, 1.0]), 2.0);
        assert_eq!(t.roots.len(), 1);
        assert!(t.roots[0].multiple);
        assert_eq!(t.sturm_count, 1);
    }

    #[test]
    fn double_root_found_without_sign_change() {
        // (x - 0.3)² (x + 1)
        let f = Poly::from_f64(128, &[-0.3, 1.0]);
        let q = f.mul(&f).mul(&Poly::from_f64(128, &[1.0, 1.0]));
        let s = real_roots(&q, 2.0);
        assert_eq!(s.sturm_count, 2);
        assert!(s.complete, "{:?}", xs(&s));
        assert!(s.roots.iter().any(|r| r.multiple && (r.x.to_f64() - 0.3).abs() < 1e-15));
    }

    #[test]
    fn bounds_contain_roots() {
        // (x - 1)(x + 2)(x - 3)
        let p = Poly::from_f64(128, &[6.0, -5.0, -2.0, 1.0]);
        assert!(fujiwara_bound(&p) >= 3);
        assert!(cauchy_bound(&p) >= 3);
        // roots ±0.01 with a huge constant ratio
        let q = Poly::from_f64(128, &[-1e-4, 0.0, 1.0]);
        assert!(fujiwara_bound(&q).to_f64() < 0.03);
    }

    #[test]
    fn roots_outside_radius_use_root_bound() {
        let p = Poly::from_f64(128, &[-100.0, 0.0, 1.0]);
        let s = real_roots(&p, 1.0);
        assert_eq!(xs(&s).len(), 2);
        assert!((s.roots[1].x.to_f64() - 10.0).abs() < 1e-15);
    }
}
