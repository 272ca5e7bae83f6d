//! Univariate polynomial helpers used by map inversion.
//!
//! Coefficients are stored lowest degree first.

pub(crate) fn eval(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

pub(crate) fn eval_with_derivative(coeffs: &[f64], t: f64) -> (f64, f64) {
    let mut value = 0.0;
    let mut deriv = 0.0;
    for &c in coeffs.iter().rev() {
        deriv = deriv * t + value;
        value = value * t + c;
    }
    (value, deriv)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(m, &c)| m as f64 * c)
        .collect()
}

fn trim(mut p: Vec<f64>, tol: f64) -> Vec<f64> {
    while p.len() > 1 && p.last().is_some_and(|c| c.abs() <= tol) {
        p.pop();
    }
    p
}

/// Remainder of `num / den`.
fn remainder(num: &[f64], den: &[f64]) -> Vec<f64> {
    let mut r = num.to_vec();
    let dl = den.len();
    let lead = den[dl - 1];
    while r.len() >= dl {
        let shift = r.len() - dl;
        let q = r[r.len() - 1] / lead;
        for (k, &d) in den.iter().enumerate() {
            r[shift + k] -= q * d;
        }
        r.pop();
    }
    r
}

/// Number of distinct real roots in `(a, b]`, via a Sturm sequence.
pub(crate) fn count_roots(coeffs: &[f64], a: f64, b: f64) -> usize {
    let scale = coeffs
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(1e-300);
    let tol = scale * 1e-12;
    let p0 = trim(coeffs.to_vec(), tol);
    if p0.len() <= 1 {
        return 0;
    }
    let mut seq = vec![p0.clone(), trim(derivative(&p0), tol)];
    loop {
        let n = seq.len();
        if seq[n - 1].len() <= 1 {
            break;
        }
        let r = remainder(&seq[n - 2], &seq[n - 1]);
        let r = trim(r.into_iter().map(|c| -c).collect(), tol);
        if r.iter().all(|c| c.abs() <= tol) {
            break;
        }
        seq.push(r);
    }
    let changes = |t: f64| {
        let mut count = 0usize;
        let mut last = 0.0f64;
        for p in &seq {
            let v = eval(p, t);
            if v != 0.0 {
                if last != 0.0 && (v > 0.0) != (last > 0.0) {
                    count += 1;
                }
                last = v;
            }
        }
        count
    };
    changes(a).saturating_sub(changes(b))
}

/// Root of `f` in `[a, b]` given `f(a) < 0 < f(b)`, by Newton steps safeguarded
/// with bisection. Stops when `|f| <= tol` or the bracket collapses.
pub(crate) fn solve_bracketed(coeffs: &[f64], mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut t = 0.5 * (a + b);
    for _ in 0..200 {
        let (f, df) = eval_with_derivative(coeffs, t);
        if f.abs() <= tol {
            return t;
        }
        if f < 0.0 {
            a = t;
        } else {
            b = t;
        }
        let newton = t - f / df;
        t = if df > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if b - a <= f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
    }
    t
}
