//! Quadrature helpers.

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Running integral of uniformly spaced samples, fourth-order accurate.
///
/// Uses composite Simpson on even prefixes, Simpson plus the 3/8 rule on odd
/// prefixes, and a cubic fit for the first interval.
pub fn cumulative<T>(y: &[T], h: f64) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T>,
{
    let n = y.len();
    let zero = y[0] * 0.0;
    let mut out = vec![zero; n];
    if n < 2 {
        return out;
    }
    if n < 4 {
        for k in 1..n {
            out[k] = out[k - 1] + (y[k - 1] + y[k]) * (0.5 * h);
        }
        return out;
    }
    out[1] = (y[0] * 9.0 + y[1] * 19.0 - y[2] * 5.0 + y[3]) * (h / 24.0);
    let mut even = zero;
    for k in 2..n {
        if k % 2 == 0 {
            even = even + (y[k - 2] + y[k - 1] * 4.0 + y[k]) * (h / 3.0);
            out[k] = even;
        } else {
            // Simpson up to k-3 then 3/8 over the last three intervals
            let base = if k >= 3 { out[k - 3] } else { zero };
            out[k] = base + (y[k - 3] + y[k - 2] * 3.0 + y[k - 1] * 3.0 + y[k]) * (3.0 * h / 8.0);
        }
    }
    out
}

/// Fourth-order central derivative of uniformly spaced samples, with
/// one-sided fourth-order stencils at the two ends.
pub fn derivative<T>(y: &[T], h: f64) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T>,
{
    let n = y.len();
    assert!(n >= 5, "need at least five samples");
    let mut d = vec![y[0] * 0.0; n];
    let w = 1.0 / (12.0 * h);
    for k in 0..n {
        d[k] = if k >= 2 && k + 2 < n {
            (y[k - 2] - y[k - 1] * 8.0 + y[k + 1] * 8.0 - y[k + 2]) * w
        } else if k < 2 {
            let b = 0;
            let off = k as f64;
            one_sided(&y[b..b + 5], off) * (1.0 / h)
        } else {
            let b = n - 5;
            let off = (k - b) as f64;
            one_sided(&y[b..b + 5], off) * (1.0 / h)
        };
    }
    d
}

// derivative at node `off` of the quartic through five unit-spaced samples
fn one_sided<T>(y: &[T], off: f64) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let mut acc = y[0] * 0.0;
    for j in 0..5 {
        // derivative of the j-th Lagrange basis polynomial at `off`
        let xj = j as f64;
        let mut s = 0.0;
        for m in 0..5 {
            if m == j {
                continue;
            }
            let mut p = 1.0 / (xj - m as f64);
            for l in 0..5 {
                if l != j && l != m {
                    p *= (off - l as f64) / (xj - l as f64);
                }
            }
            s += p;
        }
        acc = acc + y[j] * s;
    }
    acc
}
