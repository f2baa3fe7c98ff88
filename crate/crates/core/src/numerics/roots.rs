use crate::error::{Error, Result};

/// Bisection on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign
/// (or one of them zero). Stops when the bracket is narrower than
/// `rel_tol * max(1, |a|)`.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    fb: f64,
    rel_tol: f64,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numerical(format!(
            "bisection needs a sign change on [{a}, {b}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= rel_tol * a.abs().max(1.0) || mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(Error::Numerical(format!("non-finite value at t = {mid}")));
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
