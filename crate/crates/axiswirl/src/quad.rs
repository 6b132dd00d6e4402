//! 1-D quadrature used by the estimate engine: composite Simpson with
//! panel doubling until self-consistency. Built and validated before the
//! inequality checks that consume it.

use crate::error::{Error, Result};

/// Composite Simpson on [a, b] with n panels (n even).
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let x = a + k as f64 * h;
        acc += if k % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

/// Simpson with doubling until |I_2n - I_n| < tol * max(|I_2n|, 1).
/// Errors out instead of silently returning an unconverged value.
pub fn simpson_doubling(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(b > a) {
        return Err(Error::Domain(format!(
            "empty integration interval [{a}, {b}]"
        )));
    }
    let mut n = 64;
    let mut prev = simpson(f, a, b, n);
    while n <= (1 << 22) {
        n *= 2;
        let cur = simpson(f, a, b, n);
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Solve(format!(
        "quadrature did not self-converge to {tol:e} on [{a}, {b}] (last = {prev:e})"
    )))
}

/// Default self-consistency tolerance for oracle quadratures.
pub const ORACLE_TOL: f64 = 1e-8;
