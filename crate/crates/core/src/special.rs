//! Jacobi polynomials and Jacobi functions in the geodesic variable.
//!
//! Everything here is written for the normalized function
//!
//! ```text
//! R(a, b; nu; t) = 2F1(-nu, nu + a + b + 1; a + 1; sin^2(t/2))
//! ```
//!
//! which equals `P_n^{(a,b)}(cos t) / P_n^{(a,b)}(1)` when `nu = n` is a
//! nonnegative integer.

use num_complex::Complex64;

use crate::error::{Error, Result};

const SERIES_CAP: usize = 200_000;
const TAIL_TOL: f64 = 1e-16;

/// Gauss hypergeometric series `2F1(a, b; c; x)` for `|x| < 1`.
///
/// Terminates early on polynomial parameters. Fails if the cap is reached or
/// if cancellation leaves fewer than eight significant digits relative to
/// `max(|value|, 1)`.
pub fn hyp2f1_series(a: Complex64, b: Complex64, c: Complex64, x: Complex64) -> Result<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut max_abs = 1.0f64;
    for k in 0..SERIES_CAP {
        let kf = k as f64;
        let num = (a + kf) * (b + kf);
        if num == Complex64::new(0.0, 0.0) {
            return Ok(sum);
        }
        term *= num / ((c + kf) * (kf + 1.0)) * x;
        sum += term;
        let t = term.norm();
        max_abs = max_abs.max(t);
        let k1 = kf + 1.0;
        let ratio = ((a + k1) * (b + k1) / ((c + k1) * (k1 + 1.0)) * x).norm();
        if ratio < 0.99 && t * ratio / (1.0 - ratio) <= TAIL_TOL * sum.norm() {
            if max_abs > 1e8 * sum.norm().max(1.0) {
                return Err(Error::AccuracyLoss { digits: (max_abs / sum.norm().max(1.0)).log10() });
            }
            return Ok(sum);
        }
        if !t.is_finite() {
            break;
        }
    }
    Err(Error::SeriesDiverged { terms: SERIES_CAP })
}

/// `2F1(a, b; c; x)` on `Re x < 1/2`, switching to the Pfaff transformation
/// `(1-x)^{-a} 2F1(a, c-b; c; x/(x-1))` when that argument is smaller.
pub fn hyp2f1(a: Complex64, b: Complex64, c: Complex64, x: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let y = x / (x - one);
    if x.norm() <= y.norm() {
        hyp2f1_series(a, b, c, x)
    } else {
        let pref = (-a * (one - x).ln()).exp();
        Ok(pref * hyp2f1_series(a, c - b, c, y)?)
    }
}

/// Normalized Jacobi polynomials `R_0..=R_nmax` at `u = cos t`.
pub fn jacobi_poly_table(nmax: usize, a: f64, b: f64, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    if nmax == 0 {
        return out;
    }
    out.push(((a + b + 2.0) * u + (a - b)) / (2.0 * (a + 1.0)));
    for n in 2..=nmax {
        let v = n as f64;
        let s = 2.0 * v + a + b;
        let lhs = 2.0 * (v + a) * (v + a + b) * (s - 2.0);
        let c1 = (s - 1.0) * (s * (s - 2.0) * u + a * a - b * b);
        let c2 = 2.0 * (v - 1.0) * (v + b - 1.0) * s;
        let next = (c1 * out[n - 1] - c2 * out[n - 2]) / lhs;
        out.push(next);
    }
    out
}

/// Complex-argument version of [`jacobi_poly_table`], returning only `R_n`.
pub fn jacobi_poly(n: u64, a: f64, b: f64, u: Complex64) -> Complex64 {
    let mut prev = Complex64::new(1.0, 0.0);
    if n == 0 {
        return prev;
    }
    let mut cur = ((a + b + 2.0) * u + (a - b)) / (2.0 * (a + 1.0));
    for k in 2..=n {
        let v = k as f64;
        let s = 2.0 * v + a + b;
        let lhs = 2.0 * (v + a) * (v + a + b) * (s - 2.0);
        let c1 = (s - 1.0) * (s * (s - 2.0) * u + a * a - b * b);
        let c2 = 2.0 * (v - 1.0) * (v + b - 1.0) * s;
        let next = (c1 * cur - c2 * prev) / lhs;
        prev = cur;
        cur = next;
    }
    cur
}

/// `Some(n)` when `nu` is exactly a nonnegative integer.
pub fn as_degree(nu: Complex64) -> Option<u64> {
    (nu.im == 0.0 && nu.re >= 0.0 && nu.re.fract() == 0.0 && nu.re < 1e15).then_some(nu.re as u64)
}

fn series_value(a: f64, b: f64, nu: Complex64, t: Complex64) -> Result<Complex64> {
    let half = (t * 0.5).sin();
    let x = half * half;
    let one = Complex64::new(1.0, 0.0);
    hyp2f1(-nu, nu + (a + b + 1.0), one * (a + 1.0), x)
}

/// Jacobi function `R(a, b; nu; t)` for complex degree and radial argument.
///
/// Integer degrees use the polynomial recurrence and are valid everywhere.
/// Other degrees are reflected so that `Re(nu + rho) >= 0`, started from the
/// hypergeometric series at the two smallest shifts and carried up by the
/// contiguous three-term recurrence. The caller is responsible for the
/// domain restriction `|Re t| < pi/2` (or real `|t| < pi`).
pub fn jacobi_function(a: f64, b: f64, nu: Complex64, t: Complex64) -> Result<Complex64> {
    if let Some(n) = as_degree(nu) {
        return Ok(jacobi_poly(n, a, b, t.cos()));
    }
    let rho = (a + b + 1.0) / 2.0;
    let mut nu = nu;
    if (nu + rho).re < 0.0 {
        nu = -nu - 2.0 * rho;
        if let Some(n) = as_degree(nu) {
            return Ok(jacobi_poly(n, a, b, t.cos()));
        }
    }
    let shifts = (nu.re + rho).floor().max(0.0) as u64;
    if shifts <= 1 {
        return series_value(a, b, nu, t);
    }
    let z0 = nu - shifts as f64;
    let u = t.cos();
    let mut prev = series_value(a, b, z0, t)?;
    let mut cur = series_value(a, b, z0 + 1.0, t)?;
    for k in 2..=shifts {
        let v = z0 + k as f64;
        let s = 2.0 * v + a + b;
        let lhs = 2.0 * (v + a) * (v + a + b) * (s - 2.0);
        let c1 = (s - 1.0) * (s * (s - 2.0) * u + a * a - b * b);
        let c2 = 2.0 * (v - 1.0) * (v + b - 1.0) * s;
        let next = (c1 * cur - c2 * prev) / lhs;
        prev = cur;
        cur = next;
        // keep the pair on a sane scale for strongly growing solutions
        let m = cur.norm();
        if m > 1e250 {
            return Err(Error::AccuracyLoss { digits: m.log10() });
        }
    }
    Ok(cur)
}

/// Taylor coefficients `c_0..=c_order` of `h -> R(a, b; nu; t0 + h)`.
///
/// Uses `d/dt R(a,b;nu) = K sin(t)/2 R(a+1,b+1;nu-1)` with
/// `K = -nu (nu + a + b + 1) / (a + 1)` recursively, so every coefficient
/// comes from a value of a shifted Jacobi function.
pub fn jacobi_function_jet(a: f64, b: f64, nu: Complex64, t0: Complex64, order: usize) -> Result<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let c0 = jacobi_function(a, b, nu, t0)?;
    let mut out = vec![zero; order + 1];
    out[0] = c0;
    if order == 0 {
        return Ok(out);
    }
    let k = -nu * (nu + (a + b + 1.0)) / (a + 1.0);
    if k == zero {
        return Ok(out);
    }
    let inner = jacobi_function_jet(a + 1.0, b + 1.0, nu - 1.0, t0, order - 1)?;
    let half_sin = sin_jet(t0, order - 1).into_iter().map(|c| c * 0.5).collect::<Vec<_>>();
    let prod = jet_mul(&half_sin, &inner);
    for i in 0..order {
        out[i + 1] = k * prod[i] / (i as f64 + 1.0);
    }
    Ok(out)
}

/// Taylor coefficients of `h -> sin(t0 + h)`.
pub fn sin_jet(t0: Complex64, order: usize) -> Vec<Complex64> {
    let (s, c) = (t0.sin(), t0.cos());
    let mut fact = 1.0;
    (0..=order)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            let d = match k % 4 {
                0 => s,
                1 => c,
                2 => -s,
                _ => -c,
            };
            d / fact
        })
        .collect()
}

/// Truncated product of two Taylor jets (length of the shorter one).
pub fn jet_mul(p: &[Complex64], q: &[Complex64]) -> Vec<Complex64> {
    let n = p.len().min(q.len());
    (0..n)
        .map(|k| (0..=k).map(|i| p[i] * q[k - i]).sum())
        .collect()
}

/// Converts Taylor coefficients into derivatives `k! c_k`.
pub fn jet_to_derivatives(jet: &[Complex64]) -> Vec<Complex64> {
    let mut fact = 1.0;
    jet.iter()
        .enumerate()
        .map(|(k, &c)| {
            if k > 0 {
                fact *= k as f64;
            }
            c * fact
        })
        .collect()
}
