//! Small numerical toolbox: adaptive quadrature, special functions and a
//! dense SPD solver used by the Zernike projection.

use crate::error::{Result, SimError};

/// Adaptive Simpson quadrature with relative tolerance `rel_tol`.
///
/// Subdivision stops once the local Richardson error estimate is below the
/// tolerance share assigned to the interval; `max_depth` bounds recursion.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    context: &'static str,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(SimError::numerical(context, format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    // Composite pre-pass over 16 panels so a narrow feature inside a wide
    // domain still registers in the tolerance scale.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let mut coarse_abs = 0.0;
    let mut panels = [0.0; PANELS];
    for (i, p) in panels.iter_mut().enumerate() {
        let x0 = a + i as f64 * h;
        *p = simpson(f, x0, x0 + h);
        coarse_abs += p.abs();
    }
    let scale = coarse_abs.max(1e-300);
    let mut converged = true;
    let mut value = 0.0;
    for (i, p) in panels.iter().enumerate() {
        let x0 = a + i as f64 * h;
        value += adaptive(f, x0, x0 + h, *p, rel_tol * scale / PANELS as f64, 44, &mut converged);
    }
    if !converged {
        return Err(SimError::numerical(
            context,
            format!("quadrature did not converge on [{a}, {b}] (rel_tol {rel_tol})"),
        ));
    }
    Ok(value)
}

/// Same as [`integrate`] but split at the supplied interior points first.
/// Useful when the integrand has a sharp boundary layer (e.g. a ground-level
/// turbulence peak metres wide inside a path hundreds of kilometres long).
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: &F,
    points: &[f64],
    rel_tol: f64,
    context: &'static str,
) -> Result<f64> {
    let mut total = 0.0;
    for w in points.windows(2) {
        total += integrate(f, w[0], w[1], rel_tol, context)?;
    }
    Ok(total)
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    converged: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 * (b.abs() + a.abs() + 1.0) {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *converged = false;
        return left + right;
    }
    adaptive(f, a, m, left, 0.5 * tol, depth - 1, converged)
        + adaptive(f, m, b, right, 0.5 * tol, depth - 1, converged)
}

/// Decade split points covering `[lo, hi]`, starting from `first` (the scale
/// of the integrand's boundary layer).
pub fn decade_points(lo: f64, hi: f64, first: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    let mut x = first.max(lo * 10.0).max(1e-12);
    while x < hi {
        if x > lo {
            pts.push(x);
        }
        x *= 10.0;
    }
    pts.push(hi);
    pts
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Complementary error function (Abramowitz & Stegun 7.1.26, |err| < 1.5e-7).
pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        erfc_positive(x)
    } else {
        2.0 - erfc_positive(-x)
    }
}

fn erfc_positive(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// ln Γ(x), Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    use std::f64::consts::PI;
    if x < 0.5 {
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let z = x - 1.0;
        let mut ag = COEFFS[0];
        for (i, c) in COEFFS.iter().enumerate().skip(1) {
            ag += c / (z + i as f64);
        }
        let t = z + 7.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + ag.ln()
    }
}

// ---------------------------------------------------------------------------
// Dense symmetric positive-definite solve (Cholesky)
// ---------------------------------------------------------------------------

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, n×n).
pub fn solve_spd(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(SimError::numerical(
                        "solve_spd",
                        format!("matrix not positive definite at pivot {i} (s = {s})"),
                    ));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    // forward then back substitution
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Golden-section maximization
// ---------------------------------------------------------------------------

/// Maximizes a unimodal function on `[a, b]` to absolute x-tolerance `tol`.
/// Returns `(x_max, f(x_max))`.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
