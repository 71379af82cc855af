//! Distribution fitting and goodness-of-fit diagnostics for loss samples:
//! maximum-likelihood Weibull and log-normal fits with Kolmogorov-Smirnov
//! statistics, plus probability histograms for file export.

use crate::error::{Result, SimError};
use crate::numerics::normal_cdf;
use serde::{Deserialize, Serialize};

/// Families the loss diagnostics fit against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitFamily {
    Weibull,
    Lognormal,
}

/// Maximum-likelihood fit plus K-S goodness of fit.
#[derive(Debug, Clone)]
pub enum FitResult {
    Fitted {
        family: FitFamily,
        /// Weibull: (shape k, scale λ). Lognormal: (μ, σ) of ln x.
        params: (f64, f64),
        ks_statistic: f64,
        p_value: f64,
        n_used: usize,
        n_dropped: usize,
    },
    /// Samples carry no usable spread (or too few positive values).
    Degenerate { reason: String },
}

impl FitResult {
    pub fn summary(&self) -> String {
        match self {
            FitResult::Fitted {
                family,
                params,
                ks_statistic,
                p_value,
                n_used,
                n_dropped,
            } => {
                let names = match family {
                    FitFamily::Weibull => ("shape_k", "scale"),
                    FitFamily::Lognormal => ("mu_ln", "sigma_ln"),
                };
                format!(
                    "{family:?}: {}={:.6} {}={:.6} ks={:.5} p={:.4} n={}{}",
                    names.0,
                    params.0,
                    names.1,
                    params.1,
                    ks_statistic,
                    p_value,
                    n_used,
                    if *n_dropped > 0 {
                        format!(" dropped={n_dropped}")
                    } else {
                        String::new()
                    }
                )
            }
            FitResult::Degenerate { reason } => format!("degenerate fit: {reason}"),
        }
    }

    pub fn p_value(&self) -> Option<f64> {
        match self {
            FitResult::Fitted { p_value, .. } => Some(*p_value),
            FitResult::Degenerate { .. } => None,
        }
    }
}

/// Maximum-likelihood fit of `family` to positive samples, with K-S
/// statistic and p-value against the fitted distribution.
pub fn fit_distribution(samples: &[f64], family: FitFamily) -> Result<FitResult> {
    if samples.len() < 100 {
        return Err(SimError::domain(
            "fit_distribution",
            format!("need at least 100 samples, got {}", samples.len()),
        ));
    }
    let mut xs: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0 && x.is_finite()).collect();
    let n_dropped = samples.len() - xs.len();
    if xs.len() < 100 {
        return Ok(FitResult::Degenerate {
            reason: format!("only {} positive finite samples", xs.len()),
        });
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    let spread = xs[n - 1] - xs[0];
    if spread <= 1e-12 * xs[n - 1].abs().max(1e-300) {
        return Ok(FitResult::Degenerate {
            reason: "zero sample variance".to_string(),
        });
    }

    let (params, cdf): ((f64, f64), Box<dyn Fn(f64) -> f64>) = match family {
        FitFamily::Weibull => {
            let (k, lambda) = weibull_mle(&xs)?;
            (
                (k, lambda),
                Box::new(move |x: f64| 1.0 - (-(x / lambda).powf(k)).exp()),
            )
        }
        FitFamily::Lognormal => {
            let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let mu = logs.iter().sum::<f64>() / n as f64;
            let sigma = (logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / n as f64).sqrt();
            if sigma <= 0.0 {
                return Ok(FitResult::Degenerate {
                    reason: "zero log-variance".to_string(),
                });
            }
            ((mu, sigma), Box::new(move |x: f64| normal_cdf((x.ln() - mu) / sigma)))
        }
    };

    let d = ks_statistic_sorted(&xs, &*cdf);
    let p = ks_p_value(d, n);
    Ok(FitResult::Fitted {
        family,
        params,
        ks_statistic: d,
        p_value: p,
        n_used: n,
        n_dropped,
    })
}

/// Weibull MLE: Newton iteration on the shape profile equation,
/// scale from the closed form.
fn weibull_mle(xs_sorted: &[f64]) -> Result<(f64, f64)> {
    let n = xs_sorted.len() as f64;
    let mean_ln: f64 = xs_sorted.iter().map(|x| x.ln()).sum::<f64>() / n;
    let g = |k: f64| -> f64 {
        let mut sxk = 0.0;
        let mut sxk_ln = 0.0;
        for &x in xs_sorted {
            let xk = x.powf(k);
            sxk += xk;
            sxk_ln += xk * x.ln();
        }
        sxk_ln / sxk - 1.0 / k - mean_ln
    };
    // bracket then bisect: g is increasing in k
    let mut lo = 0.05;
    let mut hi = 50.0;
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return Err(SimError::numerical("weibull_mle", "shape bracket failed"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    let lambda = (xs_sorted.iter().map(|x| x.powf(k)).sum::<f64>() / n).powf(1.0 / k);
    Ok((k, lambda))
}

/// Two-sided K-S statistic of sorted samples against a CDF.
pub fn ks_statistic_sorted(xs_sorted: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let n = xs_sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs_sorted.iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic K-S p-value with the Stephens small-sample correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for j in 1..=100 {
        let term = 2.0 * if j % 2 == 1 { 1.0 } else { -1.0 } * (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Probability histogram with equal-width bins.
#[derive(Debug, Clone)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub probability: Vec<f64>,
}

impl Histogram {
    pub fn new(samples: &[f64], bins: usize) -> Result<Histogram> {
        if samples.is_empty() || bins == 0 {
            return Err(SimError::domain("Histogram::new", "need samples and at least one bin"));
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = ((hi - lo) / bins as f64).max(1e-12);
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let idx = (((x - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let probability = counts.iter().map(|&c| c as f64 / samples.len() as f64).collect();
        Ok(Histogram { edges, probability })
    }

    /// One line per bin: left edge, right edge, probability.
    pub fn to_rows(&self) -> Vec<String> {
        (0..self.probability.len())
            .map(|i| format!("{:.8e}\t{:.8e}\t{:.8e}", self.edges[i], self.edges[i + 1], self.probability[i]))
            .collect()
    }
}

/// Weibull(k, λ) deviate via inverse transform.
pub fn sample_weibull(shape_k: f64, scale: f64, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    use rand::Rng;
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    scale * (-u.ln()).powf(1.0 / shape_k)
}

/// Lognormal(μ, σ) deviate.
pub fn sample_lognormal(mu: f64, sigma: f64, rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    (mu + sigma * crate::simrng::standard_normal(rng)).exp()
}
