//! Asymptotic Gaussian-modulated coherent-state CV-QKD key rate with reverse
//! reconciliation, against a line-of-sight-restricted eavesdropper.
//!
//! The channel is a beamsplitter of transmittance T with input-referred
//! excess noise ξ; Bob's homodyne detector (efficiency η, electronic noise
//! v_el) is trusted. Eve taps the fraction T_E ≤ 1 − T of the mode that
//! misses the receiver: her tap is a beamsplitter of ratio T_E/(1 − T) on the
//! lost light. The secret key rate is K = β I_AB − χ_BE, clamped at zero.
//!
//! An unrestricted collective attack (Eve purifies the entire loss) is
//! provided for comparison via [`holevo_collective`].

use crate::error::{Result, SimError};
use crate::losschannels::{loss_db, LossSample};
use crate::numerics::golden_max;
use serde::{Deserialize, Serialize};

/// Protocol and device parameters. Variances in shot-noise units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeyRateParams {
    /// Alice's Gaussian modulation variance V_A, SNU.
    pub modulation_variance_snu: f64,
    /// Reconciliation efficiency β, in (0, 1].
    pub reconciliation_beta: f64,
    /// Excess noise referred to the channel input ξ, SNU.
    pub excess_noise_snu: f64,
    /// Bob's detector efficiency η, in (0, 1].
    pub detector_efficiency: f64,
    /// Bob's electronic noise v_el, SNU.
    pub electronic_noise_snu: f64,
    /// Eve's geometric tap transmittance T_E (≤ 1 − T at evaluation).
    pub eve_transmittance: f64,
    /// Symbol rate, Hz.
    pub clock_rate_hz: f64,
    /// Whether the telescope coupling η_T is already inside the channel
    /// transmittance handed to the key-rate formulas. When false it is moved
    /// into the trusted detector instead.
    pub coupling_in_channel: bool,
}

impl Default for KeyRateParams {
    fn default() -> Self {
        KeyRateParams {
            modulation_variance_snu: 299.0,
            reconciliation_beta: 0.98,
            excess_noise_snu: 0.003,
            detector_efficiency: 0.8,
            electronic_noise_snu: 0.0,
            eve_transmittance: 0.01,
            clock_rate_hz: 2e6,
            coupling_in_channel: true,
        }
    }
}

impl KeyRateParams {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.modulation_variance_snu > 0.0) {
            v.push(format!("keyrate.modulation_variance_snu: must be > 0 (got {})", self.modulation_variance_snu));
        }
        if !(self.reconciliation_beta > 0.0 && self.reconciliation_beta <= 1.0) {
            v.push(format!("keyrate.reconciliation_beta: must lie in (0, 1] (got {})", self.reconciliation_beta));
        }
        if !(self.excess_noise_snu >= 0.0) {
            v.push(format!("keyrate.excess_noise_snu: must be >= 0 (got {})", self.excess_noise_snu));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            v.push(format!("keyrate.detector_efficiency: must lie in (0, 1] (got {})", self.detector_efficiency));
        }
        if !(self.electronic_noise_snu >= 0.0) {
            v.push(format!("keyrate.electronic_noise_snu: must be >= 0 (got {})", self.electronic_noise_snu));
        }
        if !(0.0..=1.0).contains(&self.eve_transmittance) {
            v.push(format!("keyrate.eve_transmittance: must lie in [0, 1] (got {})", self.eve_transmittance));
        }
        if !(self.clock_rate_hz > 0.0) {
            v.push(format!("keyrate.clock_rate_hz: must be > 0 (got {})", self.clock_rate_hz));
        }
        v
    }

    fn with_modulation(&self, v_a: f64) -> KeyRateParams {
        KeyRateParams {
            modulation_variance_snu: v_a,
            ..self.clone()
        }
    }
}

/// Bosonic entropic function G(x) = (x+1) log₂(x+1) − x log₂ x, G(0) = 0.
pub fn bosonic_entropy(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (x + 1.0) * (x + 1.0).log2() - x * x.log2()
}

fn noise_terms(t: f64, p: &KeyRateParams) -> (f64, f64, f64) {
    let chi_line = (1.0 - t) / t + p.excess_noise_snu;
    let chi_hom = (1.0 - p.detector_efficiency) / p.detector_efficiency + p.electronic_noise_snu;
    let chi_tot = chi_line + chi_hom / t;
    (chi_line, chi_hom, chi_tot)
}

/// Mutual information I_AB = ½ log₂[(V + χ_tot)/(1 + χ_tot)] for homodyne
/// detection, V = V_A + 1. Returns 0 for T = 0 (the defined limit).
pub fn mutual_information(t: f64, p: &KeyRateParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SimError::domain("mutual_information", format!("T must lie in [0, 1], got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let v = p.modulation_variance_snu + 1.0;
    let (_, _, chi_tot) = noise_terms(t, p);
    Ok(0.5 * ((v + chi_tot) / (1.0 + chi_tot)).log2())
}

/// Holevo bound χ_BE with its symplectic eigenvalues (unit entries pad the
/// five-eigenvalue report where a mode is in vacuum).
#[derive(Debug, Clone, Copy)]
pub struct HolevoBound {
    pub chi_bits: f64,
    pub eigenvalues: [f64; 5],
}

const PHYSICALITY_TOL: f64 = 1e-9;

/// Holevo information of the line-of-sight-restricted Eve about Bob's
/// homodyne outcomes.
///
/// The excess noise rides on the beam as classical input noise (effective
/// source variance V + ξ), so Eve's geometric tap — a beamsplitter of ratio
/// τ = T_E/(1−T) on the lost light — collects its share of both signal and
/// noise: ν_E = T_E (V + ξ) + 1 − T_E, correlated with Bob through
/// C = sqrt(T T_E) (V + ξ − 1). Conditioning on Bob's measured x-quadrature
/// gives the conditional eigenvalue; χ_BE = G[(ν_E−1)/2] − G[(ν_cond−1)/2].
pub fn holevo_los(t: f64, p: &KeyRateParams) -> Result<HolevoBound> {
    if !(0.0..1.0).contains(&t) && t != 1.0 {
        return Err(SimError::domain("holevo_los", format!("T must lie in [0, 1], got {t}")));
    }
    let te = p.eve_transmittance;
    if te == 0.0 || t == 1.0 {
        // Eve decoupled (or nothing lost to tap)
        return Ok(HolevoBound { chi_bits: 0.0, eigenvalues: [1.0; 5] });
    }
    if te > 1.0 - t + PHYSICALITY_TOL {
        return Err(SimError::domain(
            "holevo_los",
            format!("line-of-sight constraint violated: T_E = {te} > 1 - T = {}", 1.0 - t),
        ));
    }
    if t == 0.0 {
        // Bob receives nothing; conditioning has no effect
        return Ok(HolevoBound { chi_bits: 0.0, eigenvalues: [1.0; 5] });
    }
    let v = p.modulation_variance_snu + 1.0;
    let (_chi_line, _, chi_tot) = noise_terms(t, p);
    // classical input noise: effective source variance seen by the network
    let v_eff = v + p.excess_noise_snu;
    let nu_e = te * v_eff + 1.0 - te;
    let c_eb = (t * te).sqrt() * (v_eff - 1.0);
    // Bob's measured x-quadrature variance (trusted detector folded in)
    let var_bx = p.detector_efficiency * t * (v + chi_tot);
    let c_ebx = p.detector_efficiency.sqrt() * c_eb;
    let nu_cond_x = nu_e - c_ebx * c_ebx / var_bx;
    let nu_cond = (nu_cond_x * nu_e).sqrt();

    let eigenvalues = [nu_e, 1.0, nu_cond, 1.0, 1.0];
    for &nu in &eigenvalues {
        if nu < 1.0 - PHYSICALITY_TOL || !nu.is_finite() {
            return Err(SimError::Unphysical {
                context: "holevo_los",
                eigenvalues: eigenvalues.to_vec(),
            });
        }
    }
    let chi = bosonic_entropy((nu_e - 1.0) / 2.0) - bosonic_entropy((nu_cond - 1.0) / 2.0);
    Ok(HolevoBound { chi_bits: chi, eigenvalues })
}

/// Holevo information of an unrestricted collective attack (Eve holds the
/// purification of the whole channel; T_E plays no role). Standard two-mode
/// entangling-cloner eigenvalues:
///
/// A = V²(1−2T) + 2T + T²(V+χ_line)², B = T²(V χ_line + 1)²,
/// λ₁,₂² = [A ± sqrt(A² − 4B)]/2, conditional C, D analogues, λ₅ = 1.
pub fn holevo_collective(t: f64, p: &KeyRateParams) -> Result<HolevoBound> {
    if !(0.0..=1.0).contains(&t) {
        return Err(SimError::domain("holevo_collective", format!("T must lie in [0, 1], got {t}")));
    }
    if t == 0.0 || t == 1.0 {
        return Ok(HolevoBound { chi_bits: 0.0, eigenvalues: [1.0; 5] });
    }
    let v = p.modulation_variance_snu + 1.0;
    let (chi_line, chi_hom, chi_tot) = noise_terms(t, p);
    let a = v * v * (1.0 - 2.0 * t) + 2.0 * t + t * t * (v + chi_line) * (v + chi_line);
    let b = t * t * (v * chi_line + 1.0) * (v * chi_line + 1.0);
    let disc = (a * a - 4.0 * b).max(0.0).sqrt();
    let l1 = ((a + disc) / 2.0).sqrt();
    let l2 = ((a - disc) / 2.0).max(0.0).sqrt();
    let denom = t * (v + chi_tot);
    let c = (a * chi_hom + v * b.sqrt() + t * (v + chi_line)) / denom;
    let d = b.sqrt() * (v + b.sqrt() * chi_hom) / denom;
    let disc2 = (c * c - 4.0 * d).max(0.0).sqrt();
    let l3 = ((c + disc2) / 2.0).sqrt();
    let l4 = ((c - disc2) / 2.0).max(0.0).sqrt();
    let eigenvalues = [l1, l2, l3, l4, 1.0];
    for &nu in &eigenvalues {
        if nu < 1.0 - PHYSICALITY_TOL || !nu.is_finite() {
            return Err(SimError::Unphysical {
                context: "holevo_collective",
                eigenvalues: eigenvalues.to_vec(),
            });
        }
    }
    let g = |x: f64| bosonic_entropy((x - 1.0) / 2.0);
    let chi = g(l1) + g(l2) - g(l3) - g(l4) - g(1.0);
    Ok(HolevoBound { chi_bits: chi, eigenvalues })
}

/// One key-rate evaluation.
#[derive(Debug, Clone, Copy)]
pub struct KeyRate {
    pub bits_per_use: f64,
    /// True when β I_AB − χ_BE was negative and clamped to zero.
    pub clamped: bool,
}

/// K = max(0, β I_AB − χ_BE^LoS).
pub fn key_rate(t: f64, p: &KeyRateParams) -> Result<KeyRate> {
    let i_ab = mutual_information(t, p)?;
    let chi = holevo_los(t, p)?.chi_bits;
    let raw = p.reconciliation_beta * i_ab - chi;
    Ok(KeyRate {
        bits_per_use: raw.max(0.0),
        clamped: raw < 0.0,
    })
}

/// Channel transmittance handed to the key-rate formulas for a composed loss
/// sample, honoring the coupling placement switch. Returns `(t, params)`
/// with the detector efficiency adjusted when the coupling is trusted.
pub fn effective_channel(sample_t_total: f64, coupling_eta: f64, p: &KeyRateParams) -> (f64, KeyRateParams) {
    if p.coupling_in_channel {
        (sample_t_total, p.clone())
    } else {
        let mut q = p.clone();
        q.detector_efficiency = (p.detector_efficiency * coupling_eta).clamp(1e-12, 1.0);
        ((sample_t_total / coupling_eta).min(1.0), q)
    }
}

/// Secret bits accumulated over a pass.
#[derive(Debug, Clone)]
pub struct PassKeyReport {
    pub wavelength_nm: f64,
    pub mean_loss_db: f64,
    pub bits_per_pass: f64,
    pub modulation_variance_snu: f64,
    /// Fraction of timesteps where the rate clamped to zero.
    pub clamped_fraction: f64,
}

/// Integrates K over the loss series: Σ K(T_total(t)) · clock · Δt.
pub fn key_bits_per_pass(
    samples: &[LossSample],
    p: &KeyRateParams,
    coupling_eta: f64,
    time_step_s: f64,
    wavelength_nm: f64,
) -> Result<PassKeyReport> {
    if samples.is_empty() {
        return Err(SimError::domain("key_bits_per_pass", "empty loss series"));
    }
    let mut bits = 0.0;
    let mut clamped = 0usize;
    let mut mean_loss = 0.0;
    for s in samples {
        let (t, q) = effective_channel(s.t_total, coupling_eta, p);
        let k = key_rate(t, &q)?;
        bits += k.bits_per_use * p.clock_rate_hz * time_step_s;
        if k.clamped {
            clamped += 1;
        }
        mean_loss += loss_db(s.t_total);
    }
    Ok(PassKeyReport {
        wavelength_nm,
        mean_loss_db: mean_loss / samples.len() as f64,
        bits_per_pass: bits,
        modulation_variance_snu: p.modulation_variance_snu,
        clamped_fraction: clamped as f64 / samples.len() as f64,
    })
}

/// Modulation-variance optimum over a transmittance profile.
#[derive(Debug, Clone, Copy)]
pub struct ModulationOptimum {
    pub v_a_snu: f64,
    pub mean_key_bits_per_use: f64,
}

/// Maximizes the mean key rate over V_A ∈ [0.1, 10⁴] SNU by golden-section
/// search (grid re-scan fallback guards against bracket failure). Returns
/// `None` when the objective is flat zero (no key anywhere).
pub fn optimize_modulation(t_profile: &[f64], p: &KeyRateParams) -> Result<Option<ModulationOptimum>> {
    if t_profile.is_empty() {
        return Err(SimError::domain("optimize_modulation", "empty transmittance profile"));
    }
    let mean_key = |v_a: f64| -> f64 {
        let q = p.with_modulation(v_a);
        let mut acc = 0.0;
        for &t in t_profile {
            match key_rate(t, &q) {
                Ok(k) => acc += k.bits_per_use,
                Err(_) => return 0.0,
            }
        }
        acc / t_profile.len() as f64
    };
    let (lo, hi) = (0.1, 1e4);
    let (mut v_best, mut k_best) = golden_max(&mean_key, lo, hi, 1.0);
    // golden sections assume unimodality; re-scan coarsely as a guard
    let mut grid_v = lo;
    while grid_v <= hi {
        let k = mean_key(grid_v);
        if k > k_best {
            k_best = k;
            v_best = grid_v;
        }
        grid_v *= 1.6;
    }
    if k_best <= 0.0 {
        return Ok(None);
    }
    // polish around the winner
    let (v_opt, k_opt) = golden_max(&mean_key, (v_best / 2.0).max(lo), (v_best * 2.0).min(hi), 1.0);
    let (v_fin, k_fin) = if k_opt >= k_best { (v_opt, k_opt) } else { (v_best, k_best) };
    Ok(Some(ModulationOptimum {
        v_a_snu: v_fin,
        mean_key_bits_per_use: k_fin,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spoqc() -> KeyRateParams {
        KeyRateParams::default()
    }

    #[test]
    fn bosonic_entropy_reference_points() {
        assert_eq!(bosonic_entropy(0.0), 0.0);
        assert_relative_eq!(bosonic_entropy(1.0), 2.0, epsilon = 1e-12);
        // increasing and concave on a sample grid
        let mut prev = 0.0;
        let mut prev_step = f64::INFINITY;
        for i in 1..=100 {
            let x = i as f64;
            let g = bosonic_entropy(x);
            assert!(g > prev);
            let step = g - prev;
            assert!(step <= prev_step + 1e-12);
            prev = g;
            prev_step = step;
        }
    }

    #[test]
    fn mutual_information_ideal_channel() {
        let p = KeyRateParams {
            excess_noise_snu: 0.0,
            detector_efficiency: 1.0,
            electronic_noise_snu: 0.0,
            ..spoqc()
        };
        let i = mutual_information(1.0, &p).unwrap();
        assert_relative_eq!(i, 0.5 * (p.modulation_variance_snu + 1.0).log2(), epsilon = 1e-12);
    }

    #[test]
    fn mutual_information_vanishes_without_modulation() {
        let p = KeyRateParams { modulation_variance_snu: 1e-12, ..spoqc() };
        assert!(mutual_information(0.3, &p).unwrap() < 1e-12);
        assert_eq!(mutual_information(0.0, &spoqc()).unwrap(), 0.0);
    }

    #[test]
    fn mutual_information_frozen_oracle() {
        // independent arithmetic evaluation of the chain at T = 0.1
        let i = mutual_information(0.1, &spoqc()).unwrap();
        assert_relative_eq!(i, 2.319_449_926_124_895, max_relative = 1e-12);
    }

    #[test]
    fn holevo_los_decoupled_eve() {
        let p = KeyRateParams { eve_transmittance: 0.0, ..spoqc() };
        for t in [0.001, 0.1, 0.9] {
            let h = holevo_los(t, &p).unwrap();
            assert!(h.chi_bits.abs() < 1e-9);
        }
    }

    #[test]
    fn holevo_los_frozen_oracle() {
        // independent high-precision evaluation at T = 0.1, T_E = 0.01
        let h = holevo_los(0.1, &spoqc()).unwrap();
        assert_relative_eq!(h.chi_bits, 0.958_926_681_595_266_7, max_relative = 1e-10);
        for &nu in &h.eigenvalues {
            assert!(nu >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn holevo_los_enforces_geometry() {
        let p = KeyRateParams { eve_transmittance: 0.5, ..spoqc() };
        assert!(holevo_los(0.6, &p).is_err());
        assert!(holevo_los(0.4, &p).is_ok());
    }

    /// Generic two-mode Gaussian oracle: builds the joint (E, B) covariance
    /// from the beamsplitter network and recomputes χ via symplectic
    /// invariants and a Schur complement.
    #[test]
    fn holevo_los_covariance_oracle() {
        let p = spoqc();
        let t: f64 = 0.1;
        let te = p.eve_transmittance;
        let v = p.modulation_variance_snu + 1.0;
        let v_eff = v + p.excess_noise_snu;
        // x-block joint covariance of (E, B_channel_output): both modes are
        // beamsplitter shares of the same effective source
        let nu_e = te * v_eff + 1.0 - te;
        let c = (t * te).sqrt() * (v_eff - 1.0);
        let gb = t * v_eff + (1.0 - t);
        // two-mode symplectic eigenvalues from invariants (x and p blocks equal
        // up to the sign of the correlation; det C = -c² for a two-mode
        // squeezed-like correlation, +c² here since both quadratures correlate
        // with the same sign through a beamsplitter)
        let det_a = nu_e * nu_e;
        let det_b = gb * gb;
        let det_c = c * c;
        let det_gamma = (nu_e * gb - c * c).powi(2);
        let delta = det_a + det_b + 2.0 * det_c;
        let nu1 = ((delta + (delta * delta - 4.0 * det_gamma).sqrt()) / 2.0).sqrt();
        let nu2 = ((delta - (delta * delta - 4.0 * det_gamma).sqrt()) / 2.0).sqrt();
        assert!(nu1 >= 1.0 - 1e-9 && nu2 >= 1.0 - 1e-9, "joint state unphysical: {nu1} {nu2}");
        // detector + homodyne conditioning on x_B
        let var_bx = p.detector_efficiency * t * (v + {
            let (_, _, chi_tot) = super::noise_terms(t, &p);
            chi_tot
        });
        let cx = p.detector_efficiency.sqrt() * c;
        let cond_x = nu_e - cx * cx / var_bx;
        let nu_cond = (cond_x * nu_e).sqrt();
        let chi = bosonic_entropy((nu_e - 1.0) / 2.0) - bosonic_entropy((nu_cond - 1.0) / 2.0);
        let h = holevo_los(t, &p).unwrap();
        assert_relative_eq!(h.chi_bits, chi, max_relative = 1e-12);
    }

    #[test]
    fn collective_attack_dominates_los() {
        let p = spoqc();
        for t in [0.01, 0.05, 0.2, 0.5] {
            let los = holevo_los(t, &p).unwrap().chi_bits;
            let full = holevo_collective(t, &p).unwrap().chi_bits;
            assert!(full >= los - 1e-9, "T={t}: collective {full} < LoS {los}");
        }
    }

    #[test]
    fn key_rate_ideal_equals_mutual_information() {
        let p = KeyRateParams {
            reconciliation_beta: 1.0,
            eve_transmittance: 0.0,
            detector_efficiency: 1.0,
            electronic_noise_snu: 0.0,
            excess_noise_snu: 0.0,
            ..spoqc()
        };
        let t = 0.35;
        let k = key_rate(t, &p).unwrap();
        assert_relative_eq!(k.bits_per_use, mutual_information(t, &p).unwrap(), epsilon = 1e-12);
        assert!(!k.clamped);
    }

    #[test]
    fn key_rate_vanishes_at_opaque_channel() {
        let k = key_rate(0.0, &spoqc()).unwrap();
        assert_eq!(k.bits_per_use, 0.0);
    }

    #[test]
    fn key_rate_monotone_in_noise_and_eavesdropper() {
        use rand::Rng;
        let mut rng = crate::simrng::stream_rng(11, crate::simrng::StreamKind::Synthetic, 0, 0);
        for _ in 0..60 {
            let t: f64 = rng.gen_range(0.02..0.9);
            let base = KeyRateParams {
                eve_transmittance: rng.gen_range(0.0..(1.0 - t).min(0.05)),
                excess_noise_snu: rng.gen_range(0.0..0.02),
                ..spoqc()
            };
            let k0 = key_rate(t, &base).unwrap().bits_per_use;
            let mut worse_xi = base.clone();
            worse_xi.excess_noise_snu += 0.01;
            assert!(key_rate(t, &worse_xi).unwrap().bits_per_use <= k0 + 1e-9);
            let mut worse_te = base.clone();
            worse_te.eve_transmittance = (worse_te.eve_transmittance + 0.01).min(1.0 - t);
            assert!(key_rate(t, &worse_te).unwrap().bits_per_use <= k0 + 1e-9);
        }
    }

    fn fake_sample(t_total: f64) -> LossSample {
        LossSample {
            t_s: 0.0,
            zenith_rad: 0.0,
            t_atm: 1.0,
            t_geo: t_total,
            t_point: 1.0,
            t_scint: 1.0,
            t_total,
            displacement_m: 0.0,
            displacement_x_m: 0.0,
            displacement_y_m: 0.0,
        }
    }

    #[test]
    fn pass_bits_zero_for_dark_series() {
        let samples: Vec<LossSample> = (0..10).map(|_| fake_sample(0.0)).collect();
        let r = key_bits_per_pass(&samples, &spoqc(), 0.4, 0.5, 1550.0).unwrap();
        assert_eq!(r.bits_per_pass, 0.0);
    }

    #[test]
    fn key_rate_clamps_and_flags_negative_balance() {
        // weak reconciliation + strong tap: Holevo exceeds beta * I_AB
        let p = KeyRateParams {
            reconciliation_beta: 0.5,
            eve_transmittance: 0.5,
            ..spoqc()
        };
        let k = key_rate(0.01, &p).unwrap();
        assert_eq!(k.bits_per_use, 0.0);
        assert!(k.clamped);
    }

    #[test]
    fn pass_bits_accumulate() {
        let samples: Vec<LossSample> = (0..240).map(|_| fake_sample(0.1)).collect();
        let p = spoqc();
        let r = key_bits_per_pass(&samples, &p, 0.4, 0.5, 1550.0).unwrap();
        let per_use = key_rate(0.1, &p).unwrap().bits_per_use;
        assert_relative_eq!(r.bits_per_pass, per_use * 2e6 * 0.5 * 240.0, max_relative = 1e-12);
    }

    #[test]
    fn coupling_placement_switch() {
        let p_in = spoqc();
        let p_out = KeyRateParams { coupling_in_channel: false, ..spoqc() };
        let (t1, q1) = effective_channel(0.04, 0.4, &p_in);
        assert_eq!(t1, 0.04);
        assert_eq!(q1.detector_efficiency, p_in.detector_efficiency);
        let (t2, q2) = effective_channel(0.04, 0.4, &p_out);
        assert_relative_eq!(t2, 0.1, epsilon = 1e-12);
        assert_relative_eq!(q2.detector_efficiency, 0.32, epsilon = 1e-12);
    }

    #[test]
    fn optimize_modulation_finds_local_max() {
        let p = spoqc();
        let profile = vec![0.1];
        let opt = optimize_modulation(&profile, &p).unwrap().expect("key should be positive");
        let k_at = |v: f64| {
            key_rate(0.1, &p.with_modulation(v)).unwrap().bits_per_use
        };
        assert!(k_at(opt.v_a_snu) >= k_at(opt.v_a_snu + 10.0) - 1e-9);
        assert!(k_at(opt.v_a_snu) >= k_at((opt.v_a_snu - 10.0).max(0.1)) - 1e-9);
    }

    #[test]
    fn optimize_modulation_order_invariant() {
        let p = spoqc();
        let a = vec![0.05, 0.1, 0.2, 0.15];
        let mut b = a.clone();
        b.reverse();
        let oa = optimize_modulation(&a, &p).unwrap().unwrap();
        let ob = optimize_modulation(&b, &p).unwrap().unwrap();
        assert_relative_eq!(oa.v_a_snu, ob.v_a_snu, epsilon = 1e-9);
    }

    #[test]
    fn optimize_modulation_flat_objective() {
        let p = spoqc();
        let profile = vec![1e-30; 4];
        assert!(optimize_modulation(&profile, &p).unwrap().is_none());
    }
}
