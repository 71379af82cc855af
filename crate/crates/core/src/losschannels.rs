//! Per-timestep channel transmittance split by physical mechanism, mirroring
//! the three actuators of a table-top emulator:
//!
//! - atmospheric extinction and diffraction-limited divergence onto the
//!   (obstructed) receiver — reproduced by a variable optical attenuator;
//! - pointing-error plus turbulent beam-wander displacement — reproduced by
//!   a fine steering mirror;
//! - log-normal scintillation fades — reproduced by a deformable mirror
//!   cycling phase screens.
//!
//! Total transmittance is the product of the mechanisms and the telescope
//! coupling efficiency, so losses in dB add exactly.

use crate::error::{Result, SimError};
use crate::geometry::{OrbitPass, PathSample};
use crate::numerics;
use crate::simrng::{standard_normal, standard_normal_pair};
use crate::turbulence::{self, Direction, PathTurbulence, TurbulenceProfile};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Atmospheric scale height of the extinction profile, metres.
pub const EXTINCTION_SCALE_HEIGHT_M: f64 = 6600.0;

/// Transmitter/receiver optics and per-wavelength channel constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticalSystem {
    /// Signal wavelength, nm.
    pub wavelength_nm: f64,
    /// Transmitter telescope aperture (diameter), m.
    pub tx_aperture_m: f64,
    /// Beam waist at the transmitter, m. Defaults to half the transmitter
    /// aperture (diffraction-limited full-aperture beam).
    pub beam_waist_m: Option<f64>,
    /// Receiver telescope aperture (diameter), m.
    pub rx_aperture_m: f64,
    /// Central obstruction as a fraction of the receiver diameter, in [0, 1).
    pub obstruction_ratio: f64,
    /// Transmitter pointing error, rad.
    pub pointing_error_rad: f64,
    /// Dimensionless sea-level extinction optical depth at 550 nm
    /// (T_atm = exp(−α₀ g(θ)/h̄)).
    pub extinction_alpha0_550: f64,
    /// Wavelength exponent of the extinction scaling (α₀ ∝ λ^(−q)).
    pub extinction_exponent: f64,
    /// Direct per-wavelength extinction override; wins over the scaled value.
    pub extinction_alpha0: Option<f64>,
    /// Telescope coupling transmissivity, in (0, 1].
    pub coupling_eta: f64,
    /// Pins the scintillation dB standard deviation instead of deriving it
    /// from the turbulence profile.
    pub scintillation_std_db: Option<f64>,
}

impl Default for OpticalSystem {
    fn default() -> Self {
        OpticalSystem {
            wavelength_nm: 1550.0,
            tx_aperture_m: 0.08,
            beam_waist_m: None,
            rx_aperture_m: 0.6,
            obstruction_ratio: 0.3,
            pointing_error_rad: 4e-6,
            extinction_alpha0_550: 0.7,
            extinction_exponent: 1.3,
            extinction_alpha0: None,
            coupling_eta: 0.4,
            scintillation_std_db: None,
        }
    }
}

impl OpticalSystem {
    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_nm * 1e-9
    }

    /// Beam waist with the half-aperture default applied.
    pub fn beam_waist(&self) -> f64 {
        self.beam_waist_m.unwrap_or(self.tx_aperture_m / 2.0)
    }

    /// Extinction optical-depth factor at this wavelength.
    pub fn alpha0(&self) -> f64 {
        match self.extinction_alpha0 {
            Some(direct) => direct,
            None => self.extinction_alpha0_550 * (550.0 / self.wavelength_nm).powf(self.extinction_exponent),
        }
    }

    pub fn validate(&self, label: &str) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.wavelength_nm >= 300.0 && self.wavelength_nm <= 2000.0) {
            v.push(format!("{label}.wavelength_nm: must lie in [300, 2000] nm (got {})", self.wavelength_nm));
        }
        if !(self.tx_aperture_m > 0.0) {
            v.push(format!("{label}.tx_aperture_m: must be > 0 (got {})", self.tx_aperture_m));
        }
        if !(self.rx_aperture_m > 0.0) {
            v.push(format!("{label}.rx_aperture_m: must be > 0 (got {})", self.rx_aperture_m));
        }
        if self.beam_waist() > self.tx_aperture_m / 2.0 + 1e-15 {
            v.push(format!(
                "{label}.beam_waist_m: must not exceed tx_aperture/2 (got {} > {})",
                self.beam_waist(),
                self.tx_aperture_m / 2.0
            ));
        }
        if !(0.0..1.0).contains(&self.obstruction_ratio) {
            v.push(format!("{label}.obstruction_ratio: must lie in [0, 1) (got {})", self.obstruction_ratio));
        }
        if !(self.pointing_error_rad >= 0.0) {
            v.push(format!("{label}.pointing_error_rad: must be >= 0 (got {})", self.pointing_error_rad));
        }
        if !(self.alpha0() >= 0.0) {
            v.push(format!("{label}.extinction: effective alpha0 must be >= 0 (got {})", self.alpha0()));
        }
        if !(self.coupling_eta > 0.0 && self.coupling_eta <= 1.0) {
            v.push(format!("{label}.coupling_eta: must lie in (0, 1] (got {})", self.coupling_eta));
        }
        if let Some(s) = self.scintillation_std_db {
            if !(s >= 0.0) {
                v.push(format!("{label}.scintillation_std_db: must be >= 0 (got {s})"));
            }
        }
        v
    }
}

/// One timestep of the loss decomposition. All transmittances are linear;
/// `t_scint` is a mean-one multiplicative fade and may exceed 1 on focusing
/// instants, every other factor lies in (0, 1].
#[derive(Debug, Clone, Copy)]
pub struct LossSample {
    pub t_s: f64,
    pub zenith_rad: f64,
    /// Extinction by scattering.
    pub t_atm: f64,
    /// Centered diffraction/divergence capture of the obstructed aperture.
    pub t_geo: f64,
    /// Extra penalty from beam displacement, T_geo(d)/T_geo(0).
    pub t_point: f64,
    /// Scintillation fade (mean-one log-normal).
    pub t_scint: f64,
    /// Product of the above times the telescope coupling.
    pub t_total: f64,
    /// Radial beam displacement at the receiver, m.
    pub displacement_m: f64,
    /// Displacement components (deterministic offset along +x), m.
    pub displacement_x_m: f64,
    pub displacement_y_m: f64,
}

/// −10 log10(T): loss in dB of a linear transmittance.
pub fn loss_db(t: f64) -> f64 {
    -10.0 * t.log10()
}

/// Extinction path factor g(θ) = ∫ exp(−h(x, θ)/h̄) dx along the slant path.
pub fn extinction_path_factor(point: &PathSample, pass: &OrbitPass, ground_alt_m: f64) -> Result<f64> {
    let re = pass.earth_radius_m;
    let theta = point.zenith_rad;
    let integrand = |u: f64| {
        let h = (re * re + u * u + 2.0 * re * u * theta.cos()).sqrt() - re + ground_alt_m;
        (-h / EXTINCTION_SCALE_HEIGHT_M).exp()
    };
    // the integrand decays within a few scale heights; split decades for the
    // adaptive pass and stop once the atmosphere is numerically gone
    let u_top = crate::geometry::path_position_at_altitude(
        40.0 * EXTINCTION_SCALE_HEIGHT_M,
        theta,
        ground_alt_m,
        re,
    )
    .min(point.slant_range_m);
    let pts = numerics::decade_points(0.0, u_top, EXTINCTION_SCALE_HEIGHT_M / 100.0);
    numerics::integrate_split(&integrand, &pts, 1e-6, "extinction_path_factor")
}

/// Atmospheric transmittance T_atm = exp(−α₀ g(θ)/h̄) with the dimensionless
/// extinction factor α₀ (≈ sea-level zenith optical depth).
pub fn atmospheric_transmittance(
    point: &PathSample,
    pass: &OrbitPass,
    ground_alt_m: f64,
    alpha0: f64,
) -> Result<f64> {
    if alpha0 < 0.0 {
        return Err(SimError::domain("atmospheric_transmittance", "alpha0 must be >= 0"));
    }
    let g = extinction_path_factor(point, pass, ground_alt_m)?;
    Ok((-alpha0 * g / EXTINCTION_SCALE_HEIGHT_M).exp())
}

/// Diffraction-limited beam radius after propagating `z`:
/// ω(θ) = ω₀ sqrt(1 + (z λ / (π ω₀²))²).
pub fn diffraction_beam_width(z_m: f64, wavelength_m: f64, beam_waist_m: f64) -> f64 {
    let far = z_m * wavelength_m / (std::f64::consts::PI * beam_waist_m * beam_waist_m);
    beam_waist_m * (1.0 + far * far).sqrt()
}

/// Turbulence-broadened short-term beam radius:
/// ω_st² = ω² + 2 (λ z / (π r₀))² (1 − φ)², φ = 0.33 (r₀/ω₀)^(1/3),
/// with r₀ the coherence Fried parameter of the path.
pub fn effective_beam_width(
    point: &PathSample,
    optics: &OpticalSystem,
    coherence_r0_m: f64,
) -> (f64, f64) {
    let lam = optics.wavelength_m();
    let w0 = optics.beam_waist();
    let z = point.slant_range_m;
    let omega = diffraction_beam_width(z, lam, w0);
    let phi = 0.33 * (coherence_r0_m / w0).powf(1.0 / 3.0);
    let spread = 2.0 * (lam * z / (std::f64::consts::PI * coherence_r0_m)).powi(2) * (1.0 - phi) * (1.0 - phi);
    let omega_st = (omega * omega + spread).sqrt();
    (omega, omega_st)
}

/// Fraction of a Gaussian beam of radius `omega_st` captured by an annular
/// aperture (outer radius a_r/2, inner radius obstruction·a_r/2) whose
/// center is displaced `d` from the beam axis. Adaptive 2-D quadrature in
/// polar coordinates about the aperture center, relative tolerance ~1e-3.
pub fn geometric_transmittance(
    omega_st_m: f64,
    rx_aperture_m: f64,
    obstruction_ratio: f64,
    displacement_m: f64,
) -> Result<f64> {
    if omega_st_m <= 0.0 || rx_aperture_m <= 0.0 {
        return Err(SimError::domain(
            "geometric_transmittance",
            "beam width and aperture must be > 0",
        ));
    }
    if !(0.0..1.0).contains(&obstruction_ratio) || displacement_m < 0.0 {
        return Err(SimError::domain(
            "geometric_transmittance",
            "require obstruction in [0,1) and displacement >= 0",
        ));
    }
    let w2 = omega_st_m * omega_st_m;
    let rho_out = rx_aperture_m / 2.0;
    let rho_in = obstruction_ratio * rho_out;
    let d = displacement_m;
    let radial = |rho: f64| {
        // azimuthal integral of the displaced Gaussian, peak factored out
        let peak = (-2.0 * (rho - d) * (rho - d) / w2).exp();
        if peak == 0.0 {
            return 0.0;
        }
        let c = 4.0 * rho * d / w2;
        let az = if c < 1e-12 {
            std::f64::consts::PI
        } else {
            numerics::integrate(
                &|phi: f64| (-c * (1.0 - phi.cos())).exp(),
                0.0,
                std::f64::consts::PI,
                1e-5,
                "geometric_transmittance(azimuthal)",
            )
            .unwrap_or(std::f64::consts::PI)
        };
        2.0 * rho * (2.0 / (std::f64::consts::PI * w2)) * peak * az
    };
    let t = numerics::integrate(&radial, rho_in, rho_out, 1e-4, "geometric_transmittance")?;
    Ok(t.clamp(0.0, 1.0))
}

/// Closed-form centered capture of a Gaussian beam by the same annulus
/// (d = 0): exp(−2 ρ_in²/ω²) − exp(−2 ρ_out²/ω²).
pub fn geometric_transmittance_centered(
    omega_st_m: f64,
    rx_aperture_m: f64,
    obstruction_ratio: f64,
) -> f64 {
    let w2 = omega_st_m * omega_st_m;
    let rho_out = rx_aperture_m / 2.0;
    let rho_in = obstruction_ratio * rho_out;
    (-2.0 * rho_in * rho_in / w2).exp() - (-2.0 * rho_out * rho_out / w2).exp()
}

/// One pointing/wander displacement draw.
#[derive(Debug, Clone, Copy)]
pub struct PointingSample {
    pub x_m: f64,
    pub y_m: f64,
    pub radial_m: f64,
}

/// Draws the receiver-plane beam displacement: a deterministic offset
/// d_det = a_z tan(t_err/2) along +x plus isotropic Gaussian wander with the
/// given per-axis variance.
pub fn pointing_offset_sample(
    satellite_altitude_m: f64,
    pointing_error_rad: f64,
    wander_variance_m2: f64,
    rng: &mut ChaCha8Rng,
) -> PointingSample {
    let d_det = satellite_altitude_m * (pointing_error_rad / 2.0).tan();
    let sigma = wander_variance_m2.max(0.0).sqrt();
    let (g1, g2) = standard_normal_pair(rng);
    let x = d_det + sigma * g1;
    let y = sigma * g2;
    PointingSample {
        x_m: x,
        y_m: y,
        radial_m: (x * x + y * y).sqrt(),
    }
}

/// Mean-one log-normal scintillation fade with the configured dB variance:
/// T = exp(2χ), χ ~ N(−σ_χ², σ_χ²), σ_χ = σ_dB ln(10)/20.
pub fn scintillation_loss_sample(variance_db2: f64, rng: &mut ChaCha8Rng) -> f64 {
    if variance_db2 <= 0.0 {
        return 1.0;
    }
    let sigma_db = variance_db2.sqrt();
    let sigma_chi = sigma_db * std::f64::consts::LN_10 / 20.0;
    let chi = -sigma_chi * sigma_chi + sigma_chi * standard_normal(rng);
    (2.0 * chi).exp()
}

/// Everything needed to draw loss samples at one pass point and wavelength.
#[derive(Debug, Clone)]
pub struct PointContext {
    pub point: PathSample,
    pub turb: PathTurbulence,
    pub t_atm: f64,
    pub omega_m: f64,
    pub omega_st_m: f64,
    /// Centered geometric capture T_geo(d = 0), by quadrature.
    pub t_geo_centered: f64,
    pub d_det_m: f64,
    /// Per-axis wander standard deviation, m.
    pub wander_sigma_m: f64,
    /// Scintillation dB variance in effect (override or derived).
    pub scint_variance_db2: f64,
    pub coupling_eta: f64,
    satellite_altitude_m: f64,
    pointing_error_rad: f64,
    rx_aperture_m: f64,
    obstruction_ratio: f64,
}

impl PointContext {
    pub fn compute(
        point: &PathSample,
        profile: &TurbulenceProfile,
        pass: &OrbitPass,
        optics: &OpticalSystem,
        direction: Direction,
    ) -> Result<PointContext> {
        let turb = PathTurbulence::compute(
            point,
            profile,
            pass,
            direction,
            optics.wavelength_m(),
            optics.beam_waist(),
        )?;
        let t_atm = atmospheric_transmittance(point, pass, profile.instrument_height_m, optics.alpha0())?;
        let (omega, omega_st) = effective_beam_width(point, optics, turb.coherence_r0_m);
        let t_geo0 = geometric_transmittance(omega_st, optics.rx_aperture_m, optics.obstruction_ratio, 0.0)?;
        let scint_variance_db2 = match optics.scintillation_std_db {
            Some(s) => s * s,
            None => turbulence::scintillation_loss_variance(
                point,
                profile,
                pass,
                optics.wavelength_m(),
                optics.rx_aperture_m,
            )?,
        };
        Ok(PointContext {
            point: *point,
            turb,
            t_atm,
            omega_m: omega,
            omega_st_m: omega_st,
            t_geo_centered: t_geo0,
            d_det_m: pass.satellite_altitude_m * (optics.pointing_error_rad / 2.0).tan(),
            wander_sigma_m: turb.wander_variance_m2.sqrt(),
            scint_variance_db2,
            coupling_eta: optics.coupling_eta,
            satellite_altitude_m: pass.satellite_altitude_m,
            pointing_error_rad: optics.pointing_error_rad,
            rx_aperture_m: optics.rx_aperture_m,
            obstruction_ratio: optics.obstruction_ratio,
        })
    }

    /// Pointing-displacement draw for this point.
    pub fn draw_pointing(&self, rng: &mut ChaCha8Rng) -> PointingSample {
        pointing_offset_sample(
            self.satellite_altitude_m,
            self.pointing_error_rad,
            self.turb.wander_variance_m2,
            rng,
        )
    }

    /// Displacement penalty T_geo(d)/T_geo(0).
    pub fn pointing_transmittance(&self, displacement_m: f64) -> Result<f64> {
        let t = geometric_transmittance(
            self.omega_st_m,
            self.rx_aperture_m,
            self.obstruction_ratio,
            displacement_m,
        )?;
        Ok((t / self.t_geo_centered).min(1.0))
    }

    /// Draws one composed loss sample. Pointing and scintillation consume
    /// independent RNG streams so either mechanism can be resampled alone.
    pub fn sample(&self, rng_pointing: &mut ChaCha8Rng, rng_scint: &mut ChaCha8Rng) -> Result<LossSample> {
        let p = self.draw_pointing(rng_pointing);
        let t_point = self.pointing_transmittance(p.radial_m)?;
        let t_scint = scintillation_loss_sample(self.scint_variance_db2, rng_scint);
        let t_total = self.t_atm * self.t_geo_centered * t_point * t_scint * self.coupling_eta;
        Ok(LossSample {
            t_s: self.point.t_s,
            zenith_rad: self.point.zenith_rad,
            t_atm: self.t_atm,
            t_geo: self.t_geo_centered,
            t_point,
            t_scint,
            t_total,
            displacement_m: p.radial_m,
            displacement_x_m: p.x_m,
            displacement_y_m: p.y_m,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simrng::{stream_rng, StreamKind};
    use approx::assert_relative_eq;

    fn sample_at(zenith_deg: f64) -> PathSample {
        let pass = OrbitPass::default();
        let z = crate::geometry::slant_range(zenith_deg.to_radians(), 700e3, pass.earth_radius_m).unwrap();
        PathSample { t_s: 0.0, zenith_rad: zenith_deg.to_radians(), slant_range_m: z }
    }

    #[test]
    fn no_extinction_means_unity() {
        let pass = OrbitPass::default();
        let t = atmospheric_transmittance(&sample_at(20.0), &pass, 0.5, 0.0).unwrap();
        assert_relative_eq!(t, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn extinction_path_factor_zenith() {
        // at zenith h(x) ≈ x, so g(0) ≈ h̄ (1 − e^(−z/h̄)) ≈ 6600 m
        let pass = OrbitPass::default();
        let g = extinction_path_factor(&sample_at(0.0), &pass, 0.0).unwrap();
        assert_relative_eq!(g, EXTINCTION_SCALE_HEIGHT_M, max_relative = 1e-3);
    }

    #[test]
    fn extinction_grows_off_zenith() {
        let pass = OrbitPass::default();
        let g0 = extinction_path_factor(&sample_at(0.0), &pass, 0.0).unwrap();
        let g30 = extinction_path_factor(&sample_at(30.0), &pass, 0.0).unwrap();
        assert!(g30 > g0);
        // close to the flat-atmosphere secant factor at this small angle
        assert_relative_eq!(g30 / g0, 1.0 / 30f64.to_radians().cos(), max_relative = 5e-3);
    }

    #[test]
    fn alpha0_wavelength_scaling() {
        let o = OpticalSystem::default();
        assert!(o.alpha0() < o.extinction_alpha0_550);
        let direct = OpticalSystem { extinction_alpha0: Some(0.123), ..OpticalSystem::default() };
        assert_eq!(direct.alpha0(), 0.123);
    }

    #[test]
    fn beam_width_at_origin_is_waist() {
        assert_relative_eq!(diffraction_beam_width(0.0, 1550e-9, 0.04), 0.04);
    }

    #[test]
    fn beam_width_far_field_value() {
        // independently evaluated: 700 km, 1550 nm, 4 cm waist
        let w = diffraction_beam_width(700e3, 1550e-9, 0.04);
        assert_relative_eq!(w, 8.634_248_3, max_relative = 1e-6);
    }

    #[test]
    fn turbulence_spread_vanishes_for_huge_r0() {
        let optics = OpticalSystem::default();
        let p = sample_at(0.0);
        let (omega, omega_st) = effective_beam_width(&p, &optics, 1e6);
        assert_relative_eq!(omega_st, omega, max_relative = 1e-9);
        let (_, omega_st_turb) = effective_beam_width(&p, &optics, 0.1);
        assert!(omega_st_turb > omega);
    }

    #[test]
    fn geometric_capture_complete_for_huge_aperture() {
        let t = geometric_transmittance(1.0, 20.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(t, 1.0, max_relative = 2e-3);
    }

    #[test]
    fn geometric_matches_centered_disk_closed_form() {
        for (w, ar) in [(8.6, 0.6), (1.0, 0.6), (0.5, 1.2), (3.0, 2.0)] {
            let t = geometric_transmittance(w, ar, 0.0, 0.0).unwrap();
            let exact = 1.0 - (-ar * ar / (2.0 * w * w)).exp();
            assert_relative_eq!(t, exact, max_relative = 1e-3);
        }
    }

    #[test]
    fn geometric_matches_centered_annulus_closed_form() {
        for ob in [0.1, 0.3, 0.6] {
            let (w, ar) = (4.0, 0.6);
            let t = geometric_transmittance(w, ar, ob, 0.0).unwrap();
            let exact = geometric_transmittance_centered(w, ar, ob);
            assert_relative_eq!(t, exact, max_relative = 1e-3);
        }
    }

    #[test]
    fn geometric_monotone_in_displacement() {
        let mut prev = geometric_transmittance(4.0, 0.6, 0.3, 0.0).unwrap();
        for i in 1..=8 {
            let t = geometric_transmittance(4.0, 0.6, 0.3, i as f64).unwrap();
            assert!(t <= prev * (1.0 + 1e-6), "not monotone at d = {i}");
            prev = t;
        }
    }

    #[test]
    fn pointing_sample_zero_when_disabled() {
        let mut rng = stream_rng(1, StreamKind::Pointing, 0, 0);
        let p = pointing_offset_sample(700e3, 0.0, 0.0, &mut rng);
        assert_eq!(p.radial_m, 0.0);
    }

    #[test]
    fn pointing_deterministic_offset_value() {
        // a_z tan(t_err/2) at 700 km / 4 µrad ≈ 1.4 m
        let mut rng = stream_rng(1, StreamKind::Pointing, 0, 0);
        let p = pointing_offset_sample(700e3, 4e-6, 0.0, &mut rng);
        assert_relative_eq!(p.radial_m, 1.4, max_relative = 1e-9);
        assert_relative_eq!(p.x_m, 1.4, max_relative = 1e-9);
        assert_eq!(p.y_m, 0.0);
    }

    #[test]
    fn scintillation_sample_degenerate_and_statistics() {
        let mut rng = stream_rng(5, StreamKind::Scintillation, 0, 0);
        assert_eq!(scintillation_loss_sample(0.0, &mut rng), 1.0);

        let sigma_db: f64 = 0.5;
        let n = 40_000;
        let mut mean_t = 0.0;
        let mut db = Vec::with_capacity(n);
        for i in 0..n {
            let mut r = stream_rng(5, StreamKind::Scintillation, 0, i as u64);
            let t = scintillation_loss_sample(sigma_db * sigma_db, &mut r);
            mean_t += t;
            db.push(loss_db(t));
        }
        mean_t /= n as f64;
        let m: f64 = db.iter().sum::<f64>() / n as f64;
        let v: f64 = db.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        assert_relative_eq!(mean_t, 1.0, max_relative = 0.01);
        assert_relative_eq!(v.sqrt(), sigma_db, max_relative = 0.02);
    }

    #[test]
    fn link_budget_unity_with_everything_disabled() {
        let pass = OrbitPass::default();
        let profile = TurbulenceProfile {
            ground_cn2: 1e-17,
            ..TurbulenceProfile::default()
        };
        let optics = OpticalSystem {
            rx_aperture_m: 500.0,
            obstruction_ratio: 0.0,
            pointing_error_rad: 0.0,
            extinction_alpha0: Some(0.0),
            coupling_eta: 1.0,
            scintillation_std_db: Some(0.0),
            ..OpticalSystem::default()
        };
        let ctx = PointContext::compute(&sample_at(0.0), &profile, &pass, &optics, Direction::Downlink).unwrap();
        let mut rp = stream_rng(1, StreamKind::Pointing, 0, 0);
        let mut rs = stream_rng(1, StreamKind::Scintillation, 0, 0);
        let s = ctx.sample(&mut rp, &mut rs).unwrap();
        // wander is not disabled by config, but with a clean profile it is
        // centimetres against a 500 m aperture
        assert_relative_eq!(s.t_total, 1.0, max_relative = 5e-3);
    }

    #[test]
    fn loss_decomposition_adds_exactly_in_db() {
        let pass = OrbitPass::default();
        let profile = TurbulenceProfile::default();
        let optics = OpticalSystem::default();
        let ctx = PointContext::compute(&sample_at(25.0), &profile, &pass, &optics, Direction::Downlink).unwrap();
        let mut rp = stream_rng(2, StreamKind::Pointing, 0, 7);
        let mut rs = stream_rng(2, StreamKind::Scintillation, 0, 7);
        let s = ctx.sample(&mut rp, &mut rs).unwrap();
        let sum = loss_db(s.t_atm) + loss_db(s.t_geo) + loss_db(s.t_point) + loss_db(s.t_scint)
            - 10.0 * optics.coupling_eta.log10();
        assert_relative_eq!(loss_db(s.t_total), sum, epsilon = 1e-10);
        assert!(s.t_atm > 0.0 && s.t_atm <= 1.0);
        assert!(s.t_geo > 0.0 && s.t_geo <= 1.0);
        assert!(s.t_point > 0.0 && s.t_point <= 1.0);
        assert!(loss_db(s.t_total).is_finite());
    }

    #[test]
    fn validation_flags_bad_optics() {
        let optics = OpticalSystem {
            wavelength_nm: 150.0,
            obstruction_ratio: 1.2,
            coupling_eta: 0.0,
            beam_waist_m: Some(0.08),
            ..OpticalSystem::default()
        };
        let v = optics.validate("optics[0]");
        assert_eq!(v.len(), 4, "{v:?}");
    }
}
