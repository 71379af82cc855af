//! Overpass kinematics: zenith angle vs time, slant range and altitude along
//! the propagation path for a culminating satellite pass over a ground
//! station, on a spherical Earth.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// How zenith angle is interpolated across the pass.
///
/// `GreatCircle` places the satellite on a circular orbit swept at constant
/// angular rate, with an optional cross-track offset so the culmination
/// elevation is met. `Quadratic` is a simpler symmetric parabola in time
/// between the same endpoints; runs using it are flagged in output metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PassProfile {
    #[default]
    GreatCircle,
    Quadratic,
}

/// One culminating overpass.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrbitPass {
    /// Satellite altitude above ground, metres.
    pub satellite_altitude_m: f64,
    /// Total pass duration, seconds.
    pub pass_duration_s: f64,
    /// Elevation at culmination, degrees (90 = overhead).
    pub max_elevation_deg: f64,
    /// Zenith angle at the start/end of the tracked window, degrees.
    pub edge_zenith_deg: f64,
    /// Sampling interval of the simulated series, seconds.
    pub time_step_s: f64,
    /// Earth radius, metres.
    pub earth_radius_m: f64,
    /// Zenith-vs-time interpolation mode.
    pub profile: PassProfile,
}

impl Default for OrbitPass {
    fn default() -> Self {
        OrbitPass {
            satellite_altitude_m: 700e3,
            pass_duration_s: 120.0,
            max_elevation_deg: 90.0,
            edge_zenith_deg: 30.0,
            time_step_s: 0.5,
            earth_radius_m: EARTH_RADIUS_M,
            profile: PassProfile::GreatCircle,
        }
    }
}

impl OrbitPass {
    /// Checks every type invariant; returns one message per violation.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.satellite_altitude_m > 0.0) {
            v.push(format!("pass.satellite_altitude_m: must be > 0 (got {})", self.satellite_altitude_m));
        }
        if !(self.pass_duration_s > 0.0) {
            v.push(format!("pass.pass_duration_s: must be > 0 (got {})", self.pass_duration_s));
        }
        if !(self.time_step_s > 0.0) {
            v.push(format!("pass.time_step_s: must be > 0 (got {})", self.time_step_s));
        }
        if !(self.max_elevation_deg > 0.0 && self.max_elevation_deg <= 90.0) {
            v.push(format!("pass.max_elevation_deg: must lie in (0, 90] (got {})", self.max_elevation_deg));
        }
        if !(self.edge_zenith_deg > 90.0 - self.max_elevation_deg && self.edge_zenith_deg < 90.0) {
            v.push(format!(
                "pass.edge_zenith_deg: must lie in (90 - max_elevation, 90) (got {})",
                self.edge_zenith_deg
            ));
        }
        if !(self.earth_radius_m > 0.0) {
            v.push(format!("pass.earth_radius_m: must be > 0 (got {})", self.earth_radius_m));
        }
        v
    }

    /// Zenith angle at culmination, radians.
    pub fn min_zenith_rad(&self) -> f64 {
        (90.0 - self.max_elevation_deg).to_radians()
    }

    /// Orbital angular rate for a circular orbit at this altitude, rad/s.
    pub fn orbital_rate_rad_s(&self) -> f64 {
        const MU_EARTH: f64 = 3.986_004_418e14; // m^3/s^2
        let r = self.earth_radius_m + self.satellite_altitude_m;
        (MU_EARTH / (r * r * r)).sqrt()
    }
}

/// One point of the sampled pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    /// Time since the start of the pass, seconds.
    pub t_s: f64,
    /// Zenith angle, radians.
    pub zenith_rad: f64,
    /// Slant range from ground station to satellite, metres.
    pub slant_range_m: f64,
}

/// Line-of-sight distance to a satellite at `altitude` seen under zenith
/// angle `zenith` (spherical Earth):
///
/// z(θ) = sqrt((R + a)² − R² sin²θ) − R cos θ
pub fn slant_range(zenith_rad: f64, altitude_m: f64, earth_radius_m: f64) -> Result<f64> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&zenith_rad) {
        return Err(SimError::domain(
            "slant_range",
            format!("zenith must lie in [0, pi/2), got {zenith_rad} rad"),
        ));
    }
    if altitude_m <= 0.0 {
        return Err(SimError::domain("slant_range", format!("altitude must be > 0, got {altitude_m}")));
    }
    let r = earth_radius_m;
    let ra = r + altitude_m;
    let s = zenith_rad.sin();
    Ok((ra * ra - r * r * s * s).sqrt() - r * zenith_rad.cos())
}

/// Zenith angle under which a satellite at Earth-central angle `psi` from the
/// ground station appears (spherical Earth, circular orbit radius R + a).
pub fn zenith_from_central_angle(psi_rad: f64, altitude_m: f64, earth_radius_m: f64) -> f64 {
    let ra = earth_radius_m + altitude_m;
    (ra * psi_rad.sin()).atan2(ra * psi_rad.cos() - earth_radius_m)
}

/// Central angle at which the satellite appears under zenith angle `zenith`.
pub fn central_angle_from_zenith(zenith_rad: f64, altitude_m: f64, earth_radius_m: f64) -> f64 {
    // bisection; zenith(psi) is monotone on [0, psi_horizon)
    let mut lo = 0.0;
    let mut hi = (earth_radius_m / (earth_radius_m + altitude_m)).acos(); // horizon
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if zenith_from_central_angle(mid, altitude_m, earth_radius_m) < zenith_rad {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zenith angle at time `t` into the pass.
pub fn zenith_at(pass: &OrbitPass, t_s: f64) -> f64 {
    let theta_min = pass.min_zenith_rad();
    let theta_edge = pass.edge_zenith_deg.to_radians();
    // normalized |offset from culmination| in [0, 1]
    let tau = (2.0 * t_s / pass.pass_duration_s - 1.0).abs().min(1.0);
    match pass.profile {
        PassProfile::Quadratic => theta_min + (theta_edge - theta_min) * tau * tau,
        PassProfile::GreatCircle => {
            let a = pass.satellite_altitude_m;
            let r = pass.earth_radius_m;
            // cross-track central angle fixed by the culmination elevation,
            // along-track angle swept linearly in time
            let psi_ct = central_angle_from_zenith(theta_min, a, r);
            let psi_edge = central_angle_from_zenith(theta_edge, a, r);
            let cos_ratio = (psi_edge.cos() / psi_ct.cos()).clamp(-1.0, 1.0);
            let phi_edge = cos_ratio.acos();
            let phi = phi_edge * tau;
            let psi = (psi_ct.cos() * phi.cos()).clamp(-1.0, 1.0).acos();
            zenith_from_central_angle(psi, a, r)
        }
    }
}

/// Samples the pass on its configured time grid.
///
/// Returns `ceil(duration / dt) + 1` samples; zenith equals the configured
/// edge zenith at both ends and `90° − max_elevation` at mid-pass.
pub fn zenith_profile(pass: &OrbitPass) -> Result<Vec<PathSample>> {
    let violations = pass.validate();
    if !violations.is_empty() {
        return Err(SimError::Config { violations });
    }
    let n_steps = (pass.pass_duration_s / pass.time_step_s).ceil() as usize;
    let mut samples = Vec::with_capacity(n_steps + 1);
    for i in 0..=n_steps {
        let t = (i as f64 * pass.time_step_s).min(pass.pass_duration_s);
        let zenith = zenith_at(pass, t);
        let range = slant_range(zenith, pass.satellite_altitude_m, pass.earth_radius_m)?;
        samples.push(PathSample {
            t_s: t,
            zenith_rad: zenith,
            slant_range_m: range,
        });
    }
    Ok(samples)
}

/// Altitude above the ground-station reference of the point at distance
/// `path_position` along the ray towards the satellite:
///
/// h(x, θ) = sqrt(R² + x² + 2 R x cos θ) − R + h₀
pub fn altitude_along_path(
    path_position_m: f64,
    zenith_rad: f64,
    pass: &OrbitPass,
    ground_altitude_m: f64,
) -> Result<f64> {
    let z = slant_range(zenith_rad, pass.satellite_altitude_m, pass.earth_radius_m)?;
    if path_position_m < 0.0 || path_position_m > z * (1.0 + 1e-12) {
        return Err(SimError::domain(
            "altitude_along_path",
            format!("path position {path_position_m} outside [0, {z}]"),
        ));
    }
    let r = pass.earth_radius_m;
    let x = path_position_m;
    Ok((r * r + x * x + 2.0 * r * x * zenith_rad.cos()).sqrt() - r + ground_altitude_m)
}

/// Path distance at which the ray reaches altitude `h` above the ground
/// station (inverse of [`altitude_along_path`]); `h` measured like there.
pub fn path_position_at_altitude(h_m: f64, zenith_rad: f64, ground_altitude_m: f64, earth_radius_m: f64) -> f64 {
    let c = (h_m - ground_altitude_m).max(0.0);
    let r = earth_radius_m;
    let cosz = zenith_rad.cos();
    -r * cosz + (r * r * cosz * cosz + c * c + 2.0 * r * c).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spoqc_pass() -> OrbitPass {
        OrbitPass::default()
    }

    #[test]
    fn slant_range_at_zenith_is_altitude() {
        let z = slant_range(0.0, 700e3, EARTH_RADIUS_M).unwrap();
        assert_relative_eq!(z, 700e3, max_relative = 1e-14);
    }

    #[test]
    fn slant_range_at_60_degrees() {
        // closed form evaluated independently at high precision
        let z = slant_range(60f64.to_radians(), 700e3, EARTH_RADIUS_M).unwrap();
        assert_relative_eq!(z, 1_236_808.249_093_45, max_relative = 1e-10);
    }

    #[test]
    fn slant_range_continuous_at_zenith() {
        let z0 = slant_range(0.0, 700e3, EARTH_RADIUS_M).unwrap();
        let z1 = slant_range(1e-6, 700e3, EARTH_RADIUS_M).unwrap();
        assert!((z1 - z0).abs() < 1.0, "limit discontinuity: {}", z1 - z0);
    }

    #[test]
    fn slant_range_rejects_domain_violations() {
        assert!(slant_range(std::f64::consts::FRAC_PI_2, 700e3, EARTH_RADIUS_M).is_err());
        assert!(slant_range(-0.1, 700e3, EARTH_RADIUS_M).is_err());
        assert!(slant_range(0.3, -5.0, EARTH_RADIUS_M).is_err());
    }

    #[test]
    fn slant_range_strictly_increasing() {
        let mut prev = slant_range(0.0, 700e3, EARTH_RADIUS_M).unwrap();
        for i in 1..90 {
            let z = slant_range((i as f64).to_radians() * 0.9999, 700e3, EARTH_RADIUS_M).unwrap();
            assert!(z > prev, "not increasing at {i} deg");
            prev = z;
        }
    }

    #[test]
    fn profile_endpoints_and_midpoint() {
        let mut pass = spoqc_pass();
        pass.time_step_s = 60.0;
        let samples = zenith_profile(&pass).unwrap();
        assert_eq!(samples.len(), 3);
        assert_relative_eq!(samples[0].zenith_rad.to_degrees(), 30.0, epsilon = 1e-9);
        assert_relative_eq!(samples[1].zenith_rad.to_degrees(), 0.0, epsilon = 1e-9);
        assert_relative_eq!(samples[2].zenith_rad.to_degrees(), 30.0, epsilon = 1e-9);
        assert_relative_eq!(samples[1].slant_range_m, 700e3, max_relative = 1e-12);
    }

    #[test]
    fn profile_sample_count() {
        let pass = spoqc_pass();
        let samples = zenith_profile(&pass).unwrap();
        assert_eq!(samples.len(), 241);
    }

    #[test]
    fn profile_symmetric_about_mid_pass() {
        for profile in [PassProfile::GreatCircle, PassProfile::Quadratic] {
            let mut pass = spoqc_pass();
            pass.profile = profile;
            pass.max_elevation_deg = 70.0;
            let s = zenith_profile(&pass).unwrap();
            let n = s.len();
            for i in 0..n {
                assert_relative_eq!(s[i].zenith_rad, s[n - 1 - i].zenith_rad, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partial_elevation_pass_culminates_correctly() {
        let mut pass = spoqc_pass();
        pass.max_elevation_deg = 60.0;
        pass.edge_zenith_deg = 60.0;
        let s = zenith_profile(&pass).unwrap();
        let mid = &s[s.len() / 2];
        assert_relative_eq!(mid.zenith_rad.to_degrees(), 30.0, epsilon = 1e-6);
        assert_relative_eq!(s[0].zenith_rad.to_degrees(), 60.0, epsilon = 1e-6);
    }

    #[test]
    fn altitude_endpoints() {
        let pass = spoqc_pass();
        let h0 = altitude_along_path(0.0, 0.3, &pass, 0.0).unwrap();
        assert_relative_eq!(h0, 0.0, epsilon = 1e-9);
        let z = slant_range(0.0, 700e3, EARTH_RADIUS_M).unwrap();
        let htop = altitude_along_path(z, 0.0, &pass, 0.0).unwrap();
        assert_relative_eq!(htop, 700e3, max_relative = 1e-12);
        // at any zenith, the far endpoint sits at the satellite altitude
        let z60 = slant_range(1.0, 700e3, EARTH_RADIUS_M).unwrap();
        let h60 = altitude_along_path(z60, 1.0, &pass, 0.0).unwrap();
        assert_relative_eq!(h60, 700e3, max_relative = 1e-12);
    }

    #[test]
    fn altitude_monotone_in_path_position() {
        let pass = spoqc_pass();
        let theta = 70f64.to_radians();
        let z = slant_range(theta, 700e3, EARTH_RADIUS_M).unwrap();
        let mut prev = -1.0;
        for i in 0..=100 {
            let h = altitude_along_path(z * i as f64 / 100.0, theta, &pass, 0.0).unwrap();
            assert!(h > prev);
            prev = h;
        }
    }

    #[test]
    fn altitude_midpath_close_to_flat_earth_at_zenith() {
        let pass = spoqc_pass();
        let h = altitude_along_path(350e3, 0.0, &pass, 0.0).unwrap();
        assert_relative_eq!(h, 350e3, max_relative = 5e-3);
    }

    #[test]
    fn altitude_rejects_out_of_range() {
        let pass = spoqc_pass();
        assert!(altitude_along_path(-1.0, 0.0, &pass, 0.0).is_err());
        assert!(altitude_along_path(701e3, 0.0, &pass, 0.0).is_err());
    }

    #[test]
    fn path_position_inverts_altitude() {
        let pass = spoqc_pass();
        let theta = 0.7;
        for h in [1.0, 100.0, 5e3, 20e3, 300e3] {
            let x = path_position_at_altitude(h, theta, 0.0, pass.earth_radius_m);
            let back = altitude_along_path(x, theta, &pass, 0.0).unwrap();
            assert_relative_eq!(back, h, max_relative = 1e-9, epsilon = 1e-6);
        }
    }

    #[test]
    fn validation_reports_each_violation() {
        let mut pass = spoqc_pass();
        pass.satellite_altitude_m = -1.0;
        pass.time_step_s = 0.0;
        let v = pass.validate();
        assert_eq!(v.len(), 2);
        assert!(v[0].contains("satellite_altitude_m"));
        assert!(v[1].contains("time_step_s"));
    }
}
