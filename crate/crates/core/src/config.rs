//! Scenario configuration: one TOML file describing the pass, turbulence,
//! per-wavelength optics, key-rate parameters, actuator limits and outputs.
//! Unknown keys are rejected so typos in physics parameters fail loudly.

use crate::deviceplan::ActuatorLimits;
use crate::error::{Result, SimError};
use crate::geometry::{OrbitPass, PassProfile};
use crate::keyrate::KeyRateParams;
use crate::losschannels::OpticalSystem;
use crate::turbulence::{Direction, TurbulenceProfile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Phase-screen generation knobs for the deformable-mirror pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreenConfig {
    /// Grid size (power of two).
    pub n: usize,
    /// Grid extent in receiver apertures.
    pub oversize: f64,
    /// Subharmonic depth for low-frequency augmentation.
    pub subharmonic_depth: u32,
    /// Deformable-mirror frame rate override, Hz. Defaults to the series
    /// cadence; device-faithful runs use the actuator rate.
    pub dm_frame_rate_hz: Option<f64>,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig {
            n: 256,
            oversize: 2.0,
            subharmonic_depth: 3,
            dm_frame_rate_hz: None,
        }
    }
}

/// Output shaping.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub histogram_bins: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { histogram_bins: 40 }
    }
}

/// Complete description of one emulation scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// Master seed; every random stream derives from it.
    pub seed: u64,
    pub direction: Direction,
    pub output_dir: PathBuf,
    /// Quantize the attenuator-borne loss to the update rate and generate
    /// steering/deformable-mirror streams at their hardware rates.
    pub device_faithful: bool,
    pub pass: OrbitPass,
    pub turbulence: TurbulenceProfile,
    /// One entry per wavelength.
    pub optics: Vec<OpticalSystem>,
    pub keyrate: KeyRateParams,
    pub limits: ActuatorLimits,
    pub screens: ScreenConfig,
    pub output: OutputConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 1,
            direction: Direction::Downlink,
            output_dir: PathBuf::from("out"),
            device_faithful: false,
            pass: OrbitPass::default(),
            turbulence: TurbulenceProfile::default(),
            optics: vec![
                OpticalSystem { wavelength_nm: 1550.0, ..OpticalSystem::default() },
                OpticalSystem { wavelength_nm: 850.0, ..OpticalSystem::default() },
                OpticalSystem { wavelength_nm: 630.0, ..OpticalSystem::default() },
            ],
            keyrate: KeyRateParams::default(),
            limits: ActuatorLimits::default(),
            screens: ScreenConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Scenario {
    /// Parses a scenario from TOML text. Unknown keys are errors.
    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| SimError::Config {
            violations: vec![format!("toml: {e}")],
        })?;
        Ok(scenario)
    }

    /// Reads a scenario file; also returns the SHA-256 of the raw bytes for
    /// output provenance.
    pub fn load(path: &Path) -> Result<(Scenario, String)> {
        let bytes = std::fs::read(path)?;
        let text = String::from_utf8_lossy(&bytes);
        let scenario = Scenario::from_toml_str(&text)?;
        Ok((scenario, hex_sha256(&bytes)))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Hash of the canonical serialized form with the output directory
    /// normalized away (where results go does not change what they are).
    pub fn canonical_hash(&self) -> String {
        let mut normalized = self.clone();
        normalized.output_dir = PathBuf::from("out");
        hex_sha256(normalized.to_toml_string().as_bytes())
    }

    /// Collects every violated invariant with its field path.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        v.extend(self.pass.validate());
        v.extend(self.turbulence.validate());
        if self.optics.is_empty() {
            v.push("optics: at least one wavelength entry is required".to_string());
        }
        for (i, o) in self.optics.iter().enumerate() {
            v.extend(o.validate(&format!("optics[{i}]")));
        }
        v.extend(self.keyrate.validate());
        v.extend(self.limits.validate());
        let sp = crate::phasescreen::ScreenParams {
            n: self.screens.n,
            ..crate::phasescreen::ScreenParams::default()
        };
        v.extend(sp.validate().into_iter().filter(|m| m.contains("screen.n")));
        if !(self.screens.oversize >= 1.0) {
            v.push(format!("screens.oversize: must be >= 1 (got {})", self.screens.oversize));
        }
        if self.output.histogram_bins == 0 {
            v.push("output.histogram_bins: must be > 0".to_string());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(SimError::Config { violations: v })
        }
    }

    /// Provenance / assumption notes carried into every output file.
    pub fn metadata_notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        notes.push(format!(
            "HAP profile defaults in effect: v_w={} m/s, M={}, p={:.4} (site-unmeasured assumptions)",
            self.turbulence.wind_speed_rms_ms, self.turbulence.background, self.turbulence.power_law
        ));
        notes.push(format!(
            "turbulent-eddy scales assumed: L0={} m, l0={} m; profile ceiling {} km",
            self.turbulence.outer_scale_m,
            self.turbulence.inner_scale_m,
            self.turbulence.ceiling_m / 1e3
        ));
        if matches!(self.pass.profile, PassProfile::Quadratic) {
            notes.push("pass profile: symmetric-quadratic fallback (not orbital geometry)".to_string());
        }
        for o in &self.optics {
            if let Some(s) = o.scintillation_std_db {
                notes.push(format!(
                    "scintillation spread pinned to {s} dB at {} nm (override, not derived from profile)",
                    o.wavelength_nm
                ));
            }
        }
        notes
    }
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
