//! Compiles a simulated pass into rate-limited, range-limited command
//! schedules for the three emulator actuators: variable optical attenuator
//! (overall divergence + extinction loss), fine steering mirror (pointing and
//! beam wander) and deformable mirror (wavefront aberrations as 15-mode
//! Zernike frames, tip/tilt routed to the steering mirror).
//!
//! All resampling is zero-order hold, matching stepped hardware. Out-of-range
//! demands are clipped and every clip is recorded.

use crate::error::{Result, SimError};
use crate::geometry::OrbitPass;
use crate::losschannels::{loss_db, LossSample};
use crate::phasescreen::PhaseScreen;
use crate::zernike::{self, CoeffUnits, ZernikeVector};
use serde::{Deserialize, Serialize};

/// Random-motion law for the steering mirror's wander component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FsmWanderMode {
    /// Gaussian wander with the physical displacement variance.
    #[default]
    Gaussian,
    /// Uniform dither within the maximum-displacement bounds.
    Uniform,
}

/// Hardware envelope of the emulator actuators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActuatorLimits {
    /// Attenuator update rate, Hz.
    pub voa_rate_hz: f64,
    /// Attenuator optical-density range upper edge (lower edge 0).
    pub voa_od_max: f64,
    /// Steering-mirror command rate, Hz.
    pub fsm_rate_hz: f64,
    /// Steering-mirror mechanical range, degrees (± per axis).
    pub fsm_range_x_deg: f64,
    pub fsm_range_y_deg: f64,
    /// Deformable-mirror frame rate, Hz.
    pub dm_rate_hz: f64,
    /// Optical lever arm mapping receiver-plane displacement to mirror
    /// angle, m. When absent it is auto-scaled per scenario so the maximum
    /// expected displacement spans 90% of the mirror range (the mirror is
    /// programmed within the range of the maximum beam displacement); set it
    /// explicitly for a calibrated hardware setup.
    pub lever_arm_m: Option<f64>,
    pub fsm_wander_mode: FsmWanderMode,
}

impl Default for ActuatorLimits {
    fn default() -> Self {
        ActuatorLimits {
            voa_rate_hz: 1.8,
            voa_od_max: 4.0,
            fsm_rate_hz: 1000.0,
            fsm_range_x_deg: 4.5,
            fsm_range_y_deg: 2.0,
            dm_rate_hz: 1000.0,
            lever_arm_m: None,
            fsm_wander_mode: FsmWanderMode::Gaussian,
        }
    }
}

impl ActuatorLimits {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, val) in [
            ("limits.voa_rate_hz", self.voa_rate_hz),
            ("limits.fsm_rate_hz", self.fsm_rate_hz),
            ("limits.dm_rate_hz", self.dm_rate_hz),
            ("limits.voa_od_max", self.voa_od_max),
            ("limits.fsm_range_x_deg", self.fsm_range_x_deg),
            ("limits.fsm_range_y_deg", self.fsm_range_y_deg),
        ] {
            if !(val > 0.0) {
                v.push(format!("{name}: must be > 0 (got {val})"));
            }
        }
        if let Some(lever) = self.lever_arm_m {
            if !(lever > 0.0) {
                v.push(format!("limits.lever_arm_m: must be > 0 when set (got {lever})"));
            }
        }
        v
    }

    /// Lever arm that maps the expected displacement bounds onto 90% of the
    /// mirror range, used when none is configured.
    pub fn auto_lever_arm_m(&self, bound_x_m: f64, bound_y_m: f64) -> f64 {
        let target = |bound: f64, range_deg: f64| {
            let angle = (0.9 * range_deg).to_radians();
            bound / (2.0 * angle).tan()
        };
        target(bound_x_m.max(1e-12), self.fsm_range_x_deg)
            .max(target(bound_y_m.max(1e-12), self.fsm_range_y_deg))
            .max(1e-9)
    }

    /// Configured lever arm or the auto-scaled one.
    pub fn lever_arm_for(&self, bound_x_m: f64, bound_y_m: f64) -> f64 {
        self.lever_arm_m.unwrap_or_else(|| self.auto_lever_arm_m(bound_x_m, bound_y_m))
    }
}

/// A command that exceeded the hardware envelope and was clipped.
#[derive(Debug, Clone, Copy)]
pub struct ClipEvent {
    pub t_s: f64,
    pub demanded: f64,
    pub applied: f64,
    pub axis: &'static str,
}

/// Attenuator schedule: (time, optical density).
#[derive(Debug, Clone)]
pub struct VoaSchedule {
    pub commands: Vec<(f64, f64)>,
    pub clip_events: Vec<ClipEvent>,
}

/// Steering-mirror schedule: (time, angle_x_deg, angle_y_deg).
#[derive(Debug, Clone)]
pub struct FsmSchedule {
    pub commands: Vec<(f64, f64, f64)>,
    pub clip_events: Vec<ClipEvent>,
    /// Lever arm the angles were compiled with, m.
    pub lever_arm_m: f64,
}

/// Deformable-mirror schedule: (time, 15-mode frame with piston and tip/tilt
/// zeroed).
#[derive(Debug, Clone)]
pub struct DmSchedule {
    pub frames: Vec<(f64, ZernikeVector)>,
}

/// Attenuator OD demand of a loss sample: the divergence + extinction share
/// of the budget at zero displacement, in OD (10 dB each).
pub fn voa_demand_od(sample: &LossSample) -> f64 {
    (loss_db(sample.t_atm) + loss_db(sample.t_geo)) / 10.0
}

/// Resamples the loss series onto the attenuator's update grid (zero-order
/// hold) and clips to [0, od_max]. Command k fires at t = k / rate for every
/// t strictly inside the series span.
pub fn compile_voa(series: &[LossSample], limits: &ActuatorLimits, duration_s: f64) -> Result<VoaSchedule> {
    if series.is_empty() {
        return Err(SimError::domain("compile_voa", "empty loss series"));
    }
    let violations = limits.validate();
    if !violations.is_empty() {
        return Err(SimError::Config { violations });
    }
    let dt = 1.0 / limits.voa_rate_hz;
    let mut commands = Vec::new();
    let mut clip_events = Vec::new();
    let mut k = 0usize;
    let mut src = 0usize;
    loop {
        let t = k as f64 * dt;
        if t >= duration_s - 1e-9 {
            break;
        }
        while src + 1 < series.len() && series[src + 1].t_s <= t + 1e-12 {
            src += 1;
        }
        let demand = voa_demand_od(&series[src]);
        let applied = demand.clamp(0.0, limits.voa_od_max);
        if (applied - demand).abs() > 1e-12 {
            clip_events.push(ClipEvent { t_s: t, demanded: demand, applied, axis: "od" });
        }
        commands.push((t, applied));
        k += 1;
    }
    Ok(VoaSchedule { commands, clip_events })
}

/// Converts receiver-plane displacements into mirror angles
/// (atan(d/lever)/2 per axis — reflection doubles the beam deflection) and
/// clips to the mechanical range.
pub fn compile_fsm(
    displacements: &[(f64, f64, f64)],
    limits: &ActuatorLimits,
    lever_arm_m: f64,
) -> Result<FsmSchedule> {
    if lever_arm_m <= 0.0 {
        return Err(SimError::Config {
            violations: vec![format!("limits.lever_arm_m: must be > 0 (got {lever_arm_m})")],
        });
    }
    let min_spacing = 1.0 / limits.fsm_rate_hz - 1e-9;
    let mut commands = Vec::with_capacity(displacements.len());
    let mut clip_events = Vec::new();
    let mut prev_t = f64::NEG_INFINITY;
    for &(t, dx, dy) in displacements {
        if t - prev_t < min_spacing {
            return Err(SimError::domain(
                "compile_fsm",
                format!("command spacing {} s under the {} Hz rate limit", t - prev_t, limits.fsm_rate_hz),
            ));
        }
        prev_t = t;
        let mut angle = |d: f64, range: f64, axis: &'static str| -> f64 {
            let demanded = ((d / lever_arm_m).atan() / 2.0).to_degrees();
            let applied = demanded.clamp(-range, range);
            if (applied - demanded).abs() > 1e-12 {
                clip_events.push(ClipEvent { t_s: t, demanded, applied, axis });
            }
            applied
        };
        let ax = angle(dx, limits.fsm_range_x_deg, "x");
        let ay = angle(dy, limits.fsm_range_y_deg, "y");
        commands.push((t, ax, ay));
    }
    Ok(FsmSchedule { commands, clip_events, lever_arm_m })
}

/// Decomposes each screen into its first 15 Zernike modes over the receiver
/// aperture and zeroes piston and tip/tilt (the steering mirror reproduces
/// tip/tilt; piston is unobservable).
pub fn compile_dm(
    screens: &[(f64, &PhaseScreen)],
    rx_aperture_m: f64,
    limits: &ActuatorLimits,
) -> Result<DmSchedule> {
    let min_spacing = 1.0 / limits.dm_rate_hz - 1e-9;
    let mut frames = Vec::with_capacity(screens.len());
    let mut prev_t = f64::NEG_INFINITY;
    for &(t, screen) in screens {
        if t - prev_t < min_spacing {
            return Err(SimError::domain(
                "compile_dm",
                format!("frame spacing {} s under the {} Hz rate limit", t - prev_t, limits.dm_rate_hz),
            ));
        }
        prev_t = t;
        let radius_px = rx_aperture_m / 2.0 / screen.pixel_scale_m;
        let mut d = zernike::decompose(&screen.grid, screen.n, radius_px, rx_aperture_m / 2.0)?;
        d.vector.coefficients[0] = 0.0; // piston
        d.vector.coefficients[1] = 0.0; // tip -> steering mirror
        d.vector.coefficients[2] = 0.0; // tilt -> steering mirror
        d.vector.units = CoeffUnits::PhaseRadians;
        frames.push((t, d.vector));
    }
    Ok(DmSchedule { frames })
}

/// Staleness metrics of the attenuator's finite update rate.
#[derive(Debug, Clone, Copy)]
pub struct QuantizationReport {
    /// Zenith-angle change per update interval at culmination, degrees.
    pub zenith_step_culmination_deg: f64,
    /// Zenith-angle change per update interval at the pass edge, degrees.
    pub zenith_step_edge_deg: f64,
    /// Largest loss change within one update interval across the supplied
    /// series, dB (0 when no series given).
    pub max_intra_interval_loss_db: f64,
}

/// Zenith-angle staleness per attenuator update at the pass edge and at
/// culmination, plus the worst intra-interval loss change of `series`.
///
/// The zenith steps are evaluated for the physical orbital angular rate at
/// the configured altitude (not the configured pass-window interpolation),
/// since they quantify how stale a command is against a real pass.
pub fn quantization_report(
    pass: &OrbitPass,
    limits: &ActuatorLimits,
    series: Option<&[LossSample]>,
) -> Result<QuantizationReport> {
    let violations = limits.validate();
    if !violations.is_empty() {
        return Err(SimError::Config { violations });
    }
    let dt = 1.0 / limits.voa_rate_hz;
    let rate = pass.orbital_rate_rad_s();
    let re = pass.earth_radius_m;
    let alt = pass.satellite_altitude_m;
    let psi_ct = crate::geometry::central_angle_from_zenith(pass.min_zenith_rad().max(1e-9), alt, re);
    // zenith angle as a function of orbit time around culmination
    let zenith_orbit = |tau: f64| -> f64 {
        let psi = (psi_ct.cos() * (rate * tau).cos()).clamp(-1.0, 1.0).acos();
        crate::geometry::zenith_from_central_angle(psi, alt, re)
    };
    // orbit time at which the configured edge zenith is reached
    let theta_edge = pass.edge_zenith_deg.to_radians();
    let mut lo = 0.0;
    let mut hi = std::f64::consts::PI / rate / 2.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if zenith_orbit(mid) < theta_edge {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_edge = 0.5 * (lo + hi);
    let step_culmination = (zenith_orbit(dt) - zenith_orbit(0.0)).abs().to_degrees();
    let step_edge = (zenith_orbit(tau_edge) - zenith_orbit(tau_edge - dt)).abs().to_degrees();
    let mut max_loss_step = 0.0f64;
    if let Some(series) = series {
        let mut k = 0usize;
        let mut src = 0usize;
        let mut prev: Option<f64> = None;
        loop {
            let t = k as f64 * dt;
            if t >= pass.pass_duration_s - 1e-9 {
                break;
            }
            while src + 1 < series.len() && series[src + 1].t_s <= t + 1e-12 {
                src += 1;
            }
            let loss = loss_db(series[src].t_atm * series[src].t_geo);
            if let Some(p) = prev {
                max_loss_step = max_loss_step.max((loss - p).abs());
            }
            prev = Some(loss);
            k += 1;
        }
    }
    Ok(QuantizationReport {
        zenith_step_culmination_deg: step_culmination,
        zenith_step_edge_deg: step_edge,
        max_intra_interval_loss_db: max_loss_step,
    })
}
