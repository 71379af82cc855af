//! Scenario orchestration: runs full-pass simulations across wavelengths and
//! emits loss series, histograms, key-rate reports, device plans and
//! distribution-fit diagnostics as deterministic text files.

use crate::config::Scenario;
use crate::deviceplan::{self, DmSchedule, FsmSchedule, FsmWanderMode, VoaSchedule};
use crate::error::Result;
use crate::geometry::{zenith_profile, PathSample};
use crate::keyrate::{self, PassKeyReport};
use crate::losschannels::{loss_db, LossSample, PointContext};
use crate::phasescreen::{self, PhaseScreen};
use crate::simrng::{standard_normal_pair, stream_rng, StreamKind};
use crate::stats::{fit_distribution, FitFamily, FitResult, Histogram};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::PathBuf;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything produced for one wavelength.
pub struct WavelengthRun {
    pub wavelength_nm: f64,
    pub series: Vec<LossSample>,
    pub contexts: Vec<PointContext>,
    pub voa: VoaSchedule,
    pub fsm: FsmSchedule,
    pub dm: DmSchedule,
    pub screens: Vec<(f64, PhaseScreen)>,
    pub key_report: PassKeyReport,
    pub pointing_fit: FitResult,
    pub scint_fit: FitResult,
    pub hist_total: Histogram,
    pub hist_voa: Histogram,
    pub hist_fsm: Histogram,
    pub hist_dm: Histogram,
}

/// Full scenario output.
pub struct RunOutput {
    pub per_wavelength: Vec<WavelengthRun>,
    pub quantization: deviceplan::QuantizationReport,
}

/// Loss series and per-point contexts for every configured wavelength,
/// without device plans, screens or diagnostics. Deterministic per
/// (scenario, seed); the series equal those of [`run_pass`].
pub fn run_series(scenario: &Scenario) -> Result<Vec<(f64, Vec<LossSample>, Vec<PointContext>)>> {
    scenario.validate()?;
    let path = zenith_profile(&scenario.pass)?;
    scenario
        .optics
        .par_iter()
        .enumerate()
        .map(|(w_idx, optics)| {
            let mut contexts = Vec::with_capacity(path.len());
            let mut series = Vec::with_capacity(path.len());
            for (i, point) in path.iter().enumerate() {
                let ctx = PointContext::compute(point, &scenario.turbulence, &scenario.pass, optics, scenario.direction)?;
                let mut rp = stream_rng(scenario.seed, StreamKind::Pointing, w_idx as u32, i as u64);
                let mut rs = stream_rng(scenario.seed, StreamKind::Scintillation, w_idx as u32, i as u64);
                series.push(ctx.sample(&mut rp, &mut rs)?);
                contexts.push(ctx);
            }
            Ok((optics.wavelength_nm, series, contexts))
        })
        .collect()
}

/// Runs the scenario: deterministic per (scenario, seed).
pub fn run_pass(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let path = zenith_profile(&scenario.pass)?;
    let per_wavelength: Vec<Result<WavelengthRun>> = scenario
        .optics
        .par_iter()
        .enumerate()
        .map(|(w_idx, optics)| run_wavelength(scenario, &path, w_idx as u32, optics))
        .collect();
    let mut runs = Vec::with_capacity(per_wavelength.len());
    for r in per_wavelength {
        runs.push(r?);
    }
    let quantization = deviceplan::quantization_report(
        &scenario.pass,
        &scenario.limits,
        runs.first().map(|r| r.series.as_slice()),
    )?;
    Ok(RunOutput {
        per_wavelength: runs,
        quantization,
    })
}

fn run_wavelength(
    scenario: &Scenario,
    path: &[PathSample],
    w_idx: u32,
    optics: &crate::losschannels::OpticalSystem,
) -> Result<WavelengthRun> {
    let pass = &scenario.pass;
    let profile = &scenario.turbulence;
    let seed = scenario.seed;

    // per-timestep contexts and raw samples
    let mut contexts = Vec::with_capacity(path.len());
    let mut series = Vec::with_capacity(path.len());
    for (i, point) in path.iter().enumerate() {
        let ctx = PointContext::compute(point, profile, pass, optics, scenario.direction)?;
        let mut rp = stream_rng(seed, StreamKind::Pointing, w_idx, i as u64);
        let mut rs = stream_rng(seed, StreamKind::Scintillation, w_idx, i as u64);
        series.push(ctx.sample(&mut rp, &mut rs)?);
        contexts.push(ctx);
    }

    // device-faithful mode holds the attenuator-borne factor between updates
    if scenario.device_faithful {
        let voa_dt = 1.0 / scenario.limits.voa_rate_hz;
        for s in series.iter_mut() {
            let tick = (s.t_s / voa_dt).floor() * voa_dt;
            let src = series_index_at(path, tick);
            let held_atm = contexts[src].t_atm;
            let held_geo = contexts[src].t_geo_centered;
            s.t_total = s.t_total / (s.t_atm * s.t_geo) * (held_atm * held_geo);
            s.t_atm = held_atm;
            s.t_geo = held_geo;
        }
    }

    // actuator schedules
    let voa = deviceplan::compile_voa(&series, &scenario.limits, pass.pass_duration_s)?;
    let fsm_rate = if scenario.device_faithful {
        scenario.limits.fsm_rate_hz
    } else {
        1.0 / pass.time_step_s
    };
    let displacements = fsm_displacement_stream(scenario, &contexts, path, w_idx, fsm_rate);
    // displacement bounds across the pass set the mirror scaling
    let bound_x = contexts
        .iter()
        .map(|c| c.d_det_m + 3.0 * c.wander_sigma_m)
        .fold(0.0f64, f64::max);
    let bound_y = contexts.iter().map(|c| 3.0 * c.wander_sigma_m).fold(0.0f64, f64::max);
    let lever = scenario.limits.lever_arm_for(bound_x, bound_y);
    let fsm = deviceplan::compile_fsm(&displacements, &scenario.limits, lever)?;

    let dm_rate = scenario
        .screens
        .dm_frame_rate_hz
        .unwrap_or(if scenario.device_faithful {
            scenario.limits.dm_rate_hz
        } else {
            1.0 / pass.time_step_s
        })
        .min(scenario.limits.dm_rate_hz);
    let screens = dm_screens(scenario, path, w_idx, optics, dm_rate)?;
    let screen_refs: Vec<(f64, &PhaseScreen)> = screens.iter().map(|(t, s)| (*t, s)).collect();
    let dm = deviceplan::compile_dm(&screen_refs, optics.rx_aperture_m, &scenario.limits)?;

    // diagnostics
    let pointing_db: Vec<f64> = series.iter().map(|s| loss_db(s.t_point)).collect();
    let scint_t: Vec<f64> = series.iter().map(|s| s.t_scint).collect();
    let fit_or_degenerate = |xs: &[f64], family: FitFamily| -> Result<FitResult> {
        if xs.len() < 100 {
            Ok(FitResult::Degenerate {
                reason: format!("{} samples, need at least 100", xs.len()),
            })
        } else {
            fit_distribution(xs, family)
        }
    };
    let pointing_fit = fit_or_degenerate(&pointing_db, FitFamily::Weibull)?;
    let scint_fit = fit_or_degenerate(&scint_t, FitFamily::Lognormal)?;

    let bins = scenario.output.histogram_bins;
    let total_db: Vec<f64> = series.iter().map(|s| loss_db(s.t_total)).collect();
    let voa_db: Vec<f64> = series.iter().map(|s| loss_db(s.t_atm * s.t_geo)).collect();
    let dm_db: Vec<f64> = series.iter().map(|s| loss_db(s.t_scint)).collect();
    let hist_total = Histogram::new(&total_db, bins)?;
    let hist_voa = Histogram::new(&voa_db, bins)?;
    let hist_fsm = Histogram::new(&pointing_db, bins)?;
    let hist_dm = Histogram::new(&dm_db, bins)?;

    let key_report = keyrate::key_bits_per_pass(
        &series,
        &scenario.keyrate,
        optics.coupling_eta,
        pass.time_step_s,
        optics.wavelength_nm,
    )?;

    Ok(WavelengthRun {
        wavelength_nm: optics.wavelength_nm,
        series,
        contexts,
        voa,
        fsm,
        dm,
        screens,
        key_report,
        pointing_fit,
        scint_fit,
        hist_total,
        hist_voa,
        hist_fsm,
        hist_dm,
    })
}

fn series_index_at(path: &[PathSample], t: f64) -> usize {
    match path.binary_search_by(|p| p.t_s.partial_cmp(&t).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    }
}

/// Steering-mirror displacement stream at `rate`: deterministic offset held
/// from the underlying pass point, wander drawn per tick from its own
/// stream so the series is reproducible at any cadence.
fn fsm_displacement_stream(
    scenario: &Scenario,
    contexts: &[PointContext],
    path: &[PathSample],
    w_idx: u32,
    rate: f64,
) -> Vec<(f64, f64, f64)> {
    use rand::Rng;
    let duration = scenario.pass.pass_duration_s;
    let dt = 1.0 / rate;
    let n = (duration / dt).ceil() as usize;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        if t >= duration - 1e-9 {
            break;
        }
        let ctx = &contexts[series_index_at(path, t)];
        let mut rng = stream_rng(scenario.seed, StreamKind::FsmDither, w_idx, k as u64);
        let (dx, dy) = match scenario.limits.fsm_wander_mode {
            FsmWanderMode::Gaussian => {
                let (g1, g2) = standard_normal_pair(&mut rng);
                (ctx.d_det_m + ctx.wander_sigma_m * g1, ctx.wander_sigma_m * g2)
            }
            FsmWanderMode::Uniform => {
                let bx = ctx.d_det_m + 3.0 * ctx.wander_sigma_m;
                let by = 3.0 * ctx.wander_sigma_m;
                (
                    rng.gen_range(-1.0f64..1.0) * bx,
                    if by > 0.0 { rng.gen_range(-1.0f64..1.0) * by } else { 0.0 },
                )
            }
        };
        out.push((t, dx, dy));
    }
    out
}

fn dm_screens(
    scenario: &Scenario,
    path: &[PathSample],
    w_idx: u32,
    optics: &crate::losschannels::OpticalSystem,
    rate: f64,
) -> Result<Vec<(f64, PhaseScreen)>> {
    let duration = scenario.pass.pass_duration_s;
    let dt = 1.0 / rate;
    let n = (duration / dt).ceil() as usize;
    let mut ticks = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * dt;
        if t >= duration - 1e-9 {
            break;
        }
        ticks.push((k, t));
    }
    ticks
        .par_iter()
        .map(|&(k, t)| {
            let point = &path[series_index_at(path, t)];
            let screen = phasescreen::screen_for_pass_point(
                point,
                &scenario.turbulence,
                &scenario.pass,
                scenario.direction,
                optics.wavelength_m(),
                optics.rx_aperture_m,
                scenario.screens.n,
                scenario.screens.oversize,
                scenario.screens.subharmonic_depth,
                scenario.seed,
                w_idx,
                k as u64,
            )?;
            Ok((t, screen))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

fn metadata_block(scenario: &Scenario, config_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# tool satemu {TOOL_VERSION}");
    let _ = writeln!(s, "# config-sha256 {config_hash}");
    let _ = writeln!(s, "# seed {}", scenario.seed);
    let _ = writeln!(s, "# direction {:?}", scenario.direction);
    for note in scenario.metadata_notes() {
        let _ = writeln!(s, "# note {note}");
    }
    s
}

fn wavelength_tag(nm: f64) -> String {
    format!("{}nm", nm.round() as i64)
}

/// Selects which artifact families [`write_outputs`] emits.
#[derive(Debug, Clone, Copy)]
pub struct ArtifactFilter {
    pub series: bool,
    pub histograms: bool,
    pub plans: bool,
    pub keyrate: bool,
    pub fits: bool,
    pub quantization: bool,
}

impl ArtifactFilter {
    pub fn all() -> Self {
        ArtifactFilter {
            series: true,
            histograms: true,
            plans: true,
            keyrate: true,
            fits: true,
            quantization: true,
        }
    }

    pub fn plans_only() -> Self {
        ArtifactFilter { series: false, histograms: false, plans: true, keyrate: false, fits: false, quantization: false }
    }
}

/// Writes the selected artifacts of a run under `scenario.output_dir`;
/// returns the paths written. Output bytes are a pure function of
/// (scenario, seed).
pub fn write_outputs(
    scenario: &Scenario,
    output: &RunOutput,
    config_hash: &str,
    filter: &ArtifactFilter,
) -> Result<Vec<PathBuf>> {
    let dir = &scenario.output_dir;
    std::fs::create_dir_all(dir)?;
    let meta = metadata_block(scenario, config_hash);
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, format!("{meta}{body}"))?;
        written.push(path);
        Ok(())
    };

    for run in &output.per_wavelength {
        let tag = wavelength_tag(run.wavelength_nm);

        if filter.series {
            let mut body =
                String::from("t_s\tzenith_deg\tT_atm_dB\tT_geo_dB\tT_point_dB\tT_scint_dB\ttotal_dB\td_m\n");
            for s in &run.series {
                let _ = writeln!(
                    body,
                    "{:.8e}\t{:.8e}\t{:.8e}\t{:.8e}\t{:.8e}\t{:.8e}\t{:.8e}\t{:.8e}",
                    s.t_s,
                    s.zenith_rad.to_degrees(),
                    loss_db(s.t_atm),
                    loss_db(s.t_geo),
                    loss_db(s.t_point),
                    loss_db(s.t_scint),
                    loss_db(s.t_total),
                    s.displacement_m
                );
            }
            emit(format!("series_{tag}.tsv"), body)?;
        }

        if filter.histograms {
        for (mech, hist) in [
            ("total", &run.hist_total),
            ("voa", &run.hist_voa),
            ("fsm", &run.hist_fsm),
            ("dm", &run.hist_dm),
        ] {
            let mut body = String::from("bin_left_dB\tbin_right_dB\tprobability\n");
            for row in hist.to_rows() {
                let _ = writeln!(body, "{row}");
            }
            emit(format!("hist_{mech}_{tag}.tsv"), body)?;
        }
        }

        if filter.plans {
        let mut body = String::from("t_s\tod\n");
        for &(t, od) in &run.voa.commands {
            let _ = writeln!(body, "{t:.8e}\t{od:.8e}");
        }
        let _ = writeln!(body, "# clip-events {}", run.voa.clip_events.len());
        emit(format!("plan_voa_{tag}.tsv"), body)?;

        let mut body = String::from("t_s\tdeg_x\tdeg_y\n");
        for &(t, x, y) in &run.fsm.commands {
            let _ = writeln!(body, "{t:.8e}\t{x:.8e}\t{y:.8e}");
        }
        let _ = writeln!(body, "# clip-events {}", run.fsm.clip_events.len());
        emit(format!("plan_fsm_{tag}.tsv"), body)?;

        let mut body = String::new();
        if let Some((_, first)) = run.dm.frames.first() {
            let _ = writeln!(body, "t_s\t{}", first.csv_header().replace(',', "\t"));
        }
        for (t, frame) in &run.dm.frames {
            let _ = writeln!(body, "{t:.8e}\t{}", frame.csv_line().replace(',', "\t"));
        }
        emit(format!("plan_dm_{tag}.tsv"), body)?;
        }

        if filter.fits {
            let mut body = String::new();
            let _ = writeln!(body, "pointing_loss_weibull: {}", run.pointing_fit.summary());
            let _ = writeln!(body, "scintillation_lognormal: {}", run.scint_fit.summary());
            emit(format!("fits_{tag}.txt"), body)?;
        }
    }

    if filter.keyrate {
        let mut body = String::from("wavelength_nm\tmean_loss_dB\tbits_per_pass\tV_A_snu\tclamped_fraction\n");
        for run in &output.per_wavelength {
            let r = &run.key_report;
            let _ = writeln!(
                body,
                "{:.8e}\t{:.8e}\t{:.8e}\t{:.8e}\t{:.8e}",
                r.wavelength_nm, r.mean_loss_db, r.bits_per_pass, r.modulation_variance_snu, r.clamped_fraction
            );
        }
        emit("keyrate_report.tsv".to_string(), body)?;
    }

    if filter.quantization {
        let q = &output.quantization;
        let mut body = String::new();
        let _ = writeln!(body, "zenith_step_culmination_deg\t{:.8e}", q.zenith_step_culmination_deg);
        let _ = writeln!(body, "zenith_step_edge_deg\t{:.8e}", q.zenith_step_edge_deg);
        let _ = writeln!(body, "max_intra_interval_loss_dB\t{:.8e}", q.max_intra_interval_loss_db);
        emit("quantization_report.tsv".to_string(), body)?;
    }

    Ok(written)
}

/// Convenience wrapper: run and write everything in one call.
pub fn run_and_write(scenario: &Scenario, config_hash: &str) -> Result<Vec<PathBuf>> {
    let output = run_pass(scenario)?;
    write_outputs(scenario, &output, config_hash, &ArtifactFilter::all())
}
