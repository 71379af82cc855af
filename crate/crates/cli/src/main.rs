//! Command-line front end for the satellite optical channel simulator.
//!
//! Every subcommand consumes the same TOML scenario file (all fields have
//! defaults, so `--config` is optional) plus flag overrides, and writes
//! deterministic artifacts under the scenario's output directory.
//!
//! Exit codes: 0 success, 2 configuration validation failure, 3 numerical
//! failure.

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use satemu_core::error::SimError;
use satemu_core::geometry::zenith_profile;
use satemu_core::keyrate::optimize_modulation;
use satemu_core::runner::{self, ArtifactFilter};
use satemu_core::turbulence::Direction;
use satemu_core::Scenario;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Up,
    Down,
}

#[derive(Parser)]
#[command(name = "satemu", version, about = "Satellite-to-ground optical channel simulator and emulator plan compiler")]
struct Cli {
    /// Scenario file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Restrict the run to one configured wavelength (nm).
    #[arg(long, global = true)]
    wavelength: Option<f64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Quantize the attenuator-borne loss at its update rate and emit
    /// steering/deformable-mirror streams at their hardware rates.
    #[arg(long, global = true)]
    device_faithful: bool,

    /// Link direction override.
    #[arg(long, global = true, value_enum)]
    direction: Option<DirectionArg>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pass: series, histograms, key rates, device plans, fits.
    SimulatePass,
    /// Generate phase screens for pass points and write them to disk.
    GenScreens {
        /// Number of screens per wavelength.
        #[arg(long, default_value_t = 8)]
        count: usize,
        /// Also write a plain-text matrix next to each binary screen.
        #[arg(long)]
        text: bool,
    },
    /// Compute the per-wavelength secret-key report.
    Keyrate {
        /// Re-optimize the modulation variance over the simulated pass.
        #[arg(long)]
        optimize: bool,
    },
    /// Compile and write only the actuator command schedules.
    DevicePlan,
    /// Fit loss distributions (Weibull pointing, log-normal scintillation).
    FitDist,
    /// Report attenuator staleness across the pass.
    QuantizationReport,
}

fn scenario_from(cli: &Cli) -> anyhow::Result<(Scenario, String)> {
    let (mut scenario, hash) = match &cli.config {
        Some(path) => Scenario::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => {
            let s = Scenario::default();
            let h = s.canonical_hash();
            (s, h)
        }
    };
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    if let Some(dir) = &cli.out {
        scenario.output_dir = dir.clone();
    }
    if cli.device_faithful {
        scenario.device_faithful = true;
    }
    if let Some(d) = cli.direction {
        scenario.direction = match d {
            DirectionArg::Up => Direction::Uplink,
            DirectionArg::Down => Direction::Downlink,
        };
    }
    if let Some(nm) = cli.wavelength {
        scenario.optics.retain(|o| (o.wavelength_nm - nm).abs() < 0.5);
        if scenario.optics.is_empty() {
            return Err(SimError::Config {
                violations: vec![format!("--wavelength {nm}: no matching optics entry in the scenario")],
            }
            .into());
        }
    }
    let overridden =
        cli.seed.is_some() || cli.device_faithful || cli.direction.is_some() || cli.wavelength.is_some();
    let hash = if overridden { scenario.canonical_hash() } else { hash };
    Ok((scenario, hash))
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let (scenario, hash) = scenario_from(cli)?;
    match &cli.command {
        Command::SimulatePass => {
            let output = runner::run_pass(&scenario)?;
            let paths = runner::write_outputs(&scenario, &output, &hash, &ArtifactFilter::all())?;
            for r in &output.per_wavelength {
                println!(
                    "{:>6.0} nm  mean loss {:7.2} dB  key bits/pass {:.3e}  clamped {:.1}%",
                    r.wavelength_nm,
                    r.key_report.mean_loss_db,
                    r.key_report.bits_per_pass,
                    100.0 * r.key_report.clamped_fraction
                );
            }
            println!("{} files written to {}", paths.len(), scenario.output_dir.display());
        }
        Command::GenScreens { count, text } => {
            let path = zenith_profile(&scenario.pass)?;
            std::fs::create_dir_all(&scenario.output_dir)?;
            let count = (*count).max(1);
            for (w_idx, optics) in scenario.optics.iter().enumerate() {
                for k in 0..count {
                    let point = &path[(k * (path.len() - 1)) / count];
                    let screen = satemu_core::phasescreen::screen_for_pass_point(
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
                        w_idx as u32,
                        k as u64,
                    )?;
                    let stem = format!("screen_{}nm_{k:04}", optics.wavelength_nm.round() as i64);
                    std::fs::write(scenario.output_dir.join(format!("{stem}.bin")), screen.to_binary())?;
                    if *text {
                        std::fs::write(scenario.output_dir.join(format!("{stem}.txt")), screen.to_text())?;
                    }
                    for w in &screen.warnings {
                        eprintln!("note: {stem}: {w}");
                    }
                }
            }
            println!("{} screens per wavelength written to {}", count, scenario.output_dir.display());
        }
        Command::Keyrate { optimize } => {
            let output = runner::run_pass(&scenario)?;
            for r in &output.per_wavelength {
                let rep = &r.key_report;
                println!(
                    "{:>6.0} nm  mean loss {:7.2} dB  V_A {:7.1} SNU  bits/pass {:.4e}  clamped {:.1}%",
                    rep.wavelength_nm,
                    rep.mean_loss_db,
                    rep.modulation_variance_snu,
                    rep.bits_per_pass,
                    100.0 * rep.clamped_fraction
                );
                if *optimize {
                    let ts: Vec<f64> = r.series.iter().map(|s| s.t_total).collect();
                    match optimize_modulation(&ts, &scenario.keyrate)? {
                        Some(opt) => println!(
                            "        optimal V_A {:.1} SNU -> mean {:.4e} bits/use",
                            opt.v_a_snu, opt.mean_key_bits_per_use
                        ),
                        None => println!("        no positive-key modulation variance exists"),
                    }
                }
            }
            runner::write_outputs(
                &scenario,
                &output,
                &hash,
                &ArtifactFilter {
                    series: false,
                    histograms: false,
                    plans: false,
                    keyrate: true,
                    fits: false,
                    quantization: false,
                },
            )?;
        }
        Command::DevicePlan => {
            let output = runner::run_pass(&scenario)?;
            let paths = runner::write_outputs(&scenario, &output, &hash, &ArtifactFilter::plans_only())?;
            for r in &output.per_wavelength {
                println!(
                    "{:>6.0} nm  voa {} cmds ({} clipped)  fsm {} cmds ({} clipped)  dm {} frames",
                    r.wavelength_nm,
                    r.voa.commands.len(),
                    r.voa.clip_events.len(),
                    r.fsm.commands.len(),
                    r.fsm.clip_events.len(),
                    r.dm.frames.len()
                );
            }
            println!("{} files written to {}", paths.len(), scenario.output_dir.display());
        }
        Command::FitDist => {
            let output = runner::run_pass(&scenario)?;
            for r in &output.per_wavelength {
                println!("{:>6.0} nm", r.wavelength_nm);
                println!("  pointing loss (Weibull):    {}", r.pointing_fit.summary());
                println!("  scintillation (log-normal): {}", r.scint_fit.summary());
            }
            runner::write_outputs(
                &scenario,
                &output,
                &hash,
                &ArtifactFilter {
                    series: false,
                    histograms: false,
                    plans: false,
                    keyrate: false,
                    fits: true,
                    quantization: false,
                },
            )?;
        }
        Command::QuantizationReport => {
            let output = runner::run_pass(&scenario)?;
            let q = &output.quantization;
            println!("zenith step per update at culmination: {:.4} deg", q.zenith_step_culmination_deg);
            println!("zenith step per update at pass edge:   {:.4} deg", q.zenith_step_edge_deg);
            println!("max intra-interval loss change:        {:.4} dB", q.max_intra_interval_loss_db);
            runner::write_outputs(
                &scenario,
                &output,
                &hash,
                &ArtifactFilter {
                    series: false,
                    histograms: false,
                    plans: false,
                    keyrate: false,
                    fits: false,
                    quantization: true,
                },
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<SimError>() {
                Some(SimError::Config { .. }) | Some(SimError::Domain { .. }) => 2,
                Some(SimError::Numerical { .. }) | Some(SimError::Unphysical { .. }) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
