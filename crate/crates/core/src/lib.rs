//! Satellite-to-ground free-space optical channel simulator.
//!
//! Models a full LEO optical downlink (or uplink) pass end to end:
//!
//! - **Pass geometry** — zenith angle, slant range and altitude along the
//!   propagation path for a culminating overpass ([`geometry`]).
//! - **Atmospheric turbulence** — Hufnagel-Andrews-Phillips Cn² profile,
//!   path-weighted turbulence integrals, Fried parameter, Rytov variance and
//!   beam-wander variance ([`turbulence`]).
//! - **Wavefront aberrations** — von Kármán phase screens synthesized by FFT
//!   and their decomposition onto the first 15 Noll-ordered Zernike modes
//!   ([`phasescreen`], [`zernike`]).
//! - **Loss channels** — atmospheric extinction, diffraction/divergence onto
//!   an obstructed receiver, pointing + beam-wander displacement, and
//!   log-normal scintillation fades, composed into a per-timestep link budget
//!   ([`losschannels`]).
//! - **CV-QKD key rate** — asymptotic Gaussian-modulated coherent-state
//!   reverse-reconciliation rate against a line-of-sight-restricted
//!   eavesdropper, integrated to secret bits per pass ([`keyrate`]).
//! - **Actuator command schedules** — rate-limited, range-limited command
//!   streams for the variable optical attenuator, fine steering mirror and
//!   deformable mirror of a table-top channel emulator ([`deviceplan`]).
//! - **Scenario orchestration** — TOML scenario files, deterministic
//!   multi-wavelength pass runs, histogram/fit diagnostics and file outputs
//!   ([`config`], [`runner`], [`stats`]).
//!
//! Every random draw derives from a single scenario seed through a splittable
//! counter-based RNG ([`simrng`]), so identical inputs produce byte-identical
//! outputs regardless of evaluation order or thread scheduling.

pub mod config;
pub mod deviceplan;
pub mod error;
pub mod geometry;
pub mod keyrate;
pub mod losschannels;
pub mod numerics;
pub mod phasescreen;
pub mod runner;
pub mod simrng;
pub mod stats;
pub mod turbulence;
pub mod zernike;

pub use config::Scenario;
pub use error::SimError;
