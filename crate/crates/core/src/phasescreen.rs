//! Von Kármán phase-screen synthesis by FFT with optional subharmonic
//! low-frequency augmentation.
//!
//! The phase power spectral density in cyclic frequency f (cycles/m) is
//!
//! PSD(f) = 0.023 r₀^(−5/3) (f² + 1/L₀²)^(−11/6) exp(−f²/f_m²),
//! f_m = 5.92 / (2π l₀),
//!
//! which reproduces the Kolmogorov structure function
//! D_φ(r) = 6.88 (r/r₀)^(5/3) for l₀ ≪ r ≪ L₀.
//!
//! A plain FFT realization carries no power below one cycle per grid extent,
//! which starves tip/tilt by tens of percent, and point-samples the steep
//! spectrum at the lowest bins, which biases low-order modes. Here the whole
//! low-frequency zone is synthesized as directly-summed waves: each cell
//! carries the spectrum's power integrated over the cell and sits at the
//! cell's power-weighted centroid frequency. Subharmonic rings of 3×3 cells
//! shrink by a factor of 3 per level, so `depth` levels extend coverage to
//! scales 3^depth times the grid extent.

use crate::error::{Result, SimError};
use crate::geometry::{OrbitPass, PathSample};
use crate::simrng::{standard_normal_pair, stream_rng, StreamKind};
use crate::turbulence::{fried_parameter, path_integral, Direction, TurbulenceProfile};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

/// Generation parameters for one screen.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreenParams {
    /// Fried parameter, m.
    pub r0_m: f64,
    /// Grid size (power of two, >= 64).
    pub n: usize,
    /// Pixel scale, m/px.
    pub pixel_scale_m: f64,
    /// Outer scale L0, m.
    pub outer_scale_m: f64,
    /// Inner scale l0, m.
    pub inner_scale_m: f64,
    /// Subharmonic levels (0 disables low-frequency augmentation).
    pub subharmonic_depth: u32,
}

impl Default for ScreenParams {
    fn default() -> Self {
        ScreenParams {
            r0_m: 0.1,
            n: 256,
            pixel_scale_m: 0.005,
            outer_scale_m: 25.0,
            inner_scale_m: 0.01,
            subharmonic_depth: 3,
        }
    }
}

impl ScreenParams {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.r0_m > 0.0) {
            v.push(format!("screen.r0_m: must be > 0 (got {})", self.r0_m));
        }
        if self.n < 64 || !self.n.is_power_of_two() {
            v.push(format!("screen.n: must be a power of two >= 64 (got {})", self.n));
        }
        if !(self.pixel_scale_m > 0.0) {
            v.push(format!("screen.pixel_scale_m: must be > 0 (got {})", self.pixel_scale_m));
        }
        if !(self.inner_scale_m > 0.0 && self.inner_scale_m < self.outer_scale_m) {
            v.push(format!(
                "screen.inner_scale_m: must satisfy 0 < l0 < L0 (got l0={}, L0={})",
                self.inner_scale_m, self.outer_scale_m
            ));
        }
        v
    }
}

/// A synthesized phase screen (radians over an N×N grid).
#[derive(Debug, Clone)]
pub struct PhaseScreen {
    pub grid: Vec<f64>,
    pub n: usize,
    pub pixel_scale_m: f64,
    pub r0_m: f64,
    pub outer_scale_m: f64,
    pub inner_scale_m: f64,
    /// Master seed of the stream that generated this screen (0 when the
    /// caller supplied a bare RNG).
    pub seed: u64,
    /// Non-fatal generation notes (e.g. outer scale unresolved by the grid).
    pub warnings: Vec<String>,
}

impl PhaseScreen {
    pub fn extent_m(&self) -> f64 {
        self.n as f64 * self.pixel_scale_m
    }

    /// Writes the screen as a self-describing binary blob:
    /// header `SCRN1`, then n as little-endian u64, pixel_scale, r0, L0, l0
    /// as little-endian f64, then the grid row-major as f64.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + 6 * 8 + self.grid.len() * 8);
        out.extend_from_slice(b"SCRN1");
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        for v in [self.pixel_scale_m, self.r0_m, self.outer_scale_m, self.inner_scale_m] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        for v in &self.grid {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses the binary form written by [`PhaseScreen::to_binary`].
    pub fn from_binary(bytes: &[u8]) -> Result<PhaseScreen> {
        let fail = |m: &str| SimError::domain("PhaseScreen::from_binary", m.to_string());
        if bytes.len() < 5 + 6 * 8 || &bytes[..5] != b"SCRN1" {
            return Err(fail("missing SCRN1 header"));
        }
        let mut off = 5;
        let mut take = |len: usize| {
            let s = &bytes[off..off + len];
            off += len;
            s
        };
        let n = u64::from_le_bytes(take(8).try_into().unwrap()) as usize;
        let pixel_scale_m = f64::from_le_bytes(take(8).try_into().unwrap());
        let r0_m = f64::from_le_bytes(take(8).try_into().unwrap());
        let outer_scale_m = f64::from_le_bytes(take(8).try_into().unwrap());
        let inner_scale_m = f64::from_le_bytes(take(8).try_into().unwrap());
        let seed = u64::from_le_bytes(take(8).try_into().unwrap());
        if bytes.len() != off + n * n * 8 {
            return Err(fail("grid payload size mismatch"));
        }
        let grid = bytes[off..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(PhaseScreen {
            grid,
            n,
            pixel_scale_m,
            r0_m,
            outer_scale_m,
            inner_scale_m,
            seed,
            warnings: Vec::new(),
        })
    }

    /// Plain-text matrix dump for debugging (one row per line).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# n {} pixel_scale_m {:.8e} r0_m {:.8e} L0_m {:.8e} l0_m {:.8e} seed {}\n",
            self.n, self.pixel_scale_m, self.r0_m, self.outer_scale_m, self.inner_scale_m, self.seed
        ));
        for row in 0..self.n {
            let line: Vec<String> = (0..self.n)
                .map(|col| format!("{:.8e}", self.grid[row * self.n + col]))
                .collect();
            s.push_str(&line.join("\t"));
            s.push('\n');
        }
        s
    }
}

fn psd(f_sq: f64, r0: f64, f0_sq: f64, fm_sq: f64) -> f64 {
    0.023 * r0.powf(-5.0 / 3.0) * (f_sq + f0_sq).powf(-11.0 / 6.0) * (-f_sq / fm_sq).exp()
}

/// FFT bins with |i| and |j| both at or below this index are re-synthesized
/// as integrated cells instead (the steep spectrum makes point sampling at
/// the cell center biased there).
const LOW_FREQ_CUTOFF: i64 = 5;

/// A directly-summed spectral cell: integrated power placed at the
/// power-weighted centroid frequency.
struct Cell {
    fx: f64,
    fy: f64,
    amp: f64,
}

/// Integrates the PSD over [x0, x0+w] × [y0, y0+w] with a 3-point
/// Gauss-Legendre product rule and returns the cell as a single wave.
fn integrated_cell(x0: f64, y0: f64, w: f64, r0: f64, f0_sq: f64, fm_sq: f64) -> Cell {
    const GL_X: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
    const GL_W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let mut power = 0.0;
    let mut mx = 0.0;
    let mut my = 0.0;
    for (gx, wx) in GL_X.iter().zip(GL_W) {
        let fx = x0 + w * gx;
        for (gy, wy) in GL_X.iter().zip(GL_W) {
            let fy = y0 + w * gy;
            let v = wx * wy * psd(fx * fx + fy * fy, r0, f0_sq, fm_sq);
            power += v;
            mx += v * fx;
            my += v * fy;
        }
    }
    Cell {
        fx: mx / power,
        fy: my / power,
        amp: (power * w * w).sqrt(),
    }
}

/// Generates one screen from the supplied RNG stream. Deterministic per
/// (params, RNG stream); the stream is consumed in a fixed order.
pub fn generate_screen(params: &ScreenParams, rng: &mut ChaCha8Rng) -> Result<PhaseScreen> {
    let violations = params.validate();
    if !violations.is_empty() {
        return Err(SimError::Config { violations });
    }
    let n = params.n;
    let extent = n as f64 * params.pixel_scale_m;
    let df = 1.0 / extent;
    let f0_sq = 1.0 / (params.outer_scale_m * params.outer_scale_m);
    let fm = 5.92 / (2.0 * std::f64::consts::PI * params.inner_scale_m);
    let fm_sq = fm * fm;

    let mut warnings = Vec::new();
    if params.outer_scale_m > extent && params.subharmonic_depth == 0 {
        warnings.push(format!(
            "outer scale {} m exceeds grid extent {} m and subharmonics are disabled; \
             low-order content will be underrepresented",
            params.outer_scale_m, extent
        ));
    }

    // FFT part: independent complex Gaussian per frequency bin. The inner
    // low-frequency zone is left empty here and synthesized below as
    // integrated cells.
    let mut spectrum = vec![Complex::new(0.0, 0.0); n * n];
    for row in 0..n {
        let iy = if row <= n / 2 { row as i64 } else { row as i64 - n as i64 };
        let fy = df * iy as f64;
        for col in 0..n {
            let ix = if col <= n / 2 { col as i64 } else { col as i64 - n as i64 };
            if ix.abs() <= LOW_FREQ_CUTOFF && iy.abs() <= LOW_FREQ_CUTOFF {
                continue;
            }
            let fx = df * ix as f64;
            let s = (psd(fx * fx + fy * fy, params.r0_m, f0_sq, fm_sq)).sqrt() * df;
            let (g1, g2) = standard_normal_pair(rng);
            spectrum[row * n + col] = Complex::new(g1 * s, g2 * s);
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(n, FftDirection::Inverse);
    for row in 0..n {
        fft.process(&mut spectrum[row * n..(row + 1) * n]);
    }
    let mut col_buf = vec![Complex::new(0.0, 0.0); n];
    for col in 0..n {
        for row in 0..n {
            col_buf[row] = spectrum[row * n + col];
        }
        fft.process(&mut col_buf);
        for row in 0..n {
            spectrum[row * n + col] = col_buf[row];
        }
    }
    let mut grid: Vec<f64> = spectrum.iter().map(|c| c.re).collect();

    // Low-frequency zone, directly summed:
    // - the FFT bins inside the cutoff zone as integrated unit cells,
    // - subharmonic rings of 3×3 cells shrinking by 3 per level, the top
    //   levels subdivided 3×3 again (the Zernike filters vary fastest over
    //   those cells).
    let mut cells: Vec<Cell> = Vec::new();
    let r0 = params.r0_m;
    for iy in -LOW_FREQ_CUTOFF..=LOW_FREQ_CUTOFF {
        for ix in -LOW_FREQ_CUTOFF..=LOW_FREQ_CUTOFF {
            if ix == 0 && iy == 0 {
                continue;
            }
            cells.push(integrated_cell(
                (ix as f64 - 0.5) * df,
                (iy as f64 - 0.5) * df,
                df,
                r0,
                f0_sq,
                fm_sq,
            ));
        }
    }
    for level in 1..=params.subharmonic_depth {
        let dfp = df / 3f64.powi(level as i32);
        let micro = if level <= 2 { 3 } else { 1 };
        let w = dfp / micro as f64;
        for iy in -1i64..=1 {
            for ix in -1i64..=1 {
                if ix == 0 && iy == 0 {
                    continue;
                }
                for my in 0..micro {
                    for mx in 0..micro {
                        cells.push(integrated_cell(
                            (ix as f64 - 0.5) * dfp + mx as f64 * w,
                            (iy as f64 - 0.5) * dfp + my as f64 * w,
                            w,
                            r0,
                            f0_sq,
                            fm_sq,
                        ));
                    }
                }
            }
        }
    }
    let mut ax = vec![(0.0f64, 0.0f64); n];
    let mut ay = vec![(0.0f64, 0.0f64); n];
    for cell in &cells {
        let (g1, g2) = standard_normal_pair(rng);
        let wx = 2.0 * std::f64::consts::PI * cell.fx * params.pixel_scale_m;
        let wy = 2.0 * std::f64::consts::PI * cell.fy * params.pixel_scale_m;
        for i in 0..n {
            ax[i] = ((wx * i as f64).cos(), (wx * i as f64).sin());
            ay[i] = ((wy * i as f64).cos(), (wy * i as f64).sin());
        }
        let s = cell.amp;
        for row in 0..n {
            let (cyr, cyi) = ay[row];
            let base = row * n;
            for col in 0..n {
                let (cxr, cxi) = ax[col];
                // Re[(g1 + i g2) s (cx cy)]
                let pr = cxr * cyr - cxi * cyi;
                let pi = cxr * cyi + cxi * cyr;
                grid[base + col] += s * (g1 * pr - g2 * pi);
            }
        }
    }

    Ok(PhaseScreen {
        grid,
        n,
        pixel_scale_m: params.pixel_scale_m,
        r0_m: params.r0_m,
        outer_scale_m: params.outer_scale_m,
        inner_scale_m: params.inner_scale_m,
        seed: 0,
        warnings,
    })
}

/// Screen generation wired to a pass point: the Fried parameter is the
/// receiver-plane coherence value for the given direction and wavelength,
/// the grid spans `oversize` receiver apertures.
#[allow(clippy::too_many_arguments)]
pub fn screen_for_pass_point(
    point: &PathSample,
    profile: &TurbulenceProfile,
    pass: &OrbitPass,
    direction: Direction,
    wavelength_m: f64,
    rx_aperture_m: f64,
    n: usize,
    oversize: f64,
    subharmonic_depth: u32,
    seed: u64,
    wavelength_idx: u32,
    time_idx: u64,
) -> Result<PhaseScreen> {
    let coherence_i0 = path_integral(point, profile, pass, direction.opposite())?;
    let r0 = fried_parameter(coherence_i0, wavelength_m)?;
    let params = ScreenParams {
        r0_m: r0,
        n,
        pixel_scale_m: oversize * rx_aperture_m / n as f64,
        outer_scale_m: profile.outer_scale_m,
        inner_scale_m: profile.inner_scale_m,
        subharmonic_depth,
    };
    let mut rng = stream_rng(seed, StreamKind::Screen, wavelength_idx, time_idx);
    let mut screen = generate_screen(&params, &mut rng)?;
    screen.seed = seed;
    Ok(screen)
}

/// Ensemble-averaged structure function D(r) along the x axis at integer
/// pixel separations `seps_px`, computed over `grids`.
pub fn structure_function_x(grids: &[Vec<f64>], n: usize, seps_px: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(seps_px.len());
    for &s in seps_px {
        let mut acc = 0.0;
        let mut count = 0u64;
        for g in grids {
            for row in 0..n {
                let base = row * n;
                for col in 0..n - s {
                    let d = g[base + col + s] - g[base + col];
                    acc += d * d;
                    count += 1;
                }
            }
        }
        out.push(acc / count as f64);
    }
    out
}

/// Same along the y axis.
pub fn structure_function_y(grids: &[Vec<f64>], n: usize, seps_px: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(seps_px.len());
    for &s in seps_px {
        let mut acc = 0.0;
        let mut count = 0u64;
        for g in grids {
            for row in 0..n - s {
                for col in 0..n {
                    let d = g[(row + s) * n + col] - g[row * n + col];
                    acc += d * d;
                    count += 1;
                }
            }
        }
        out.push(acc / count as f64);
    }
    out
}

/// Kolmogorov structure function 6.88 (r/r₀)^(5/3).
pub fn kolmogorov_structure(r_m: f64, r0_m: f64) -> f64 {
    6.88 * (r_m / r0_m).powf(5.0 / 3.0)
}
