//! Zernike polynomials in Noll ordering, least-squares decomposition of
//! gridded phase screens onto the first 15 modes, and Noll residual-variance
//! theory for Kolmogorov turbulence.
//!
//! Noll index table for the modes handled here:
//!
//! | j | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9 | 10 | 11 | 12 | 13 | 14 | 15 |
//! |---|---|---|---|---|---|---|---|---|---|----|----|----|----|----|----|
//! | n | 0 | 1 | 1 | 2 | 2 | 2 | 3 | 3 | 3 | 3  | 4  | 4  | 4  | 4  | 4  |
//! | m | 0 | 1 | 1 | 0 | 2 | 2 | 1 | 1 | 3 | 3  | 0  | 2  | 2  | 4  | 4  |
//!
//! Even j pairs with cos(mψ), odd j with sin(mψ). All modes carry Noll's
//! unit-RMS normalization over the unit disk.

use crate::error::{Result, SimError};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// Number of modes the deformable-mirror interface accepts.
pub const MODE_COUNT: usize = 15;

/// Units of a coefficient vector, recorded in serialized headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoeffUnits {
    #[default]
    PhaseRadians,
    StrokeMicrons,
}

impl std::fmt::Display for CoeffUnits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoeffUnits::PhaseRadians => write!(f, "rad"),
            CoeffUnits::StrokeMicrons => write!(f, "um"),
        }
    }
}

/// First 15 Noll-ordered Zernike coefficients of a wavefront.
///
/// Piston (mode 1) is carried along for completeness; it does not affect
/// received intensity and downstream consumers ignore or zero it.
#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeVector {
    pub coefficients: [f64; MODE_COUNT],
    pub units: CoeffUnits,
    /// Aperture radius the decomposition was performed over, metres.
    pub aperture_radius_m: f64,
}

impl ZernikeVector {
    pub fn zeros(aperture_radius_m: f64) -> Self {
        ZernikeVector {
            coefficients: [0.0; MODE_COUNT],
            units: CoeffUnits::PhaseRadians,
            aperture_radius_m,
        }
    }

    /// Header line for the 15-column serialization.
    pub fn csv_header(&self) -> String {
        let names: Vec<String> = (1..=MODE_COUNT).map(|j| format!("z{j}_{}", self.units)).collect();
        names.join(",")
    }

    /// 15 comma-separated coefficients, Noll order, 9 significant digits.
    pub fn csv_line(&self) -> String {
        self.coefficients
            .iter()
            .map(|c| format!("{c:.8e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_finite())
    }
}

/// Noll single index -> (radial order n, azimuthal order m, cosine?).
/// For m = 0 the trig flag is irrelevant.
pub fn noll_to_nm(j: usize) -> Result<(u32, u32, bool)> {
    if j == 0 {
        return Err(SimError::domain("noll_to_nm", "Noll indices start at 1"));
    }
    let mut n = 0u32;
    let mut j_rem = j;
    while j_rem > (n as usize + 1) {
        j_rem -= n as usize + 1;
        n += 1;
    }
    // j_rem is the 1-based position within radial order n
    let ms: Vec<u32> = if n % 2 == 0 {
        // 0, 2, 2, 4, 4, ...
        std::iter::once(0)
            .chain((1..).flat_map(|k| [2 * k, 2 * k]))
            .take(n as usize + 1)
            .collect()
    } else {
        (0..).flat_map(|k| [2 * k + 1, 2 * k + 1]).take(n as usize + 1).collect()
    };
    let m = ms[j_rem - 1];
    Ok((n, m, j % 2 == 0))
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Radial polynomial R_n^m(ρ) as the alternating factorial sum with
/// Δ± = (n ± m)/2.
pub fn zernike_radial(n: u32, m: u32, rho_norm: f64) -> Result<f64> {
    if m > n || (n - m) % 2 != 0 {
        return Err(SimError::domain(
            "zernike_radial",
            format!("require m <= n and n - m even, got n={n} m={m}"),
        ));
    }
    if !(0.0..=1.0).contains(&rho_norm) {
        return Err(SimError::domain(
            "zernike_radial",
            format!("normalized radius must lie in [0, 1], got {rho_norm}"),
        ));
    }
    let d_plus = (n + m) / 2;
    let d_minus = (n - m) / 2;
    let mut sum = 0.0;
    for s in 0..=d_minus {
        let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
        let num = factorial(n - s);
        let den = factorial(s) * factorial(d_plus - s) * factorial(d_minus - s);
        sum += sign * num / den * rho_norm.powi((n - 2 * s) as i32);
    }
    Ok(sum)
}

/// Noll-normalized mode j at polar coordinates (ρ ∈ [0,1], ψ).
/// Unit RMS over the unit disk.
pub fn zernike_mode(j_noll: usize, rho_norm: f64, psi_rad: f64) -> Result<f64> {
    if !(1..=MODE_COUNT).contains(&j_noll) {
        return Err(SimError::domain(
            "zernike_mode",
            format!("mode index must lie in [1, {MODE_COUNT}], got {j_noll}"),
        ));
    }
    let (n, m, is_cos) = noll_to_nm(j_noll)?;
    let radial = zernike_radial(n, m, rho_norm)?;
    let norm = if m == 0 {
        ((n + 1) as f64).sqrt()
    } else {
        (2.0 * (n + 1) as f64).sqrt()
    };
    let angular = if m == 0 {
        1.0
    } else if is_cos {
        (m as f64 * psi_rad).cos()
    } else {
        (m as f64 * psi_rad).sin()
    };
    Ok(norm * radial * angular)
}

// ---------------------------------------------------------------------------
// Gridded basis with caching
// ---------------------------------------------------------------------------

/// Sampled mode basis over a circular pixel mask, with the precomputed
/// normal-equation Gram matrix for least-squares projection.
pub struct GridBasis {
    pub grid_n: usize,
    /// flat indices of in-mask pixels
    pub mask: Vec<usize>,
    /// MODE_COUNT × mask.len(), mode-major
    pub modes: Vec<f64>,
    /// MODE_COUNT × MODE_COUNT Gram matrix of the sampled modes
    pub gram: Vec<f64>,
}

fn basis_cache() -> &'static RwLock<HashMap<(usize, u64), Arc<GridBasis>>> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, u64), Arc<GridBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Basis for an `n × n` grid with a centered circular mask of radius
/// `radius_px` pixels. Cached; concurrent readers share one instance.
pub fn grid_basis(grid_n: usize, radius_px: f64) -> Result<Arc<GridBasis>> {
    let key = (grid_n, (radius_px * 1024.0).round() as u64);
    if let Some(b) = basis_cache().read().unwrap().get(&key) {
        return Ok(b.clone());
    }
    let center = (grid_n as f64 - 1.0) / 2.0;
    let mut mask = Vec::new();
    let mut polar = Vec::new();
    for row in 0..grid_n {
        for col in 0..grid_n {
            let dx = col as f64 - center;
            let dy = row as f64 - center;
            let r = (dx * dx + dy * dy).sqrt();
            if r <= radius_px {
                mask.push(row * grid_n + col);
                polar.push(((r / radius_px).min(1.0), dy.atan2(dx)));
            }
        }
    }
    if mask.len() < MODE_COUNT {
        return Err(SimError::domain(
            "grid_basis",
            format!("mask has {} pixels, need at least {MODE_COUNT}", mask.len()),
        ));
    }
    let mut modes = vec![0.0; MODE_COUNT * mask.len()];
    for j in 1..=MODE_COUNT {
        for (idx, &(rho, psi)) in polar.iter().enumerate() {
            modes[(j - 1) * mask.len() + idx] = zernike_mode(j, rho, psi)?;
        }
    }
    let mut gram = vec![0.0; MODE_COUNT * MODE_COUNT];
    for a in 0..MODE_COUNT {
        for b in a..MODE_COUNT {
            let dot: f64 = modes[a * mask.len()..(a + 1) * mask.len()]
                .iter()
                .zip(&modes[b * mask.len()..(b + 1) * mask.len()])
                .map(|(x, y)| x * y)
                .sum();
            gram[a * MODE_COUNT + b] = dot;
            gram[b * MODE_COUNT + a] = dot;
        }
    }
    let basis = Arc::new(GridBasis {
        grid_n,
        mask,
        modes,
        gram,
    });
    basis_cache().write().unwrap().insert(key, basis.clone());
    Ok(basis)
}

/// Result of projecting a screen onto the first 15 modes.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub vector: ZernikeVector,
    /// RMS of the projection residual over the mask (same units as input).
    pub residual_rms: f64,
    /// RMS of the input over the mask.
    pub input_rms: f64,
}

/// Least-squares projection of a gridded phase field onto modes 1–15 over a
/// centered circular aperture of `radius_px` pixels.
///
/// `reconstruct(decompose(s)) + residual` reproduces `s` on the mask.
pub fn decompose(
    grid: &[f64],
    grid_n: usize,
    radius_px: f64,
    aperture_radius_m: f64,
) -> Result<Decomposition> {
    if grid.len() != grid_n * grid_n {
        return Err(SimError::domain(
            "decompose",
            format!("grid length {} does not match {grid_n}²", grid.len()),
        ));
    }
    let basis = grid_basis(grid_n, radius_px)?;
    let npx = basis.mask.len();
    let mut rhs = [0.0; MODE_COUNT];
    for j in 0..MODE_COUNT {
        let row = &basis.modes[j * npx..(j + 1) * npx];
        rhs[j] = basis
            .mask
            .iter()
            .zip(row)
            .map(|(&px, &m)| grid[px] * m)
            .sum();
    }
    let coeffs = crate::numerics::solve_spd(&basis.gram, &rhs, MODE_COUNT)?;
    let mut vector = ZernikeVector::zeros(aperture_radius_m);
    vector.coefficients.copy_from_slice(&coeffs);

    let mut res_sq = 0.0;
    let mut in_sq = 0.0;
    for (idx, &px) in basis.mask.iter().enumerate() {
        let mut fit = 0.0;
        for j in 0..MODE_COUNT {
            fit += coeffs[j] * basis.modes[j * npx + idx];
        }
        let v = grid[px];
        res_sq += (v - fit) * (v - fit);
        in_sq += v * v;
    }
    Ok(Decomposition {
        vector,
        residual_rms: (res_sq / npx as f64).sqrt(),
        input_rms: (in_sq / npx as f64).sqrt(),
    })
}

/// Renders a coefficient vector onto an `n × n` grid (zeros outside the
/// mask). Inverse of [`decompose`] up to grid resolution.
pub fn synthesize(vector: &ZernikeVector, grid_n: usize, radius_px: f64) -> Result<Vec<f64>> {
    let basis = grid_basis(grid_n, radius_px)?;
    let npx = basis.mask.len();
    let mut grid = vec![0.0; grid_n * grid_n];
    for (idx, &px) in basis.mask.iter().enumerate() {
        let mut v = 0.0;
        for j in 0..MODE_COUNT {
            v += vector.coefficients[j] * basis.modes[j * npx + idx];
        }
        grid[px] = v;
    }
    Ok(grid)
}

// ---------------------------------------------------------------------------
// Noll residual-variance theory
// ---------------------------------------------------------------------------

/// Noll residual coefficients Δ_J: wavefront variance (rad²) remaining after
/// perfect correction of modes 1..J equals Δ_J (D/r₀)^(5/3).
pub const NOLL_RESIDUALS: [f64; MODE_COUNT] = [
    1.0299, 0.582, 0.134, 0.111, 0.0880, 0.0648, 0.0587, 0.0525, 0.0463, 0.0401, 0.0377, 0.0352,
    0.0328, 0.0304, 0.0279,
];

/// Residual wavefront variance after removing modes 1..=j_max, rad².
pub fn noll_residual_variance(j_max: usize, d_over_r0: f64) -> Result<f64> {
    if !(1..=MODE_COUNT).contains(&j_max) {
        return Err(SimError::domain(
            "noll_residual_variance",
            format!("j_max must lie in [1, {MODE_COUNT}], got {j_max}"),
        ));
    }
    if d_over_r0 <= 0.0 {
        return Err(SimError::domain("noll_residual_variance", "D/r0 must be > 0"));
    }
    Ok(NOLL_RESIDUALS[j_max - 1] * d_over_r0.powf(5.0 / 3.0))
}

/// Kolmogorov variance of a single mode j ≥ 2, rad²
/// (difference of consecutive Noll residuals).
pub fn noll_mode_variance(j: usize, d_over_r0: f64) -> Result<f64> {
    if !(2..=MODE_COUNT).contains(&j) {
        return Err(SimError::domain(
            "noll_mode_variance",
            format!("per-mode variance defined for j in [2, {MODE_COUNT}], got {j}"),
        ));
    }
    Ok((NOLL_RESIDUALS[j - 2] - NOLL_RESIDUALS[j - 1]) * d_over_r0.powf(5.0 / 3.0))
}
