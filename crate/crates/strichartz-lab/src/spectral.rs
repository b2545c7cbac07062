//! Periodic discretization of free space and the free Schrödinger flow.
//!
//! A [`SpatialGrid`] pairs a position lattice `x_j = -X + j h` (spacing
//! `h = 2X/n` per axis) with the momentum lattice `k_m = m δ`,
//! `m = -n/2 .. n/2 - 1`, `δ = π/X`, cutoff `Λ = π/h`. Transforms use the
//! symmetric continuum normalization
//!
//! ```text
//!   û(k) = (2π)^{-d/2} h^d Σ_j u(x_j) e^{-i k·x_j}
//! ```
//!
//! so that Parseval holds with the weights `h^d` / `δ^d`, and the free flow
//! `u(t) = e^{itΔ} u(0)` is the multiplier `e^{-it|k|²}` (sign convention of
//! `i u̇ = -Δ u`).
//!
//! All continuum claims downstream are only trusted while the state keeps its
//! mass away from the box boundary; see [`SpatialGrid::leakage_tolerance`].

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

pub const DEFAULT_LEAKAGE_TOLERANCE: f64 = 1e-6;

/// Periodic box `[-X, X)^d` with `n` points per axis (`n` a power of two).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
    /// Mass fraction allowed in the outer 10% shell before results are rejected.
    pub leakage_tolerance: f64,
}

impl SpatialGrid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(LabError::InvalidParameter(format!("dim {dim} not in 1..=3")));
        }
        if !(half_width > 0.0) {
            return Err(LabError::InvalidParameter("box half-width must be positive".into()));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(LabError::InvalidParameter(format!(
                "points per axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        Ok(Self { dim, half_width, points_per_axis, leakage_tolerance: DEFAULT_LEAKAGE_TOLERANCE })
    }

    pub fn with_leakage_tolerance(mut self, tol: f64) -> Self {
        self.leakage_tolerance = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Position spacing `h = 2X/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Momentum lattice spacing `δ = π/X`.
    pub fn momentum_spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Momentum cutoff `Λ = π/h`.
    pub fn momentum_cutoff(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    /// Total number of lattice points `n^d`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position cell volume `h^d`.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Momentum cell volume `δ^d`.
    pub fn momentum_cell(&self) -> f64 {
        self.momentum_spacing().powi(self.dim as i32)
    }

    /// Coordinates of the flat index, row-major over axes.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let mut rem = flat;
        let n = self.points_per_axis;
        let h = self.spacing();
        for a in (0..self.dim).rev() {
            out[a] = -self.half_width + h * (rem % n) as f64;
            rem /= n;
        }
        out
    }

    /// Momentum of the flat index in the natural (monotone) ordering.
    pub fn momentum(&self, flat: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        let mut rem = flat;
        let n = self.points_per_axis;
        let dk = self.momentum_spacing();
        for a in (0..self.dim).rev() {
            out[a] = ((rem % n) as f64 - (n / 2) as f64) * dk;
            rem /= n;
        }
        out
    }

    /// `|k|²` of the flat momentum index.
    pub fn momentum_sq(&self, flat: usize) -> f64 {
        let k = self.momentum(flat);
        k[..self.dim].iter().map(|v| v * v).sum()
    }

    /// 1D momentum lattice in natural order (valid per axis).
    pub fn momentum_axis(&self) -> Vec<f64> {
        let n = self.points_per_axis;
        let dk = self.momentum_spacing();
        (0..n).map(|i| (i as f64 - (n / 2) as f64) * dk).collect()
    }

    /// 1D position lattice (valid per axis).
    pub fn position_axis(&self) -> Vec<f64> {
        let n = self.points_per_axis;
        let h = self.spacing();
        (0..n).map(|j| -self.half_width + h * j as f64).collect()
    }

    /// True if the flat position index lies in the outer 10% shell of the box.
    fn in_boundary_shell(&self, flat: usize) -> bool {
        let x = self.position(flat);
        let edge = 0.9 * self.half_width;
        x[..self.dim].iter().any(|v| v.abs() > edge)
    }
}

/// A state sampled on the position lattice; `ℏ = 1`, `i u̇ = -Δ u`.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
}

/// A state sampled on the momentum lattice, natural ordering per axis.
#[derive(Debug, Clone)]
pub struct MomentumFunction {
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
}

/// Uniform time samples `t_start ..= t_end`, `steps >= 2` sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TimeWindow {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(LabError::InvalidParameter("time window must have t_end > t_start".into()));
        }
        if steps < 2 {
            return Err(LabError::InvalidParameter("time window needs at least 2 samples".into()));
        }
        Ok(Self { t_start, t_end, steps })
    }

    /// Symmetric window `[-T, T]`.
    pub fn symmetric(half: f64, steps: usize) -> Result<Self> {
        Self::new(-half, half, steps)
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.steps - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.steps).map(|i| self.t_start + dt * i as f64).collect()
    }

    /// Trapezoid weight of sample `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.steps {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    /// Window with twice as many intervals (refinement evidence runs).
    pub fn refined(&self) -> Self {
        Self { t_start: self.t_start, t_end: self.t_end, steps: 2 * self.steps - 1 }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Apply the per-axis forward DFT with the continuum normalization, all axes.
fn axis_transform(grid: &SpatialGrid, values: &mut [Complex64], forward: bool) {
    let n = grid.points_per_axis;
    let d = grid.dim;
    let fft = plan(n, !forward);
    let mut lane = vec![Complex64::default(); n];
    let half = n / 2;
    let scale = if forward {
        grid.spacing() / (2.0 * std::f64::consts::PI).sqrt()
    } else {
        grid.momentum_spacing() / (2.0 * std::f64::consts::PI).sqrt()
    };
    // stride of axis a in the flat row-major layout
    for a in 0..d {
        let stride = n.pow((d - 1 - a) as u32);
        let outer = values.len() / n;
        for lane_idx in 0..outer {
            // decompose lane_idx into the fixed coordinates around axis a
            let block = lane_idx / stride;
            let offset = lane_idx % stride;
            let base = block * stride * n + offset;
            if forward {
                for i in 0..n {
                    lane[i] = values[base + i * stride];
                }
                fft.process(&mut lane);
                for i in 0..n {
                    // natural index i holds mode m = i - n/2, DFT bin (i + n/2) mod n
                    let m = i as i64 - half as i64;
                    let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    values[base + i * stride] = lane[(i + half) % n] * scale * sign;
                }
            } else {
                for i in 0..n {
                    let m = i as i64 - half as i64;
                    let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    lane[(i + half) % n] = values[base + i * stride] * sign;
                }
                fft.process(&mut lane);
                for i in 0..n {
                    values[base + i * stride] = lane[i] * scale;
                }
            }
        }
    }
}

impl WaveFunction {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    /// Build from a pointwise function of position.
    pub fn from_fn(grid: SpatialGrid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                f(&x[..grid.dim()])
            })
            .collect();
        Self { grid, values }
    }

    /// L² norm with the `h^d` weight.
    pub fn norm(&self) -> f64 {
        let mass: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (mass * self.grid.cell()).sqrt()
    }

    /// Weighted inner product `⟨self, other⟩ = Σ conj(self)·other h^d`.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.cell()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let s = 1.0 / n;
            for v in &mut self.values {
                *v *= s;
            }
        }
    }

    /// Mass fraction in the outer 10% shell of the box.
    pub fn boundary_shell_mass(&self) -> f64 {
        let mut shell = 0.0;
        let mut total = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            if self.grid.in_boundary_shell(i) {
                shell += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            shell / total
        }
    }

    fn check_leakage(&self) -> Result<()> {
        let mass = self.boundary_shell_mass();
        if mass > self.grid.leakage_tolerance {
            return Err(LabError::LeakageExceeded { mass, tolerance: self.grid.leakage_tolerance });
        }
        Ok(())
    }
}

/// In-place axis transform for raw buffers (matrix columns in wave_op).
pub(crate) fn transform_inplace(grid: &SpatialGrid, values: &mut [Complex64], forward: bool) {
    debug_assert_eq!(values.len(), grid.len());
    axis_transform(grid, values, forward);
}

/// Unitary transform to the momentum lattice (natural ordering).
pub fn forward_fourier(u: &WaveFunction) -> MomentumFunction {
    let mut values = u.values.clone();
    axis_transform(&u.grid, &mut values, true);
    MomentumFunction { grid: u.grid.clone(), values }
}

/// Inverse of [`forward_fourier`].
pub fn inverse_fourier(m: &MomentumFunction) -> WaveFunction {
    let mut values = m.values.clone();
    axis_transform(&m.grid, &mut values, false);
    WaveFunction { grid: m.grid.clone(), values }
}

impl MomentumFunction {
    /// L² norm with the `δ^d` weight.
    pub fn norm(&self) -> f64 {
        let mass: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (mass * self.grid.momentum_cell()).sqrt()
    }
}

/// Free Schrödinger flow `e^{itΔ}`: multiplier `e^{-it|k|²}` on the momentum
/// lattice. Rejects the result if mass has reached the box boundary.
pub fn free_propagate(u: &WaveFunction, t: f64) -> Result<WaveFunction> {
    if t == 0.0 {
        let out = u.clone();
        out.check_leakage()?;
        return Ok(out);
    }
    let mut hat = forward_fourier(u);
    for (i, v) in hat.values.iter_mut().enumerate() {
        let phase = -t * hat.grid.momentum_sq(i);
        *v *= Complex64::from_polar(1.0, phase);
    }
    let out = inverse_fourier(&hat);
    out.check_leakage()?;
    Ok(out)
}

/// Pointwise multiplication by a potential slice `V(t, ·)`.
pub fn apply_potential_slice(u: &WaveFunction, v: &[Complex64]) -> Result<WaveFunction> {
    if v.len() != u.values.len() {
        return Err(LabError::ShapeMismatch { expected: u.values.len(), got: v.len() });
    }
    let values = u.values.iter().zip(v).map(|(a, b)| a * b).collect();
    Ok(WaveFunction { grid: u.grid.clone(), values })
}
