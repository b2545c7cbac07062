//! Closed-form evaluators for Gaussian coherent-state ensembles.
//!
//! Everything here is exact analysis, no grids: these are the independent
//! oracles that the discretized pipelines are validated against.
//!
//! The building block is the coherent state
//!
//! ```text
//!   F_{x,ξ}(z) = (2πβ)^{-d/4} e^{-(z-x)²/(4β)} e^{iξ·z},
//! ```
//!
//! normalized in L²(R^d). The ensemble operator
//!
//! ```text
//!   γ = ∫∫ dx dξ/(2π)^d  e^{-x²/L² - ξ²/μ} |F_{x,ξ}⟩⟨F_{x,ξ}|
//! ```
//!
//! has total mass `N = Tr γ = A_d L^d μ^{d/2}` with `A_d = 2^{-d}`, and its
//! freely evolved density is the explicit Gaussian
//!
//! ```text
//!   ρ_{γ(t)}(z) = (βμL² / (4πD))^{d/2} e^{-β z² / D},
//!   D(t) = 2β² + βL² + 2t² + 4βμt².
//! ```
//!
//! Space and mixed space-time norms of this density have closed forms too;
//! they are evaluated in the log domain so that large `μL²` cannot overflow.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::spectral::{SpatialGrid, WaveFunction};

/// Phase-space constant `A_d = 2^{-d}` in `N = A_d L^d μ^{d/2}`.
pub fn phase_space_constant(d: usize) -> f64 {
    0.5f64.powi(d as i32)
}

/// `A_{d,p}` in the closed-form mixed norm, via
/// `A_{d,p}^p = (π/q)^{dp/(2q)} (4π)^{-dp/2} ∫ ds/(1+s²) = 2^{-dp} q^{1-dp/2}`.
///
/// The second equality uses the scaling relation `dp/(2q) = dp/2 - 1`.
pub fn mixed_norm_constant(d: usize, p: f64, q: f64) -> f64 {
    let dp = d as f64 * p;
    (((-dp) * std::f64::consts::LN_2 + (1.0 - dp / 2.0) * q.ln()) / p).exp()
}

/// A single Gaussian wave packet: squeezing width `β`, center `x`, momentum `ξ`.
#[derive(Debug, Clone)]
pub struct CoherentStateParams {
    pub beta: f64,
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl CoherentStateParams {
    pub fn new(beta: f64, center: Vec<f64>, momentum: Vec<f64>) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(LabError::InvalidParameter("coherent width beta must be positive".into()));
        }
        if center.len() != momentum.len() || center.is_empty() {
            return Err(LabError::InvalidParameter("center/momentum dimensions differ".into()));
        }
        Ok(Self { beta, center, momentum })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// Ensemble parameters `(β, L, μ)` in dimension `d`.
#[derive(Debug, Clone, Copy)]
pub struct CoherentEnsembleParams {
    pub beta: f64,
    pub spatial_extent: f64,
    pub momentum_extent: f64,
    pub dim: usize,
}

impl CoherentEnsembleParams {
    pub fn new(beta: f64, spatial_extent: f64, momentum_extent: f64, dim: usize) -> Result<Self> {
        if !(beta > 0.0 && spatial_extent > 0.0 && momentum_extent > 0.0) {
            return Err(LabError::InvalidParameter("ensemble parameters must be positive".into()));
        }
        if dim == 0 || dim > 3 {
            return Err(LabError::InvalidParameter(format!("dim {dim} not in 1..=3")));
        }
        Ok(Self { beta, spatial_extent, momentum_extent, dim })
    }

    /// Semiclassical regime gate: `1/μ ≤ β/10` and `β ≤ L²/10`.
    pub fn in_semiclassical_regime(&self) -> bool {
        let l2 = self.spatial_extent * self.spatial_extent;
        1.0 / self.momentum_extent <= self.beta / 10.0 && self.beta <= l2 / 10.0
    }

    /// Total mass `N = A_d L^d μ^{d/2}`.
    pub fn total_mass(&self) -> f64 {
        let d = self.dim as f64;
        phase_space_constant(self.dim)
            * self.spatial_extent.powf(d)
            * self.momentum_extent.powf(d / 2.0)
    }

    /// `μ L²`, the scale every closed form is homogeneous in.
    pub fn mu_l_squared(&self) -> f64 {
        self.momentum_extent * self.spatial_extent * self.spatial_extent
    }

    /// Width denominator `D(t) = 2β² + βL² + 2t² + 4βμt²`.
    pub fn width_denominator(&self, t: f64) -> f64 {
        let b = self.beta;
        let l2 = self.spatial_extent * self.spatial_extent;
        2.0 * b * b + b * l2 + 2.0 * t * t + 4.0 * b * self.momentum_extent * t * t
    }
}

/// Sample `F_{x,ξ}` on a grid. The state must fit in the box.
pub fn coherent_state(p: &CoherentStateParams, grid: &SpatialGrid) -> Result<WaveFunction> {
    if p.dim() != grid.dim() {
        return Err(LabError::ShapeMismatch { expected: grid.dim(), got: p.dim() });
    }
    let d = grid.dim();
    let norm = (2.0 * std::f64::consts::PI * p.beta).powf(-(d as f64) / 4.0);
    let u = WaveFunction::from_fn(grid.clone(), |x| {
        let mut q = 0.0;
        let mut phase = 0.0;
        for a in 0..d {
            let dz = x[a] - p.center[a];
            q += dz * dz;
            phase += p.momentum[a] * x[a];
        }
        Complex64::from_polar(norm * (-q / (4.0 * p.beta)).exp(), phase)
    });
    let shell = u.boundary_shell_mass();
    if shell > grid.leakage_tolerance {
        return Err(LabError::LeakageExceeded { mass: shell, tolerance: grid.leakage_tolerance });
    }
    Ok(u)
}

/// `|e^{itΔ} F_{x,ξ}(z)|` in closed form:
///
/// ```text
///   (β / (2π(β²+t²)))^{d/4} e^{-β (z - x - 2tξ)² / (4(β²+t²))}
/// ```
///
/// The packet drifts with velocity `2ξ`, matching `e^{-itΔ} x e^{itΔ} = x + 2tp`.
pub fn evolved_coherent_amplitude(p: &CoherentStateParams, t: f64, z: &[f64]) -> f64 {
    let d = p.dim() as f64;
    let b = p.beta;
    let denom = b * b + t * t;
    let mut q = 0.0;
    for a in 0..p.dim() {
        let dz = z[a] - p.center[a] - 2.0 * t * p.momentum[a];
        q += dz * dz;
    }
    (b / (2.0 * std::f64::consts::PI * denom)).powf(d / 4.0) * (-b * q / (4.0 * denom)).exp()
}

/// Evolved ensemble density `ρ_{γ(t)}(z)`, exact.
pub fn ensemble_density(e: &CoherentEnsembleParams, t: f64, z: &[f64]) -> f64 {
    let d = e.dim as f64;
    let dd = e.width_denominator(t);
    let z2: f64 = z[..e.dim].iter().map(|v| v * v).sum();
    let ln_pref = 0.5
        * d
        * (e.beta.ln() + e.mu_l_squared().ln() - (4.0 * std::f64::consts::PI * dd).ln());
    (ln_pref - e.beta * z2 / dd).exp()
}

/// Spatial norm `∫ ρ_{γ(t)}^q dz` in closed form, `q > 1`:
///
/// ```text
///   (π/q)^{d/2} (4π)^{-dq/2} (μL²)^{dq/2} (β/D)^{(q-1)d/2}
/// ```
pub fn ensemble_space_lq(e: &CoherentEnsembleParams, t: f64, q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(LabError::ExponentMismatch(format!("spatial exponent q must exceed 1, got {q}")));
    }
    Ok(ln_space_lq(e, t, q).exp())
}

fn ln_space_lq(e: &CoherentEnsembleParams, t: f64, q: f64) -> f64 {
    let d = e.dim as f64;
    let pi = std::f64::consts::PI;
    let dd = e.width_denominator(t);
    0.5 * d * (pi / q).ln() - 0.5 * d * q * (4.0 * pi).ln()
        + 0.5 * d * q * e.mu_l_squared().ln()
        + 0.5 * (q - 1.0) * d * (e.beta / dd).ln()
}

fn check_primal_relation(d: usize, p: f64, q: f64) -> Result<()> {
    // 2/p + d/q = d, checked through the reconstructed exponent
    let dd = d as f64;
    if !(q > 1.0) {
        return Err(LabError::ExponentMismatch(format!("q = {q} must exceed 1")));
    }
    let p_expected = 2.0 * q / (dd * (q - 1.0));
    if (p - p_expected).abs() > 1e-12 * p_expected {
        return Err(LabError::ExponentMismatch(format!(
            "2/p + d/q = d fails: p = {p}, expected {p_expected}"
        )));
    }
    Ok(())
}

/// Mixed norm `‖ρ_{γ(t)}‖_{L^p_t L^q_x}` in closed form:
///
/// ```text
///   A_{d,p} (μL²)^{d/2 - 1/(2p)} (1 + 2β/L²)^{-1/(2p)} (4 + 2/(βμ))^{-1/(2p)}
/// ```
///
/// The exponent relation `2/p + d/q = d` is verified on every call, as is the
/// identity `d/2 - 1/(2p) = d(q+1)/(4q)` it implies.
pub fn ensemble_mixed_norm(e: &CoherentEnsembleParams, p: f64, q: f64) -> Result<f64> {
    ensemble_mixed_norm_impl(e, p, q, None)
}

/// Same closed form restricted to the time window `[-T, T]`; the restriction
/// multiplies the full norm by `((2/π) arctan(T √(b/a)))^{1/p}` with
/// `a = 2β² + βL²`, `b = 2 + 4βμ`.
pub fn ensemble_mixed_norm_windowed(
    e: &CoherentEnsembleParams,
    p: f64,
    q: f64,
    half_window: f64,
) -> Result<f64> {
    if !(half_window > 0.0) {
        return Err(LabError::InvalidParameter("window half-width must be positive".into()));
    }
    ensemble_mixed_norm_impl(e, p, q, Some(half_window))
}

fn ensemble_mixed_norm_impl(
    e: &CoherentEnsembleParams,
    p: f64,
    q: f64,
    half_window: Option<f64>,
) -> Result<f64> {
    check_primal_relation(e.dim, p, q)?;
    let d = e.dim as f64;
    // d/2 - 1/(2p) = d(q+1)/(4q): rechecked because every closed form relies on it
    let lhs = d / 2.0 - 1.0 / (2.0 * p);
    let rhs = d * (q + 1.0) / (4.0 * q);
    if (lhs - rhs).abs() > 1e-12 {
        return Err(LabError::ExponentMismatch(format!(
            "exponent identity d/2 - 1/(2p) = d(q+1)/(4q) fails: {lhs} vs {rhs}"
        )));
    }
    let b = e.beta;
    let l2 = e.spatial_extent * e.spatial_extent;
    let ln_a = mixed_norm_constant(e.dim, p, q).ln();
    let mut ln_val = ln_a + lhs * e.mu_l_squared().ln()
        - (1.0 / (2.0 * p)) * (1.0 + 2.0 * b / l2).ln()
        - (1.0 / (2.0 * p)) * (4.0 + 2.0 / (b * e.momentum_extent)).ln();
    if let Some(t_half) = half_window {
        let ta = 2.0 * b * b + b * l2;
        let tb = 2.0 + 4.0 * b * e.momentum_extent;
        let frac = 2.0 / std::f64::consts::PI * (t_half * (tb / ta).sqrt()).atan();
        ln_val += frac.ln() / p;
    }
    Ok(ln_val.exp())
}

/// Trace bound `Tr γ^r ≤ r^{-d} N` for `r ≥ 1` (coherent-state upper symbol).
pub fn berezin_lieb_bound(e: &CoherentEnsembleParams, r: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(LabError::InvalidParameter(format!("Schatten exponent r = {r} must be >= 1")));
    }
    Ok(r.powf(-(e.dim as f64)) * e.total_mass())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::free_propagate;
    use crate::testutil::seeded_rng;
    use rand::Rng;

    fn grid1d(n: usize, x: f64) -> SpatialGrid {
        SpatialGrid::new(1, x, n).unwrap()
    }

    #[test]
    fn coherent_state_is_normalized() {
        let g = grid1d(256, 16.0);
        let p = CoherentStateParams::new(1.0, vec![0.0], vec![0.0]).unwrap();
        let u = coherent_state(&p, &g).unwrap();
        assert!((u.norm() - 1.0).abs() < 1e-8);
        assert!(u.values.iter().all(|v| v.im.abs() < 1e-14 && v.re >= 0.0));
    }

    #[test]
    fn overlap_matches_gaussian_integral() {
        // <F_{0,0}, F_{x,0}> = e^{-x^2/(8 beta)}
        let g = grid1d(512, 20.0);
        let beta = 0.8;
        let a = coherent_state(&CoherentStateParams::new(beta, vec![0.0], vec![0.0]).unwrap(), &g)
            .unwrap();
        for x0 in [0.5, 1.5, 3.0] {
            let b =
                coherent_state(&CoherentStateParams::new(beta, vec![x0], vec![0.0]).unwrap(), &g)
                    .unwrap();
            let ov = a.inner(&b);
            let expect = (-x0 * x0 / (8.0 * beta)).exp();
            assert!((ov.re - expect).abs() < 1e-8 && ov.im.abs() < 1e-10);
        }
    }

    #[test]
    fn resolution_of_identity_by_phase_space_quadrature() {
        // sum over (x, xi) nodes of |<F_{x,xi}, g>|^2 /(2 pi) = ||g||^2 = 1
        let g = grid1d(256, 16.0);
        let beta = 1.0;
        let test =
            coherent_state(&CoherentStateParams::new(0.7, vec![0.3], vec![0.5]).unwrap(), &g)
                .unwrap();
        let (dx, dxi) = (0.35, 0.35);
        let mut total = 0.0;
        let mut x0 = -9.0;
        while x0 <= 9.0 {
            let mut xi0 = -9.0;
            while xi0 <= 9.0 {
                let f = coherent_state(
                    &CoherentStateParams::new(beta, vec![x0], vec![xi0]).unwrap(),
                    &g,
                )
                .unwrap();
                total += f.inner(&test).norm_sqr();
                xi0 += dxi;
            }
            x0 += dx;
        }
        total *= dx * dxi / (2.0 * std::f64::consts::PI);
        assert!((total - 1.0).abs() < 1e-6, "completeness sum {total}");
    }

    #[test]
    fn evolved_amplitude_reduces_to_initial_modulus() {
        let p = CoherentStateParams::new(1.3, vec![0.4], vec![-0.7]).unwrap();
        for z in [-2.0, 0.0, 1.7] {
            let at0 = evolved_coherent_amplitude(&p, 0.0, &[z]);
            let expect = (2.0 * std::f64::consts::PI * 1.3).powf(-0.25)
                * (-(z - 0.4f64).powi(2) / (4.0 * 1.3)).exp();
            assert!((at0 - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn evolved_amplitude_is_unitary_in_closed_form() {
        // closed-form modulus integrates to 1 at every time
        let p = CoherentStateParams::new(0.9, vec![0.0], vec![1.0]).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let mut mass = 0.0;
            let dz = 0.01;
            let mut z = -40.0;
            while z <= 40.0 {
                let a = evolved_coherent_amplitude(&p, t, &[z]);
                mass += a * a * dz;
                z += dz;
            }
            assert!((mass - 1.0).abs() < 1e-6, "t={t}: mass {mass}");
        }
    }

    #[test]
    fn evolved_amplitude_matches_grid_propagation() {
        // beta=1, x=0, xi=1, t=1, z=-2: closed form vs FFT propagation
        let g = grid1d(1024, 24.0);
        let p = CoherentStateParams::new(1.0, vec![0.0], vec![1.0]).unwrap();
        let u = coherent_state(&p, &g).unwrap();
        let v = free_propagate(&u, 1.0).unwrap();
        let j = (0..g.len())
            .min_by(|&a, &b| {
                let za = (g.position(a)[0] + 2.0).abs();
                let zb = (g.position(b)[0] + 2.0).abs();
                za.partial_cmp(&zb).unwrap()
            })
            .unwrap();
        let z = g.position(j)[0];
        let expect = evolved_coherent_amplitude(&p, 1.0, &[z]);
        let got = v.values[j].norm();
        assert!(
            (got - expect).abs() / expect < 1e-6,
            "grid {got:.9e} vs closed form {expect:.9e}"
        );
    }

    #[test]
    fn ensemble_mass_and_symmetry() {
        let e = CoherentEnsembleParams::new(1.0, 10.0, 10.0, 1).unwrap();
        assert!(e.in_semiclassical_regime());
        // N = A_d L^d mu^{d/2} against direct quadrature of rho at t=0
        let mut mass = 0.0;
        let dz = 0.02;
        let mut z = -90.0;
        while z <= 90.0 {
            mass += ensemble_density(&e, 0.0, &[z]) * dz;
            z += dz;
        }
        assert!((mass - e.total_mass()).abs() / e.total_mass() < 1e-8);
        // same mass at a later time: conservation holds in the closed form
        let mut mass_t = 0.0;
        z = -90.0;
        while z <= 90.0 {
            mass_t += ensemble_density(&e, 0.8, &[z]) * dz;
            z += dz;
        }
        assert!((mass_t - mass).abs() / mass < 1e-10);
        // spreading, evenness in t and z
        assert!(ensemble_density(&e, 1e8, &[0.3]) < 1e-7);
        assert_eq!(ensemble_density(&e, 0.7, &[0.3]), ensemble_density(&e, -0.7, &[0.3]));
        assert_eq!(ensemble_density(&e, 0.7, &[0.3]), ensemble_density(&e, 0.7, &[-0.3]));
        assert!(ensemble_density(&e, 0.7, &[0.3]) > ensemble_density(&e, 0.7, &[0.9]));
    }

    #[test]
    fn phase_space_constant_by_quadrature() {
        // A_d = 2^{-d}: recompute from the double Gaussian integral
        for d in 1..=2usize {
            let (l, mu) = (3.0, 7.0);
            let dd = d as f64;
            let n_quad = (std::f64::consts::PI * l * l).powf(dd / 2.0)
                * (std::f64::consts::PI * mu).powf(dd / 2.0)
                / (2.0 * std::f64::consts::PI).powf(dd);
            let n_const = phase_space_constant(d) * l.powf(dd) * mu.powf(dd / 2.0);
            assert!((n_quad - n_const).abs() / n_const < 1e-12);
        }
    }

    fn quad_space_lq(e: &CoherentEnsembleParams, t: f64, q: f64) -> f64 {
        assert_eq!(e.dim, 1);
        let dd = e.width_denominator(t);
        let sigma = (dd / (2.0 * e.beta)).sqrt();
        let dz = sigma / 200.0;
        let half = 9.0 * sigma;
        let mut acc = 0.0;
        let mut z = -half;
        while z <= half {
            acc += ensemble_density(e, t, &[z]).powf(q) * dz;
            z += dz;
        }
        acc
    }

    #[test]
    fn space_lq_matches_quadrature() {
        let e = CoherentEnsembleParams::new(0.7, 3.0, 9.0, 1).unwrap();
        for (t, q) in [(0.0, 3.0), (0.4, 2.0), (1.3, 2.5)] {
            let closed = ensemble_space_lq(&e, t, q).unwrap();
            let quad = quad_space_lq(&e, t, q);
            assert!(
                (closed - quad).abs() / quad < 1e-8,
                "t={t} q={q}: closed {closed:.10e} quad {quad:.10e}"
            );
        }
        // 2D: separable Gaussian, quadrature factorizes into the 1D case squared
        let e2 = CoherentEnsembleParams::new(0.7, 3.0, 9.0, 2).unwrap();
        let closed2 = ensemble_space_lq(&e2, 0.4, 2.0).unwrap();
        let dd = e2.width_denominator(0.4);
        let pref = (e2.beta * e2.momentum_extent * 9.0 / (4.0 * std::f64::consts::PI * dd)).sqrt();
        // int (pref^2 e^{-beta z^2/D})^2 over R^2 = pref^4 * (pi D / (2 beta))
        let expect = pref.powi(4) * std::f64::consts::PI * dd / (2.0 * e2.beta);
        assert!((closed2 - expect).abs() / expect < 1e-10);
    }

    #[test]
    fn space_lq_edges() {
        let e = CoherentEnsembleParams::new(1.0, 4.0, 12.0, 1).unwrap();
        // q -> 1 limit recovers N
        let near_one = ensemble_space_lq(&e, 0.3, 1.0 + 1e-9).unwrap();
        assert!((near_one - e.total_mass()).abs() / e.total_mass() < 1e-6);
        // monotone decreasing in |t|
        let a = ensemble_space_lq(&e, 0.0, 2.0).unwrap();
        let b = ensemble_space_lq(&e, 0.5, 2.0).unwrap();
        let c = ensemble_space_lq(&e, 1.5, 2.0).unwrap();
        assert!(a > b && b > c);
        assert!(ensemble_space_lq(&e, 0.3, 0.9).is_err());
    }

    #[test]
    fn mixed_norm_matches_nested_quadrature() {
        let e = CoherentEnsembleParams::new(0.7, 3.0, 9.0, 1).unwrap();
        let (p, q) = (3.0, 3.0);
        let closed = ensemble_mixed_norm(&e, p, q).unwrap();
        // nested quadrature of the closed-form spatial integral
        let a = 2.0 * e.beta * e.beta + e.beta * 9.0;
        let b = 2.0 + 4.0 * e.beta * e.momentum_extent;
        let t_scale = (a / b).sqrt();
        let (dt, t_half) = (t_scale / 400.0, 2200.0 * t_scale);
        let mut acc = 0.0;
        let mut t = -t_half;
        while t <= t_half {
            acc += ensemble_space_lq(&e, t, q).unwrap().powf(p / q) * dt;
            t += dt;
        }
        let quad = acc.powf(1.0 / p);
        assert!(
            (closed - quad).abs() / quad < 1e-4,
            "closed {closed:.8e} quad {quad:.8e}"
        );
        // windowed variant against the same quadrature restricted to [-T, T]
        let t_win = 3.0 * t_scale;
        let closed_w = ensemble_mixed_norm_windowed(&e, p, q, t_win).unwrap();
        let mut acc_w = 0.0;
        t = -t_win;
        while t <= t_win {
            acc_w += ensemble_space_lq(&e, t, q).unwrap().powf(p / q) * dt;
            t += dt;
        }
        let quad_w = acc_w.powf(1.0 / p);
        assert!(
            (closed_w - quad_w).abs() / quad_w < 1e-6,
            "windowed closed {closed_w:.8e} quad {quad_w:.8e}"
        );
    }

    #[test]
    fn mixed_norm_regime_asymptotic() {
        // beta = 1e-3 L^2, mu = 1e3/beta: value ~ 2^{-1/p} A_{d,p} / A_d^{(q+1)/(2q)} N^{2/3}
        let (d, q, p) = (1usize, 3.0, 3.0);
        let l2 = 400.0;
        let beta = 1e-3 * l2;
        let mu = 1e3 / beta;
        let e = CoherentEnsembleParams::new(beta, l2.sqrt(), mu, d).unwrap();
        assert!(e.in_semiclassical_regime());
        let n = e.total_mass();
        let target = 0.5f64.powf(1.0 / p) * mixed_norm_constant(d, p, q)
            / phase_space_constant(d).powf((q + 1.0) / (2.0 * q))
            * n.powf((q + 1.0) / (2.0 * q));
        let value = ensemble_mixed_norm(&e, p, q).unwrap();
        assert!(
            (value - target).abs() / target < 0.02,
            "value {value:.6e} target {target:.6e} dev {:.4}",
            (value - target).abs() / target
        );
    }

    #[test]
    fn mixed_norm_scaling_covariance() {
        // (mu L^2) -> c (mu L^2) multiplies the norm by c^{d(q+1)/(4q)} up to regime factors
        let (p, q) = (3.0, 3.0);
        let e1 = CoherentEnsembleParams::new(1.0, 20.0, 100.0, 1).unwrap();
        let c: f64 = 9.0;
        let e2 = CoherentEnsembleParams::new(1.0, 20.0 * 3.0, 100.0, 1).unwrap();
        let v1 = ensemble_mixed_norm(&e1, p, q).unwrap();
        let v2 = ensemble_mixed_norm(&e2, p, q).unwrap();
        let expect = c.powf((q + 1.0) / (4.0 * q));
        // the (1 + 2 beta/L^2) regime factor also moves, slightly
        assert!(((v2 / v1) / expect - 1.0).abs() < 2e-3, "ratio {}", v2 / v1 / expect);
    }

    #[test]
    fn mixed_norm_rejects_bad_exponents() {
        let e = CoherentEnsembleParams::new(1.0, 10.0, 10.0, 1).unwrap();
        assert!(matches!(
            ensemble_mixed_norm(&e, 3.0, 2.0),
            Err(LabError::ExponentMismatch(_))
        ));
    }

    #[test]
    fn berezin_lieb_values() {
        let e = CoherentEnsembleParams::new(1.0, 10.0, 10.0, 1).unwrap();
        let n = e.total_mass();
        assert_eq!(berezin_lieb_bound(&e, 1.0).unwrap(), n);
        assert!((berezin_lieb_bound(&e, 2.0).unwrap() - n / 2.0).abs() < 1e-14);
        let e2 = CoherentEnsembleParams::new(1.0, 10.0, 10.0, 2).unwrap();
        assert!((berezin_lieb_bound(&e2, 2.0).unwrap() - e2.total_mass() / 4.0).abs() < 1e-12);
        assert!(berezin_lieb_bound(&e, 0.5).is_err());
    }

    #[test]
    fn mixed_norm_constant_against_quadrature() {
        // A_{d,p}^p = (pi/q)^{dp/(2q)} (4 pi)^{-dp/2} * pi, random admissible (d, q)
        let mut rng = seeded_rng(5, 0);
        for _ in 0..20 {
            let d = if rng.gen::<bool>() { 1usize } else { 2 };
            let q_max = 1.0 + 2.0 / d as f64;
            let q = 1.0 + (q_max - 1.0) * (0.2 + 0.8 * rng.gen::<f64>());
            let p = 2.0 * q / (d as f64 * (q - 1.0));
            let dp = d as f64 * p;
            let pi = std::f64::consts::PI;
            let direct =
                ((pi / q).powf(dp / (2.0 * q)) * (4.0 * pi).powf(-dp / 2.0) * pi).powf(1.0 / p);
            let closed = mixed_norm_constant(d, p, q);
            assert!(
                (direct - closed).abs() / direct < 1e-12,
                "d={d} q={q}: {direct} vs {closed}"
            );
        }
    }
}
