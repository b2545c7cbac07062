//! Low-rank states `γ = Σ_j n_j |u_j⟩⟨u_j|`, their evolved densities
//! `ρ_{γ(t)} = Σ_j n_j |e^{itΔ} u_j|²`, mixed space-time norms, and the
//! inequality ratios
//!
//! ```text
//!   ‖ρ_{γ(t)}‖_{L^p_t L^q_x}  vs  (Σ_j |n_j|^{2q/(q+1)})^{(q+1)/(2q)}
//! ```
//!
//! for primal-admissible exponents `1 < q ≤ 1 + 2/d`, `2/p + d/q = d`, plus
//! the inhomogeneous variant driven by an operator source.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::phase_space::RatioReport;
use crate::quadrature::lp_lq_norm;
use crate::schatten::{BasisTag, DenseOperator};
use crate::spectral::{free_propagate, SpatialGrid, TimeWindow, WaveFunction};

pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;
const MGS_TOLERANCE: f64 = 1e-10;

/// Which side of the duality a mixed-norm exponent pair lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormSide {
    Primal,
    Dual,
}

/// Validated mixed-norm exponents `(p, q)` in dimension `d`.
#[derive(Debug, Clone, Copy)]
pub struct MixedNormSpec {
    pub p: f64,
    pub q: f64,
    pub d: usize,
    pub side: NormSide,
}

impl MixedNormSpec {
    /// Primal spec from `q`: `p = 2q/(d(q-1))`, requiring `1 < q ≤ 1 + 2/d`.
    pub fn primal(d: usize, q: f64) -> Result<Self> {
        let dd = d as f64;
        if !(q > 1.0 && q <= 1.0 + 2.0 / dd + 1e-12) {
            return Err(LabError::ExponentMismatch(format!(
                "primal q = {q} outside (1, 1 + 2/d] for d = {d}"
            )));
        }
        let p = 2.0 * q / (dd * (q - 1.0));
        Ok(Self { p, q, d, side: NormSide::Primal })
    }

    /// Dual spec from `q'`: `p' = 2q'/(2q'-d)`, requiring `1 + d/2 ≤ q' < ∞`.
    pub fn dual(d: usize, q_prime: f64) -> Result<Self> {
        let dd = d as f64;
        if !(q_prime >= 1.0 + dd / 2.0 - 1e-12 && q_prime.is_finite()) {
            return Err(LabError::ExponentMismatch(format!(
                "dual q' = {q_prime} outside [1 + d/2, infinity) for d = {d}"
            )));
        }
        let p_prime = 2.0 * q_prime / (2.0 * q_prime - dd);
        Ok(Self { p: p_prime, q: q_prime, d, side: NormSide::Dual })
    }

    /// Validate explicit exponents against the scaling relation of their side.
    pub fn checked(p: f64, q: f64, d: usize, side: NormSide) -> Result<Self> {
        let spec = match side {
            NormSide::Primal => Self::primal(d, q)?,
            NormSide::Dual => Self::dual(d, q)?,
        };
        if (spec.p - p).abs() > 1e-12 * spec.p {
            return Err(LabError::ExponentMismatch(format!(
                "p = {p} does not satisfy the scaling relation (expected {})",
                spec.p
            )));
        }
        Ok(spec)
    }

    pub fn require_primal(&self) -> Result<()> {
        if self.side != NormSide::Primal {
            return Err(LabError::ExponentMismatch("primal-side spec required".into()));
        }
        Ok(())
    }

    pub fn require_dual(&self) -> Result<()> {
        if self.side != NormSide::Dual {
            return Err(LabError::ExponentMismatch("dual-side spec required".into()));
        }
        Ok(())
    }

    /// Schatten exponent `2q/(q+1)` of the right side (primal).
    pub fn schatten_exponent(&self) -> f64 {
        2.0 * self.q / (self.q + 1.0)
    }
}

/// `γ = Σ_j n_j |u_j⟩⟨u_j|` with orthonormal vectors on a shared grid.
#[derive(Debug, Clone)]
pub struct LowRankState {
    weights: Vec<Complex64>,
    vectors: Vec<WaveFunction>,
}

impl LowRankState {
    /// Build from weights and vectors; families whose Gram matrix deviates
    /// from the identity are re-orthonormalized by modified Gram–Schmidt.
    pub fn new(weights: Vec<Complex64>, mut vectors: Vec<WaveFunction>) -> Result<Self> {
        if weights.len() != vectors.len() || vectors.is_empty() {
            return Err(LabError::ShapeMismatch { expected: vectors.len(), got: weights.len() });
        }
        let grid = vectors[0].grid.clone();
        for v in &vectors {
            if v.grid != grid {
                return Err(LabError::InvalidParameter("vectors live on different grids".into()));
            }
        }
        if !weights.iter().all(|w| w.re.is_finite() && w.im.is_finite()) {
            return Err(LabError::NumericalBreakdown("non-finite weights".into()));
        }
        if gram_defect(&vectors) > MGS_TOLERANCE {
            modified_gram_schmidt(&mut vectors)?;
        }
        let state = Self { weights, vectors };
        state.check_orthonormal()?;
        Ok(state)
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn vectors(&self) -> &[WaveFunction] {
        &self.vectors
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.vectors[0].grid
    }

    pub fn check_orthonormal(&self) -> Result<()> {
        let defect = gram_defect(&self.vectors);
        if defect > ORTHONORMALITY_TOLERANCE {
            return Err(LabError::NumericalBreakdown(format!(
                "Gram matrix deviates from identity by {defect:.3e}"
            )));
        }
        Ok(())
    }

    /// `Σ_j |n_j|^s` raised to `1/s` — the Schatten norm of γ through its
    /// known eigenvalues.
    pub fn weight_schatten_norm(&self, s: f64) -> f64 {
        let sum: f64 = self.weights.iter().map(|w| w.norm().powf(s)).sum();
        sum.powf(1.0 / s)
    }

    pub fn abs_weight_sum(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).sum()
    }

    /// Evolved density slice `ρ_{γ(t)}(x) = Σ_j n_j |e^{itΔ} u_j(x)|²`.
    pub fn density_slice(&self, t: f64) -> Result<Vec<Complex64>> {
        let evolved: Vec<WaveFunction> = self
            .vectors
            .iter()
            .map(|u| free_propagate(u, t))
            .collect::<Result<_>>()?;
        Ok(weighted_density(&self.weights, &evolved))
    }

    /// Dense position-basis kernel of γ (for eigenvalue oracles).
    pub fn dense_operator(&self) -> DenseOperator {
        let n = self.grid().len();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
        for (w, u) in self.weights.iter().zip(&self.vectors) {
            for i in 0..n {
                let left = w * u.values[i];
                for j in 0..n {
                    m[(i, j)] += left * u.values[j].conj();
                }
            }
        }
        DenseOperator::new(m, BasisTag::Position, self.grid().cell())
            .expect("kernel entries are finite")
    }
}

fn gram_defect(vectors: &[WaveFunction]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let g = a.inner(b);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

fn modified_gram_schmidt(vectors: &mut [WaveFunction]) -> Result<()> {
    for i in 0..vectors.len() {
        for j in 0..i {
            let proj = vectors[j].inner(&vectors[i]);
            let vj = vectors[j].values.clone();
            for (vi, pj) in vectors[i].values.iter_mut().zip(vj) {
                *vi -= proj * pj;
            }
        }
        let norm = vectors[i].norm();
        if norm < MGS_TOLERANCE {
            return Err(LabError::NumericalBreakdown(
                "input family is numerically linearly dependent".into(),
            ));
        }
        let s = 1.0 / norm;
        for v in &mut vectors[i].values {
            *v *= s;
        }
    }
    Ok(())
}

/// Shared density kernel: `Σ_j w_j |u_j(x)|²` for any rank-one decomposition.
pub fn weighted_density(weights: &[Complex64], states: &[WaveFunction]) -> Vec<Complex64> {
    let n = states[0].values.len();
    let mut rho = vec![Complex64::default(); n];
    for (w, u) in weights.iter().zip(states) {
        for (r, v) in rho.iter_mut().zip(&u.values) {
            *r += w * v.norm_sqr();
        }
    }
    rho
}

/// Space-time samples of a density over a time window.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub grid: SpatialGrid,
    pub window: TimeWindow,
    pub slices: Vec<Vec<Complex64>>,
}

impl DensityField {
    pub fn build(state: &LowRankState, window: &TimeWindow) -> Result<Self> {
        let slices = window
            .times()
            .iter()
            .map(|&t| state.density_slice(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: state.grid().clone(), window: *window, slices })
    }

    /// Mass `∫ ρ dx` per slice.
    pub fn masses(&self) -> Vec<Complex64> {
        let cell = self.grid.cell();
        self.slices
            .iter()
            .map(|s| s.iter().sum::<Complex64>() * cell)
            .collect()
    }
}

/// Mixed norm `‖ρ‖_{L^p_t L^q_x}` of a density field, primal side.
pub fn mixed_norm(field: &DensityField, spec: &MixedNormSpec) -> Result<f64> {
    spec.require_primal()?;
    let mags: Vec<Vec<f64>> = field
        .slices
        .iter()
        .map(|s| s.iter().map(|v| v.norm()).collect())
        .collect();
    let weights: Vec<f64> = (0..field.window.steps).map(|i| field.window.weight(i)).collect();
    lp_lq_norm(&mags, &weights, field.grid.cell(), spec.p, spec.q)
}

/// Window-truncated inequality ratio
/// `‖ρ_{γ(t)}‖_{L^p_t L^q_x([window])} / (Σ |n_j|^{2q/(q+1)})^{(q+1)/(2q)}`.
///
/// Truncation only lowers the left side, so bounded ratios here are
/// conservative evidence for the untruncated inequality.
pub fn strichartz_ratio(
    state: &LowRankState,
    spec: &MixedNormSpec,
    window: &TimeWindow,
) -> Result<RatioReport> {
    spec.require_primal()?;
    let field = DensityField::build(state, window)?;
    let lhs = mixed_norm(&field, spec)?;
    let s = spec.schatten_exponent();
    let rhs = state.weight_schatten_norm(s);
    Ok(RatioReport::new(lhs, rhs))
}

/// Triangle-inequality check `sup_t ∫ |ρ_{γ(t)}| dx ≤ Σ_j |n_j|`, which needs
/// no orthogonality at all.
pub fn triangle_bound_check(state: &LowRankState, window: &TimeWindow) -> Result<bool> {
    let rhs = state.abs_weight_sum();
    let cell = state.grid().cell();
    for t in window.times() {
        let rho = state.density_slice(t)?;
        let lhs: f64 = rho.iter().map(|v| v.norm()).sum::<f64>() * cell;
        if lhs > rhs * (1.0 + 1e-8) + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Hermite-function system: the first `n` harmonic-oscillator eigenstates,
/// orthonormal on an adequate grid, all weights 1.
pub fn hermite_system(grid: &SpatialGrid, n: usize) -> Result<LowRankState> {
    if grid.dim() != 1 {
        return Err(LabError::InvalidParameter("Hermite systems are built in d = 1".into()));
    }
    if n == 0 {
        return Err(LabError::InvalidParameter("need at least one function".into()));
    }
    let xs = grid.position_axis();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    // h_0 = pi^{-1/4} e^{-x^2/2}; h_k = x sqrt(2/k) h_{k-1} - sqrt((k-1)/k) h_{k-2}
    let h0: Vec<f64> = xs
        .iter()
        .map(|x| std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp())
        .collect();
    rows.push(h0);
    for k in 1..n {
        let prev = &rows[k - 1];
        let prev2 = if k >= 2 { Some(&rows[k - 2]) } else { None };
        let ck = (2.0 / k as f64).sqrt();
        let dk = ((k as f64 - 1.0) / k as f64).sqrt();
        let row: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(j, x)| {
                let mut v = x * ck * prev[j];
                if let Some(p2) = prev2 {
                    v -= dk * p2[j];
                }
                v
            })
            .collect();
        rows.push(row);
    }
    let vectors: Vec<WaveFunction> = rows
        .into_iter()
        .map(|r| {
            WaveFunction::new(grid.clone(), r.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
        })
        .collect::<Result<_>>()?;
    LowRankState::new(vec![Complex64::new(1.0, 0.0); n], vectors)
}

/// Discretization of the coherent ensemble by phase-space quadrature:
/// nonnegative node weights and the coherent states at the nodes. The shared
/// density kernel then produces `ρ_{γ(t)}` for the discretized pipeline.
pub struct EnsembleDiscretization {
    pub weights: Vec<f64>,
    pub states: Vec<WaveFunction>,
}

/// Node layout: ranges `±sigmas·σ`, spacing `min(σ_weight, σ_narrow)/points_per_sigma`.
pub struct EnsembleNodeSpec {
    pub sigmas: f64,
    pub points_per_sigma: f64,
}

impl Default for EnsembleNodeSpec {
    fn default() -> Self {
        Self { sigmas: 4.5, points_per_sigma: 3.0 }
    }
}

pub fn discretize_coherent_ensemble(
    e: &crate::gaussian::CoherentEnsembleParams,
    grid: &SpatialGrid,
    spec: &EnsembleNodeSpec,
) -> Result<EnsembleDiscretization> {
    if e.dim != grid.dim() {
        return Err(LabError::ShapeMismatch { expected: grid.dim(), got: e.dim });
    }
    if e.dim != 1 {
        return Err(LabError::InvalidParameter(
            "ensemble discretization is exercised in d = 1".into(),
        ));
    }
    let l = e.spatial_extent;
    let mu = e.momentum_extent;
    let beta = e.beta;
    // weight scales of e^{-x^2/L^2}, e^{-xi^2/mu}; narrow scales of |F|^2
    let sx_w = l / 2f64.sqrt();
    let sxi_w = (mu / 2.0).sqrt();
    let sx_n = (2.0 * beta).sqrt();
    let sxi_n = 1.0 / (2.0 * beta).sqrt();
    let dx = sx_w.min(sx_n) / spec.points_per_sigma;
    let dxi = sxi_w.min(sxi_n) / spec.points_per_sigma;
    let x_half = spec.sigmas * sx_w;
    let xi_half = spec.sigmas * sxi_w;
    let nx = (2.0 * x_half / dx).ceil() as usize + 1;
    let nxi = (2.0 * xi_half / dxi).ceil() as usize + 1;
    let cell = dx * dxi / (2.0 * std::f64::consts::PI);
    let mut weights = Vec::with_capacity(nx * nxi);
    let mut states = Vec::with_capacity(nx * nxi);
    for ix in 0..nx {
        let x0 = -x_half + dx * ix as f64;
        let wx = (-x0 * x0 / (l * l)).exp();
        for ixi in 0..nxi {
            let xi0 = -xi_half + dxi * ixi as f64;
            let w = wx * (-xi0 * xi0 / mu).exp() * cell;
            let p = crate::gaussian::CoherentStateParams::new(beta, vec![x0], vec![xi0])?;
            states.push(crate::gaussian::coherent_state(&p, grid)?);
            weights.push(w);
        }
    }
    Ok(EnsembleDiscretization { weights, states })
}

impl EnsembleDiscretization {
    /// `ρ(t, ·)` of the discretized ensemble by grid propagation of every node.
    pub fn density_slice(&self, t: f64) -> Result<Vec<f64>> {
        let evolved: Vec<WaveFunction> = self
            .states
            .iter()
            .map(|u| free_propagate(u, t))
            .collect::<Result<_>>()?;
        let cw: Vec<Complex64> =
            self.weights.iter().map(|w| Complex64::new(*w, 0.0)).collect();
        Ok(weighted_density(&cw, &evolved).into_iter().map(|v| v.re).collect())
    }

    /// Dense position-basis kernel of the discretized γ.
    pub fn dense_operator(&self, grid: &SpatialGrid) -> DenseOperator {
        let n = grid.len();
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
        for (w, u) in self.weights.iter().zip(&self.states) {
            for i in 0..n {
                let left = u.values[i] * *w;
                for j in 0..n {
                    m[(i, j)] += left * u.values[j].conj();
                }
            }
        }
        DenseOperator::new(m, BasisTag::Position, grid.cell()).expect("finite kernel")
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Solution of the driven equation `γ(t) = ∫_{t0}^t e^{i(t-s)Δ} R(s) e^{i(s-t)Δ} ds`
/// by trapezoid quadrature in `s`, with a step-refinement gate at 1%.
///
/// `source` returns the momentum-basis kernel of `R(s)`; it must be Hermitian
/// per sample.
pub fn inhomogeneous_solution(
    source: &dyn Fn(f64) -> Result<DenseOperator>,
    grid: &SpatialGrid,
    t0: f64,
    t: f64,
    steps: usize,
) -> Result<DenseOperator> {
    let coarse = inhomogeneous_pass(source, grid, t0, t, steps)?;
    let fine = inhomogeneous_pass(source, grid, t0, t, 2 * steps)?;
    let scale = fine.s2_norm().max(coarse.s2_norm());
    if scale > 0.0 {
        let diff = fine.add(&coarse.scale(Complex64::new(-1.0, 0.0)))?.s2_norm();
        let rel = diff / scale;
        if rel > 0.01 {
            return Err(LabError::QuadratureUnderresolved { rel_change: rel, gate: 0.01 });
        }
    }
    Ok(fine)
}

fn inhomogeneous_pass(
    source: &dyn Fn(f64) -> Result<DenseOperator>,
    grid: &SpatialGrid,
    t0: f64,
    t: f64,
    steps: usize,
) -> Result<DenseOperator> {
    if t == t0 {
        return Ok(DenseOperator::zero(grid.len(), BasisTag::Momentum, grid.momentum_cell()));
    }
    let m = steps.max(1);
    let dt = (t - t0) / m as f64;
    let n = grid.len();
    let mut acc = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for i in 0..=m {
        let s = t0 + dt * i as f64;
        let r = source(s)?;
        if r.dim() != n {
            return Err(LabError::ShapeMismatch { expected: n, got: r.dim() });
        }
        if !r.is_hermitian() {
            return Err(LabError::InvalidParameter(
                "inhomogeneous source must be Hermitian per sample".into(),
            ));
        }
        let w = if i == 0 || i == m { 0.5 * dt } else { dt };
        // e^{i(t-s)Delta} R e^{i(s-t)Delta}: phases e^{-i(t-s)p^2}, e^{+i(t-s)q^2}
        let tau = t - s;
        for row in 0..n {
            let pp = grid.momentum_sq(row);
            for col in 0..n {
                let qq = grid.momentum_sq(col);
                let phase = Complex64::from_polar(w, -tau * (pp - qq));
                acc[(row, col)] += phase * r.matrix[(row, col)];
            }
        }
    }
    DenseOperator::new(acc, BasisTag::Momentum, grid.momentum_cell())
}

/// Density `ρ(z)` of a momentum-basis kernel operator, via the diagonal of its
/// position representation: `ρ(z) = (2π)^{-d} Σ_{p,q} e^{i(p-q)z} K(p,q) δ^{2d}`.
pub fn kernel_density(op: &DenseOperator, grid: &SpatialGrid) -> Result<Vec<Complex64>> {
    if op.basis != BasisTag::Momentum || op.dim() != grid.len() {
        return Err(LabError::InvalidParameter("momentum-basis kernel on this grid required".into()));
    }
    let n = grid.len();
    let w = grid.momentum_cell();
    let d = grid.dim() as f64;
    let pref = (2.0 * std::f64::consts::PI).powf(-d) * w * w;
    let mut rho = vec![Complex64::default(); n];
    for (zi, r) in rho.iter_mut().enumerate() {
        let z = grid.position(zi);
        let mut acc = Complex64::default();
        for row in 0..n {
            let kp = grid.momentum(row);
            for col in 0..n {
                let kq = grid.momentum(col);
                let mut phase = 0.0;
                for ax in 0..grid.dim() {
                    phase += (kp[ax] - kq[ax]) * z[ax];
                }
                acc += Complex64::from_polar(1.0, phase) * op.matrix[(row, col)];
            }
        }
        *r = acc * pref;
    }
    Ok(rho)
}

/// Inhomogeneous inequality ratio:
/// `‖ρ_{γ(t)}‖_{L^p L^q} / ‖∫ e^{-isΔ} |R(s)| e^{isΔ} ds‖_{S^{2q/(q+1)}}`.
pub fn inhomogeneous_ratio(
    source: &dyn Fn(f64) -> Result<DenseOperator>,
    grid: &SpatialGrid,
    spec: &MixedNormSpec,
    t0: f64,
    window: &TimeWindow,
    steps: usize,
) -> Result<RatioReport> {
    spec.require_primal()?;
    // left side: density of gamma(t) over the window
    let mut mags: Vec<Vec<f64>> = Vec::with_capacity(window.steps);
    for t in window.times() {
        if t < t0 {
            return Err(LabError::InvalidParameter("window must start at or after t0".into()));
        }
        let gamma_t = if t == t0 {
            DenseOperator::zero(grid.len(), BasisTag::Momentum, grid.momentum_cell())
        } else {
            inhomogeneous_pass(source, grid, t0, t, steps)?
        };
        let rho = kernel_density(&gamma_t, grid)?;
        mags.push(rho.iter().map(|v| v.norm()).collect());
    }
    let weights: Vec<f64> = (0..window.steps).map(|i| window.weight(i)).collect();
    let lhs = lp_lq_norm(&mags, &weights, grid.cell(), spec.p, spec.q)?;
    // right side: |R(s)| accumulated without the evolved phases
    let n = grid.len();
    let m = steps.max(1);
    let dt = (window.t_end - t0) / m as f64;
    let mut acc = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for i in 0..=m {
        let s = t0 + dt * i as f64;
        let r = source(s)?;
        let absr = operator_abs(&r)?;
        let w = if i == 0 || i == m { 0.5 * dt } else { dt };
        let tau = s;
        for row in 0..n {
            let pp = grid.momentum_sq(row);
            for col in 0..n {
                let qq = grid.momentum_sq(col);
                // e^{-isDelta} |R| e^{isDelta}: phases e^{+is p^2}, e^{-is q^2}
                let phase = Complex64::from_polar(w, tau * (pp - qq));
                acc[(row, col)] += phase * absr.matrix[(row, col)];
            }
        }
    }
    let denom_op = DenseOperator::new(acc, BasisTag::Momentum, grid.momentum_cell())?;
    let rhs = denom_op.schatten_norm(spec.schatten_exponent().max(1.0))?;
    Ok(RatioReport::new(lhs, rhs))
}

/// Operator absolute value of a Hermitian kernel via its eigendecomposition.
fn operator_abs(op: &DenseOperator) -> Result<DenseOperator> {
    if !op.is_hermitian() {
        return Err(LabError::InvalidParameter("operator absolute value needs Hermitian input".into()));
    }
    let eig = nalgebra::SymmetricEigen::new(op.matrix.clone());
    let n = op.dim();
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k].abs();
        if lam == 0.0 {
            continue;
        }
        let col = eig.eigenvectors.column(k);
        for i in 0..n {
            let left = col[i] * Complex64::new(lam, 0.0);
            for j in 0..n {
                m[(i, j)] += left * col[j].conj();
            }
        }
    }
    DenseOperator::new(m, op.basis, op.weight)
}
