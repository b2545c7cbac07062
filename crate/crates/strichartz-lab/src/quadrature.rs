//! Quadrature machinery: mixed space-time norms, ordered-simplex integrals,
//! and singular multilinear integrals with exponent admissibility checking.

use crate::error::{LabError, Result};

/// Relative-change gate used by every refinement-doubling check here.
pub const REFINEMENT_GATE: f64 = 0.01;

/// Exponent data `(β_ij, r_k)` for the multilinear singular integral
/// `∫ Π f_k(t_k) / Π_{i<j} |t_i - t_j|^{β_ij}`.
#[derive(Debug, Clone)]
pub struct HlsExponents {
    /// Symmetric matrix of pair exponents, zero diagonal, row-major `n × n`.
    pub beta: Vec<f64>,
    /// Integrability exponents `r_k > 1`.
    pub r: Vec<f64>,
}

/// One violated admissibility condition, with the offending index where that
/// makes sense.
#[derive(Debug, Clone, PartialEq)]
pub enum HlsViolation {
    DiagonalNotZero { i: usize },
    NotSymmetric { i: usize, j: usize },
    PairExponentOutOfRange { i: usize, j: usize },
    IntegrabilityExponentNotAboveOne { k: usize },
    ReciprocalSumNotAboveOne { sum: f64 },
    ColumnSumMismatch { k: usize, got: f64, expected: f64 },
}

const HLS_TOL: f64 = 1e-12;

impl HlsExponents {
    pub fn new(beta: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        let n = r.len();
        if n < 2 {
            return Err(LabError::InvalidParameter("need at least 2 factors".into()));
        }
        if beta.len() != n * n {
            return Err(LabError::ShapeMismatch { expected: n * n, got: beta.len() });
        }
        Ok(Self { beta, r })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn beta_at(&self, i: usize, j: usize) -> f64 {
        self.beta[i * self.len() + j]
    }

    /// The chain choice `r_1 = r_{d+2} = 2(d+1)/(d+2)`, `r_2 = … = r_{d+1} = d+1`,
    /// consecutive pair exponents `d/(d+1)` along the chain.
    pub fn chain(d: usize) -> Self {
        let n = d + 2;
        let dd = d as f64;
        let mut r = vec![dd + 1.0; n];
        r[0] = 2.0 * (dd + 1.0) / (dd + 2.0);
        r[n - 1] = r[0];
        let mut beta = vec![0.0; n * n];
        for i in 0..n - 1 {
            beta[i * n + i + 1] = dd / (dd + 1.0);
            beta[(i + 1) * n + i] = dd / (dd + 1.0);
        }
        Self { beta, r }
    }

    /// The symmetric choice `r_k = 1 + d/2` for all `d+2` factors, cyclic pair
    /// exponents `d/(d+2)`.
    pub fn symmetric(d: usize) -> Self {
        let n = d + 2;
        let dd = d as f64;
        let r = vec![1.0 + dd / 2.0; n];
        let mut beta = vec![0.0; n * n];
        for i in 0..n {
            let j = (i + 1) % n;
            beta[i * n + j] += dd / (dd + 2.0);
            beta[j * n + i] += dd / (dd + 2.0);
        }
        Self { beta, r }
    }

    /// The end-point configuration with `d+1` factors and `r_k = d+1`; its
    /// reciprocal sum is exactly 1, so it must be rejected.
    pub fn endpoint(d: usize) -> Self {
        let n = d + 1;
        let dd = d as f64;
        let r = vec![dd + 1.0; n];
        let mut beta = vec![0.0; n * n];
        // cyclic neighbours share the load 2(r-1)/r = 2d/(d+1)
        for i in 0..n {
            let j = (i + 1) % n;
            beta[i * n + j] += dd / (dd + 1.0);
            beta[j * n + i] += dd / (dd + 1.0);
        }
        Self { beta, r }
    }
}

/// Check all five admissibility conditions; returns the violations found.
pub fn hls_admissible(e: &HlsExponents) -> (bool, Vec<HlsViolation>) {
    let n = e.len();
    let mut bad = Vec::new();
    for i in 0..n {
        if e.beta_at(i, i).abs() > HLS_TOL {
            bad.push(HlsViolation::DiagonalNotZero { i });
        }
        for j in i + 1..n {
            if (e.beta_at(i, j) - e.beta_at(j, i)).abs() > HLS_TOL {
                bad.push(HlsViolation::NotSymmetric { i, j });
            }
            let b = e.beta_at(i, j);
            if !(-HLS_TOL..1.0 - HLS_TOL).contains(&b) {
                bad.push(HlsViolation::PairExponentOutOfRange { i, j });
            }
        }
    }
    for (k, &rk) in e.r.iter().enumerate() {
        if rk <= 1.0 + HLS_TOL {
            bad.push(HlsViolation::IntegrabilityExponentNotAboveOne { k });
        }
    }
    let recip: f64 = e.r.iter().map(|rk| 1.0 / rk).sum();
    if recip <= 1.0 + HLS_TOL {
        bad.push(HlsViolation::ReciprocalSumNotAboveOne { sum: recip });
    }
    for k in 0..n {
        let col: f64 = (0..n).map(|i| e.beta_at(i, k)).sum();
        let expected = 2.0 * (e.r[k] - 1.0) / e.r[k];
        if (col - expected).abs() > HLS_TOL {
            bad.push(HlsViolation::ColumnSumMismatch { k, got: col, expected });
        }
    }
    (bad.is_empty(), bad)
}

/// `∫_{t0 ≤ t_1 ≤ … ≤ t_n ≤ t} f(t_1, …, t_n)` by nested trapezoid rule on a
/// shared lattice, with a step-halving gate at 1%.
pub fn ordered_simplex_integrate(
    f: &dyn Fn(&[f64]) -> f64,
    n: usize,
    t0: f64,
    t: f64,
    steps: usize,
) -> Result<f64> {
    if n == 0 || n > 6 {
        return Err(LabError::InvalidParameter(format!("simplex order {n} not in 1..=6")));
    }
    if !(t > t0) || steps < 2 {
        return Err(LabError::InvalidParameter("need t > t0 and at least 2 steps".into()));
    }
    let coarse = simplex_pass(f, n, t0, t, steps);
    let fine = simplex_pass(f, n, t0, t, 2 * steps);
    let scale = fine.abs().max(coarse.abs());
    if scale > 0.0 {
        let rel = (fine - coarse).abs() / scale;
        if rel > REFINEMENT_GATE {
            return Err(LabError::QuadratureUnderresolved { rel_change: rel, gate: REFINEMENT_GATE });
        }
    }
    Ok(fine)
}

fn simplex_pass(f: &dyn Fn(&[f64]) -> f64, n: usize, t0: f64, t: f64, steps: usize) -> f64 {
    let m = steps;
    let dt = (t - t0) / m as f64;
    let ts: Vec<f64> = (0..=m).map(|i| t0 + dt * i as f64).collect();
    // trapezoid weights along each nested axis; the upper limit of axis j is
    // the current node of axis j+1
    let mut point = vec![0.0; n];
    let mut idx = vec![0usize; n];
    fn recurse(
        f: &dyn Fn(&[f64]) -> f64,
        ts: &[f64],
        dt: f64,
        level: usize,
        upper: usize,
        idx: &mut [usize],
        point: &mut [f64],
    ) -> f64 {
        let mut acc = 0.0;
        for i in 0..=upper {
            let w = if i == 0 || i == upper { 0.5 } else { 1.0 };
            if upper == 0 {
                continue;
            }
            idx[level] = i;
            point[level] = ts[i];
            let inner = if level == 0 {
                f(point)
            } else {
                recurse(f, ts, dt, level - 1, i, idx, point)
            };
            acc += w * inner;
        }
        acc * dt
    }
    recurse(f, &ts, dt, n - 1, m, &mut idx, &mut point)
}

/// Regularized multilinear singular integral
///
/// ```text
///   ∫ … ∫  Π f_k(t_k) / Π_{i<j} |t_i - t_j|^{β_ij}  dt,   |t_i - t_j| ≥ ε
/// ```
///
/// over `[-half_window, half_window]^N`, normalized by `Π ‖f_k‖_{r_k}`.
/// Rejects inadmissible exponents.
pub fn multilinear_hls_estimate(
    profiles: &[crate::phase_space::Profile],
    e: &HlsExponents,
    eps_cut: f64,
    half_window: f64,
    nodes: usize,
) -> Result<f64> {
    let n = e.len();
    if profiles.len() != n {
        return Err(LabError::ShapeMismatch { expected: n, got: profiles.len() });
    }
    if n > 4 {
        return Err(LabError::InvalidParameter("multilinear estimate capped at N = 4".into()));
    }
    let (ok, bad) = hls_admissible(e);
    if !ok {
        return Err(LabError::InadmissibleExponents(bad));
    }
    if !(eps_cut > 0.0) {
        return Err(LabError::InvalidParameter("epsilon cut must be positive".into()));
    }
    let m = nodes;
    let dt = 2.0 * half_window / (m - 1) as f64;
    let ts: Vec<f64> = (0..m).map(|i| -half_window + dt * i as f64).collect();
    // precompute factor samples
    let fs: Vec<Vec<f64>> = profiles
        .iter()
        .map(|p| ts.iter().map(|&t| p.eval(&[t])).collect())
        .collect();
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    'outer: loop {
        let mut num = 1.0;
        for k in 0..n {
            num *= fs[k][idx[k]];
        }
        if num != 0.0 {
            let mut den = 1.0;
            let mut skip = false;
            'pairs: for i in 0..n {
                for j in i + 1..n {
                    let b = e.beta_at(i, j);
                    if b == 0.0 {
                        continue;
                    }
                    let gap = (ts[idx[i]] - ts[idx[j]]).abs();
                    if gap < eps_cut {
                        skip = true;
                        break 'pairs;
                    }
                    den *= gap.powf(b);
                }
            }
            if !skip {
                total += num / den;
            }
        }
        // odometer over the N-fold grid
        let mut level = 0;
        loop {
            idx[level] += 1;
            if idx[level] < m {
                break;
            }
            idx[level] = 0;
            level += 1;
            if level == n {
                break 'outer;
            }
        }
    }
    total *= dt.powi(n as i32);
    let mut norm = 1.0;
    for (k, p) in profiles.iter().enumerate() {
        norm *= p.norm_lr(e.r[k], 1);
    }
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(total / norm)
}

/// Mixed norm `( Σ_t w_t ( Σ_x |ρ|^q cell )^{p/q} )^{1/p}` of time-sliced
/// magnitudes. This is the single shared kernel behind every `L^p_t L^q_x`
/// evaluation in the crate.
pub fn lp_lq_norm(
    slice_magnitudes: &[Vec<f64>],
    time_weights: &[f64],
    cell: f64,
    p: f64,
    q: f64,
) -> Result<f64> {
    if slice_magnitudes.len() != time_weights.len() {
        return Err(LabError::ShapeMismatch {
            expected: time_weights.len(),
            got: slice_magnitudes.len(),
        });
    }
    if !(p >= 1.0 && q >= 1.0) {
        return Err(LabError::ExponentMismatch(format!("p = {p}, q = {q} must be >= 1")));
    }
    let mut acc = 0.0;
    for (slice, &w) in slice_magnitudes.iter().zip(time_weights) {
        let space: f64 = slice.iter().map(|v| v.abs().powf(q)).sum::<f64>() * cell;
        acc += w * space.powf(p / q);
    }
    Ok(acc.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::Profile;

    #[test]
    fn paper_chain_choice_is_admissible() {
        for d in 1..=2 {
            let e = HlsExponents::chain(d);
            let (ok, bad) = hls_admissible(&e);
            assert!(ok, "d={d}: {bad:?}");
        }
    }

    #[test]
    fn symmetric_choice_is_admissible() {
        for d in 1..=2 {
            let e = HlsExponents::symmetric(d);
            let (ok, bad) = hls_admissible(&e);
            assert!(ok, "d={d}: {bad:?}");
        }
    }

    #[test]
    fn endpoint_rejected_with_reciprocal_sum() {
        for d in 1..=2 {
            let e = HlsExponents::endpoint(d);
            let (ok, bad) = hls_admissible(&e);
            assert!(!ok);
            assert!(
                bad.iter()
                    .any(|v| matches!(v, HlsViolation::ReciprocalSumNotAboveOne { sum } if (sum - 1.0).abs() < 1e-12)),
                "d={d}: {bad:?}"
            );
        }
    }

    #[test]
    fn zero_beta_low_sum_rejected() {
        let e = HlsExponents::new(vec![0.0; 4], vec![3.0, 3.0]).unwrap();
        let (ok, bad) = hls_admissible(&e);
        assert!(!ok);
        assert!(bad
            .iter()
            .any(|v| matches!(v, HlsViolation::ReciprocalSumNotAboveOne { .. })));
        // column sums are also off (0 != 2(r-1)/r)
        assert!(bad.iter().any(|v| matches!(v, HlsViolation::ColumnSumMismatch { .. })));
    }

    #[test]
    fn simplex_volume() {
        for n in 1..=3usize {
            let vol = ordered_simplex_integrate(&|_| 1.0, n, 0.0, 2.0, 64).unwrap();
            let mut fact = 1.0;
            for k in 1..=n {
                fact *= k as f64;
            }
            let expect = 2.0f64.powi(n as i32) / fact;
            assert!((vol - expect).abs() / expect < 1e-3, "n={n}: {vol} vs {expect}");
        }
    }

    #[test]
    fn simplex_symmetric_factorization() {
        // symmetric separable integrand: ordered integral = (∫ g)^n / n!
        let g = |t: f64| (-t * t).exp();
        let n = 3;
        let val =
            ordered_simplex_integrate(&|ts: &[f64]| ts.iter().map(|&t| g(t)).product(), n, -3.0, 3.0, 48)
                .unwrap();
        let single: f64 = {
            let m = 3000;
            let dt = 6.0 / m as f64;
            (0..=m)
                .map(|i| {
                    let t = -3.0 + dt * i as f64;
                    let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                    w * g(t) * dt
                })
                .sum()
        };
        let expect = single.powi(3) / 6.0;
        assert!((val - expect).abs() / expect < 5e-3, "{val} vs {expect}");
    }

    #[test]
    fn simplex_polynomial_vs_antiderivative() {
        // f = t1 t2 t3 over 0 <= t1 <= t2 <= t3 <= 1: exact value 1/48
        let val = ordered_simplex_integrate(
            &|ts: &[f64]| ts.iter().product::<f64>(),
            3,
            0.0,
            1.0,
            64,
        )
        .unwrap();
        assert!((val - 1.0 / 48.0).abs() < 2e-4, "{val}");
    }

    #[test]
    fn simplex_gate_fires_on_rough_integrand() {
        // highly oscillatory integrand at a coarse step trips the 1% gate
        let r = ordered_simplex_integrate(&|ts: &[f64]| (40.0 * ts[0]).sin(), 2, 0.0, 3.0, 4);
        assert!(matches!(r, Err(LabError::QuadratureUnderresolved { .. })));
    }

    #[test]
    fn hls_estimate_basics() {
        let e = HlsExponents::symmetric(1);
        let gauss = Profile::gaussian(1.0, 0.0, 1.0);
        let zero = Profile::gaussian(0.0, 0.0, 1.0);
        let profiles = vec![gauss.clone(), gauss.clone(), gauss.clone()];
        let val = multilinear_hls_estimate(&profiles, &e, 0.02, 6.0, 96).unwrap();
        assert!(val.is_finite() && val > 0.0);
        // one zero factor kills the integral
        let with_zero = vec![gauss.clone(), zero, gauss.clone()];
        assert_eq!(multilinear_hls_estimate(&with_zero, &e, 0.02, 6.0, 96).unwrap(), 0.0);
        // multilinearity in each factor
        let scaled = vec![Profile::gaussian(2.0, 0.0, 1.0), gauss.clone(), gauss.clone()];
        let val2 = multilinear_hls_estimate(&scaled, &e, 0.02, 6.0, 96).unwrap();
        // normalized by the product of norms, scaling each f_k cancels
        assert!((val2 - val).abs() / val < 1e-12);
        // inadmissible exponents are rejected
        let bad = HlsExponents::endpoint(1);
        let two = vec![gauss.clone(), gauss.clone()];
        assert!(matches!(
            multilinear_hls_estimate(&two, &bad, 0.02, 6.0, 64),
            Err(LabError::InadmissibleExponents(_))
        ));
    }

    #[test]
    fn hls_estimate_stabilizes_in_epsilon() {
        let e = HlsExponents::chain(1);
        let gauss = Profile::gaussian(1.0, 0.0, 1.0);
        let profiles = vec![gauss.clone(), gauss.clone(), gauss.clone()];
        let nodes = 192;
        let v1 = multilinear_hls_estimate(&profiles, &e, 0.08, 6.0, nodes).unwrap();
        let v2 = multilinear_hls_estimate(&profiles, &e, 0.04, 6.0, nodes).unwrap();
        let v3 = multilinear_hls_estimate(&profiles, &e, 0.02, 6.0, nodes).unwrap();
        // monotone nondecreasing as the cut shrinks, and stabilizing
        assert!(v2 >= v1 && v3 >= v2);
        assert!((v3 - v2).abs() / v3 < 0.02, "{v2} -> {v3}");
    }

    #[test]
    fn lp_lq_basics() {
        // constant field over one unit time-space cell
        let slices = vec![vec![3.0; 4]; 5];
        let weights = vec![0.25; 5]; // total time measure 1.25... use uniform trapezoid-like weights
        let cell = 0.25;
        let val = lp_lq_norm(&slices, &weights, cell, 2.0, 2.0).unwrap();
        // L^2_{t,x} of constant 3 over measure (1.25 * 1.0)
        let expect = 3.0 * (1.25f64 * 1.0).powf(0.5);
        assert!((val - expect).abs() < 1e-12);
        // p = q reduces to the plain L^p norm on the product domain
        let v1 = lp_lq_norm(&slices, &weights, cell, 3.0, 3.0).unwrap();
        let mass: f64 = slices
            .iter()
            .zip(&weights)
            .map(|(s, w)| w * s.iter().map(|x| x.powi(3)).sum::<f64>() * cell)
            .sum();
        assert!((v1 - mass.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(lp_lq_norm(&slices, &weights, cell, 0.5, 2.0).is_err());
    }

    #[test]
    fn lp_lq_gaussian_vs_analytic() {
        // constant in t, Gaussian in x: L^q_x norm has a closed form
        let m = 4001;
        let dx = 0.01;
        let xs: Vec<f64> = (0..m).map(|i| -20.0 + dx * i as f64).collect();
        let slice: Vec<f64> = xs.iter().map(|x| (-x * x / 2.0).exp()).collect();
        let slices = vec![slice; 3];
        let weights = vec![0.5, 1.0, 0.5]; // trapezoid over [0, 2]
        let (p, q) = (4.0, 3.0);
        let val = lp_lq_norm(&slices, &weights, dx, p, q).unwrap();
        let lq = (2.0 * std::f64::consts::PI / q).sqrt().powf(1.0 / q);
        let expect = lq * 2.0f64.powf(1.0 / p);
        assert!((val - expect).abs() / expect < 1e-6, "{val} vs {expect}");
    }
}
