//! Krylov-subspace polynomial filters: flexible preconditioned CG for
//! `Lx = 0` and a single-vector preconditioned LOBPCG, both driven for a
//! fixed iteration budget so the iteration count acts as the smoothing
//! parameter.

use crate::error::{Error, Result};
use crate::graph::{DiagonalOperator, LaplacianOperator};
use crate::signal::Signal;
use crate::spectral::{eig_sym, DenseMatrix};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Subtracts the Euclidean mean, i.e. projects onto the complement of the
/// all-ones vector.
fn project_out_ones(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

/// Denominator used in the flexible CG direction update
/// `beta = s.(r - r_old) / denom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaDenominator {
    /// `s_old . s_old` (the default here).
    SdotS,
    /// `s_old . r_old`, the conventional flexible Polak-Ribiere form.
    SdotR,
}

/// Iteration budget and numerical guards shared by both solvers.
#[derive(Debug, Clone, Copy)]
pub struct KrylovConfig {
    /// Number of iterations to run; this is the smoothing strength.
    pub k_max: usize,
    /// Deflate the all-ones vector (Euclidean projection of the iterate
    /// space).
    pub constraint_e: bool,
    /// Relative tolerance for early termination and breakdown detection.
    pub breakdown_tol: f64,
    pub beta_denominator: BetaDenominator,
}

impl KrylovConfig {
    pub fn new(k_max: usize) -> Result<Self> {
        let config = KrylovConfig {
            k_max,
            constraint_e: false,
            breakdown_tol: 1e-14,
            beta_denominator: BetaDenominator::SdotS,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_constraint(mut self, on: bool) -> Self {
        self.constraint_e = on;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be >= 1".into()));
        }
        if !(self.breakdown_tol > 0.0 && self.breakdown_tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "breakdown_tol must lie in (0,1), got {}",
                self.breakdown_tol
            )));
        }
        Ok(())
    }
}

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Ran the full iteration budget.
    IterationBudget,
    /// Residual fell below `breakdown_tol` of its initial norm.
    Converged,
    /// The curvature `p.Lp` vanished relative to `|p||Lp|`.
    Breakdown,
}

#[derive(Debug, Clone)]
pub struct PcgResult {
    pub signal: Signal,
    pub stop: StopReason,
    pub iterations: usize,
    /// Residual 2-norms: entry 0 is the initial residual, then one per
    /// completed iteration.
    pub residual_norms: Vec<f64>,
}

/// Flexible preconditioned CG for `Lx = 0`, run for exactly
/// `config.k_max` iterations unless convergence or breakdown stops it
/// early. The result is the polynomial filter `p_k(D^{-1}L) x0`.
pub fn pcg_filter(
    l: &LaplacianOperator,
    d: &DiagonalOperator,
    x0: &Signal,
    config: &KrylovConfig,
) -> Result<PcgResult> {
    pcg_filter_observed(l, d, x0, config, |_, _, _| {})
}

/// [`pcg_filter`] with a per-iteration observer `(k, iterate, |r|)`.
pub fn pcg_filter_observed(
    l: &LaplacianOperator,
    d: &DiagonalOperator,
    x0: &Signal,
    config: &KrylovConfig,
    mut observe: impl FnMut(usize, &[f64], f64),
) -> Result<PcgResult> {
    config.validate()?;
    let n = l.dim();
    if x0.len() != n || d.dim() != n {
        return Err(Error::InvalidArgument(format!(
            "operator order {n} does not match signal length {} / preconditioner {}",
            x0.len(),
            d.dim()
        )));
    }

    let mut x = x0.values().to_vec();
    // with the constraint the mean is filtered separately: removed here,
    // restored on exit
    let mean_shift = if config.constraint_e {
        let m = x.iter().sum::<f64>() / n as f64;
        for v in x.iter_mut() {
            *v -= m;
        }
        m
    } else {
        0.0
    };

    let restore = |mut v: Vec<f64>| -> Vec<f64> {
        if mean_shift != 0.0 {
            for q in v.iter_mut() {
                *q += mean_shift;
            }
        }
        v
    };

    let mut r: Vec<f64> = l.apply(&x).iter().map(|v| -v).collect();
    let r0_norm = norm2(&r);
    let mut residual_norms = vec![r0_norm];
    if r0_norm == 0.0 {
        return Ok(PcgResult {
            signal: x0.with_values(restore(x))?,
            stop: StopReason::Converged,
            iterations: 0,
            residual_norms,
        });
    }

    let mut p: Vec<f64> = Vec::new();
    let mut r_old: Vec<f64> = Vec::new();
    let mut s_old: Vec<f64> = Vec::new();
    let mut stop = StopReason::IterationBudget;
    let mut iterations = 0;

    for k in 1..=config.k_max {
        let mut s = d.solve(&r)?;
        if config.constraint_e {
            project_out_ones(&mut s);
        }
        if k == 1 {
            p = s.clone();
        } else {
            let numerator: f64 = s
                .iter()
                .zip(r.iter().zip(&r_old))
                .map(|(si, (ri, roi))| si * (ri - roi))
                .sum();
            let denominator = match config.beta_denominator {
                BetaDenominator::SdotS => dot(&s_old, &s_old),
                BetaDenominator::SdotR => dot(&s_old, &r_old),
            };
            let beta = numerator / denominator;
            for (pi, si) in p.iter_mut().zip(&s) {
                *pi = si + beta * *pi;
            }
        }

        let q = l.apply(&p);
        let ptq = dot(&p, &q);
        if ptq.abs() <= config.breakdown_tol * norm2(&p) * norm2(&q) {
            stop = StopReason::Breakdown;
            break;
        }
        let alpha = dot(&s, &r) / ptq;
        for (xi, pi) in x.iter_mut().zip(&p) {
            *xi += alpha * pi;
        }
        r_old = r.clone();
        s_old = s;
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }

        iterations = k;
        let rn = norm2(&r);
        residual_norms.push(rn);
        if mean_shift != 0.0 {
            let shifted: Vec<f64> = x.iter().map(|v| v + mean_shift).collect();
            observe(k, &shifted, rn);
        } else {
            observe(k, &x, rn);
        }
        if rn <= config.breakdown_tol * r0_norm {
            stop = StopReason::Converged;
            break;
        }
    }

    Ok(PcgResult {
        signal: x0.with_values(restore(x))?,
        stop,
        iterations,
        residual_norms,
    })
}

/// Solver state after a LOBPCG iteration: iterate (unit D-norm),
/// conjugate direction, and the minimum Ritz value.
#[derive(Debug, Clone)]
pub struct LobpcgState {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct LobpcgResult {
    /// Final iterate rescaled back to signal intensities.
    pub signal: Signal,
    /// Rayleigh quotient of the final iterate.
    pub lambda: f64,
    pub iterations: usize,
    /// Rayleigh quotient at the start of each iteration, then the final
    /// value (length `iterations + 1`).
    pub ritz_values: Vec<f64>,
}

/// Ritz values/vectors of the pencil `(L, D)` on a trial subspace after
/// `rayleigh_ritz`.
#[derive(Debug, Clone)]
pub struct RitzPairs {
    /// Ascending Ritz values, one per kept direction.
    pub values: Vec<f64>,
    /// Ritz vectors in original coordinates, paired with `values`.
    pub vectors: Vec<Vec<f64>>,
    /// Expansion of each Ritz vector over the *input* basis slots
    /// (dropped directions contribute zero).
    pub coefficients: Vec<Vec<f64>>,
}

const DEPENDENT_DROP_TOL: f64 = 1e-8;

/// Rayleigh-Ritz for the pencil `L - lambda D` on a small trial basis.
///
/// The basis is D-orthonormalized by modified Gram-Schmidt (two passes);
/// directions whose norm collapses below 1e-8 of their original norm are
/// dropped, so duplicated or zero vectors are handled without error. The
/// projected symmetric eigenproblem is solved densely.
pub fn rayleigh_ritz(
    l: &LaplacianOperator,
    d: &DiagonalOperator,
    basis: &[&[f64]],
) -> Result<RitzPairs> {
    if basis.is_empty() {
        return Err(Error::InvalidArgument("empty trial basis".into()));
    }
    let n = l.dim();
    for v in basis {
        if v.len() != n {
            return Err(Error::InvalidArgument(format!(
                "basis vector length {} does not match operator order {n}",
                v.len()
            )));
        }
    }

    let m0 = basis.len();
    let d_norm = |v: &[f64]| dot(v, &d.apply(v)).max(0.0).sqrt();

    // kept directions: (vector, expansion over input slots)
    let mut kept: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(m0);
    for (slot, v) in basis.iter().enumerate() {
        let mut vec = v.to_vec();
        let mut coef = vec![0.0; m0];
        coef[slot] = 1.0;
        let original_norm = d_norm(&vec);

        for _pass in 0..2 {
            for (u, ucoef) in &kept {
                let proj = dot(u, &d.apply(&vec));
                for (vi, ui) in vec.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
                for (ci, uci) in coef.iter_mut().zip(ucoef) {
                    *ci -= proj * uci;
                }
            }
        }

        let after = d_norm(&vec);
        if after <= DEPENDENT_DROP_TOL * original_norm {
            continue;
        }
        for vi in vec.iter_mut() {
            *vi /= after;
        }
        for ci in coef.iter_mut() {
            *ci /= after;
        }
        kept.push((vec, coef));
    }

    if kept.is_empty() {
        return Err(Error::DegenerateBasis);
    }

    let m = kept.len();
    let mut projected = DenseMatrix::zeros(m);
    let lu: Vec<Vec<f64>> = kept.iter().map(|(u, _)| l.apply(u)).collect();
    for a in 0..m {
        for b in a..m {
            let entry = 0.5 * (dot(&kept[a].0, &lu[b]) + dot(&kept[b].0, &lu[a]));
            projected.set(a, b, entry);
            projected.set(b, a, entry);
        }
    }

    let decomp = eig_sym(&projected)?;
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    let mut coefficients = Vec::with_capacity(m);
    for j in 0..m {
        values.push(decomp.eigenvalues()[j]);
        let c = decomp.eigenvector(j);
        let mut vec = vec![0.0; n];
        let mut coef = vec![0.0; m0];
        for (a, &ca) in c.iter().enumerate() {
            for (vi, ui) in vec.iter_mut().zip(&kept[a].0) {
                *vi += ca * ui;
            }
            for (ci, uci) in coef.iter_mut().zip(&kept[a].1) {
                *ci += ca * uci;
            }
        }
        vectors.push(vec);
        coefficients.push(coef);
    }

    Ok(RitzPairs {
        values,
        vectors,
        coefficients,
    })
}

/// Single-vector preconditioned LOBPCG driven as a low-pass filter.
///
/// Each iteration applies Rayleigh-Ritz to the pencil `(L, D)` on
/// `span{w, x, p}` with `w = T(Lx - lambda Dx)`, takes the minimum Ritz
/// vector as the next iterate and keeps its non-`x` part as the next
/// conjugate direction. With `constraint_e` every basis vector is projected
/// onto the complement of the all-ones vector, steering the iteration to
/// the smallest nonzero eigenmode.
pub fn lobpcg_filter(
    l: &LaplacianOperator,
    d: &DiagonalOperator,
    t: &DiagonalOperator,
    x0: &Signal,
    config: &KrylovConfig,
) -> Result<LobpcgResult> {
    lobpcg_filter_observed(l, d, t, x0, config, |_, _| {})
}

/// [`lobpcg_filter`] with a per-iteration observer `(k, state)`.
pub fn lobpcg_filter_observed(
    l: &LaplacianOperator,
    d: &DiagonalOperator,
    t: &DiagonalOperator,
    x0: &Signal,
    config: &KrylovConfig,
    mut observe: impl FnMut(usize, &LobpcgState),
) -> Result<LobpcgResult> {
    config.validate()?;
    let n = l.dim();
    if x0.len() != n || d.dim() != n || t.dim() != n {
        return Err(Error::InvalidArgument(
            "operator, preconditioner and signal orders must match".into(),
        ));
    }
    if x0.values().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("x0 must be nonzero".into()));
    }

    let mut x = x0.values().to_vec();
    if config.constraint_e {
        let before = norm2(&x);
        project_out_ones(&mut x);
        if norm2(&x) <= 1e-14 * before {
            return Err(Error::InvalidArgument(
                "x0 is constant: nothing remains after the all-ones deflation".into(),
            ));
        }
    }

    let d_norm = |v: &[f64]| dot(v, &d.apply(v)).max(0.0).sqrt();
    let nd = d_norm(&x);
    if nd == 0.0 {
        return Err(Error::InvalidArgument("x0 has zero D-norm".into()));
    }
    for v in x.iter_mut() {
        *v /= nd;
    }

    let mut p = vec![0.0; n];
    let mut ritz_values = Vec::with_capacity(config.k_max + 1);
    let rayleigh = |v: &[f64]| dot(v, &l.apply(v)) / dot(v, &d.apply(v));

    for k in 0..config.k_max {
        let lambda = rayleigh(&x);
        ritz_values.push(lambda);

        let lx = l.apply(&x);
        let dx = d.apply(&x);
        let residual: Vec<f64> = lx
            .iter()
            .zip(&dx)
            .map(|(a, b)| a - lambda * b)
            .collect();
        let mut w = t.apply(&residual);
        if config.constraint_e {
            project_out_ones(&mut w);
        }

        let ritz = rayleigh_ritz(l, d, &[&w, &x, &p])?;
        let mut coef = ritz.coefficients[0].clone();
        let mut next_x = ritz.vectors[0].clone();

        // express the Ritz vector as w + tau*x + gamma*p when the w
        // coefficient is meaningful, so p can carry the non-x part
        let cw = coef[0];
        if cw.abs() > 1e-12 {
            for c in coef.iter_mut() {
                *c /= cw;
            }
            for v in next_x.iter_mut() {
                *v /= cw;
            }
        }
        let mut next_p = vec![0.0; n];
        for ((pi, wi), poi) in next_p.iter_mut().zip(&w).zip(&p) {
            *pi = coef[0] * wi + coef[2] * poi;
        }

        let scale = d_norm(&next_x);
        if scale == 0.0 {
            // Ritz vector collapsed; keep the current iterate
            observe(
                k + 1,
                &LobpcgState {
                    x: x.clone(),
                    p: p.clone(),
                    lambda: ritz.values[0],
                },
            );
            continue;
        }
        for v in next_x.iter_mut() {
            *v /= scale;
        }
        for v in next_p.iter_mut() {
            *v /= scale;
        }
        x = next_x;
        p = next_p;

        observe(
            k + 1,
            &LobpcgState {
                x: x.clone(),
                p: p.clone(),
                lambda: ritz.values[0],
            },
        );
    }

    let lambda = rayleigh(&x);
    ritz_values.push(lambda);

    // map the eigen-scaled iterate back to signal intensities
    let signal_values = if config.constraint_e {
        // mean component was deflated: restore it and fit the remainder to
        // the deflated input in the D inner product
        let mean = x0.values().iter().sum::<f64>() / n as f64;
        let deflated: Vec<f64> = x0.values().iter().map(|v| v - mean).collect();
        let rho = dot(&x, &d.apply(&deflated));
        x.iter().map(|v| mean + rho * v).collect::<Vec<f64>>()
    } else {
        // restore the D-weighted mean of the input
        let target: f64 = d.apply(x0.values()).iter().sum();
        let current: f64 = d.apply(&x).iter().sum();
        if current == 0.0 {
            x.clone()
        } else {
            let rho = target / current;
            x.iter().map(|v| rho * v).collect::<Vec<f64>>()
        }
    };

    Ok(LobpcgResult {
        signal: x0.with_values(signal_values)?,
        lambda,
        iterations: config.k_max,
        ritz_values,
    })
}
