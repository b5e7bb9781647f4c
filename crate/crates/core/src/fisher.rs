//! Fisher information of normalized correlation fields and the resulting
//! Cramér-Rao bounds on source positions.
//!
//! For one correlation order the detection outcomes are the grid points,
//! with probabilities `p_j`; `F_μν = Σ_j ∂_μ p_j ∂_ν p_j / p_j`. Measuring
//! every order up to `n` with the same event count adds the matrices.
//! All bounds are per detected event (`N = 1`) unless rescaled through
//! [`crb_trace`].

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{check_order, ProbabilityField, SubsetKernel, CHUNK};
use crate::error::{invalid, Error, Result};
use crate::geometry::{DetectionGrid, SourceConfig};

/// Points with `p_j < floor * max_k p_k` are left out of the Fisher sum.
pub const DEFAULT_PROB_FLOOR: f64 = 1e-15;
/// Matrices with a larger eigenvalue ratio are reported as unresolvable.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherPolicy {
    pub prob_floor: f64,
    pub condition_cap: f64,
}

impl Default for FisherPolicy {
    fn default() -> Self {
        Self {
            prob_floor: DEFAULT_PROB_FLOOR,
            condition_cap: DEFAULT_CONDITION_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FisherMode {
    /// Information of a single correlation order.
    PerOrder,
    /// Sum over orders `1..=n`, the information available to an n-th order cumulant.
    Cumulative,
}

impl fmt::Display for FisherMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FisherMode::PerOrder => "per-order",
            FisherMode::Cumulative => "cumulative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundFlag {
    Ok,
    /// Singular or too badly conditioned to invert; the bound is `+∞`.
    Unresolvable,
}

impl fmt::Display for BoundFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundFlag::Ok => "ok",
            BoundFlag::Unresolvable => "unresolvable",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FisherResult {
    pub order: usize,
    pub mode: FisherMode,
    #[serde(serialize_with = "serialize_matrix")]
    pub matrix: DMatrix<f64>,
    /// `Tr F⁻¹` for one detected event; `+∞` when unresolvable.
    pub trace_inverse: f64,
    /// `λ_max / λ_min`, `+∞` when `λ_min <= 0`.
    pub condition: f64,
    pub eigenvalues: Vec<f64>,
    pub param_labels: Vec<String>,
    pub flag: BoundFlag,
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

impl FisherResult {
    pub fn from_matrix(
        order: usize,
        mode: FisherMode,
        matrix: DMatrix<f64>,
        param_labels: Vec<String>,
        policy: &FisherPolicy,
    ) -> Self {
        let finite = matrix.iter().all(|v| v.is_finite());
        let eigenvalues: Vec<f64> = if finite {
            let mut ev: Vec<f64> = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().copied().collect();
            ev.sort_by(|a, b| a.total_cmp(b));
            ev
        } else {
            vec![f64::NAN; matrix.nrows()]
        };
        let (min, max) = match (eigenvalues.first(), eigenvalues.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => (f64::NAN, f64::NAN),
        };
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        let resolvable = finite && condition.is_finite() && condition <= policy.condition_cap;
        let (trace_inverse, flag) = if resolvable {
            (eigenvalues.iter().map(|l| 1.0 / l).sum(), BoundFlag::Ok)
        } else {
            (f64::INFINITY, BoundFlag::Unresolvable)
        };
        Self {
            order,
            mode,
            matrix,
            trace_inverse,
            condition,
            eigenvalues,
            param_labels,
            flag,
        }
    }

    pub fn is_resolvable(&self) -> bool {
        self.flag == BoundFlag::Ok
    }
}

/// Cramér-Rao bound on the summed position variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBound {
    /// `Tr F⁻¹ / N`, `+∞` when unresolvable.
    pub value: f64,
    pub condition: f64,
    pub flag: BoundFlag,
}

/// `Δ² >= Tr(F⁻¹) / N` for `N` detected events.
pub fn crb_trace(fr: &FisherResult, events: f64) -> Result<ErrorBound> {
    if !(events.is_finite() && events >= 1.0) {
        return Err(invalid(format!("event count must be >= 1, got {events}")));
    }
    Ok(ErrorBound {
        value: fr.trace_inverse / events,
        condition: fr.condition,
        flag: fr.flag,
    })
}

fn symmetrize_upper(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for i in 0..p {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
}

pub fn fisher_matrix(pf: &ProbabilityField) -> Result<FisherResult> {
    fisher_matrix_with(pf, &FisherPolicy::default())
}

/// Per-order Fisher matrix straight from a probability field.
pub fn fisher_matrix_with(pf: &ProbabilityField, policy: &FisherPolicy) -> Result<FisherResult> {
    let p = pf.num_params();
    let max = pf.probs.iter().cloned().fold(0.0, f64::max);
    let cut = policy.prob_floor * max;
    let partials: Vec<(Vec<f64>, usize)> = (0..pf.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|idx| {
            let mut acc = vec![0.0; p * p];
            let mut used = 0;
            for &j in idx {
                let pj = pf.probs[j];
                if !(pj > 0.0 && pj >= cut) {
                    continue;
                }
                used += 1;
                let g = pf.grad(j);
                for a in 0..p {
                    let ga = g[a] / pj;
                    for b in a..p {
                        acc[a * p + b] += ga * g[b];
                    }
                }
            }
            (acc, used)
        })
        .collect();
    let mut matrix = DMatrix::zeros(p, p);
    let mut used = 0;
    for (acc, u) in partials {
        used += u;
        for a in 0..p {
            for b in a..p {
                matrix[(a, b)] += acc[a * p + b];
            }
        }
    }
    if used == 0 {
        return Err(Error::AllMasked);
    }
    symmetrize_upper(&mut matrix);
    Ok(FisherResult::from_matrix(
        pf.order,
        FisherMode::PerOrder,
        matrix,
        pf.param_labels.clone(),
        policy,
    ))
}

/// Per-order chunk accumulator for the fused path.
#[derive(Clone)]
struct OrderSums {
    /// Upper triangle of `Σ_unmasked ∂G ∂Gᵀ / G`.
    outer: Vec<f64>,
    /// `Σ_all ∂G`.
    grad_all: Vec<f64>,
    /// `Σ_unmasked ∂G`.
    grad_kept: Vec<f64>,
    /// `Σ_unmasked G`.
    kept: f64,
    count: usize,
}

impl OrderSums {
    fn new(p: usize) -> Self {
        Self {
            outer: vec![0.0; p * p],
            grad_all: vec![0.0; p],
            grad_kept: vec![0.0; p],
            kept: 0.0,
            count: 0,
        }
    }

    fn merge(&mut self, other: &OrderSums) {
        for (a, b) in self.outer.iter_mut().zip(&other.outer) {
            *a += b;
        }
        for (a, b) in self.grad_all.iter_mut().zip(&other.grad_all) {
            *a += b;
        }
        for (a, b) in self.grad_kept.iter_mut().zip(&other.grad_kept) {
            *a += b;
        }
        self.kept += other.kept;
        self.count += other.count;
    }
}

/// Per-order Fisher matrices for orders `1..=n_max`, without materializing
/// probability fields.
///
/// With `Z = Σ_j G_j`, `D = Σ_j ∂G_j` and the unmasked sums `S = Σ' ∂G ∂Gᵀ/G`,
/// `D' = Σ' ∂G`, `Z' = Σ' G`, the quotient rule gives
/// `F = S/Z - (D' Dᵀ + D D'ᵀ)/Z² + (Z'/Z) D Dᵀ/Z²`.
pub fn order_fisher_matrices(
    config: &SourceConfig,
    grid: &DetectionGrid,
    n_max: usize,
    policy: &FisherPolicy,
) -> Result<Vec<DMatrix<f64>>> {
    check_order(n_max)?;
    let kernel = SubsetKernel::new(config)?;
    let p = config.num_params();
    let points = grid.points();

    // pass 1: normalizations and maxima
    let values: Vec<Vec<f64>> = points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut eval = kernel.evaluator(n_max);
            let mut out = Vec::with_capacity(chunk.len() * n_max);
            for r in chunk {
                eval.at(config, *r);
                out.extend_from_slice(&eval.g);
            }
            out
        })
        .collect();
    let mut totals = vec![0.0; n_max];
    let mut maxima = vec![0.0f64; n_max];
    for chunk in &values {
        let mut part = vec![0.0; n_max];
        for row in chunk.chunks(n_max) {
            for n in 0..n_max {
                part[n] += row[n];
                maxima[n] = maxima[n].max(row[n]);
            }
        }
        for n in 0..n_max {
            totals[n] += part[n];
        }
    }
    for (n, z) in totals.iter().enumerate() {
        if !(z.is_finite() && *z > 0.0) {
            return Err(Error::DegenerateField { order: n + 1 });
        }
    }
    let cuts: Vec<f64> = maxima.iter().map(|m| policy.prob_floor * m).collect();

    // pass 2: gradients
    let partials: Vec<Vec<OrderSums>> = points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut eval = kernel.evaluator(n_max);
            let mut sums = vec![OrderSums::new(p); n_max];
            let mut grad = vec![0.0; p];
            for r in chunk {
                eval.at(config, *r);
                for n in 1..=n_max {
                    let g = eval.g[n - 1];
                    eval.gradient(config, *r, n, &mut grad);
                    let acc = &mut sums[n - 1];
                    for (d, v) in acc.grad_all.iter_mut().zip(&grad) {
                        *d += v;
                    }
                    if !(g > 0.0 && g >= cuts[n - 1]) {
                        continue;
                    }
                    acc.kept += g;
                    acc.count += 1;
                    for a in 0..p {
                        acc.grad_kept[a] += grad[a];
                        let ga = grad[a] / g;
                        for b in a..p {
                            acc.outer[a * p + b] += ga * grad[b];
                        }
                    }
                }
            }
            sums
        })
        .collect();
    let mut sums = vec![OrderSums::new(p); n_max];
    for part in &partials {
        for (acc, s) in sums.iter_mut().zip(part) {
            acc.merge(s);
        }
    }

    let mut out = Vec::with_capacity(n_max);
    for (s, z) in sums.iter().zip(&totals) {
        if s.count == 0 {
            return Err(Error::AllMasked);
        }
        let kept_frac = s.kept / z;
        let mut m = DMatrix::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let d = &s.grad_all;
                let dk = &s.grad_kept;
                m[(a, b)] = s.outer[a * p + b] / z - (dk[a] * d[b] + d[a] * dk[b]) / (z * z)
                    + kept_frac * d[a] * d[b] / (z * z);
            }
        }
        symmetrize_upper(&mut m);
        out.push(m);
    }
    Ok(out)
}

/// Fisher results for every order `1..=n_max` under `mode`.
pub fn fisher_results(
    config: &SourceConfig,
    grid: &DetectionGrid,
    n_max: usize,
    mode: FisherMode,
    policy: &FisherPolicy,
) -> Result<Vec<FisherResult>> {
    let per_order = order_fisher_matrices(config, grid, n_max, policy)?;
    let labels = config.param_labels();
    let mut running: Option<DMatrix<f64>> = None;
    Ok(per_order
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let matrix = match mode {
                FisherMode::PerOrder => m,
                FisherMode::Cumulative => {
                    let sum = match running.take() {
                        Some(prev) => prev + m,
                        None => m,
                    };
                    running = Some(sum.clone());
                    sum
                }
            };
            FisherResult::from_matrix(k + 1, mode, matrix, labels.clone(), policy)
        })
        .collect())
}

/// `F^{(n,Σ)} = Σ_{m=1}^{n} F^{(m)}`.
pub fn cumulative_fisher(config: &SourceConfig, grid: &DetectionGrid, n: usize) -> Result<FisherResult> {
    cumulative_fisher_with(config, grid, n, &FisherPolicy::default())
}

pub fn cumulative_fisher_with(
    config: &SourceConfig,
    grid: &DetectionGrid,
    n: usize,
    policy: &FisherPolicy,
) -> Result<FisherResult> {
    let mut all = fisher_results(config, grid, n, FisherMode::Cumulative, policy)?;
    Ok(all.pop().expect("n >= 1 orders"))
}
