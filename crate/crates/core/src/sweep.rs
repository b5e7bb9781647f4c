//! Sweeps over source scale and correlation order: error tables, optimal
//! orders and minimal resolvable separations.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fisher::{fisher_results, BoundFlag, FisherMode, FisherPolicy, FisherResult};
use crate::geometry::{build_grid, DetectionGrid, GridSpec, PsfModel, ShapeTemplate, SourceConfig, SourceParam};

pub const DEFAULT_ALPHA: f64 = 0.3;
pub const DEFAULT_XI: f64 = 0.4;

/// A shape with its source parameters; instantiated at any scale `d/w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub shape: ShapeTemplate,
    pub alphas: SourceParam,
    pub xis: SourceParam,
    pub psf: PsfModel,
    /// Step and margin in absolute length units.
    pub grid: GridSpec,
    pub policy: FisherPolicy,
}

impl Scenario {
    pub fn new(shape: ShapeTemplate) -> Self {
        Self {
            shape,
            alphas: DEFAULT_ALPHA.into(),
            xis: DEFAULT_XI.into(),
            psf: PsfModel::default(),
            grid: GridSpec::default(),
            policy: FisherPolicy::default(),
        }
    }

    pub fn with_alphas(mut self, alphas: impl Into<SourceParam>) -> Self {
        self.alphas = alphas.into();
        self
    }

    pub fn with_xis(mut self, xis: impl Into<SourceParam>) -> Self {
        self.xis = xis.into();
        self
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    pub fn config(&self, d_over_w: f64) -> Result<SourceConfig> {
        self.shape
            .instantiate(d_over_w * self.psf.width(), &self.alphas, &self.xis, self.psf)
    }

    /// Config and a grid that tracks it.
    pub fn setup(&self, d_over_w: f64) -> Result<(SourceConfig, DetectionGrid)> {
        let config = self.config(d_over_w)?;
        let grid = build_grid(&config, &self.grid)?;
        Ok((config, grid))
    }

    /// Fisher results for orders `1..=n_max` at one scale.
    pub fn results(&self, d_over_w: f64, n_max: usize, mode: FisherMode) -> Result<Vec<FisherResult>> {
        let (config, grid) = self.setup(d_over_w)?;
        fisher_results(&config, &grid, n_max, mode, &self.policy)
    }

    /// `Tr F⁻¹` for orders `1..=n_max`; `+∞` where unresolvable.
    pub fn bounds(&self, d_over_w: f64, n_max: usize, mode: FisherMode) -> Result<Vec<f64>> {
        Ok(self
            .results(d_over_w, n_max, mode)?
            .iter()
            .map(|r| r.trace_inverse)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBoundRow {
    pub shape: String,
    pub dims: usize,
    pub mode: FisherMode,
    pub n: usize,
    pub d_over_w: f64,
    pub tr_inv_fisher: f64,
    pub flag: BoundFlag,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ErrorBoundTable {
    pub rows: Vec<ErrorBoundRow>,
}

impl ErrorBoundTable {
    pub fn get(&self, d_over_w: f64, n: usize) -> Option<&ErrorBoundRow> {
        self.rows.iter().find(|r| r.n == n && r.d_over_w == d_over_w)
    }

    /// Rows at one scale, in order of `n`.
    pub fn at_scale(&self, d_over_w: f64) -> Vec<&ErrorBoundRow> {
        let mut rows: Vec<_> = self.rows.iter().filter(|r| r.d_over_w == d_over_w).collect();
        rows.sort_by_key(|r| r.n);
        rows
    }
}

fn check_orders(n_list: &[usize]) -> Result<usize> {
    if n_list.is_empty() {
        return Err(invalid("order list is empty"));
    }
    if n_list.contains(&0) {
        return Err(invalid("orders must be >= 1"));
    }
    Ok(*n_list.iter().max().expect("non-empty"))
}

fn check_scales(d_list: &[f64]) -> Result<()> {
    if d_list.is_empty() {
        return Err(invalid("scale list is empty"));
    }
    match d_list.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        Some(d) => Err(invalid(format!("d/w must be positive, got {d}"))),
        None => Ok(()),
    }
}

/// One row per `(d, n)`; the grid is rebuilt for every scale.
pub fn error_vs_scale(
    scenario: &Scenario,
    d_list: &[f64],
    n_list: &[usize],
    mode: FisherMode,
) -> Result<ErrorBoundTable> {
    check_scales(d_list)?;
    let n_max = check_orders(n_list)?;
    let per_scale: Vec<Result<Vec<FisherResult>>> = d_list
        .par_iter()
        .map(|&d| scenario.results(d, n_max, mode))
        .collect();
    let shape = scenario.shape.to_string();
    let dims = scenario.shape.dims().count();
    let mut rows = Vec::with_capacity(d_list.len() * n_list.len());
    for (&d, results) in d_list.iter().zip(per_scale) {
        let results = results?;
        for &n in n_list {
            let r = &results[n - 1];
            rows.push(ErrorBoundRow {
                shape: shape.clone(),
                dims,
                mode,
                n,
                d_over_w: d,
                tr_inv_fisher: r.trace_inverse,
                flag: r.flag,
            });
        }
    }
    Ok(ErrorBoundTable { rows })
}

/// Orders `1..=n_max` at a single scale.
pub fn error_vs_order(scenario: &Scenario, d_over_w: f64, n_max: usize, mode: FisherMode) -> Result<ErrorBoundTable> {
    let orders: Vec<usize> = (1..=n_max).collect();
    error_vs_scale(scenario, &[d_over_w], &orders, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalOrder {
    /// `None` when every order is unresolvable.
    pub order: Option<usize>,
    pub trace_inverse: f64,
    /// `Tr F⁻¹` for orders `1..=n_max`.
    pub bounds: Vec<f64>,
}

/// Argmin over orders, ties to the smaller order.
pub fn select_optimal(results: &[FisherResult]) -> OptimalOrder {
    let bounds: Vec<f64> = results.iter().map(|r| r.trace_inverse).collect();
    let mut best: Option<(usize, f64)> = None;
    for r in results.iter().filter(|r| r.is_resolvable()) {
        if best.is_none_or(|(_, b)| r.trace_inverse < b) {
            best = Some((r.order, r.trace_inverse));
        }
    }
    OptimalOrder {
        order: best.map(|b| b.0),
        trace_inverse: best.map_or(f64::INFINITY, |b| b.1),
        bounds,
    }
}

pub fn optimal_order(
    config: &SourceConfig,
    grid: &DetectionGrid,
    n_max: usize,
    mode: FisherMode,
    policy: &FisherPolicy,
) -> Result<OptimalOrder> {
    Ok(select_optimal(&fisher_results(config, grid, n_max, mode, policy)?))
}

/// Bisection settings for [`resolution_scan`], in units of `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub d_lo: f64,
    pub d_hi: f64,
    pub tolerance: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            d_lo: 0.05,
            d_hi: 4.0,
            tolerance: 1e-3,
        }
    }
}

pub const DEFAULT_THRESHOLDS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanFlag {
    Ok,
    /// Even the upper end of the bracket misses the threshold.
    NoSolution,
    /// The bound grows with `d` across the bracket, also after widening it.
    NonMonotone,
}

impl fmt::Display for ScanFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanFlag::Ok => "ok",
            ScanFlag::NoSolution => "no-solution",
            ScanFlag::NonMonotone => "non-monotone",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionRow {
    pub shape: String,
    pub threshold: f64,
    pub n: usize,
    /// `NaN` unless the flag is [`ScanFlag::Ok`].
    pub min_d_over_w: f64,
    pub flag: ScanFlag,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResolutionTable {
    pub rows: Vec<ResolutionRow>,
}

impl ResolutionTable {
    /// Minimal separations for one threshold, in order of `n`; `+∞` where flagged.
    pub fn curve(&self, threshold: f64) -> Vec<f64> {
        let mut rows: Vec<_> = self.rows.iter().filter(|r| r.threshold == threshold).collect();
        rows.sort_by_key(|r| r.n);
        rows.iter()
            .map(|r| if r.flag == ScanFlag::Ok { r.min_d_over_w } else { f64::INFINITY })
            .collect()
    }
}

/// Memoized bounds for all orders, keyed by the exact scale.
struct BoundCache<'a> {
    scenario: &'a Scenario,
    n_max: usize,
    mode: FisherMode,
    seen: HashMap<u64, Vec<f64>>,
}

impl BoundCache<'_> {
    fn get(&mut self, d: f64, n: usize) -> Result<f64> {
        let key = d.to_bits();
        if !self.seen.contains_key(&key) {
            let bounds = self.scenario.bounds(d, self.n_max, self.mode)?;
            self.seen.insert(key, bounds);
        }
        Ok(self.seen[&key][n - 1])
    }
}

fn scan_one(cache: &mut BoundCache, threshold: f64, n: usize, s: &ScanSettings) -> Result<(f64, ScanFlag)> {
    let mut lo = s.d_lo;
    let mut hi = s.d_hi;
    let f_lo = cache.get(lo, n)?;
    if f_lo <= threshold {
        return Ok((lo, ScanFlag::Ok));
    }
    let mut f_hi = cache.get(hi, n)?;
    if f_hi > f_lo {
        hi *= 2.0;
        f_hi = cache.get(hi, n)?;
        if f_hi > f_lo {
            return Ok((f64::NAN, ScanFlag::NonMonotone));
        }
    }
    if f_hi > threshold {
        return Ok((f64::NAN, ScanFlag::NoSolution));
    }
    while hi - lo > s.tolerance {
        let mid = 0.5 * (lo + hi);
        if cache.get(mid, n)? <= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, ScanFlag::Ok))
}

/// Minimal `d/w` with `Δ_n² <= threshold` for each threshold and order
/// `1..=n_max`. The reported value is the smallest probed scale that meets the
/// threshold, within `tolerance` of the crossing.
pub fn resolution_scan(
    scenario: &Scenario,
    thresholds: &[f64],
    n_max: usize,
    mode: FisherMode,
    settings: &ScanSettings,
) -> Result<ResolutionTable> {
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("thresholds must be a non-empty list of positive values"));
    }
    check_orders(&[n_max])?;
    if !(settings.d_lo > 0.0 && settings.d_hi > settings.d_lo && settings.tolerance > 0.0) {
        return Err(invalid("scan bracket needs 0 < d_lo < d_hi and a positive tolerance"));
    }
    let mut cache = BoundCache {
        scenario,
        n_max,
        mode,
        seen: HashMap::new(),
    };
    let shape = scenario.shape.to_string();
    let mut rows = Vec::with_capacity(thresholds.len() * n_max);
    for &threshold in thresholds {
        for n in 1..=n_max {
            let (d, flag) = scan_one(&mut cache, threshold, n, settings)?;
            rows.push(ResolutionRow {
                shape: shape.clone(),
                threshold,
                n,
                min_d_over_w: d,
                flag,
            });
        }
    }
    Ok(ResolutionTable { rows })
}
