//! Power-law telegraph blinking, frame integration and plug-in joint
//! cumulant estimates over finite acquisitions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulant::{joint_cumulant_from_moments, MAX_JOINT_ORDER};
use crate::error::{invalid, Error, Result};
use crate::rng::{stream_id, substream};

/// Two-state blinking law. Dwell times follow `p(τ) ∝ (τ/τ0)^{-α}` on
/// `[τ0, τ_max]`; off dwells are stretched by `(1 - duty)/duty` so the
/// long-run bright fraction equals `duty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlinkModel {
    pub tau0: f64,
    pub alpha_pl: f64,
    pub duty: f64,
    pub frame: f64,
    pub i_on: f64,
    pub tau_max: f64,
}

impl Default for BlinkModel {
    fn default() -> Self {
        Self {
            tau0: 1.0,
            alpha_pl: 2.0,
            duty: 0.5,
            frame: 1.0,
            i_on: 1.0,
            tau_max: 1e3,
        }
    }
}

impl BlinkModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.tau0) {
            return Err(invalid(format!("tau0 must be positive, got {}", self.tau0)));
        }
        if !(self.alpha_pl.is_finite() && self.alpha_pl > 1.0) {
            return Err(invalid(format!("alpha_pl must exceed 1, got {}", self.alpha_pl)));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(invalid(format!("duty must lie in (0, 1), got {}", self.duty)));
        }
        if !ok(self.frame) || !ok(self.i_on) {
            return Err(invalid("frame and i_on must be positive"));
        }
        if !(self.tau_max.is_finite() && self.tau_max > self.tau0) {
            return Err(invalid(format!("tau_max must exceed tau0, got {}", self.tau_max)));
        }
        Ok(())
    }

    /// Inverse-CDF draw from the truncated power law.
    pub fn sample_dwell<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e = 1.0 - self.alpha_pl;
        let tail = (self.tau_max / self.tau0).powf(e);
        let u: f64 = rng.random();
        self.tau0 * (1.0 - u * (1.0 - tail)).powf(1.0 / e)
    }

    /// Mean of the truncated power law.
    pub fn mean_dwell(&self) -> f64 {
        let a = self.alpha_pl;
        let r = self.tau_max / self.tau0;
        let norm = (1.0 - r.powf(1.0 - a)) / (a - 1.0);
        let first = if (a - 2.0).abs() < 1e-12 {
            r.ln()
        } else {
            (1.0 - r.powf(2.0 - a)) / (a - 2.0)
        };
        self.tau0 * first / norm
    }

    fn frames_in(&self, total_time: f64) -> Result<usize> {
        self.validate()?;
        if !(total_time.is_finite() && total_time >= self.frame) {
            return Err(invalid(format!(
                "acquisition time {total_time} is shorter than one frame ({})",
                self.frame
            )));
        }
        Ok((total_time / self.frame + 1e-9).floor() as usize)
    }

    /// Frame-integrated intensity of one source over `n_frames` frames.
    pub fn integrate<R: Rng + ?Sized>(&self, n_frames: usize, rng: &mut R) -> Vec<f64> {
        let frame = self.frame;
        let total = n_frames as f64 * frame;
        let off_scale = (1.0 - self.duty) / self.duty;
        let mut lit = vec![0.0; n_frames];
        let mut bright = rng.random::<f64>() < self.duty;
        let mut t = 0.0;
        while t < total {
            let mut dwell = self.sample_dwell(rng);
            if !bright {
                dwell *= off_scale;
            }
            let end = (t + dwell).min(total);
            if bright {
                deposit(&mut lit, t, end, frame);
            }
            t += dwell;
            bright = !bright;
        }
        lit.iter().map(|b| (b / frame).clamp(0.0, 1.0) * self.i_on).collect()
    }
}

/// Adds the overlap of `[start, end)` with every frame.
fn deposit(lit: &mut [f64], start: f64, end: f64, frame: f64) {
    let last = lit.len() - 1;
    let mut a = start;
    while a < end {
        let mut k = ((a / frame).floor() as usize).min(last);
        let mut frame_end = (k + 1) as f64 * frame;
        if frame_end <= a && k < last {
            k += 1;
            frame_end = (k + 1) as f64 * frame;
        }
        let b = if k == last { end } else { frame_end.min(end) };
        lit[k] += b - a;
        a = b;
    }
}

/// Frame-integrated intensities `I_i(t_j)`, one row per source.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    pub n_frames: usize,
    pub per_source: Vec<Vec<f64>>,
}

impl FrameSeries {
    pub fn new(per_source: Vec<Vec<f64>>) -> Result<Self> {
        let n_frames = per_source.first().map_or(0, Vec::len);
        if n_frames == 0 {
            return Err(invalid("frame series is empty"));
        }
        if per_source.iter().any(|s| s.len() != n_frames) {
            return Err(invalid("all sources need the same number of frames"));
        }
        Ok(Self { n_frames, per_source })
    }

    pub fn num_sources(&self) -> usize {
        self.per_source.len()
    }
}

/// One source blinking for `total_time`, reproducible from `seed`.
pub fn sample_blink_trace(model: &BlinkModel, total_time: f64, seed: u64) -> Result<FrameSeries> {
    simulate_sources(model, 1, total_time, seed, 0)
}

/// `count` independent identical sources drawn from substream `stream`.
pub fn simulate_sources(
    model: &BlinkModel,
    count: usize,
    total_time: f64,
    seed: u64,
    stream: u64,
) -> Result<FrameSeries> {
    let n_frames = model.frames_in(total_time)?;
    if count == 0 {
        return Err(invalid("need at least one source"));
    }
    let mut rng = substream(seed, stream);
    FrameSeries::new((0..count).map(|_| model.integrate(n_frames, &mut rng)).collect())
}

/// Independent Bernoulli frames (`i_on` with probability `p`), a blinking
/// process with no memory.
pub fn bernoulli_frames(p: f64, i_on: f64, n_frames: usize, count: usize, seed: u64) -> Result<FrameSeries> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p must lie in [0, 1], got {p}")));
    }
    let mut rng = substream(seed, 0);
    let per_source = (0..count)
        .map(|_| {
            (0..n_frames)
                .map(|_| if rng.random::<f64>() < p { i_on } else { 0.0 })
                .collect()
        })
        .collect();
    FrameSeries::new(per_source)
}

/// Source indices of a joint cumulant, e.g. `0.0.1.1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern(Vec<usize>);

impl Pattern {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidOrder(0));
        }
        if indices.len() > MAX_JOINT_ORDER {
            return Err(Error::OrderTooHigh {
                order: indices.len(),
                max: MAX_JOINT_ORDER,
            });
        }
        Ok(Self(indices))
    }

    /// `i` repeated `n` times.
    pub fn same(i: usize, n: usize) -> Result<Self> {
        Self::new(vec![i; n])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn is_same_source(&self) -> bool {
        self.0.iter().all(|&i| i == self.0[0])
    }

    pub fn max_index(&self) -> usize {
        *self.0.iter().max().expect("non-empty")
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let indices = s
            .split('.')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| invalid(format!("bad pattern `{s}`, expected e.g. 0.0.1.1")))?;
        Self::new(indices)
    }
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Plug-in joint cumulant of the centered series selected by `pattern`.
///
/// Sample moments use `1/N` normalization. Every block moment depends only
/// on how many times each distinct source occurs in the block, so all
/// moments needed by the partition formula come from one pass over the
/// frames.
pub fn joint_cumulant(series: &FrameSeries, pattern: &Pattern) -> Result<f64> {
    if series.n_frames == 0 {
        return Err(invalid("frame series is empty"));
    }
    if pattern.max_index() >= series.num_sources() {
        return Err(invalid(format!(
            "pattern {pattern} refers to source {} of {}",
            pattern.max_index(),
            series.num_sources()
        )));
    }
    let mut sources: Vec<usize> = pattern.indices().to_vec();
    sources.sort_unstable();
    sources.dedup();
    let counts: Vec<usize> = sources
        .iter()
        .map(|s| pattern.indices().iter().filter(|i| *i == s).count())
        .collect();
    let mut strides = Vec::with_capacity(sources.len());
    let mut size = 1;
    for c in &counts {
        strides.push(size);
        size *= c + 1;
    }

    let n = series.n_frames as f64;
    let centered: Vec<Vec<f64>> = sources
        .iter()
        .map(|&s| {
            let x = &series.per_source[s];
            let mean = x.iter().sum::<f64>() / n;
            x.iter().map(|v| v - mean).collect()
        })
        .collect();

    let mut table = vec![0.0; size];
    let mut powers: Vec<Vec<f64>> = counts.iter().map(|c| vec![1.0; c + 1]).collect();
    let (mut cur, mut next) = (Vec::with_capacity(size), Vec::with_capacity(size));
    for t in 0..series.n_frames {
        for ((pw, x), c) in powers.iter_mut().zip(&centered).zip(&counts) {
            for k in 1..=*c {
                pw[k] = pw[k - 1] * x[t];
            }
        }
        // outer product of the power vectors, last source slowest
        cur.clear();
        cur.push(1.0);
        for pw in powers.iter().rev() {
            next.clear();
            for &e in &cur {
                next.extend(pw.iter().map(|v| e * v));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        for (slot, v) in table.iter_mut().zip(&cur) {
            *slot += v;
        }
    }
    for v in &mut table {
        *v /= n;
    }

    let position_stride: Vec<usize> = pattern
        .indices()
        .iter()
        .map(|i| strides[sources.binary_search(i).expect("present")])
        .collect();
    joint_cumulant_from_moments(pattern.order(), |mask| {
        let mut idx = 0;
        let mut bits = mask;
        while bits != 0 {
            idx += position_stride[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        table[idx]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioFlag {
    Ok,
    /// The same-source mean is within three standard errors of zero.
    Indeterminate,
}

impl fmt::Display for RatioFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatioFlag::Ok => "ok",
            RatioFlag::Indeterminate => "indeterminate",
        })
    }
}

/// Spread of a joint cumulant estimate over independent realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantEstimate {
    pub pattern: Pattern,
    pub alpha_pl: f64,
    pub t_over_tau0: f64,
    /// Per-realization estimates.
    #[serde(skip)]
    pub values: Vec<f64>,
    pub realization_mean: f64,
    /// Unbiased variance over realizations.
    pub realization_var: f64,
    /// `√var / |mean of the same-source estimate of equal order|`.
    pub u_ratio: f64,
    pub flag: RatioFlag,
}

impl CumulantEstimate {
    pub fn standard_error(&self) -> f64 {
        (self.realization_var / self.values.len() as f64).sqrt()
    }
}

/// Sum by recursive halving.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and unbiased variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, pairwise_sum(&dev) / (n - 1.0))
}

/// Normalized spread `u` of each pattern over `n_realizations` independent
/// acquisitions, for each acquisition time in `t_list` (units of `τ0`).
///
/// Realization `r` at time index `k` draws all sources from substream
/// `(k, r)`, so results do not depend on thread scheduling.
pub fn cumulant_ratio_curve(
    model: &BlinkModel,
    patterns: &[Pattern],
    t_list: &[f64],
    n_realizations: usize,
    seed: u64,
) -> Result<Vec<CumulantEstimate>> {
    model.validate()?;
    if n_realizations < 2 {
        return Err(invalid("need at least 2 realizations"));
    }
    if patterns.is_empty() || t_list.is_empty() {
        return Err(invalid("patterns and acquisition times must be non-empty"));
    }
    for &t in t_list {
        model.frames_in(t * model.tau0)?;
    }
    let count = patterns.iter().map(Pattern::max_index).max().expect("non-empty") + 1;
    let mut targets: Vec<Pattern> = patterns.to_vec();
    for p in patterns {
        let same = Pattern::same(p.indices()[0], p.order())?;
        if !targets.contains(&same) {
            targets.push(same);
        }
    }

    let mut out = Vec::with_capacity(patterns.len() * t_list.len());
    for (k, &t) in t_list.iter().enumerate() {
        let per_realization: Vec<Vec<f64>> = (0..n_realizations)
            .into_par_iter()
            .map(|r| {
                let series = simulate_sources(model, count, t * model.tau0, seed, stream_id(k, r))?;
                targets.iter().map(|p| joint_cumulant(&series, p)).collect()
            })
            .collect::<Result<_>>()?;
        let column = |j: usize| -> Vec<f64> { per_realization.iter().map(|row| row[j]).collect() };
        for p in patterns {
            let same = Pattern::same(p.indices()[0], p.order())?;
            let values = column(targets.iter().position(|q| q == p).expect("target"));
            let reference = column(targets.iter().position(|q| *q == same).expect("target"));
            let (mean, var) = mean_var(&values);
            let (ref_mean, ref_var) = mean_var(&reference);
            let ref_se = (ref_var / n_realizations as f64).sqrt();
            let flag = if ref_mean.abs() < 3.0 * ref_se {
                RatioFlag::Indeterminate
            } else {
                RatioFlag::Ok
            };
            out.push(CumulantEstimate {
                pattern: p.clone(),
                alpha_pl: model.alpha_pl,
                t_over_tau0: t,
                values,
                realization_mean: mean,
                realization_var: var,
                u_ratio: var.sqrt() / ref_mean.abs(),
                flag,
            });
        }
    }
    Ok(out)
}
