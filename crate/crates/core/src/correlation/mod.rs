//! Exact single-point correlation functions of blinking sources.
//!
//! Each source is bright (amplitude `α_i`) with probability `ξ_i` and dark
//! otherwise. The n-th order normally ordered correlation at `r` is the
//! expectation over bright/dark patterns `S`:
//!
//! `G⁽ⁿ⁾(r) = Σ_S [Π_{i∈S} ξ_i][Π_{i∉S} (1-ξ_i)] (Σ_{i∈S} q_i(r))ⁿ`,
//! with `q_i = |α_i|² |h(r - s_i)|²`.
//!
//! [`gn_subset`] evaluates this with `2^M` terms regardless of `n`;
//! [`gn_multinomial`] expands the same quantity over compositions of `n` and
//! serves as an independent check.

mod closed_form;
mod dip;
mod kernel;

pub use closed_form::{gn_multinomial, gn_two_source};
pub use dip::{dip_contrast, dip_profile, DipProfile};

pub(crate) use kernel::SubsetKernel;

use rayon::prelude::*;

use crate::cumulant::two_point_cumulants;
use crate::error::{Error, Result};
use crate::geometry::{DetectionGrid, Point, SourceConfig};

/// Grid points per work chunk. Partial sums are combined in chunk order, so
/// results do not depend on the number of worker threads.
pub(crate) const CHUNK: usize = 512;

/// `|h(r - s)|²` for the Gaussian PSF of width `w`.
pub fn psf_intensity(r: Point, s: Point, w: f64) -> f64 {
    let dx = r[0] - s[0];
    let dy = r[1] - s[1];
    let w2 = w * w;
    (-2.0 * (dx * dx + dy * dy) / w2).exp() / (std::f64::consts::PI * w2)
}

pub(crate) fn check_order(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidOrder(n))
    } else {
        Ok(())
    }
}

/// `G⁽ⁿ⁾(r)` via the bright-subset expansion.
pub fn gn_subset(config: &SourceConfig, r: Point, n: usize) -> Result<f64> {
    check_order(n)?;
    let kernel = SubsetKernel::new(config)?;
    let q = config.brightness(r);
    let mut sums = kernel.scratch();
    Ok(kernel.gn(&q, n, &mut sums))
}

/// Gradient of `G⁽ⁿ⁾(r)` with respect to the source coordinates, in
/// [`SourceConfig::param_labels`] order.
pub fn gn_gradient(config: &SourceConfig, r: Point, n: usize) -> Result<Vec<f64>> {
    check_order(n)?;
    let kernel = SubsetKernel::new(config)?;
    let mut eval = kernel.evaluator(n);
    eval.at(config, r);
    let mut grad = vec![0.0; config.num_params()];
    eval.gradient(config, r, n, &mut grad);
    Ok(grad)
}

/// `G⁽ⁿ⁾` sampled on a grid.
#[derive(Debug, Clone)]
pub struct CorrelationField {
    pub order: usize,
    pub values: Vec<f64>,
    /// `q_i(r_j)`, row `j` holds the `M` brightness terms at grid point `j`.
    pub brightness: Vec<f64>,
    pub num_sources: usize,
}

impl CorrelationField {
    pub fn brightness_at(&self, j: usize) -> &[f64] {
        &self.brightness[j * self.num_sources..(j + 1) * self.num_sources]
    }
}

pub fn correlation_field(
    config: &SourceConfig,
    grid: &DetectionGrid,
    n: usize,
) -> Result<CorrelationField> {
    check_order(n)?;
    let kernel = SubsetKernel::new(config)?;
    let m = config.num_sources();
    let parts: Vec<(Vec<f64>, Vec<f64>)> = grid
        .points()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut sums = kernel.scratch();
            let mut values = Vec::with_capacity(chunk.len());
            let mut brightness = vec![0.0; chunk.len() * m];
            for (r, q) in chunk.iter().zip(brightness.chunks_mut(m)) {
                config.brightness_into(*r, q);
                values.push(kernel.gn(q, n, &mut sums));
            }
            (values, brightness)
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut brightness = Vec::with_capacity(grid.len() * m);
    for (v, b) in parts {
        values.extend(v);
        brightness.extend(b);
    }
    Ok(CorrelationField {
        order: n,
        values,
        brightness,
        num_sources: m,
    })
}

/// Normalized correlation values `p_j = G⁽ⁿ⁾(r_j) / Σ_k G⁽ⁿ⁾(r_k)` and their
/// derivatives with respect to every source coordinate.
#[derive(Debug, Clone)]
pub struct ProbabilityField {
    pub order: usize,
    pub probs: Vec<f64>,
    /// Row-major `J × P` gradients `∂p_j/∂θ_μ`.
    pub grads: Vec<f64>,
    pub param_labels: Vec<String>,
}

impl ProbabilityField {
    pub fn num_params(&self) -> usize {
        self.param_labels.len()
    }

    pub fn grad(&self, j: usize) -> &[f64] {
        let p = self.num_params();
        &self.grads[j * p..(j + 1) * p]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

pub fn probability_field(
    config: &SourceConfig,
    grid: &DetectionGrid,
    n: usize,
) -> Result<ProbabilityField> {
    check_order(n)?;
    if grid.is_empty() {
        return Err(Error::DegenerateField { order: n });
    }
    let kernel = SubsetKernel::new(config)?;
    let p = config.num_params();
    let parts: Vec<(Vec<f64>, Vec<f64>)> = grid
        .points()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut eval = kernel.evaluator(n);
            let mut values = Vec::with_capacity(chunk.len());
            let mut grads = vec![0.0; chunk.len() * p];
            for (r, g) in chunk.iter().zip(grads.chunks_mut(p)) {
                eval.at(config, *r);
                values.push(eval.g[n - 1]);
                eval.gradient(config, *r, n, g);
            }
            (values, grads)
        })
        .collect();

    let mut values = Vec::with_capacity(grid.len());
    let mut grads = Vec::with_capacity(grid.len() * p);
    for (v, g) in parts {
        values.extend(v);
        grads.extend(g);
    }

    let total = ordered_sum(&values);
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::DegenerateField { order: n });
    }
    let mut grad_total = vec![0.0; p];
    for row in grads.chunks(p) {
        for (acc, v) in grad_total.iter_mut().zip(row) {
            *acc += v;
        }
    }

    let probs: Vec<f64> = values.iter().map(|g| g / total).collect();
    for (row, &pj) in grads.chunks_mut(p).zip(&probs) {
        for (v, d) in row.iter_mut().zip(&grad_total) {
            *v = (*v - pj * d) / total;
        }
    }
    Ok(ProbabilityField {
        order: n,
        probs,
        grads,
        param_labels: config.param_labels(),
    })
}

/// Sum in chunks of [`CHUNK`], combined left to right.
pub(crate) fn ordered_sum(values: &[f64]) -> f64 {
    values
        .chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .fold(0.0, |acc, s| acc + s)
}

/// Ideal cumulant image `C⁽ⁿ⁾(r) = Σ_i |h(r - s_i)|^{2n} c_i⁽ⁿ⁾`.
#[derive(Debug, Clone)]
pub struct CumulantImage {
    pub order: usize,
    pub values: Vec<f64>,
    /// Per-source cumulants `c_i⁽ⁿ⁾` of the emitted intensity.
    pub kappa: Vec<f64>,
}

pub fn ideal_cumulant_image(
    config: &SourceConfig,
    grid: &DetectionGrid,
    n: usize,
) -> Result<CumulantImage> {
    check_order(n)?;
    let kappa: Vec<f64> = config
        .alphas()
        .iter()
        .zip(config.xis())
        .map(|(a, xi)| two_point_cumulants(a * a, *xi, n)[n - 1])
        .collect();
    let psf = config.psf();
    let values = grid
        .points()
        .par_iter()
        .map(|r| {
            config
                .positions()
                .iter()
                .zip(&kappa)
                .map(|(s, c)| psf.intensity(*r, *s).powi(n as i32) * c)
                .sum()
        })
        .collect();
    Ok(CumulantImage {
        order: n,
        values,
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, build_line_config, Dims, GridSpec, PsfModel, SourceParam};
    use std::f64::consts::PI;

    fn single(alpha: f64, xi: f64) -> SourceConfig {
        SourceConfig::new(Dims::One, vec![[0.0, 0.0]], vec![alpha], vec![xi], PsfModel::default()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn psf_examples() {
        assert!((psf_intensity([0.0, 0.0], [0.0, 0.0], 1.0) - 1.0 / PI).abs() < 1e-15);
        assert!((psf_intensity([1.0, 0.0], [0.0, 0.0], 1.0) - (-2.0f64).exp() / PI).abs() < 1e-15);
        assert!((psf_intensity([0.0, 1.0], [0.0, 0.0], 1.0) - 0.0430785587).abs() < 1e-10);
        assert!((psf_intensity([3.0, 2.0], [3.0, 2.0], 2.0) - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let psf = PsfModel::new(1.7).unwrap();
        assert_eq!(psf.intensity([0.3, 0.1], [-0.2, 0.4]), psf_intensity([0.3, 0.1], [-0.2, 0.4], 1.7));
    }

    #[test]
    fn single_source_value() {
        let g = gn_subset(&single(0.3, 0.4), [0.0, 0.0], 2).unwrap();
        let expect = 0.4 * (0.09 / PI).powi(2);
        assert!(rel(g, expect) < 1e-14);
        assert!((g - 3.28281e-4).abs() < 1e-9);
    }

    #[test]
    fn deterministic_bright_limit() {
        let cfg = build_line_config(3, 0.7, &0.3.into(), &1.0.into(), 1.0).unwrap();
        let r = [0.21, 0.0];
        let q: f64 = cfg.brightness(r).iter().sum();
        for n in 1..=6 {
            assert!(rel(gn_subset(&cfg, r, n).unwrap(), q.powi(n as i32)) < 1e-12);
        }
    }

    #[test]
    fn zero_order_rejected() {
        let cfg = single(0.3, 0.4);
        assert_eq!(gn_subset(&cfg, [0.0, 0.0], 0), Err(Error::InvalidOrder(0)));
        assert!(gn_gradient(&cfg, [0.0, 0.0], 0).is_err());
        assert!(gn_multinomial(&cfg, [0.0, 0.0], 0).is_err());
        assert!(gn_two_source(0.4, 0.1, 0.1, 0).is_err());
    }

    #[test]
    fn gradient_symmetries() {
        let cfg = single(0.3, 0.4);
        assert_eq!(gn_gradient(&cfg, [0.0, 0.0], 3).unwrap(), vec![0.0]);

        let pair = build_line_config(2, 0.8, &0.3.into(), &0.4.into(), 1.0).unwrap();
        let g = gn_gradient(&pair, [0.0, 0.0], 4).unwrap();
        assert!((g[0] + g[1]).abs() < 1e-15 * g[0].abs().max(1e-300));
        assert!(g[0] != 0.0);
    }

    #[test]
    fn single_source_probabilities_are_gaussian() {
        let cfg = single(0.3, 0.4);
        let grid = build_grid(&cfg, &GridSpec::new(0.05, 2.0)).unwrap();
        for n in [1, 3] {
            let pf = probability_field(&cfg, &grid, n).unwrap();
            let raw: Vec<f64> = grid
                .points()
                .iter()
                .map(|r| (-2.0 * n as f64 * r[0] * r[0]).exp())
                .collect();
            let z: f64 = raw.iter().sum();
            for (p, e) in pf.probs.iter().zip(&raw) {
                assert!((p - e / z).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn probability_field_is_amplitude_invariant() {
        let cfg = build_line_config(3, 0.6, &SourceParam::PerSource(vec![0.3, 0.25, 0.41]), &0.4.into(), 1.0).unwrap();
        let grid = build_grid(&cfg, &GridSpec::new(0.05, 2.0)).unwrap();
        let a = probability_field(&cfg, &grid, 3).unwrap();
        let b = probability_field(&cfg.with_scaled_alphas(10.0).unwrap(), &grid, 3).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
        for (x, y) in a.grads.iter().zip(&b.grads) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-12));
        }
    }

    #[test]
    fn three_source_normalization() {
        let cfg = build_line_config(3, 1.0, &0.3.into(), &0.4.into(), 1.0).unwrap();
        let grid = build_grid(&cfg, &GridSpec::default()).unwrap();
        let pf = probability_field(&cfg, &grid, 2).unwrap();
        let total: f64 = pf.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(pf.probs.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn degenerate_field_detected() {
        let cfg = SourceConfig::new(Dims::One, vec![[0.0, 0.0]], vec![0.3], vec![0.4], PsfModel::default()).unwrap();
        let far = crate::geometry::DetectionGrid::from_axes(Dims::One, 1.0, [500.0, 0.0], [3, 1]).unwrap();
        assert_eq!(probability_field(&cfg, &far, 2).unwrap_err(), Error::DegenerateField { order: 2 });
    }

    #[test]
    fn cumulant_image_orders() {
        let cfg = build_line_config(2, 1.0, &1.0.into(), &0.5.into(), 1.0).unwrap();
        let grid = build_grid(&cfg, &GridSpec::new(0.1, 1.0)).unwrap();
        let c1 = ideal_cumulant_image(&cfg, &grid, 1).unwrap();
        for (r, v) in grid.points().iter().zip(&c1.values) {
            let mean: f64 = cfg.brightness(*r).iter().map(|q| 0.5 * q).sum();
            assert!((v - mean).abs() < 1e-15);
        }
        let c2 = ideal_cumulant_image(&cfg, &grid, 2).unwrap();
        assert!((c2.kappa[0] - 0.25).abs() < 1e-15);
        let c3 = ideal_cumulant_image(&cfg, &grid, 3).unwrap();
        assert!(c3.kappa.iter().all(|k| k.abs() < 1e-15));
    }
}
