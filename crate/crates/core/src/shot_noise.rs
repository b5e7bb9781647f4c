//! Shot-noise spread of single-pixel cumulant estimates under a fixed
//! photon budget.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blink::mean_var;
use crate::cumulant::cumulants_from_moments;
use crate::error::{invalid, Result};
use crate::geometry::{DetectionGrid, SourceConfig};
use crate::rng::{stream_id, substream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotNoiseSettings {
    /// Expected total counts at the brightest grid point over the acquisition.
    pub mean_peak_counts: f64,
    pub n_frames: usize,
    pub n_realizations: usize,
}

impl Default for ShotNoiseSettings {
    fn default() -> Self {
        Self {
            mean_peak_counts: 400.0,
            n_frames: 400,
            n_realizations: 200,
        }
    }
}

/// Per-point mean and standard deviation of the order-`n` count cumulant.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub order: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Envelope {
    /// Largest spread relative to the largest mean signal.
    pub fn relative_band(&self) -> f64 {
        let peak = self.mean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let spread = self.std.iter().fold(0.0f64, |m, v| m.max(*v));
        spread / peak
    }
}

fn poisson_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate > 0.0 {
        Poisson::new(rate).expect("positive rate").sample(rng)
    } else {
        0.0
    }
}

/// Monte-Carlo envelopes for each order in `orders`, all computed from the
/// same simulated acquisitions.
///
/// Each frame draws an independent bright/dark state per source (probability
/// `ξ_i`), shared by every pixel, then independent Poisson counts per pixel.
/// Rates are scaled so the pixel with the largest mean intensity collects
/// `mean_peak_counts` expected counts over all frames.
pub fn shot_noise_envelope(
    config: &SourceConfig,
    grid: &DetectionGrid,
    orders: &[usize],
    settings: &ShotNoiseSettings,
    seed: u64,
) -> Result<Vec<Envelope>> {
    if !(settings.mean_peak_counts.is_finite() && settings.mean_peak_counts > 0.0) {
        return Err(invalid("mean_peak_counts must be positive"));
    }
    if orders.is_empty() || orders.contains(&0) {
        return Err(invalid("orders must be a non-empty list of values >= 1"));
    }
    let n_max = *orders.iter().max().expect("non-empty");
    if settings.n_frames < n_max {
        return Err(invalid(format!(
            "{} frames cannot support a cumulant of order {n_max}",
            settings.n_frames
        )));
    }
    if settings.n_realizations < 2 {
        return Err(invalid("need at least 2 realizations"));
    }
    if grid.is_empty() {
        return Err(invalid("grid is empty"));
    }

    let m = config.num_sources();
    let brightness: Vec<Vec<f64>> = grid.points().iter().map(|r| config.brightness(*r)).collect();
    let peak = brightness
        .iter()
        .map(|q| q.iter().zip(config.xis()).map(|(q, xi)| q * xi).sum::<f64>())
        .fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(invalid("mean intensity vanishes on the grid"));
    }
    let scale = settings.mean_peak_counts / (settings.n_frames as f64 * peak);
    let frames = settings.n_frames;

    // cumulants[realization][point * n_max + (order - 1)]
    let cumulants: Vec<Vec<f64>> = (0..settings.n_realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, stream_id(0, r));
            let states: Vec<bool> = (0..frames * m)
                .map(|k| rng.random::<f64>() < config.xis()[k % m])
                .collect();
            let mut out = Vec::with_capacity(brightness.len() * n_max);
            let mut moments = vec![0.0; n_max];
            for q in &brightness {
                moments.iter_mut().for_each(|v| *v = 0.0);
                for t in 0..frames {
                    let lit = &states[t * m..(t + 1) * m];
                    let rate: f64 = q.iter().zip(lit).filter(|(_, on)| **on).map(|(q, _)| q).sum();
                    let count = poisson_draw(scale * rate, &mut rng);
                    let mut pow = 1.0;
                    for v in moments.iter_mut() {
                        pow *= count;
                        *v += pow;
                    }
                }
                moments.iter_mut().for_each(|v| *v /= frames as f64);
                out.extend(cumulants_from_moments(&moments));
            }
            out
        })
        .collect();

    let points = brightness.len();
    Ok(orders
        .iter()
        .map(|&n| {
            let mut mean = Vec::with_capacity(points);
            let mut std = Vec::with_capacity(points);
            for j in 0..points {
                let column: Vec<f64> = cumulants.iter().map(|row| row[j * n_max + n - 1]).collect();
                let (mu, var) = mean_var(&column);
                mean.push(mu);
                std.push(var.sqrt());
            }
            Envelope { order: n, mean, std }
        })
        .collect())
}

/// `samples` draws of `Poisson(μ1) - Poisson(μ2)`.
pub fn poisson_difference(mu1: f64, mu2: f64, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if !(mu1 >= 0.0 && mu2 >= 0.0 && mu1.is_finite() && mu2.is_finite()) {
        return Err(invalid("Poisson means must be finite and non-negative"));
    }
    let mut rng = substream(seed, 0);
    Ok((0..samples)
        .map(|_| poisson_draw(mu1, &mut rng) - poisson_draw(mu2, &mut rng))
        .collect())
}
