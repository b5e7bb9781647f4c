use super::{check_order, SubsetKernel};
use crate::error::{invalid, Result};
use crate::geometry::SourceConfig;

/// `G⁽ⁿ⁾` sampled along the line through two sources.
#[derive(Debug, Clone)]
pub struct DipProfile {
    /// Signed distance from the midpoint of the two sources.
    pub offsets: Vec<f64>,
    pub values: Vec<f64>,
    /// Index of the midpoint sample.
    pub mid: usize,
}

/// Samples `G⁽ⁿ⁾` every `step` along the source axis, from `margin` beyond
/// one source to `margin` beyond the other. The midpoint is always a sample.
pub fn dip_profile(config: &SourceConfig, n: usize, step: f64, margin: f64) -> Result<DipProfile> {
    check_order(n)?;
    if config.num_sources() != 2 {
        return Err(invalid(format!(
            "dip contrast needs exactly 2 sources, got {}",
            config.num_sources()
        )));
    }
    if !(step > 0.0 && margin >= 0.0) {
        return Err(invalid("profile step must be positive and margin non-negative"));
    }
    let [a, b] = [config.positions()[0], config.positions()[1]];
    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = (dx * dx + dy * dy).sqrt();
    let dir = [dx / len, dy / len];
    let half = (len / 2.0 + margin) / step;
    let k_max = (half - 1e-9).ceil() as i64;

    let kernel = SubsetKernel::new(config)?;
    let mut sums = kernel.scratch();
    let mut q = vec![0.0; 2];
    let mut offsets = Vec::with_capacity(2 * k_max as usize + 1);
    let mut values = Vec::with_capacity(offsets.capacity());
    for k in -k_max..=k_max {
        let t = k as f64 * step;
        let r = [mid[0] + t * dir[0], mid[1] + t * dir[1]];
        config.brightness_into(r, &mut q);
        offsets.push(t);
        values.push(kernel.gn(&q, n, &mut sums));
    }
    Ok(DipProfile {
        offsets,
        values,
        mid: k_max as usize,
    })
}

/// `1 - G_mid / G_peak` along the source axis; 0 when the profile has a
/// single maximum.
pub fn dip_contrast(config: &SourceConfig, n: usize, step: f64) -> Result<f64> {
    let margin = 2.0 * config.psf().width();
    let profile = dip_profile(config, n, step, margin)?;
    let v = &profile.values;
    let maxima = (1..v.len() - 1)
        .filter(|&k| v[k] > v[k - 1] && v[k] >= v[k + 1])
        .count();
    if maxima < 2 {
        return Ok(0.0);
    }
    let peak = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((1.0 - v[profile.mid] / peak).clamp(0.0, 1.0))
}
