use crate::error::{Error, Result};
use crate::geometry::{Point, SourceConfig};

/// Bright-subset weights `Π_{i∈S} ξ_i Π_{i∉S} (1-ξ_i)` for every non-empty
/// subset with non-zero weight.
#[derive(Debug, Clone)]
pub(crate) struct SubsetKernel {
    m: usize,
    masks: Vec<u32>,
    weights: Vec<f64>,
}

impl SubsetKernel {
    pub const MAX_SOURCES: usize = 20;

    pub fn new(config: &SourceConfig) -> Result<Self> {
        let m = config.num_sources();
        if m > Self::MAX_SOURCES {
            return Err(Error::TooManySources(m));
        }
        let xis = config.xis();
        let mut masks = Vec::new();
        let mut weights = Vec::new();
        for mask in 1u32..(1u32 << m) {
            let w: f64 = xis
                .iter()
                .enumerate()
                .map(|(i, xi)| if mask & (1 << i) != 0 { *xi } else { 1.0 - xi })
                .product();
            if w > 0.0 {
                masks.push(mask);
                weights.push(w);
            }
        }
        Ok(Self { m, masks, weights })
    }

    pub fn scratch(&self) -> Vec<f64> {
        vec![0.0; 1 << self.m]
    }

    /// `sums[S] = Σ_{i∈S} q_i` for every subset mask.
    fn fill_sums(&self, q: &[f64], sums: &mut [f64]) {
        sums[0] = 0.0;
        for mask in 1usize..(1 << self.m) {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = sums[mask & (mask - 1)] + q[low];
        }
    }

    pub fn gn(&self, q: &[f64], n: usize, sums: &mut [f64]) -> f64 {
        self.fill_sums(q, sums);
        self.masks
            .iter()
            .zip(&self.weights)
            .map(|(&mask, w)| w * sums[mask as usize].powi(n as i32))
            .sum()
    }

    pub fn evaluator(&self, n_max: usize) -> Evaluator<'_> {
        Evaluator {
            kernel: self,
            n_max,
            sums: self.scratch(),
            q: vec![0.0; self.m],
            g: vec![0.0; n_max],
            a: vec![0.0; n_max * self.m],
        }
    }
}

/// Per-point evaluation of all orders `1..=n_max` at once.
pub(crate) struct Evaluator<'a> {
    kernel: &'a SubsetKernel,
    n_max: usize,
    sums: Vec<f64>,
    pub q: Vec<f64>,
    /// `g[n-1] = G⁽ⁿ⁾(r)`.
    pub g: Vec<f64>,
    /// `a[(n-1)*M + i] = Σ_{S∋i} weight(S) (Σ_{k∈S} q_k)^{n-1}`.
    pub a: Vec<f64>,
}

impl Evaluator<'_> {
    pub fn at(&mut self, config: &SourceConfig, r: Point) {
        let m = self.kernel.m;
        config.brightness_into(r, &mut self.q);
        self.kernel.fill_sums(&self.q, &mut self.sums);
        self.g.iter_mut().for_each(|v| *v = 0.0);
        self.a.iter_mut().for_each(|v| *v = 0.0);
        for (&mask, &w) in self.kernel.masks.iter().zip(&self.kernel.weights) {
            let s = self.sums[mask as usize];
            let mut pow = 1.0;
            for n in 0..self.n_max {
                let wp = w * pow;
                let row = &mut self.a[n * m..(n + 1) * m];
                let mut bits = mask;
                while bits != 0 {
                    let i = bits.trailing_zeros() as usize;
                    row[i] += wp;
                    bits &= bits - 1;
                }
                pow *= s;
                self.g[n] += w * pow;
            }
        }
    }

    /// `∂G⁽ⁿ⁾/∂θ` at the point last passed to [`Evaluator::at`].
    pub fn gradient(&self, config: &SourceConfig, r: Point, n: usize, out: &mut [f64]) {
        let m = self.kernel.m;
        let naxes = config.dims().count();
        let w = config.psf().width();
        let scale = 4.0 / (w * w);
        let row = &self.a[(n - 1) * m..n * m];
        for (i, s) in config.positions().iter().enumerate() {
            let common = n as f64 * row[i] * self.q[i] * scale;
            for axis in 0..naxes {
                out[i * naxes + axis] = common * (r[axis] - s[axis]);
            }
        }
    }
}
