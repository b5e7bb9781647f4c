//! Set partitions and moment/cumulant conversions.
//!
//! Joint cumulants use the partition formula
//! `cum(X_1..X_n) = Σ_π (-1)^{|π|-1} (|π|-1)! Π_{B∈π} E[Π_{i∈B} X_i]`,
//! with blocks encoded as bitmasks over the `n` argument positions.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest order for which partitions are enumerated (Bell(8) = 4140).
pub const MAX_JOINT_ORDER: usize = 8;

/// One set partition of `{0..n}`; each block is a bitmask over positions.
pub type Partition = Vec<u32>;

/// All set partitions of `{0..n}` in restricted-growth-string order.
pub fn set_partitions(n: usize) -> Vec<Partition> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn recurse(pos: usize, max_label: usize, labels: &mut [usize], out: &mut Vec<Partition>) {
        let n = labels.len();
        if pos == n {
            let mut blocks = vec![0u32; max_label + 1];
            for (i, &l) in labels.iter().enumerate() {
                blocks[l] |= 1 << i;
            }
            out.push(blocks);
            return;
        }
        for l in 0..=(max_label + 1) {
            labels[pos] = l;
            recurse(pos + 1, max_label.max(l), labels, out);
        }
    }
    labels[0] = 0;
    recurse(1, 0, &mut labels, &mut out);
    out
}

/// Cached partitions for `n <= MAX_JOINT_ORDER`.
pub fn partitions(n: usize) -> Result<&'static [Partition]> {
    static CACHE: OnceLock<Vec<Vec<Partition>>> = OnceLock::new();
    if n > MAX_JOINT_ORDER {
        return Err(Error::OrderTooHigh {
            order: n,
            max: MAX_JOINT_ORDER,
        });
    }
    let all = CACHE.get_or_init(|| (0..=MAX_JOINT_ORDER).map(set_partitions).collect());
    Ok(&all[n])
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Joint cumulant of order `n` from joint moments `moment(mask)` over
/// position subsets.
pub fn joint_cumulant_from_moments(n: usize, moment: impl Fn(u32) -> f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidOrder(0));
    }
    let mut total = 0.0;
    for partition in partitions(n)? {
        let k = partition.len();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let product: f64 = partition.iter().map(|&b| moment(b)).product();
        total += sign * factorial(k - 1) * product;
    }
    Ok(total)
}

/// Joint moment of order `n` from joint cumulants `cumulant(mask)`.
pub fn joint_moment_from_cumulants(n: usize, cumulant: impl Fn(u32) -> f64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    Ok(partitions(n)?
        .iter()
        .map(|p| p.iter().map(|&b| cumulant(b)).product::<f64>())
        .sum())
}

/// Univariate cumulants `κ_1..κ_n` from raw moments `m[k] = E[X^{k+1}]`.
///
/// Uses the recursion `κ_n = m_n - Σ_{k<n} C(n-1, k-1) κ_k m_{n-k}`, which is
/// the partition formula grouped by the block holding the first element, so
/// any order is supported.
pub fn cumulants_from_moments(m: &[f64]) -> Vec<f64> {
    let mut kappa: Vec<f64> = Vec::with_capacity(m.len());
    for n in 1..=m.len() {
        let mut k = m[n - 1];
        for j in 1..n {
            k -= binomial(n - 1, j - 1) * kappa[j - 1] * m[n - j - 1];
        }
        kappa.push(k);
    }
    kappa
}

/// Raw moments `m_1..m_n` from cumulants `kappa[k] = κ_{k+1}`.
pub fn moments_from_cumulants(kappa: &[f64]) -> Vec<f64> {
    let mut m: Vec<f64> = Vec::with_capacity(kappa.len());
    for n in 1..=kappa.len() {
        let mut v = 0.0;
        for j in 1..=n {
            let lower = if n == j { 1.0 } else { m[n - j - 1] };
            v += binomial(n - 1, j - 1) * kappa[j - 1] * lower;
        }
        m.push(v);
    }
    m
}

/// Cumulants of the two-point variable that equals `value` with
/// probability `p` and 0 otherwise, orders `1..=n`.
pub fn two_point_cumulants(value: f64, p: f64, n: usize) -> Vec<f64> {
    let moments: Vec<f64> = (1..=n).map(|l| p * value.powi(l as i32)).collect();
    cumulants_from_moments(&moments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(n).len(), b, "n = {n}");
            assert_eq!(partitions(n).unwrap().len(), b);
        }
        assert!(partitions(9).is_err());
    }

    #[test]
    fn partitions_cover_every_position_once() {
        for p in partitions(6).unwrap() {
            let union = p.iter().fold(0u32, |acc, &b| {
                assert_eq!(acc & b, 0);
                acc | b
            });
            assert_eq!(union, 0b11_1111);
        }
    }

    #[test]
    fn bernoulli_cumulants() {
        let p: f64 = 0.5;
        let k = two_point_cumulants(1.0, p, 6);
        assert!((k[0] - 0.5).abs() < 1e-15);
        assert!((k[1] - 0.25).abs() < 1e-15);
        assert!(k[2].abs() < 1e-15);
        assert!((k[3] + 0.125).abs() < 1e-15);

        let p: f64 = 0.3;
        let k = two_point_cumulants(1.0, p, 4);
        let q = 1.0 - p;
        assert!((k[1] - p * q).abs() < 1e-15);
        assert!((k[2] - p * q * (1.0 - 2.0 * p)).abs() < 1e-15);
        assert!((k[3] - p * q * (1.0 - 6.0 * p + 6.0 * p * p)).abs() < 1e-15);
    }

    #[test]
    fn recursion_matches_partition_formula() {
        let m = [0.7, 1.3, -0.4, 2.2, 0.9, -1.7, 0.5, 3.1];
        let rec = cumulants_from_moments(&m);
        for n in 1..=8 {
            let by_partition =
                joint_cumulant_from_moments(n, |mask| m[mask.count_ones() as usize - 1]).unwrap();
            assert!((rec[n - 1] - by_partition).abs() < 1e-9 * (1.0 + by_partition.abs()), "n = {n}");
        }
    }

    #[test]
    fn moment_cumulant_round_trip() {
        let m = [0.2, 1.1, 0.3, 2.5, -0.6, 4.0];
        let back = moments_from_cumulants(&cumulants_from_moments(&m));
        for (a, b) in m.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_order_rejected() {
        assert_eq!(joint_cumulant_from_moments(0, |_| 1.0), Err(Error::InvalidOrder(0)));
    }
}
