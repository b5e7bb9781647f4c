use super::check_order;
use crate::error::Result;
use crate::geometry::{Point, SourceConfig};

/// Coefficients above this are accumulated in the log domain.
const LOG_DOMAIN_ABOVE: f64 = 1e15;

/// Exact multinomial coefficient `n! / Π k_j!`, `None` on `u128` overflow.
fn multinomial_exact(parts: &[usize]) -> Option<u128> {
    let mut total: u128 = 1;
    let mut seen = 0usize;
    for &k in parts {
        // C(seen + k, k) built incrementally; every prefix is an integer.
        for i in 1..=k {
            seen += 1;
            total = total.checked_mul(seen as u128)? / i as u128;
        }
    }
    Some(total)
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|v| (v as f64).ln()).sum()
}

fn for_each_composition(n: usize, m: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, slot: usize, parts: &mut [usize], f: &mut impl FnMut(&[usize])) {
        if slot + 1 == parts.len() {
            parts[slot] = rest;
            f(parts);
            return;
        }
        for k in 0..=rest {
            parts[slot] = k;
            rec(rest - k, slot + 1, parts, f);
        }
    }
    let mut parts = vec![0; m];
    rec(n, 0, &mut parts, f);
}

/// `G⁽ⁿ⁾(r)` as the multinomial sum over compositions `n_1 + .. + n_M = n`:
/// `Σ n!/(n_1!..n_M!) Π_j q_j^{n_j} (ξ_j if n_j > 0 else 1)`.
///
/// Enumerates `C(n+M-1, M-1)` terms; intended as a cross-check of
/// [`super::gn_subset`].
pub fn gn_multinomial(config: &SourceConfig, r: Point, n: usize) -> Result<f64> {
    check_order(n)?;
    let q = config.brightness(r);
    let xis = config.xis();
    let mut total = 0.0;
    for_each_composition(n, q.len(), &mut |parts| {
        let coef = multinomial_exact(parts).map(|c| c as f64);
        match coef {
            Some(c) if c <= LOG_DOMAIN_ABOVE => {
                let mut term = c;
                for ((&k, qj), xi) in parts.iter().zip(&q).zip(xis) {
                    if k > 0 {
                        term *= qj.powi(k as i32) * xi;
                    }
                }
                total += term;
            }
            _ => {
                let mut ln_term = ln_factorial(n);
                for ((&k, qj), xi) in parts.iter().zip(&q).zip(xis) {
                    if k > 0 {
                        if *qj == 0.0 {
                            return;
                        }
                        ln_term += k as f64 * qj.ln() + xi.ln() - ln_factorial(k);
                    }
                }
                total += ln_term.exp();
            }
        }
    });
    Ok(total)
}

/// Two identical-`ξ` sources:
/// `ξ(q1ⁿ + q2ⁿ) + ξ² Σ_{m=1}^{n-1} C(n, m) q1^m q2^{n-m}`.
pub fn gn_two_source(xi: f64, q1: f64, q2: f64, n: usize) -> Result<f64> {
    check_order(n)?;
    let ni = n as i32;
    let mut cross = 0.0;
    let mut binom = 1.0;
    for m in 1..n {
        binom = binom * (n - m + 1) as f64 / m as f64;
        cross += binom * q1.powi(m as i32) * q2.powi(ni - m as i32);
    }
    Ok(xi * (q1.powi(ni) + q2.powi(ni)) + xi * xi * cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Dims, PsfModel};

    #[test]
    fn multinomial_coefficients() {
        assert_eq!(multinomial_exact(&[2, 1, 1]), Some(12));
        assert_eq!(multinomial_exact(&[0, 5]), Some(1));
        assert_eq!(multinomial_exact(&[3, 3]), Some(20));
        assert_eq!(multinomial_exact(&[20, 20]), Some(137_846_528_820));
    }

    #[test]
    fn composition_count() {
        let mut count = 0;
        for_each_composition(6, 4, &mut |p| {
            assert_eq!(p.iter().sum::<usize>(), 6);
            count += 1;
        });
        assert_eq!(count, 84);
    }

    #[test]
    fn single_source_single_term() {
        let cfg = SourceConfig::new(Dims::One, vec![[0.1, 0.0]], vec![0.3], vec![0.4], PsfModel::default()).unwrap();
        let r = [0.35, 0.0];
        let q = cfg.brightness(r)[0];
        for n in 1..=5 {
            let g = gn_multinomial(&cfg, r, n).unwrap();
            assert!((g - 0.4 * q.powi(n as i32)).abs() <= 1e-15 * g);
        }
    }

    #[test]
    fn two_source_hand_expansion() {
        let (q1, q2, xi) = (0.031, 0.017, 0.4);
        let hand = xi * (q1 * q1 + q2 * q2) + xi * xi * 2.0 * q1 * q2;
        assert!((gn_two_source(xi, q1, q2, 2).unwrap() - hand).abs() < 1e-18);
        assert!((gn_two_source(xi, q1, q2, 1).unwrap() - xi * (q1 + q2)).abs() < 1e-18);
        for n in 1..=9 {
            let full = gn_two_source(1.0, q1, q2, n).unwrap();
            let binomial = (q1 + q2).powi(n as i32);
            assert!((full - binomial).abs() <= 1e-14 * binomial);
        }
    }

    #[test]
    fn log_domain_path_agrees_with_subsets() {
        // n = 40 pushes most coefficients past the log-domain threshold
        let cfg = SourceConfig::new(
            Dims::One,
            vec![[-0.3, 0.0], [0.4, 0.0]],
            vec![2.0, 2.5],
            vec![0.4, 0.7],
            PsfModel::default(),
        )
        .unwrap();
        let r = [0.05, 0.0];
        let a = gn_multinomial(&cfg, r, 40).unwrap();
        let b = crate::correlation::gn_subset(&cfg, r, 40).unwrap();
        assert!((a - b).abs() <= 1e-11 * b, "{a} vs {b}");
    }
}
