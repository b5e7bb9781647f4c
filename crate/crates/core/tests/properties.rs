use proptest::prelude::*;

use sofi_crb::blink::{joint_cumulant, FrameSeries, Pattern};
use sofi_crb::correlation::probability_field;
use sofi_crb::cumulant::{
    cumulants_from_moments, joint_cumulant_from_moments, joint_moment_from_cumulants, moments_from_cumulants,
};
use sofi_crb::export::format_f64;
use sofi_crb::fisher::{fisher_matrix, fisher_results, FisherMode, FisherPolicy};
use sofi_crb::geometry::{build_grid, build_line_config, Dims, GridSpec, Point, PsfModel, SourceConfig};

const STEP: f64 = 0.05;

fn config_strategy() -> impl Strategy<Value = SourceConfig> {
    (1usize..=3, any::<bool>())
        .prop_flat_map(|(m, two_d)| {
            (
                proptest::collection::vec((-1.2f64..1.2, -1.2f64..1.2), m),
                proptest::collection::vec(0.1f64..1.0, m),
                proptest::collection::vec(0.1f64..1.0, m),
                Just(two_d),
            )
        })
        .prop_filter_map("distinct sources", |(xy, alphas, xis, two_d)| {
            let dims = if two_d { Dims::Two } else { Dims::One };
            let positions: Vec<Point> = xy
                .iter()
                .map(|&(x, y)| if two_d { [x, y] } else { [x, 0.0] })
                .collect();
            SourceConfig::new(dims, positions, alphas, xis, PsfModel::default()).ok()
        })
}

fn grid_step(cfg: &SourceConfig) -> f64 {
    if cfg.dims() == Dims::One {
        STEP
    } else {
        2.0 * STEP
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn hand_second(d: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let n = d[0].len();
    (0..n).map(|t| d[i][t] * d[j][t]).sum::<f64>() / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fisher_is_symmetric_psd(cfg in config_strategy(), n in 1usize..=6) {
        let grid = build_grid(&cfg, &GridSpec::new(grid_step(&cfg), 2.0)).unwrap();
        let fr = fisher_matrix(&probability_field(&cfg, &grid, n).unwrap()).unwrap();
        prop_assert_eq!(&fr.matrix, &fr.matrix.transpose());
        let top = max_abs(fr.eigenvalues.iter().copied());
        prop_assert!(fr.eigenvalues.iter().all(|e| *e >= -1e-12 * top), "{:?}", fr.eigenvalues);
    }

    #[test]
    fn probabilities_normalized(cfg in config_strategy(), n in 1usize..=8) {
        let grid = build_grid(&cfg, &GridSpec::new(grid_step(&cfg), 2.0)).unwrap();
        let pf = probability_field(&cfg, &grid, n).unwrap();
        let total: f64 = pf.probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for mu in 0..pf.num_params() {
            let s: f64 = (0..pf.len()).map(|j| pf.grad(j)[mu]).sum();
            prop_assert!(s.abs() < 1e-10, "param {mu}: {s}");
        }
    }

    #[test]
    fn amplitude_scale_invariance(cfg in config_strategy(), n in 1usize..=6, c in 0.2f64..5.0) {
        let grid = build_grid(&cfg, &GridSpec::new(grid_step(&cfg), 2.0)).unwrap();
        let a = probability_field(&cfg, &grid, n).unwrap();
        let b = probability_field(&cfg.with_scaled_alphas(c).unwrap(), &grid, n).unwrap();
        let pmax = max_abs(a.probs.iter().copied());
        let gmax = max_abs(a.grads.iter().copied());
        prop_assert!(a.probs.iter().zip(&b.probs).all(|(x, y)| (x - y).abs() <= 1e-10 * pmax));
        prop_assert!(a.grads.iter().zip(&b.grads).all(|(x, y)| (x - y).abs() <= 1e-10 * gmax));
        let fa = fisher_matrix(&a).unwrap();
        let fb = fisher_matrix(&b).unwrap();
        prop_assert!((&fa.matrix - &fb.matrix).amax() <= 1e-10 * fa.matrix.amax());
    }

    #[test]
    fn translation_invariance(cfg in config_strategy(), n in 1usize..=5, kx in -20i32..20, ky in -20i32..20) {
        let step = grid_step(&cfg);
        let spec = GridSpec::new(step, 2.0);
        let moved = cfg.translated([kx as f64 * step, ky as f64 * step]).unwrap();
        let fa = fisher_matrix(&probability_field(&cfg, &build_grid(&cfg, &spec).unwrap(), n).unwrap()).unwrap();
        let fb = fisher_matrix(&probability_field(&moved, &build_grid(&moved, &spec).unwrap(), n).unwrap()).unwrap();
        prop_assert!((&fa.matrix - &fb.matrix).amax() <= 1e-8 * fa.matrix.amax());
    }

    #[test]
    fn cumulative_bound_never_increases(cfg in config_strategy()) {
        let grid = build_grid(&cfg, &GridSpec::new(grid_step(&cfg), 2.0)).unwrap();
        let cum = fisher_results(&cfg, &grid, 8, FisherMode::Cumulative, &FisherPolicy::default()).unwrap();
        for w in cum.windows(2) {
            let (a, b) = (w[0].trace_inverse, w[1].trace_inverse);
            prop_assert!(a.is_infinite() || b <= a + 1e-10 * a, "n={}: {a} -> {b}", w[0].order);
        }
    }

    #[test]
    fn mirror_pair_has_equal_diagonal(k in 2u32..40, n in 1usize..=6) {
        let d = k as f64 * STEP;
        let cfg = build_line_config(2, d, &0.3.into(), &0.4.into(), 1.0).unwrap();
        let grid = build_grid(&cfg, &GridSpec::new(STEP, 2.0)).unwrap();
        let f = fisher_matrix(&probability_field(&cfg, &grid, n).unwrap()).unwrap().matrix;
        prop_assert!((f[(0, 0)] - f[(1, 1)]).abs() <= 1e-9 * f[(0, 0)]);
    }

    #[test]
    fn univariate_moment_cumulant_round_trip(data in proptest::collection::vec(-2.0f64..2.0, 20..200)) {
        let n = data.len() as f64;
        let moments: Vec<f64> = (1..=6).map(|k| data.iter().map(|x| x.powi(k)).sum::<f64>() / n).collect();
        let back = moments_from_cumulants(&cumulants_from_moments(&moments));
        for (m, b) in moments.iter().zip(&back) {
            prop_assert!((m - b).abs() <= 1e-10 * m.abs().max(1.0));
        }
    }

    #[test]
    fn joint_moment_cumulant_round_trip(
        rows in proptest::collection::vec(proptest::collection::vec(-1.5f64..1.5, 6), 20..120),
        order in 1usize..=6,
    ) {
        let t = rows.len() as f64;
        let moment = |mask: u32| -> f64 {
            rows.iter()
                .map(|r| (0..order).filter(|i| mask & (1 << i) != 0).map(|i| r[i]).product::<f64>())
                .sum::<f64>() / t
        };
        let cumulant = |mask: u32| -> f64 {
            let idx: Vec<usize> = (0..order).filter(|i| mask & (1 << i) != 0).collect();
            joint_cumulant_from_moments(idx.len(), |sub| {
                let mut full = 0u32;
                for (bit, &i) in idx.iter().enumerate() {
                    if sub & (1 << bit) != 0 {
                        full |= 1 << i;
                    }
                }
                moment(full)
            }).unwrap()
        };
        let full = (1u32 << order) - 1;
        let back = joint_moment_from_cumulants(order, cumulant).unwrap();
        let direct = moment(full);
        prop_assert!((back - direct).abs() <= 1e-10 * direct.abs().max(1.0), "{back} vs {direct}");
    }

    #[test]
    fn partition_formula_matches_hand_coded(
        rows in proptest::collection::vec(proptest::collection::vec(0.0f64..3.0, 4), 10..300),
        i in 0usize..4, j in 0usize..4, k in 0usize..4, l in 0usize..4,
    ) {
        let per_source: Vec<Vec<f64>> = (0..4).map(|s| rows.iter().map(|r| r[s]).collect()).collect();
        let series = FrameSeries::new(per_source.clone()).unwrap();
        let d: Vec<Vec<f64>> = per_source
            .iter()
            .map(|x| {
                let mean = x.iter().sum::<f64>() / x.len() as f64;
                x.iter().map(|v| v - mean).collect()
            })
            .collect();
        let t = rows.len();

        let two = joint_cumulant(&series, &Pattern::new(vec![i, j]).unwrap()).unwrap();
        let expect2 = hand_second(&d, i, j);
        prop_assert!((two - expect2).abs() <= 1e-12 * hand_second(&d, i, i).max(hand_second(&d, j, j)));

        let four = joint_cumulant(&series, &Pattern::new(vec![i, j, k, l]).unwrap()).unwrap();
        let expect4 = (0..t).map(|s| d[i][s] * d[j][s] * d[k][s] * d[l][s]).sum::<f64>() / t as f64
            - hand_second(&d, i, j) * hand_second(&d, k, l)
            - hand_second(&d, i, k) * hand_second(&d, j, l)
            - hand_second(&d, i, l) * hand_second(&d, j, k);
        let scale = (0..t).map(|s| (d[i][s] * d[j][s] * d[k][s] * d[l][s]).abs()).sum::<f64>() / t as f64;
        prop_assert!((four - expect4).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn pattern_text_round_trip(idx in proptest::collection::vec(0usize..5, 1..=8)) {
        let p = Pattern::new(idx).unwrap();
        prop_assert_eq!(p.to_string().parse::<Pattern>().unwrap(), p);
    }

    #[test]
    fn csv_numbers_round_trip(v in prop_oneof![any::<f64>(), -1e8f64..1e8, -1e-3f64..1e-3]) {
        prop_assume!(v.is_finite());
        prop_assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
    }
}
