use explicable::formats;
use explicable::loss::{self, LemmaTrial, Penalty};
use explicable::metrics::{self, MisclassifiedInstance};
use explicable::trainer::{self, Dataset, SyntheticSpec, TrainConfig};
use explicable::weights::{self, RatingRecord};
use explicable::{LogitVector, ProbVector, Taxonomy, WeightMatrix};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

/// Parent indices for a random tree: node `i > 0` hangs under `parents[i - 1] % i`.
fn tree_text(parents: &[usize]) -> (String, usize) {
    let n = parents.len() + 1;
    let lines: Vec<String> = parents
        .iter()
        .enumerate()
        .map(|(i, p)| format!("n{}\tn{}", p % (i + 1), i + 1))
        .collect();
    (lines.join("\n"), n)
}

fn prob_vector(raw: Vec<f64>) -> ProbVector {
    let s: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|v| v / s).collect();
    let rest: f64 = p[1..].iter().sum();
    p[0] = 1.0 - rest;
    ProbVector::new(p).unwrap()
}

fn weight_matrix(n: usize, seedvals: &[f64]) -> WeightMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    let mut it = seedvals.iter().cycle();
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { 1.0 } else { *it.next().unwrap() };
        }
    }
    WeightMatrix::new(names(n), rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn taxonomy_ignores_edge_order(parents in prop::collection::vec(0usize..50, 1..30), rot in 0usize..30) {
        let (text, n) = tree_text(&parents);
        let mut lines: Vec<&str> = text.lines().collect();
        let k = rot % lines.len();
        lines.rotate_left(k);
        lines.reverse();
        let a = Taxonomy::parse(&text).unwrap();
        let b = Taxonomy::parse(&lines.join("\n")).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), n);
    }

    #[test]
    fn path_similarity_is_symmetric_and_peaks_at_identity(parents in prop::collection::vec(0usize..50, 1..25)) {
        let (text, n) = tree_text(&parents);
        let tax = Taxonomy::parse(&text).unwrap();
        for a in 0..n {
            let na = format!("n{a}");
            prop_assert_eq!(tax.path_similarity(&na, &na).unwrap(), 1.0);
            for b in 0..n {
                let nb = format!("n{b}");
                let s = tax.path_similarity(&na, &nb).unwrap();
                prop_assert_eq!(s, tax.path_similarity(&nb, &na).unwrap());
                if a != b {
                    prop_assert!(s < 1.0);
                }
            }
        }
    }

    #[test]
    fn path_length_triangle_inequality(parents in prop::collection::vec(0usize..50, 1..15)) {
        let (text, n) = tree_text(&parents);
        let tax = Taxonomy::parse(&text).unwrap();
        let d = |a: usize, b: usize| tax.shortest_path_length(&format!("n{a}"), &format!("n{b}")).unwrap();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    prop_assert!(d(a, c) <= d(a, b) + d(b, c));
                }
            }
        }
    }

    #[test]
    fn chl_ignores_rating_order(
        scores in prop::collection::vec(0u8..=4, 6..30),
        perm in any::<u64>(),
    ) {
        let n = 3;
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        let mut ratings: Vec<RatingRecord> = scores
            .iter()
            .enumerate()
            .map(|(k, &score)| RatingRecord {
                rater_id: format!("r{}", k / pairs.len()),
                true_class: pairs[k % pairs.len()].0,
                predicted_class: pairs[k % pairs.len()].1,
                score,
            })
            .collect();
        // Ensure every pair is rated at least once.
        for &(i, j) in &pairs {
            ratings.push(RatingRecord { rater_id: "base".into(), true_class: i, predicted_class: j, score: 2 });
        }
        let a = weights::from_class_ratings(&ratings, names(n)).unwrap();
        let mut shuffled = ratings.clone();
        let len = shuffled.len();
        let mut state = perm;
        for i in (1..len).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        let b = weights::from_class_ratings(&shuffled, names(n)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn normalize_rows_keeps_ranking(n in 2usize..6, vals in prop::collection::vec(0.0f64..1.0, 30)) {
        let w = weight_matrix(n, &vals);
        let m = w.normalize_rows().unwrap();
        prop_assert!(m.is_normalized());
        for i in 0..n {
            for a in 0..n {
                for b in 0..n {
                    prop_assert_eq!(w.get(i, a) < w.get(i, b), m.get(i, a) < m.get(i, b));
                }
            }
            let s: f64 = m.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
        let again = m.normalize_rows().unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((again.get(i, j) - m.get(i, j)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn one_hot_row_is_plain_cce(raw in prop::collection::vec(0.01f64..1.0, 2..8), t in 0usize..8) {
        let p = prob_vector(raw);
        let t = t % p.len();
        let mut w = vec![0.0; p.len()];
        w[t] = 1.0;
        prop_assert!((loss::weighted_cce(&w, &p).unwrap() - loss::cce(t, &p)).abs() <= 1e-12);
    }

    #[test]
    fn soft_target_is_the_minimizer(
        raw_w in prop::collection::vec(0.05f64..1.0, 2..6),
        delta in prop::collection::vec(-0.05f64..0.05, 6),
    ) {
        let w = prob_vector(raw_w).into_inner();
        let n = w.len();
        let mean: f64 = delta[..n].iter().sum::<f64>() / n as f64;
        let p: Vec<f64> = w.iter().zip(&delta).map(|(wi, d)| wi + d - mean).collect();
        prop_assume!(p.iter().all(|&v| v > 0.0 && v < 1.0));
        prop_assume!(p.iter().zip(&w).any(|(a, b)| (a - b).abs() > 1e-6));
        let at_w = loss::weighted_cce(&w, &ProbVector::new(w.clone()).unwrap()).unwrap();
        let at_p = loss::weighted_cce(&w, &prob_vector(p)).unwrap();
        prop_assert!(at_p > at_w);
    }

    #[test]
    fn softmax_shift_invariance(z in prop::collection::vec(-20.0f64..20.0, 1..10), c in -50.0f64..50.0) {
        let a = loss::softmax(&LogitVector::new(z.clone()).unwrap());
        let b = loss::softmax(&LogitVector::new(z.iter().map(|v| v + c).collect()).unwrap());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn swap_always_penalized(w_ci in 0.0f64..1.0, gap in 1e-6f64..1.0, l in 1e-6f64..0.5, hgap in 1e-6f64..0.49) {
        let out = loss::lemma1_check(w_ci + gap, w_ci, l + hgap, l).unwrap();
        prop_assert!(out.difference < 0.0);
        prop_assert!((out.loss_explicable - out.loss_inexplicable - out.difference).abs() <= 1e-12);
    }

    #[test]
    fn threshold_decides_penalty(
        raw in prop::collection::vec(0.05f64..1.0, 3..7),
        w in prop::collection::vec(0.0f64..1.0, 7),
        eps in 0.01f64..0.3,
        ab in (0usize..7, 0usize..7),
    ) {
        let n = raw.len();
        let (a, b) = (ab.0 % n, ab.1 % n);
        prop_assume!(a != b);
        let s: f64 = raw.iter().sum();
        let base: Vec<f64> = raw.iter().map(|v| v * (1.0 - eps) / s).collect();
        let trial = LemmaTrial {
            weight_row: w[..n].to_vec(),
            base_probs: base,
            class_a: a,
            class_b: b,
            epsilon: eps,
        };
        let out = loss::lemma2_check(&trial).unwrap();
        prop_assert!(out.consistent());
        if out.predicted != Penalty::Boundary {
            prop_assert_eq!(out.penalized, out.predicted == Penalty::Penalized);
        }
    }

    #[test]
    fn scores_conserve_credit_and_follow_classifier_order(
        k in 1usize..5,
        picks in prop::collection::vec((0usize..4, prop::collection::vec(0usize..4, 4)), 1..20),
        sim_vals in prop::collection::vec(prop::sample::select(vec![0.25, 0.5, 0.75]), 12),
    ) {
        let n = 4;
        let sim = weight_matrix(n, &sim_vals);
        let m: Vec<MisclassifiedInstance> = picks
            .iter()
            .enumerate()
            .map(|(i, (t, guesses))| MisclassifiedInstance {
                instance_id: format!("i{i}"),
                true_class: *t,
                predicted: guesses[..k].iter().map(|g| if g == t { (g + 1) % n } else { *g }).collect(),
            })
            .collect();
        let cls = names(k);
        let r = metrics::hard_soft_scores(&m, &sim, &cls).unwrap();
        prop_assert_eq!(r.soft_units.iter().sum::<u64>(), m.len() as u64 * r.soft_denominator);
        let hard: u64 = r.hard.iter().sum();
        prop_assert!(hard <= m.len() as u64);
        prop_assert_eq!(hard == m.len() as u64, r.tied_instances == 0);

        let rev: Vec<MisclassifiedInstance> = m
            .iter()
            .map(|x| MisclassifiedInstance { predicted: x.predicted.iter().rev().copied().collect(), ..x.clone() })
            .collect();
        let rev_names: Vec<String> = cls.iter().rev().cloned().collect();
        let r2 = metrics::hard_soft_scores(&rev, &sim, &rev_names).unwrap();
        let back: Vec<u64> = r2.hard.iter().rev().copied().collect();
        prop_assert_eq!(back, r.hard);
        let back: Vec<u64> = r2.soft_units.iter().rev().copied().collect();
        prop_assert_eq!(back, r.soft_units);
    }

    #[test]
    fn weight_matrix_csv_round_trip(n in 1usize..6, vals in prop::collection::vec(0.0f64..1.0, 30)) {
        let w = weight_matrix(n, &vals).normalize_rows().unwrap();
        let back = formats::read_weight_matrix(&formats::write_weight_matrix(&w)).unwrap();
        prop_assert_eq!(back.class_names(), w.class_names());
        for i in 0..n {
            for j in 0..n {
                prop_assert!((back.get(i, j) - w.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn dataset_csv_round_trip(rows in prop::collection::vec((prop::collection::vec(-1e6f64..1e6, 3), 0usize..3), 1..20)) {
        let features: Vec<Vec<f64>> = rows.iter().map(|r| r.0.clone()).collect();
        let labels: Vec<usize> = rows.iter().map(|r| r.1).collect();
        let d = Dataset::new(features, labels, names(3)).unwrap();
        let back = formats::read_dataset(&formats::write_dataset(&d), Some(names(3))).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn rating_csv_round_trip(recs in prop::collection::vec(("[a-z0-9_-]{1,8}", 0usize..5, 0usize..5, 0u8..=4), 0..20)) {
        let ratings: Vec<RatingRecord> = recs
            .into_iter()
            .filter(|r| r.1 != r.2)
            .map(|(rater_id, t, p, score)| RatingRecord { rater_id, true_class: t, predicted_class: p, score })
            .collect();
        let back = formats::read_class_ratings(&formats::write_class_ratings(&ratings)).unwrap();
        prop_assert_eq!(back, ratings);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn training_is_reproducible_and_confusion_conserves_rows(seed in 0u64..1000, hidden in subsequence(vec![0usize, 3], 1)) {
        let data = trainer::generate_synthetic(&SyntheticSpec {
            n_classes: 3,
            per_class: 20,
            dims: 2,
            centers: vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]],
            spread: 0.5,
            seed,
        })
        .unwrap();
        let cfg = TrainConfig { epochs: 5, seed, hidden_units: hidden[0], ..TrainConfig::default() };
        let w = WeightMatrix::identity(data.class_names().to_vec()).unwrap();
        let a = trainer::train(&data, &w, &cfg).unwrap();
        let b = trainer::train(&data, &w, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        let conf = trainer::confusion(&a.model, &data).unwrap();
        for (i, row) in conf.iter().enumerate() {
            let count = data.labels().iter().filter(|&&l| l == i).count() as u64;
            prop_assert_eq!(row.iter().sum::<u64>(), count);
        }
        let model_back = formats::read_model(&formats::write_model(&a.model)).unwrap();
        prop_assert_eq!(model_back, a.model);
    }
}
