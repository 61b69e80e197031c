//! Randomized checks of the swap and threshold lemmas.

use explicable::loss::{self, LemmaTrial, LossError, Penalty};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LemmaSummary {
    pub lemma1_pass: usize,
    pub lemma1_fail: usize,
    pub lemma2_pass: usize,
    pub lemma2_fail: usize,
    /// Trials within the band around the threshold.
    pub lemma2_boundary: usize,
    /// Off-boundary trials where `w_a > tau * w_b` matches the loss change.
    pub tau_rule_agree: usize,
    pub tau_rule_disagree: usize,
}

fn swap_trial(rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64) {
    let w_ci = rng.random::<f64>();
    let w_ce = w_ci + rng.random_range(1e-6..1.0);
    let l = rng.random_range(1e-6..0.5);
    let h = l + rng.random_range(1e-6..0.5);
    (w_ce, w_ci, h, l)
}

fn threshold_trial(rng: &mut ChaCha8Rng) -> LemmaTrial {
    let n = rng.random_range(3..=10);
    let epsilon = rng.random_range(0.001..0.3);
    let mut base: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = base.iter().sum();
    base.iter_mut().for_each(|p| *p *= (1.0 - epsilon) / s);
    let class_a = rng.random_range(0..n);
    let class_b = (class_a + rng.random_range(1..n)) % n;
    let mut weight_row: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    // Every tenth trial sits exactly on the threshold.
    if rng.random_range(0..10) == 0 {
        let t = loss::penalty_threshold(base[class_a], base[class_b], epsilon).unwrap_or(1.0);
        weight_row[class_a] = t * weight_row[class_b];
    }
    LemmaTrial {
        weight_row,
        base_probs: base,
        class_a,
        class_b,
        epsilon,
    }
}

pub fn verify(trials: usize, seed: u64) -> Result<LemmaSummary, LossError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = LemmaSummary::default();
    for _ in 0..trials {
        let (w_ce, w_ci, h, l) = swap_trial(&mut rng);
        let out = loss::lemma1_check(w_ce, w_ci, h, l)?;
        let direct = out.loss_explicable - out.loss_inexplicable;
        if out.difference < 0.0 && (direct - out.difference).abs() <= 1e-12 {
            s.lemma1_pass += 1;
        } else {
            s.lemma1_fail += 1;
        }
    }
    for _ in 0..trials {
        let trial = threshold_trial(&mut rng);
        let out = loss::lemma2_check(&trial)?;
        if out.consistent() {
            s.lemma2_pass += 1;
        } else {
            s.lemma2_fail += 1;
        }
        if out.predicted == Penalty::Boundary {
            s.lemma2_boundary += 1;
        }
        if out.tau_rule != Penalty::Boundary {
            if out.tau_rule_consistent() {
                s.tau_rule_agree += 1;
            } else {
                s.tau_rule_disagree += 1;
            }
        }
    }
    Ok(s)
}
