//! Weighted categorical cross-entropy and its lemma checks.
//!
//! For a weight row `w` (the row of the true class) and a distribution `p`
//! the loss is `-sum_j w_j * ln(max(p_j, 1e-12))`. Terms with `w_j == 0` are
//! skipped, so a one-hot row gives plain cross-entropy.

use thiserror::Error;

/// Probabilities below this are clipped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Distance from 1 allowed for a probability vector's sum.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Width of the band around `w_a == tau * w_b` reported as a boundary case.
pub const BOUNDARY_BAND: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("weight {index} is negative or not finite")]
    NegativeWeight { index: usize },
    #[error("length mismatch: weights have {weights}, inputs have {inputs}")]
    LengthMismatch { weights: usize, inputs: usize },
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("logit {0} is not finite")]
    NonFiniteLogit(usize),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("invalid lemma trial: {0}")]
    InvariantViolation(String),
}

impl LossError {
    pub fn kind(&self) -> &'static str {
        match self {
            LossError::NegativeWeight { .. } => "negative-weight",
            LossError::LengthMismatch { .. } => "length-mismatch",
            LossError::InvalidProbabilities(_) => "invalid-probabilities",
            LossError::NonFiniteLogit(_) => "non-finite-logit",
            LossError::DomainViolation(_) => "domain-violation",
            LossError::InvariantViolation(_) => "invariant-violation",
        }
    }
}

/// A distribution over classes: entries in `[0, 1]` summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self, LossError> {
        if probs.is_empty() {
            return Err(LossError::InvalidProbabilities("empty".into()));
        }
        if let Some(i) = probs.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(LossError::InvalidProbabilities(format!(
                "entry {i} = {} outside [0, 1]",
                probs[i]
            )));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(LossError::InvalidProbabilities(format!("sums to {s}")));
        }
        Ok(ProbVector(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest probability; the lowest index wins exact ties.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Pre-softmax scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(logits: Vec<f64>) -> Result<Self, LossError> {
        if let Some(i) = logits.iter().position(|z| !z.is_finite()) {
            return Err(LossError::NonFiniteLogit(i));
        }
        if logits.is_empty() {
            return Err(LossError::InvalidProbabilities("empty".into()));
        }
        Ok(LogitVector(logits))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Max-shifted softmax; never overflows for finite input.
pub fn softmax(z: &LogitVector) -> ProbVector {
    ProbVector(softmax_slice(&z.0))
}

pub(crate) fn softmax_slice(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

fn check_weights(w: &[f64], n: usize) -> Result<(), LossError> {
    if w.len() != n {
        return Err(LossError::LengthMismatch {
            weights: w.len(),
            inputs: n,
        });
    }
    match w.iter().position(|x| !x.is_finite() || *x < 0.0) {
        Some(index) => Err(LossError::NegativeWeight { index }),
        None => Ok(()),
    }
}

pub(crate) fn weighted_cce_unchecked(w: &[f64], p: &[f64]) -> f64 {
    let mut loss = 0.0;
    for (&wj, &pj) in w.iter().zip(p) {
        if wj != 0.0 {
            loss -= wj * pj.max(PROB_FLOOR).ln();
        }
    }
    loss
}

/// `-sum_j w_j ln p_j` with clipping; zero weights contribute nothing.
pub fn weighted_cce(w_row: &[f64], p: &ProbVector) -> Result<f64, LossError> {
    check_weights(w_row, p.len())?;
    Ok(weighted_cce_unchecked(w_row, &p.0))
}

/// Plain cross-entropy against a class index.
pub fn cce(true_class: usize, p: &ProbVector) -> f64 {
    -p.0[true_class].max(PROB_FLOOR).ln()
}

/// Gradient of `weighted_cce(w, softmax(z))` with respect to `z`:
/// `p_j * sum(w) - w_j`.
pub fn weighted_cce_grad(w_row: &[f64], z: &LogitVector) -> Result<Vec<f64>, LossError> {
    check_weights(w_row, z.0.len())?;
    let p = softmax_slice(&z.0);
    Ok(weighted_grad_from_probs(w_row, &p))
}

pub(crate) fn weighted_grad_from_probs(w: &[f64], p: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    p.iter().zip(w).map(|(&pj, &wj)| pj * total - wj).collect()
}

/// Both sides of a two-way probability swap between an explicable and an
/// inexplicable class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapOutcome {
    /// Loss when the explicable class holds the high probability.
    pub loss_explicable: f64,
    /// Loss after swapping the two probabilities.
    pub loss_inexplicable: f64,
    /// `(ln l - ln h) * (w_ce - w_ci)`.
    pub difference: f64,
}

pub fn lemma1_check(w_ce: f64, w_ci: f64, h: f64, l: f64) -> Result<SwapOutcome, LossError> {
    if !(w_ce.is_finite() && w_ci.is_finite() && w_ce >= 0.0 && w_ci >= 0.0) {
        return Err(LossError::DomainViolation(
            "weights must be finite and non-negative".into(),
        ));
    }
    if !(0.0 < l && l < h && h < 1.0) {
        return Err(LossError::DomainViolation(format!(
            "need 0 < l < h < 1, got l={l}, h={h}"
        )));
    }
    let (lh, ll) = (h.ln(), l.ln());
    Ok(SwapOutcome {
        loss_explicable: -w_ce * lh - w_ci * ll,
        loss_inexplicable: -w_ce * ll - w_ci * lh,
        difference: (ll - lh) * (w_ce - w_ci),
    })
}

/// Ratio `ln((p_a + eps)/p_a) / ln((p_b + eps)/p_b)`, which exceeds 1 when
/// `p_a < p_b`.
///
/// Note that the loss comparison itself is decided by the reciprocal of this
/// ratio; see [`penalty_threshold`].
pub fn lemma2_tau(p_a: f64, p_b: f64, epsilon: f64) -> Result<f64, LossError> {
    let ok = |p: f64| p > 0.0 && p + epsilon <= 1.0;
    if !(epsilon > 0.0 && epsilon.is_finite() && ok(p_a) && ok(p_b)) {
        return Err(LossError::DomainViolation(format!(
            "need p_a, p_b > 0, eps > 0 and p + eps <= 1; got p_a={p_a}, p_b={p_b}, eps={epsilon}"
        )));
    }
    if p_a == p_b {
        return Ok(1.0);
    }
    Ok((epsilon / p_a).ln_1p() / (epsilon / p_b).ln_1p())
}

/// Weight ratio `w_a / w_b` above which moving `eps` of probability from
/// class `a` onto class `b` raises the weighted loss:
/// `ln((p_b + eps)/p_b) / ln((p_a + eps)/p_a)`, i.e. `1 / lemma2_tau`.
///
/// The loss difference is `w_a ln(1 + eps/p_a) - w_b ln(1 + eps/p_b)`, so the
/// shift is penalized exactly when `w_a > threshold * w_b`.
pub fn penalty_threshold(p_a: f64, p_b: f64, epsilon: f64) -> Result<f64, LossError> {
    let tau = lemma2_tau(p_a, p_b, epsilon)?;
    if tau == 1.0 {
        return Ok(1.0);
    }
    Ok((epsilon / p_b).ln_1p() / (epsilon / p_a).ln_1p())
}

/// Two scenarios differing only in where `epsilon` of probability sits.
///
/// `base_probs` holds `p_a` at `class_a`, `p_b` at `class_b` and the fixed
/// probabilities of every other class; it sums to `1 - epsilon` so that both
/// scenarios are distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaTrial {
    pub weight_row: Vec<f64>,
    pub base_probs: Vec<f64>,
    pub class_a: usize,
    pub class_b: usize,
    pub epsilon: f64,
}

impl LemmaTrial {
    pub fn validate(&self) -> Result<(), LossError> {
        let n = self.weight_row.len();
        let bad = |m: String| Err(LossError::InvariantViolation(m));
        if self.base_probs.len() != n {
            return bad(format!(
                "{} weights but {} probabilities",
                n,
                self.base_probs.len()
            ));
        }
        if self.class_a >= n || self.class_b >= n || self.class_a == self.class_b {
            return bad(format!(
                "classes a={} and b={} must be distinct and < {n}",
                self.class_a, self.class_b
            ));
        }
        if let Some(i) = self
            .weight_row
            .iter()
            .position(|w| !w.is_finite() || *w < 0.0)
        {
            return bad(format!("weight {i} is negative or not finite"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        if self.base_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("probabilities must lie in [0, 1]".into());
        }
        if self.base_probs[self.class_a] <= 0.0 || self.base_probs[self.class_b] <= 0.0 {
            return bad("p_a and p_b must be positive".into());
        }
        if self.base_probs[self.class_b] + self.epsilon > 1.0
            || self.base_probs[self.class_a] + self.epsilon > 1.0
        {
            return bad("p + epsilon exceeds 1".into());
        }
        let total: f64 = self.base_probs.iter().sum::<f64>() + self.epsilon;
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return bad(format!(
                "base probabilities plus epsilon sum to {total}, not 1"
            ));
        }
        Ok(())
    }

    fn scenario(&self, shifted_to: usize) -> Vec<f64> {
        let mut p = self.base_probs.clone();
        p[shifted_to] += self.epsilon;
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Penalty {
    /// Shifting `epsilon` onto `b` raises the loss.
    Penalized,
    /// Shifting `epsilon` onto `b` lowers the loss.
    NotPenalized,
    /// `w_a` is within the boundary band of `tau * w_b`.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOutcome {
    /// Loss with `epsilon` on class `b`.
    pub loss_high: f64,
    /// Loss with `epsilon` on class `a`.
    pub loss_low: f64,
    /// Direct comparison of the two losses.
    pub penalized: bool,
    /// [`lemma2_tau`] for this trial.
    pub tau: f64,
    /// [`penalty_threshold`] for this trial.
    pub threshold: f64,
    /// Prediction from `w_a` versus `threshold * w_b`.
    pub predicted: Penalty,
    /// Prediction from `w_a` versus `tau * w_b`.
    pub tau_rule: Penalty,
}

fn classify(margin: f64) -> Penalty {
    if margin.abs() <= BOUNDARY_BAND {
        Penalty::Boundary
    } else if margin > 0.0 {
        Penalty::Penalized
    } else {
        Penalty::NotPenalized
    }
}

impl ThresholdOutcome {
    fn agrees(&self, rule: Penalty) -> bool {
        match rule {
            Penalty::Penalized => self.penalized,
            Penalty::NotPenalized => !self.penalized,
            Penalty::Boundary => (self.loss_high - self.loss_low).abs() <= BOUNDARY_BAND,
        }
    }

    /// True when the direct loss comparison agrees with the threshold rule.
    /// Boundary cases agree when the two losses match within the band.
    pub fn consistent(&self) -> bool {
        self.agrees(self.predicted)
    }

    /// Same check against the `w_a > tau * w_b` rule. Boundary cases of that
    /// rule are excluded and count as agreeing.
    pub fn tau_rule_consistent(&self) -> bool {
        self.tau_rule == Penalty::Boundary || self.agrees(self.tau_rule)
    }
}

pub fn lemma2_check(trial: &LemmaTrial) -> Result<ThresholdOutcome, LossError> {
    trial.validate()?;
    let (a, b) = (trial.class_a, trial.class_b);
    let (p_a, p_b) = (trial.base_probs[a], trial.base_probs[b]);
    let tau = lemma2_tau(p_a, p_b, trial.epsilon)?;
    let threshold = penalty_threshold(p_a, p_b, trial.epsilon)?;
    let loss_high = weighted_cce_unchecked(&trial.weight_row, &trial.scenario(b));
    let loss_low = weighted_cce_unchecked(&trial.weight_row, &trial.scenario(a));
    let (w_a, w_b) = (trial.weight_row[a], trial.weight_row[b]);
    Ok(ThresholdOutcome {
        loss_high,
        loss_low,
        penalized: loss_high > loss_low,
        tau,
        threshold,
        predicted: classify(w_a - threshold * w_b),
        tau_rule: classify(w_a - tau * w_b),
    })
}
