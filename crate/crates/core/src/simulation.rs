//! Three-class loss landscapes for the weighted cross-entropy.
//!
//! Class 0 is correct, class 1 (`c`) is the semantically closer mistake and
//! class 2 (`f`) the farther one. For each fixed correct-class probability
//! the sweep moves mass from `c` to `f` and records the weighted loss next to
//! plain cross-entropy. [`regime_report`] checks each step of the sweep
//! against the penalty threshold rule, and separately against the
//! `w_c > tau * w_f` rule.

use thiserror::Error;

use crate::loss::{self, LemmaTrial, LossError, Penalty, ProbVector, BOUNDARY_BAND};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("p_true = {0} leaves no interior sweep points")]
    InfeasibleGrid(f64),
    #[error(transparent)]
    Loss(#[from] LossError),
}

impl SimError {
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::InvalidConfig(_) => "invalid-config",
            SimError::InfeasibleGrid(_) => "infeasible-grid",
            SimError::Loss(e) => e.kind(),
        }
    }
}

/// Relative weight at or above which a mistake counts as explicable when
/// labelling regimes.
pub const EXPLICABLE_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub w_correct: f64,
    pub w_c: f64,
    pub w_f: f64,
    pub p_true_grid: Vec<f64>,
    pub p_f_step: f64,
    /// Probability shifted from `c` to `f` when evaluating the threshold
    /// rule. Must be a whole number of sweep steps.
    pub epsilon: f64,
}

impl SimConfig {
    pub fn new(w_c: f64, w_f: f64) -> Self {
        SimConfig {
            w_correct: 1.0,
            w_c,
            w_f,
            p_true_grid: vec![0.1, 0.3, 0.5, 0.7],
            p_f_step: 0.01,
            epsilon: 0.01,
        }
    }

    fn validate(&self) -> Result<usize, SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if [self.w_correct, self.w_c, self.w_f]
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return bad("weights must be finite and non-negative");
        }
        if !(self.p_f_step > 0.0 && self.p_f_step < 1.0) {
            return bad("p_f_step must lie in (0, 1)");
        }
        if self.p_true_grid.is_empty() || self.p_true_grid.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return bad("p_true values must lie in (0, 1)");
        }
        let steps = self.epsilon / self.p_f_step;
        let whole = steps.round();
        if !(whole >= 1.0 && (steps - whole).abs() < 1e-9) {
            return bad("epsilon must be a positive whole number of p_f steps");
        }
        Ok(whole as usize)
    }

    pub fn regime(&self) -> Regime {
        let explicable = |w: f64| w >= EXPLICABLE_THRESHOLD * self.w_correct;
        match (explicable(self.w_c), explicable(self.w_f)) {
            (true, true) => Regime::BothExplicable,
            (false, false) => Regime::BothInexplicable,
            _ => Regime::ExplicableVsInexplicable,
        }
    }

    fn weight_row(&self) -> [f64; 3] {
        [self.w_correct, self.w_c, self.w_f]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ExplicableVsInexplicable,
    BothInexplicable,
    BothExplicable,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::ExplicableVsInexplicable => "explicable-vs-inexplicable",
            Regime::BothInexplicable => "both-inexplicable",
            Regime::BothExplicable => "both-explicable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Sweep index; `p_f = step * k`.
    pub k: usize,
    pub p_f: f64,
    pub p_c: f64,
    pub loss: f64,
    pub loss_cce: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    pub p_true: f64,
    pub points: Vec<CurvePoint>,
    pub regime: Regime,
}

pub fn sweep(config: &SimConfig) -> Result<Vec<LossCurve>, SimError> {
    config.validate()?;
    let w = config.weight_row();
    let step = config.p_f_step;
    let mut curves = Vec::with_capacity(config.p_true_grid.len());
    let mut grid = config.p_true_grid.clone();
    grid.sort_by(f64::total_cmp);
    for p_true in grid {
        let rest = 1.0 - p_true;
        let last = ((rest / step + 1e-9).floor() as usize).saturating_sub(1);
        if last == 0 {
            return Err(SimError::InfeasibleGrid(p_true));
        }
        let mut points = Vec::with_capacity(last);
        for k in 1..=last {
            let p_f = step * k as f64;
            let p_c = rest - p_f;
            let probs = ProbVector::new(vec![p_true, p_c, p_f])?;
            points.push(CurvePoint {
                k,
                p_f,
                p_c,
                loss: loss::weighted_cce(&w, &probs)?,
                loss_cce: loss::cce(0, &probs),
            });
        }
        curves.push(LossCurve {
            p_true,
            points,
            regime: config.regime(),
        });
    }
    Ok(curves)
}

/// One step of the sweep compared against the threshold rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCheck {
    pub p_true: f64,
    pub p_f: f64,
    pub tau: f64,
    pub threshold: f64,
    /// `w_c` versus `threshold * w_f`.
    pub predicted: Penalty,
    /// `w_c` versus `tau * w_f`.
    pub tau_rule: Penalty,
    /// Loss after the shift minus loss before it, from the curve points.
    pub loss_delta: f64,
    pub consistent: bool,
    pub tau_rule_consistent: bool,
}

fn sign_matches(rule: Penalty, delta: f64) -> bool {
    match rule {
        Penalty::Penalized => delta > 0.0,
        Penalty::NotPenalized => delta < 0.0,
        Penalty::Boundary => delta.abs() <= BOUNDARY_BAND,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeVerdict {
    pub regime: Regime,
    pub w_c: f64,
    pub w_f: f64,
    pub steps: Vec<StepCheck>,
    /// The loss rises at every step of every curve.
    pub monotone_overall: bool,
    /// Every step's loss change has the sign the threshold rule predicts.
    pub condition_consistent: bool,
    /// Every step outside the tau rule's boundary band has the sign that
    /// rule predicts.
    pub tau_rule_consistent: bool,
    /// Steps where shifting mass to `f` lowered the loss.
    pub violations: usize,
    /// Violations among steps where the threshold rule predicts a penalty.
    pub violations_where_condition_holds: usize,
    /// Violations among steps where the tau rule predicts a penalty.
    pub violations_where_tau_rule_holds: usize,
    /// Raising `p_true` lowers plain cross-entropy at least as much as the
    /// weighted loss at every shared `p_f`.
    pub cce_more_sensitive_to_correct_class: bool,
}

pub fn regime_report(curves: &[LossCurve], config: &SimConfig) -> Result<RegimeVerdict, SimError> {
    let shift = config.validate()?;
    let w = config.weight_row();
    let mut steps = Vec::new();
    for curve in curves {
        for (i, lo) in curve.points.iter().enumerate() {
            let Some(hi) = curve.points.get(i + shift) else {
                break;
            };
            let trial = LemmaTrial {
                weight_row: w.to_vec(),
                base_probs: vec![curve.p_true, hi.p_c, lo.p_f],
                class_a: 1,
                class_b: 2,
                epsilon: config.epsilon,
            };
            let outcome = loss::lemma2_check(&trial)?;
            let loss_delta = hi.loss - lo.loss;
            steps.push(StepCheck {
                p_true: curve.p_true,
                p_f: lo.p_f,
                tau: outcome.tau,
                threshold: outcome.threshold,
                predicted: outcome.predicted,
                tau_rule: outcome.tau_rule,
                loss_delta,
                consistent: outcome.consistent() && sign_matches(outcome.predicted, loss_delta),
                tau_rule_consistent: outcome.tau_rule == Penalty::Boundary
                    || sign_matches(outcome.tau_rule, loss_delta),
            });
        }
    }

    let violations = steps.iter().filter(|s| s.loss_delta < 0.0).count();
    let violations_where_condition_holds = steps
        .iter()
        .filter(|s| s.predicted == Penalty::Penalized && s.loss_delta < 0.0)
        .count();
    let violations_where_tau_rule_holds = steps
        .iter()
        .filter(|s| s.tau_rule == Penalty::Penalized && s.loss_delta < 0.0)
        .count();

    let mut cce_more_sensitive = true;
    for pair in curves.windows(2) {
        let (low, high) = (&pair[0], &pair[1]);
        for a in &low.points {
            if let Some(b) = high.points.iter().find(|b| b.k == a.k) {
                if a.loss_cce - b.loss_cce < a.loss - b.loss {
                    cce_more_sensitive = false;
                }
            }
        }
    }

    Ok(RegimeVerdict {
        regime: config.regime(),
        w_c: config.w_c,
        w_f: config.w_f,
        monotone_overall: steps.iter().all(|s| s.loss_delta > 0.0),
        condition_consistent: steps.iter().all(|s| s.consistent),
        tau_rule_consistent: steps.iter().all(|s| s.tau_rule_consistent),
        violations,
        violations_where_condition_holds,
        violations_where_tau_rule_holds,
        cce_more_sensitive_to_correct_class: cce_more_sensitive,
        steps,
    })
}
