//! Explicability scores for competing classifiers.
//!
//! Scores are computed over `M`, the instances that every compared
//! classifier gets wrong. For each such instance, a classifier's value is the
//! similarity between the true class and its prediction. The hard score
//! counts instances where a classifier is the unique maximum; the soft score
//! splits one unit of credit evenly among all classifiers at the maximum.
//! A tie for the maximum awards no hard point to anyone.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::loss::{self, LossError, ProbVector};
use crate::weights::WeightMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("no prediction sets given")]
    NoPredictionSets,
    #[error("prediction sets cover different instances ({0})")]
    InstanceCoverageMismatch(String),
    #[error("prediction sets disagree on the true class of instance {0}")]
    TrueClassDisagreement(String),
    #[error("instance {instance} appears twice in {classifier}")]
    DuplicateInstance {
        classifier: String,
        instance: String,
    },
    #[error("class index {index} out of range for {n} classes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("class mismatch: {0}")]
    ClassMismatch(String),
    #[error(transparent)]
    Loss(#[from] LossError),
}

impl MetricsError {
    pub fn kind(&self) -> &'static str {
        match self {
            MetricsError::NoPredictionSets => "no-prediction-sets",
            MetricsError::InstanceCoverageMismatch(_) => "instance-coverage-mismatch",
            MetricsError::TrueClassDisagreement(_) => "true-class-disagreement",
            MetricsError::DuplicateInstance { .. } => "duplicate-instance",
            MetricsError::IndexOutOfRange { .. } => "index-out-of-range",
            MetricsError::ClassMismatch(_) => "class-mismatch",
            MetricsError::Loss(e) => e.kind(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub instance_id: String,
    pub true_class: usize,
    pub probs: ProbVector,
}

/// One classifier's outputs over a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub classifier_name: String,
    pub rows: Vec<PredictionRow>,
}

impl PredictionSet {
    fn by_instance(&self) -> Result<BTreeMap<&str, &PredictionRow>, MetricsError> {
        let mut map = BTreeMap::new();
        for row in &self.rows {
            if map.insert(row.instance_id.as_str(), row).is_some() {
                return Err(MetricsError::DuplicateInstance {
                    classifier: self.classifier_name.clone(),
                    instance: row.instance_id.clone(),
                });
            }
        }
        Ok(map)
    }
}

/// An instance every classifier got wrong, with each classifier's prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MisclassifiedInstance {
    pub instance_id: String,
    pub true_class: usize,
    /// Argmax prediction of each classifier, in prediction-set order.
    pub predicted: Vec<usize>,
}

/// Instances misclassified by every set, ordered by instance id.
pub fn misclassified_intersection(
    sets: &[PredictionSet],
) -> Result<Vec<MisclassifiedInstance>, MetricsError> {
    let first = sets.first().ok_or(MetricsError::NoPredictionSets)?;
    let maps = sets
        .iter()
        .map(PredictionSet::by_instance)
        .collect::<Result<Vec<_>, _>>()?;
    let ids: BTreeSet<&str> = maps[0].keys().copied().collect();
    for (set, map) in sets.iter().zip(&maps).skip(1) {
        let other: BTreeSet<&str> = map.keys().copied().collect();
        if other != ids {
            let stray = ids
                .symmetric_difference(&other)
                .next()
                .copied()
                .unwrap_or_default();
            return Err(MetricsError::InstanceCoverageMismatch(format!(
                "{} vs {} differ at instance {stray}",
                first.classifier_name, set.classifier_name
            )));
        }
    }

    let mut out = Vec::new();
    for id in ids {
        let true_class = maps[0][id].true_class;
        let mut predicted = Vec::with_capacity(sets.len());
        for map in &maps {
            let row = map[id];
            if row.true_class != true_class {
                return Err(MetricsError::TrueClassDisagreement(id.to_string()));
            }
            predicted.push(row.probs.argmax());
        }
        if predicted.iter().all(|&p| p != true_class) {
            out.push(MisclassifiedInstance {
                instance_id: id.to_string(),
                true_class,
                predicted,
            });
        }
    }
    Ok(out)
}

/// `v[c] = sim[true][predicted_c]` for each classifier `c`.
pub fn similarity_of_mistakes(
    m: &MisclassifiedInstance,
    sim: &WeightMatrix,
) -> Result<Vec<f64>, MetricsError> {
    let n = sim.n();
    let check = |index: usize| {
        if index >= n {
            Err(MetricsError::IndexOutOfRange { index, n })
        } else {
            Ok(index)
        }
    };
    let t = check(m.true_class)?;
    m.predicted
        .iter()
        .map(|&p| check(p).map(|p| sim.get(t, p)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub classifier_names: Vec<String>,
    pub hard: Vec<u64>,
    pub soft: Vec<f64>,
    /// Soft scores as exact multiples of `1 / soft_denominator`.
    pub soft_units: Vec<u64>,
    pub soft_denominator: u64,
    /// `|M|`.
    pub intersection_size: usize,
    /// Instances where two or more classifiers shared the maximum.
    pub tied_instances: usize,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn hard_soft_scores(
    m: &[MisclassifiedInstance],
    sim: &WeightMatrix,
    classifier_names: &[String],
) -> Result<ScoreReport, MetricsError> {
    let k = classifier_names.len();
    // Every tie size 1..=k divides this, so soft credit stays integral.
    let denominator = (1..=k as u64).fold(1, |acc, x| acc / gcd(acc, x) * x);
    let mut hard = vec![0u64; k];
    let mut units = vec![0u64; k];
    let mut tied_instances = 0;
    for inst in m {
        if inst.predicted.len() != k {
            return Err(MetricsError::ClassMismatch(format!(
                "instance {} has {} predictions for {k} classifiers",
                inst.instance_id,
                inst.predicted.len()
            )));
        }
        let v = similarity_of_mistakes(inst, sim)?;
        let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners: Vec<usize> = (0..k).filter(|&c| v[c] == best).collect();
        if winners.len() == 1 {
            hard[winners[0]] += 1;
        } else {
            tied_instances += 1;
        }
        let share = denominator / winners.len() as u64;
        for c in winners {
            units[c] += share;
        }
    }
    Ok(ScoreReport {
        classifier_names: classifier_names.to_vec(),
        hard,
        soft: units
            .iter()
            .map(|&u| u as f64 / denominator as f64)
            .collect(),
        soft_units: units,
        soft_denominator: denominator,
        intersection_size: m.len(),
        tied_instances,
    })
}

/// Intersection and scores in one step.
pub fn score_prediction_sets(
    sets: &[PredictionSet],
    sim: &WeightMatrix,
) -> Result<ScoreReport, MetricsError> {
    let m = misclassified_intersection(sets)?;
    let names: Vec<String> = sets.iter().map(|s| s.classifier_name.clone()).collect();
    hard_soft_scores(&m, sim, &names)
}

/// Mean test loss of each model under each weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    pub models: Vec<String>,
    pub losses: Vec<String>,
    /// `values[model][loss]`.
    pub values: Vec<Vec<f64>>,
}

impl LossTable {
    /// Index of the model with the smallest value in column `loss`.
    pub fn column_argmin(&self, loss: usize) -> usize {
        let col: Vec<f64> = self.values.iter().map(|r| r[loss]).collect();
        let mut best = 0;
        for (i, &v) in col.iter().enumerate() {
            if v < col[best] {
                best = i;
            }
        }
        best
    }
}

pub fn loss_table(
    sets: &[PredictionSet],
    losses: &[(String, WeightMatrix)],
) -> Result<LossTable, MetricsError> {
    let mut values = Vec::with_capacity(sets.len());
    for set in sets {
        // Sum in instance-id order so the result does not depend on row order.
        let rows = set.by_instance()?;
        let mut row_out = Vec::with_capacity(losses.len());
        for (name, w) in losses {
            let mut total = 0.0;
            for row in rows.values() {
                if row.probs.len() != w.n() || row.true_class >= w.n() {
                    return Err(MetricsError::ClassMismatch(format!(
                        "{} instance {} does not fit the {} classes of loss {name}",
                        set.classifier_name,
                        row.instance_id,
                        w.n()
                    )));
                }
                total += loss::weighted_cce(w.row(row.true_class), &row.probs)?;
            }
            row_out.push(if rows.is_empty() {
                0.0
            } else {
                total / rows.len() as f64
            });
        }
        values.push(row_out);
    }
    Ok(LossTable {
        models: sets.iter().map(|s| s.classifier_name.clone()).collect(),
        losses: losses.iter().map(|(n, _)| n.clone()).collect(),
        values,
    })
}
