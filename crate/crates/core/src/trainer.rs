//! Small softmax classifiers trained by mini-batch SGD.
//!
//! The model is either linear softmax regression or one tanh hidden layer.
//! Training is single-threaded and fully determined by the data, the weight
//! matrix and the config: shuffling uses a seeded ChaCha stream and batch
//! gradients are summed in batch order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::loss::{self, ProbVector, PROB_FLOOR};
use crate::weights::WeightMatrix;

/// Half-width of the uniform range used to initialize weights.
pub const INIT_SCALE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("class mismatch: {0}")]
    ClassMismatch(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

impl TrainError {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainError::ShapeMismatch(_) => "shape-mismatch",
            TrainError::ClassMismatch(_) => "class-mismatch",
            TrainError::InvalidConfig(_) => "invalid-config",
            TrainError::InvalidDataset(_) => "invalid-dataset",
            TrainError::Divergence { .. } => "divergence",
            TrainError::DimensionMismatch { .. } => "dimension-mismatch",
        }
    }
}

/// Row-major feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dims: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, TrainError> {
        if features.is_empty() {
            return Err(TrainError::InvalidDataset("no rows".into()));
        }
        if features.len() != labels.len() {
            return Err(TrainError::InvalidDataset(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dims = features[0].len();
        if dims == 0 {
            return Err(TrainError::InvalidDataset("rows have no features".into()));
        }
        let mut flat = Vec::with_capacity(dims * features.len());
        for (i, row) in features.into_iter().enumerate() {
            if row.len() != dims {
                return Err(TrainError::InvalidDataset(format!(
                    "row {i} has {} features, expected {dims}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(TrainError::InvalidDataset(format!(
                    "row {i} has a non-finite feature"
                )));
            }
            flat.extend(row);
        }
        if let Some(i) = labels.iter().position(|&l| l >= class_names.len()) {
            return Err(TrainError::InvalidDataset(format!(
                "row {i} label {} out of range for {} classes",
                labels[i],
                class_names.len()
            )));
        }
        Ok(Dataset {
            features: flat,
            dims,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dims..(i + 1) * self.dims]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }
}

/// Gaussian blobs, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub per_class: usize,
    pub dims: usize,
    pub centers: Vec<Vec<f64>>,
    pub spread: f64,
    pub seed: u64,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset, TrainError> {
    if spec.centers.len() != spec.n_classes {
        return Err(TrainError::ShapeMismatch(format!(
            "{} centers for {} classes",
            spec.centers.len(),
            spec.n_classes
        )));
    }
    if let Some(c) = spec.centers.iter().position(|c| c.len() != spec.dims) {
        return Err(TrainError::ShapeMismatch(format!(
            "center {c} does not have {} dims",
            spec.dims
        )));
    }
    if !(spec.spread >= 0.0 && spec.spread.is_finite()) {
        return Err(TrainError::InvalidConfig(format!(
            "spread {} must be non-negative",
            spec.spread
        )));
    }
    if spec.per_class == 0 || spec.dims == 0 {
        return Err(TrainError::InvalidConfig(
            "per_class and dims must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise =
        Normal::new(0.0, spec.spread).map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
    let mut features = Vec::with_capacity(spec.n_classes * spec.per_class);
    let mut labels = Vec::with_capacity(features.capacity());
    for (class, center) in spec.centers.iter().enumerate() {
        for _ in 0..spec.per_class {
            features.push(center.iter().map(|c| c + noise.sample(&mut rng)).collect());
            labels.push(class);
        }
    }
    let names = (0..spec.n_classes).map(|i| format!("class_{i}")).collect();
    Dataset::new(features, labels, names)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Zero means linear softmax regression.
    pub hidden_units: usize,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 100,
            batch_size: 32,
            seed: 0,
            hidden_units: 0,
            l2: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::InvalidConfig(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(TrainError::InvalidConfig("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

/// Parameters of a linear or one-hidden-layer softmax classifier.
///
/// With `hidden == 0` only `out_w` (`inputs x classes`) and `out_b` are used.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub inputs: usize,
    pub hidden: usize,
    pub class_names: Vec<String>,
    pub hidden_w: Vec<f64>,
    pub hidden_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

impl Model {
    /// All-zero parameters; predicts the uniform distribution.
    pub fn zeros(inputs: usize, hidden: usize, class_names: Vec<String>) -> Self {
        let n = class_names.len();
        let fan_in = if hidden == 0 { inputs } else { hidden };
        Model {
            inputs,
            hidden,
            hidden_w: vec![0.0; inputs * hidden],
            hidden_b: vec![0.0; hidden],
            out_w: vec![0.0; fan_in * n],
            out_b: vec![0.0; n],
            class_names,
        }
    }

    fn init(inputs: usize, hidden: usize, class_names: Vec<String>, rng: &mut ChaCha8Rng) -> Self {
        let mut m = Model::zeros(inputs, hidden, class_names);
        for w in m.hidden_w.iter_mut().chain(m.out_w.iter_mut()) {
            *w = rng.random_range(-INIT_SCALE..=INIT_SCALE);
        }
        m
    }

    fn zeroed_like(&self) -> Self {
        Model {
            inputs: self.inputs,
            hidden: self.hidden,
            class_names: Vec::new(),
            hidden_w: vec![0.0; self.hidden_w.len()],
            hidden_b: vec![0.0; self.hidden_b.len()],
            out_w: vec![0.0; self.out_w.len()],
            out_b: vec![0.0; self.out_b.len()],
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Checks parameter lengths against the dimensions and that all are finite.
    pub fn validate(&self) -> Result<(), TrainError> {
        let n = self.n_classes();
        let fan_in = if self.hidden == 0 {
            self.inputs
        } else {
            self.hidden
        };
        let shapes = [
            (self.hidden_w.len(), self.inputs * self.hidden),
            (self.hidden_b.len(), self.hidden),
            (self.out_w.len(), fan_in * n),
            (self.out_b.len(), n),
        ];
        if self.inputs == 0 || n == 0 || shapes.iter().any(|(got, want)| got != want) {
            return Err(TrainError::ShapeMismatch(
                "parameter lengths do not match dimensions".into(),
            ));
        }
        if self.params().any(|v| !v.is_finite()) {
            return Err(TrainError::ShapeMismatch("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Every parameter in file order: hidden weights, hidden biases, output
    /// weights, output biases.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.hidden_w
            .iter()
            .chain(&self.hidden_b)
            .chain(&self.out_w)
            .chain(&self.out_b)
            .copied()
    }

    /// Hidden activations (empty for linear models) and logits.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_classes();
        let act: Vec<f64> = (0..self.hidden)
            .map(|k| {
                let mut s = self.hidden_b[k];
                for (i, xi) in x.iter().enumerate() {
                    s += xi * self.hidden_w[i * self.hidden + k];
                }
                s.tanh()
            })
            .collect();
        let input: &[f64] = if self.hidden == 0 { x } else { &act };
        let logits = (0..n)
            .map(|j| {
                let mut s = self.out_b[j];
                for (i, v) in input.iter().enumerate() {
                    s += v * self.out_w[i * n + j];
                }
                s
            })
            .collect();
        (act, logits)
    }

    /// Adds the gradient of one sample's loss, given `dlogits`, into `grad`.
    fn backward(&self, x: &[f64], act: &[f64], dlogits: &[f64], grad: &mut Model) {
        let n = self.n_classes();
        let input: &[f64] = if self.hidden == 0 { x } else { act };
        for (i, v) in input.iter().enumerate() {
            for j in 0..n {
                grad.out_w[i * n + j] += v * dlogits[j];
            }
        }
        for j in 0..n {
            grad.out_b[j] += dlogits[j];
        }
        for k in 0..self.hidden {
            let mut dact = 0.0;
            for j in 0..n {
                dact += self.out_w[k * n + j] * dlogits[j];
            }
            let dpre = dact * (1.0 - act[k] * act[k]);
            for (i, xi) in x.iter().enumerate() {
                grad.hidden_w[i * self.hidden + k] += xi * dpre;
            }
            grad.hidden_b[k] += dpre;
        }
    }

    fn apply(&mut self, grad: &Model, scale: f64, lr: f64, l2: f64) {
        let step = |p: &mut Vec<f64>, g: &Vec<f64>, decay: f64| {
            for (pi, gi) in p.iter_mut().zip(g) {
                *pi -= lr * (gi * scale + decay * *pi);
            }
        };
        step(&mut self.hidden_w, &grad.hidden_w, l2);
        step(&mut self.hidden_b, &grad.hidden_b, 0.0);
        step(&mut self.out_w, &grad.out_w, l2);
        step(&mut self.out_b, &grad.out_b, 0.0);
    }
}

/// What a model is trained to minimize.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Weighted cross-entropy against the true class's row.
    Weighted(&'a WeightMatrix),
    /// Plain cross-entropy against the class index.
    VanillaCce,
}

impl Objective<'_> {
    /// Per-sample loss and gradient with respect to the logits.
    fn evaluate(&self, label: usize, probs: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Objective::Weighted(w) => {
                let row = w.row(label);
                (
                    loss::weighted_cce_unchecked(row, probs),
                    loss::weighted_grad_from_probs(row, probs),
                )
            }
            Objective::VanillaCce => {
                let mut grad = probs.to_vec();
                grad[label] -= 1.0;
                (-probs[label].max(PROB_FLOOR).ln(), grad)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    /// Mean training loss over the whole dataset after each epoch.
    pub loss_trace: Vec<f64>,
}

/// Trains with the weighted loss for `w`. Pass an identity matrix for plain
/// cross-entropy targets.
pub fn train(
    data: &Dataset,
    w: &WeightMatrix,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if w.class_names() != data.class_names() {
        return Err(TrainError::ClassMismatch(format!(
            "weights cover {:?}, data covers {:?}",
            w.class_names(),
            data.class_names()
        )));
    }
    train_objective(data, Objective::Weighted(w), cfg, |_, _| {})
}

/// Same loop as [`train`] with the vanilla cross-entropy code path.
pub fn train_vanilla_cce(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_objective(data, Objective::VanillaCce, cfg, |_, _| {})
}

/// Runs SGD and calls `on_epoch(epoch, &model)` after every epoch.
pub fn train_objective(
    data: &Dataset,
    objective: Objective<'_>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, &Model),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::init(
        data.dims(),
        cfg.hidden_units,
        data.class_names().to_vec(),
        &mut rng,
    );
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let mut grad = model.zeroed_like();
            for &i in batch {
                let x = data.row(i);
                let (act, logits) = model.forward(x);
                let probs = loss::softmax_slice(&logits);
                let (_, dlogits) = objective.evaluate(data.label(i), &probs);
                model.backward(x, &act, &dlogits, &mut grad);
            }
            model.apply(&grad, 1.0 / batch.len() as f64, cfg.learning_rate, cfg.l2);
        }
        let mean = mean_loss(&model, data, objective);
        if !mean.is_finite() || model.params().any(|p| !p.is_finite()) {
            return Err(TrainError::Divergence { epoch });
        }
        loss_trace.push(mean);
        on_epoch(epoch, &model);
    }
    Ok(TrainOutcome { model, loss_trace })
}

fn mean_loss(model: &Model, data: &Dataset, objective: Objective<'_>) -> f64 {
    let mut total = 0.0;
    for i in 0..data.len() {
        let probs = loss::softmax_slice(&model.forward(data.row(i)).1);
        total += objective.evaluate(data.label(i), &probs).0;
    }
    total / data.len() as f64
}

pub fn predict(model: &Model, features: &[f64]) -> Result<ProbVector, TrainError> {
    if features.len() != model.inputs {
        return Err(TrainError::DimensionMismatch {
            expected: model.inputs,
            got: features.len(),
        });
    }
    let probs = loss::softmax_slice(&model.forward(features).1);
    ProbVector::new(probs).map_err(|e| TrainError::ShapeMismatch(e.to_string()))
}

/// `counts[i][j]` is the number of rows with label `i` predicted as `j`.
pub fn confusion(model: &Model, data: &Dataset) -> Result<Vec<Vec<u64>>, TrainError> {
    if model.n_classes() != data.n_classes() {
        return Err(TrainError::ClassMismatch(format!(
            "model has {} classes, data has {}",
            model.n_classes(),
            data.n_classes()
        )));
    }
    let n = data.n_classes();
    let mut counts = vec![vec![0u64; n]; n];
    for i in 0..data.len() {
        let p = predict(model, data.row(i))?;
        counts[data.label(i)][p.argmax()] += 1;
    }
    Ok(counts)
}

/// Fraction of rows whose argmax prediction equals the label.
pub fn accuracy(model: &Model, data: &Dataset) -> Result<f64, TrainError> {
    let counts = confusion(model, data)?;
    let correct: u64 = (0..counts.len()).map(|i| counts[i][i]).sum();
    Ok(correct as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_cluster(seed: u64) -> Dataset {
        generate_synthetic(&SyntheticSpec {
            n_classes: 3,
            per_class: 200,
            dims: 2,
            centers: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![10.0, 10.0]],
            spread: 0.7,
            seed,
        })
        .unwrap()
    }

    fn centroid(d: &Dataset, class: usize) -> Vec<f64> {
        let rows: Vec<usize> = (0..d.len()).filter(|&i| d.label(i) == class).collect();
        (0..d.dims())
            .map(|k| rows.iter().map(|&i| d.row(i)[k]).sum::<f64>() / rows.len() as f64)
            .collect()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn synthetic_shape_and_geometry() {
        let d = three_cluster(7);
        assert_eq!(d.len(), 600);
        let (c0, c1, c2) = (centroid(&d, 0), centroid(&d, 1), centroid(&d, 2));
        assert!(dist(&c0, &c2) > 10.0 * dist(&c0, &c1));
    }

    #[test]
    fn synthetic_is_deterministic() {
        assert_eq!(three_cluster(7), three_cluster(7));
        assert_ne!(three_cluster(7), three_cluster(8));
    }

    #[test]
    fn synthetic_shape_errors() {
        let mut spec = SyntheticSpec {
            n_classes: 2,
            per_class: 3,
            dims: 2,
            centers: vec![vec![0.0, 0.0]],
            spread: 1.0,
            seed: 0,
        };
        assert_eq!(
            generate_synthetic(&spec).unwrap_err().kind(),
            "shape-mismatch"
        );
        spec.centers = vec![vec![0.0, 0.0], vec![1.0]];
        assert_eq!(
            generate_synthetic(&spec).unwrap_err().kind(),
            "shape-mismatch"
        );
    }

    #[test]
    fn zero_spread_is_perfectly_learnable() {
        let d = generate_synthetic(&SyntheticSpec {
            n_classes: 3,
            per_class: 20,
            dims: 2,
            centers: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            spread: 0.0,
            seed: 1,
        })
        .unwrap();
        let eye = WeightMatrix::identity(d.class_names().to_vec()).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.5,
            epochs: 200,
            batch_size: 10,
            ..TrainConfig::default()
        };
        let out = train(&d, &eye, &cfg).unwrap();
        assert_eq!(accuracy(&out.model, &d).unwrap(), 1.0);
    }

    #[test]
    fn identity_training_approaches_bayes_rate() {
        let d = three_cluster(7);
        let eye = WeightMatrix::identity(d.class_names().to_vec()).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            epochs: 100,
            ..TrainConfig::default()
        };
        let out = train(&d, &eye, &cfg).unwrap();
        // Classes 0 and 1 sit one unit apart with sd 0.7, so the Bayes rate
        // is 1 - (2/3) * Phi(-0.5 / 0.7) = 0.84165.
        let bayes = 0.8416498253153489;
        let acc = accuracy(&out.model, &d).unwrap();
        assert!(acc >= bayes - 0.04, "accuracy {acc}");
        assert_eq!(predict(&out.model, &[10.0, 10.0]).unwrap().argmax(), 2);
    }

    #[test]
    fn small_learning_rate_trace_is_non_increasing() {
        let d = three_cluster(7);
        let eye = WeightMatrix::identity(d.class_names().to_vec()).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.01,
            epochs: 60,
            ..TrainConfig::default()
        };
        let out = train(&d, &eye, &cfg).unwrap();
        for pair in out.loss_trace.windows(2) {
            assert!(pair[1] <= pair[0], "{:?}", pair);
        }
    }

    #[test]
    fn weighted_training_is_deterministic() {
        let d = three_cluster(3);
        let w = WeightMatrix::new(
            d.class_names().to_vec(),
            vec![
                vec![1.0, 0.4, 0.05],
                vec![0.4, 1.0, 0.05],
                vec![0.05, 0.05, 1.0],
            ],
        )
        .unwrap()
        .normalize_rows()
        .unwrap();
        let cfg = TrainConfig {
            hidden_units: 4,
            epochs: 5,
            ..TrainConfig::default()
        };
        assert_eq!(train(&d, &w, &cfg).unwrap(), train(&d, &w, &cfg).unwrap());
    }

    #[test]
    fn identity_weights_match_vanilla_path_bitwise() {
        let d = three_cluster(11);
        let eye = WeightMatrix::identity(d.class_names().to_vec()).unwrap();
        for hidden_units in [0, 5] {
            let cfg = TrainConfig {
                hidden_units,
                epochs: 10,
                l2: 1e-3,
                ..TrainConfig::default()
            };
            let a = train(&d, &eye, &cfg).unwrap();
            let b = train_vanilla_cce(&d, &cfg).unwrap();
            let bits = |o: &TrainOutcome| o.model.params().map(f64::to_bits).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
            assert_eq!(a.loss_trace, b.loss_trace);
        }
    }

    #[test]
    fn class_mismatch_rejected() {
        let d = three_cluster(1);
        let w = WeightMatrix::identity(vec!["x".into(), "y".into(), "z".into()]).unwrap();
        assert_eq!(
            train(&d, &w, &TrainConfig::default()).unwrap_err().kind(),
            "class-mismatch"
        );
    }

    #[test]
    fn divergence_reported_with_epoch() {
        let d = Dataset::new(
            vec![vec![1e150, -1e150], vec![-1e150, 1e150]],
            vec![0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let eye = WeightMatrix::identity(d.class_names().to_vec()).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e200,
            epochs: 3,
            ..TrainConfig::default()
        };
        assert_eq!(
            train(&d, &eye, &cfg).unwrap_err(),
            TrainError::Divergence { epoch: 0 }
        );
    }

    #[test]
    fn fresh_zero_model_is_uniform() {
        let m = Model::zeros(2, 0, vec!["a".into(), "b".into(), "c".into(), "d".into()]);
        let p = predict(&m, &[0.3, -2.0]).unwrap();
        assert!(p.as_slice().iter().all(|&x| x == 0.25));
        assert_eq!(
            predict(&m, &[1.0]).unwrap_err().kind(),
            "dimension-mismatch"
        );
    }

    #[test]
    fn confusion_conserves_counts() {
        let d = three_cluster(5);
        let eye = WeightMatrix::identity(d.class_names().to_vec()).unwrap();
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let model = train(&d, &eye, &cfg).unwrap().model;
        let c = confusion(&model, &d).unwrap();
        assert_eq!(c.iter().flatten().sum::<u64>(), 600);
        for row in &c {
            assert_eq!(row.iter().sum::<u64>(), 200);
        }
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().kind(), "invalid-config");
        let bad = TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
