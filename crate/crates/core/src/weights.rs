//! Class-level weight matrices and their three sources.
//!
//! Row `i` of a [`WeightMatrix`] is the soft target used when the true class
//! is `i`; column `j` is the credit given for predicting `j`. Matrices come
//! from pooled instance-level labels ([`from_instance_ratings`]), averaged
//! class-pair Likert ratings ([`from_class_ratings`]) or taxonomy path
//! similarity ([`from_taxonomy`]).

use thiserror::Error;

use crate::taxonomy::{LabelMap, Taxonomy, TaxonomyError};

/// Row sums within this distance of 1 count as normalized.
pub const NORMALIZED_TOLERANCE: f64 = 1e-9;

/// Highest Likert score a rater can give.
pub const MAX_LIKERT: u8 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("class index {index} out of range for {n} classes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("class {class} has no instances")]
    ClassWithNoInstances { class: usize },
    #[error("instance {0} has no votes")]
    EmptyInstance(String),
    #[error("no rating for pair {true_class} -> {predicted_class}")]
    MissingPair {
        true_class: usize,
        predicted_class: usize,
    },
    #[error("score {0} outside the 0-4 Likert scale")]
    ScoreOutOfRange(i64),
    #[error("rating pairs class {0} with itself")]
    SelfPair(usize),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("class order differs between matrices")]
    ClassOrderMismatch,
    #[error("no matrices to combine")]
    EmptyList,
    #[error("row {0} sums to zero")]
    ZeroRow(usize),
    #[error("entry ({row}, {col}) is negative or not finite")]
    InvalidEntry { row: usize, col: usize },
    #[error("row {row}: diagonal is below entry in column {col}")]
    DiagonalNotDominant { row: usize, col: usize },
    #[error("invalid class names: {0}")]
    ClassNames(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

impl WeightError {
    pub fn kind(&self) -> &'static str {
        match self {
            WeightError::IndexOutOfRange { .. } => "index-out-of-range",
            WeightError::ClassWithNoInstances { .. } => "class-with-no-instances",
            WeightError::EmptyInstance(_) => "empty-instance",
            WeightError::MissingPair { .. } => "missing-pair",
            WeightError::ScoreOutOfRange(_) => "score-out-of-range",
            WeightError::SelfPair(_) => "self-pair",
            WeightError::ShapeMismatch { .. } => "shape-mismatch",
            WeightError::ClassOrderMismatch => "class-order-mismatch",
            WeightError::EmptyList => "empty-list",
            WeightError::ZeroRow(_) => "zero-row",
            WeightError::InvalidEntry { .. } => "invalid-entry",
            WeightError::DiagonalNotDominant { .. } => "diagonal-not-dominant",
            WeightError::ClassNames(_) => "invalid-class-names",
            WeightError::Taxonomy(e) => e.kind(),
        }
    }
}

/// Square non-negative matrix of class-pair weights.
///
/// Every entry is finite and non-negative and each diagonal entry is at least
/// as large as every other entry in its row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    class_names: Vec<String>,
    values: Vec<f64>,
    normalized: bool,
}

impl WeightMatrix {
    pub fn new(class_names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, WeightError> {
        let n = class_names.len();
        if rows.len() != n {
            return Err(WeightError::ShapeMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(WeightError::ShapeMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            values.extend(row);
        }
        Self::from_flat(class_names, values)
    }

    fn from_flat(class_names: Vec<String>, values: Vec<f64>) -> Result<Self, WeightError> {
        let n = class_names.len();
        if n == 0 {
            return Err(WeightError::ClassNames("no classes".into()));
        }
        for (i, name) in class_names.iter().enumerate() {
            if name.is_empty() {
                return Err(WeightError::ClassNames(format!(
                    "class {i} has an empty name"
                )));
            }
            if class_names[..i].contains(name) {
                return Err(WeightError::ClassNames(format!(
                    "duplicate class name {name}"
                )));
            }
        }
        debug_assert_eq!(values.len(), n * n);
        for i in 0..n {
            let row = &values[i * n..(i + 1) * n];
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(WeightError::InvalidEntry { row: i, col: j });
                }
            }
            for (j, &v) in row.iter().enumerate() {
                if v > row[i] {
                    return Err(WeightError::DiagonalNotDominant { row: i, col: j });
                }
            }
        }
        let normalized = (0..n).all(|i| {
            let s: f64 = values[i * n..(i + 1) * n].iter().sum();
            (s - 1.0).abs() <= NORMALIZED_TOLERANCE
        });
        Ok(WeightMatrix {
            class_names,
            values,
            normalized,
        })
    }

    /// The identity matrix, under which the weighted loss is plain cross-entropy.
    pub fn identity(class_names: Vec<String>) -> Result<Self, WeightError> {
        let n = class_names.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        Self::from_flat(class_names, values)
    }

    pub fn n(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// True iff every row sums to 1 within [`NORMALIZED_TOLERANCE`].
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Divides each row by its sum.
    pub fn normalize_rows(&self) -> Result<Self, WeightError> {
        let n = self.n();
        let mut values = self.values.clone();
        for (i, row) in values.chunks_mut(n).enumerate() {
            let s: f64 = row.iter().sum();
            if s <= 0.0 {
                return Err(WeightError::ZeroRow(i));
            }
            row.iter_mut().for_each(|v| *v /= s);
        }
        Self::from_flat(self.class_names.clone(), values)
    }
}

fn check_index(index: usize, n: usize) -> Result<(), WeightError> {
    if index >= n {
        Err(WeightError::IndexOutOfRange { index, n })
    } else {
        Ok(())
    }
}

/// Human votes for one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceRating {
    pub instance_id: String,
    pub true_class: usize,
    pub label_counts: Vec<u64>,
}

/// How instance-level votes are combined into class rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum IhlAggregation {
    /// Sum raw vote counts per true class, then normalize. Instances with
    /// more votes weigh more.
    #[default]
    PooledCounts,
    /// Normalize each instance to a distribution, then average per class.
    MeanOfDistributions,
}

pub fn from_instance_ratings(
    ratings: &[InstanceRating],
    class_names: Vec<String>,
    aggregation: IhlAggregation,
) -> Result<WeightMatrix, WeightError> {
    let n = class_names.len();
    let mut sums = vec![0.0f64; n * n];
    let mut seen = vec![false; n];
    for r in ratings {
        check_index(r.true_class, n)?;
        if r.label_counts.len() != n {
            return Err(WeightError::ShapeMismatch {
                expected: n,
                got: r.label_counts.len(),
            });
        }
        let total: u64 = r.label_counts.iter().sum();
        if total == 0 {
            return Err(WeightError::EmptyInstance(r.instance_id.clone()));
        }
        seen[r.true_class] = true;
        let row = &mut sums[r.true_class * n..(r.true_class + 1) * n];
        for (acc, &c) in row.iter_mut().zip(&r.label_counts) {
            *acc += match aggregation {
                IhlAggregation::PooledCounts => c as f64,
                IhlAggregation::MeanOfDistributions => c as f64 / total as f64,
            };
        }
    }
    if let Some(class) = seen.iter().position(|s| !s) {
        return Err(WeightError::ClassWithNoInstances { class });
    }
    // Normalizing a row of per-instance distributions is the same as averaging them.
    normalize_flat(class_names, sums)
}

fn normalize_flat(
    class_names: Vec<String>,
    mut values: Vec<f64>,
) -> Result<WeightMatrix, WeightError> {
    let n = class_names.len();
    for (i, row) in values.chunks_mut(n).enumerate() {
        let s: f64 = row.iter().sum();
        if s <= 0.0 {
            return Err(WeightError::ZeroRow(i));
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    WeightMatrix::from_flat(class_names, values)
}

/// One Likert judgment of how reasonable it is to mistake `true_class` for
/// `predicted_class`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatingRecord {
    pub rater_id: String,
    pub true_class: usize,
    pub predicted_class: usize,
    pub score: u8,
}

impl RatingRecord {
    pub fn validate(&self, n: usize) -> Result<(), WeightError> {
        if self.score > MAX_LIKERT {
            return Err(WeightError::ScoreOutOfRange(self.score as i64));
        }
        check_index(self.true_class, n)?;
        check_index(self.predicted_class, n)?;
        if self.true_class == self.predicted_class {
            return Err(WeightError::SelfPair(self.true_class));
        }
        Ok(())
    }
}

/// Mean Likert score per ordered pair scaled by 1/4, with the diagonal at 1.
/// This is the matrix before row normalization.
pub fn class_ratings_raw(
    ratings: &[RatingRecord],
    class_names: Vec<String>,
) -> Result<WeightMatrix, WeightError> {
    let n = class_names.len();
    let mut score_sum = vec![0u64; n * n];
    let mut count = vec![0u64; n * n];
    for r in ratings {
        r.validate(n)?;
        let k = r.true_class * n + r.predicted_class;
        score_sum[k] += r.score as u64;
        count[k] += 1;
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            values[k] = if i == j {
                1.0
            } else if count[k] == 0 {
                return Err(WeightError::MissingPair {
                    true_class: i,
                    predicted_class: j,
                });
            } else {
                score_sum[k] as f64 / (count[k] as f64 * MAX_LIKERT as f64)
            };
        }
    }
    WeightMatrix::from_flat(class_names, values)
}

pub fn from_class_ratings(
    ratings: &[RatingRecord],
    class_names: Vec<String>,
) -> Result<WeightMatrix, WeightError> {
    class_ratings_raw(ratings, class_names)?.normalize_rows()
}

/// Path similarity between the bound nodes, before row normalization.
pub fn taxonomy_similarity(tax: &Taxonomy, labels: &LabelMap) -> Result<WeightMatrix, WeightError> {
    labels.check_nodes(tax)?;
    let entries = labels.entries();
    let mut rows = Vec::with_capacity(entries.len());
    for a in entries {
        let row = entries
            .iter()
            .map(|b| tax.path_similarity(&a.node, &b.node))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    WeightMatrix::new(labels.class_names(), rows)
}

pub fn from_taxonomy(tax: &Taxonomy, labels: &LabelMap) -> Result<WeightMatrix, WeightError> {
    taxonomy_similarity(tax, labels)?.normalize_rows()
}

/// Element-wise mean of matrices over the same classes, then row-normalized.
pub fn average_matrices(ms: &[WeightMatrix]) -> Result<WeightMatrix, WeightError> {
    let first = ms.first().ok_or(WeightError::EmptyList)?;
    let n = first.n();
    let mut acc = vec![0.0; n * n];
    for m in ms {
        if m.n() != n {
            return Err(WeightError::ShapeMismatch {
                expected: n,
                got: m.n(),
            });
        }
        if m.class_names != first.class_names {
            return Err(WeightError::ClassOrderMismatch);
        }
        acc.iter_mut().zip(&m.values).for_each(|(a, v)| *a += v);
    }
    let k = ms.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    normalize_flat(first.class_names.clone(), acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn instance(id: &str, class: usize, counts: &[u64]) -> InstanceRating {
        InstanceRating {
            instance_id: id.into(),
            true_class: class,
            label_counts: counts.to_vec(),
        }
    }

    fn rating(rater: &str, t: usize, p: usize, score: u8) -> RatingRecord {
        RatingRecord {
            rater_id: rater.into(),
            true_class: t,
            predicted_class: p,
            score,
        }
    }

    #[test]
    fn ihl_pools_counts() {
        let ratings = vec![
            instance("a", 0, &[45, 5, 0]),
            instance("b", 0, &[40, 8, 2]),
            instance("c", 1, &[0, 10, 0]),
            instance("d", 2, &[0, 0, 3]),
        ];
        let w = from_instance_ratings(
            &ratings,
            names(&["dog", "cat", "car"]),
            IhlAggregation::default(),
        )
        .unwrap();
        assert!(close(w.row(0), &[0.85, 0.13, 0.02], 1e-12));
        assert!(w.is_normalized());
    }

    #[test]
    fn ihl_unanimous_is_one_hot() {
        let w = from_instance_ratings(
            &[
                instance("x", 0, &[10, 0, 0]),
                instance("y", 1, &[0, 1, 0]),
                instance("z", 2, &[0, 0, 1]),
            ],
            names(&["a", "b", "c"]),
            IhlAggregation::PooledCounts,
        )
        .unwrap();
        assert_eq!(w.row(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn ihl_mean_of_distributions_differs_from_pooling() {
        let ratings = vec![
            instance("a", 0, &[9, 1]),
            instance("b", 0, &[1, 0]),
            instance("c", 1, &[0, 1]),
        ];
        let pooled =
            from_instance_ratings(&ratings, names(&["a", "b"]), IhlAggregation::PooledCounts)
                .unwrap();
        let mean = from_instance_ratings(
            &ratings,
            names(&["a", "b"]),
            IhlAggregation::MeanOfDistributions,
        )
        .unwrap();
        assert!(close(pooled.row(0), &[10.0 / 11.0, 1.0 / 11.0], 1e-12));
        assert!(close(mean.row(0), &[0.95, 0.05], 1e-12));
    }

    #[test]
    fn ihl_errors() {
        let n3 = names(&["a", "b", "c"]);
        let err = from_instance_ratings(
            &[instance("x", 5, &[1, 0, 0])],
            n3.clone(),
            IhlAggregation::PooledCounts,
        )
        .unwrap_err();
        assert_eq!(err.kind(), "index-out-of-range");
        let err = from_instance_ratings(
            &[instance("x", 0, &[1, 0, 0])],
            n3.clone(),
            IhlAggregation::PooledCounts,
        )
        .unwrap_err();
        assert_eq!(err, WeightError::ClassWithNoInstances { class: 1 });
        let err = from_instance_ratings(
            &[instance("x", 0, &[0, 0, 0])],
            n3,
            IhlAggregation::PooledCounts,
        )
        .unwrap_err();
        assert_eq!(err.kind(), "empty-instance");
    }

    #[test]
    fn chl_averages_and_scales() {
        let mut ratings = Vec::new();
        for (t, p) in [(0, 1), (1, 0)] {
            ratings.push(rating("r1", t, p, 3));
            ratings.push(rating("r2", t, p, 4));
        }
        let raw = class_ratings_raw(&ratings, names(&["cat", "dog"])).unwrap();
        assert_eq!(raw.get(0, 1), 0.875);
        assert_eq!(raw.get(0, 0), 1.0);
        let w = from_class_ratings(&ratings, names(&["cat", "dog"])).unwrap();
        assert!(close(w.row(0), &[1.0 / 1.875, 0.875 / 1.875], 1e-15));
    }

    #[test]
    fn chl_all_zero_is_identity() {
        let mut ratings = Vec::new();
        for t in 0..3 {
            for p in 0..3 {
                if t != p {
                    ratings.push(rating("r", t, p, 0));
                }
            }
        }
        let w = from_class_ratings(&ratings, names(&["a", "b", "c"])).unwrap();
        assert_eq!(w, WeightMatrix::identity(names(&["a", "b", "c"])).unwrap());
    }

    #[test]
    fn chl_errors() {
        let err = from_class_ratings(
            &[
                rating("r", 0, 1, 1),
                rating("r", 1, 0, 1),
                rating("r", 1, 2, 1),
                rating("r", 2, 0, 1),
                rating("r", 2, 1, 1),
            ],
            names(&["a", "b", "c"]),
        )
        .unwrap_err();
        assert_eq!(
            err,
            WeightError::MissingPair {
                true_class: 0,
                predicted_class: 2
            }
        );
        let err = from_class_ratings(&[rating("r", 0, 1, 5)], names(&["a", "b"])).unwrap_err();
        assert_eq!(err.kind(), "score-out-of-range");
        let err = from_class_ratings(&[rating("r", 1, 1, 2)], names(&["a", "b"])).unwrap_err();
        assert_eq!(err.kind(), "self-pair");
    }

    #[test]
    fn taxonomy_rows() {
        let tax =
            Taxonomy::parse("root\tanimal\nroot\tvehicle\nanimal\tdog\nanimal\tcat\nvehicle\tcar")
                .unwrap();
        let labels =
            LabelMap::from_csv("index,name,node\n0,dog,dog\n1,cat,cat\n2,car,car\n").unwrap();
        let raw = taxonomy_similarity(&tax, &labels).unwrap();
        assert_eq!(raw.row(0), &[1.0, 1.0 / 3.0, 0.2]);
        let w = from_taxonomy(&tax, &labels).unwrap();
        assert!(close(
            w.row(0),
            &[15.0 / 23.0, 5.0 / 23.0, 3.0 / 23.0],
            1e-15
        ));
        assert!(close(w.row(0), &[0.652174, 0.217391, 0.130435], 5e-7));
    }

    #[test]
    fn taxonomy_single_class_and_siblings() {
        let tax = Taxonomy::parse("p\ta\np\tb").unwrap();
        let one = LabelMap::from_csv("index,name,node\n0,a,a\n").unwrap();
        assert_eq!(
            from_taxonomy(&tax, &one).unwrap().to_rows(),
            vec![vec![1.0]]
        );
        let two = LabelMap::from_csv("index,name,node\n0,a,a\n1,b,b\n").unwrap();
        let w = from_taxonomy(&tax, &two).unwrap();
        assert_eq!(w.to_rows(), vec![vec![0.75, 0.25], vec![0.25, 0.75]]);
    }

    #[test]
    fn taxonomy_unknown_node_propagates() {
        let tax = Taxonomy::parse("p\ta\np\tb").unwrap();
        let labels = LabelMap::from_csv("index,name,node\n0,a,a\n1,z,z\n").unwrap();
        assert_eq!(
            from_taxonomy(&tax, &labels).unwrap_err().kind(),
            "unknown-node-reference"
        );
    }

    #[test]
    fn averaging() {
        let ab = names(&["a", "b"]);
        let eye = WeightMatrix::identity(ab.clone()).unwrap();
        let flat = WeightMatrix::new(ab.clone(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(average_matrices(std::slice::from_ref(&eye)).unwrap(), eye);
        let avg = average_matrices(&[eye.clone(), flat]).unwrap();
        assert_eq!(avg.to_rows(), vec![vec![0.75, 0.25], vec![0.25, 0.75]]);

        let ba = WeightMatrix::identity(names(&["b", "a"])).unwrap();
        assert_eq!(
            average_matrices(&[eye.clone(), ba]).unwrap_err(),
            WeightError::ClassOrderMismatch
        );
        assert_eq!(average_matrices(&[]).unwrap_err(), WeightError::EmptyList);
        let three = WeightMatrix::identity(names(&["a", "b", "c"])).unwrap();
        assert_eq!(
            average_matrices(&[eye, three]).unwrap_err().kind(),
            "shape-mismatch"
        );
    }

    #[test]
    fn normalize_rows_cases() {
        let m = WeightMatrix::new(
            names(&["a", "b", "c"]),
            vec![
                vec![2.0, 1.0, 1.0],
                vec![0.0, 1.0, 0.0],
                vec![1.0, 1.0, 3.0],
            ],
        )
        .unwrap();
        assert!(!m.is_normalized());
        let n = m.normalize_rows().unwrap();
        assert_eq!(n.row(0), &[0.5, 0.25, 0.25]);
        assert!(n.is_normalized());
        let again = n.normalize_rows().unwrap();
        assert!(close(&again.values, &n.values, 1e-12));

        let zero =
            WeightMatrix::new(names(&["a", "b"]), vec![vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(zero.normalize_rows().unwrap_err(), WeightError::ZeroRow(0));
    }

    #[test]
    fn constructor_rejects_invalid_entries() {
        let ab = names(&["a", "b"]);
        assert_eq!(
            WeightMatrix::new(ab.clone(), vec![vec![1.0, -0.1], vec![0.0, 1.0]])
                .unwrap_err()
                .kind(),
            "invalid-entry"
        );
        assert_eq!(
            WeightMatrix::new(ab.clone(), vec![vec![1.0, f64::NAN], vec![0.0, 1.0]])
                .unwrap_err()
                .kind(),
            "invalid-entry"
        );
        assert_eq!(
            WeightMatrix::new(ab.clone(), vec![vec![0.2, 0.8], vec![0.0, 1.0]]).unwrap_err(),
            WeightError::DiagonalNotDominant { row: 0, col: 1 }
        );
        assert_eq!(
            WeightMatrix::new(names(&["a", "a"]), vec![vec![1.0, 0.0], vec![0.0, 1.0]])
                .unwrap_err()
                .kind(),
            "invalid-class-names"
        );
    }
}
