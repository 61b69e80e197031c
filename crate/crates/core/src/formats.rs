//! Text file formats read and written by the command-line tool.
//!
//! All tabular formats are comma-separated with a fixed header. Floats are
//! written with 17 significant digits so values survive a round trip
//! exactly.

use std::fmt::Write as _;

use thiserror::Error;

use crate::loss::{LossError, ProbVector};
use crate::metrics::{LossTable, PredictionRow, PredictionSet, ScoreReport};
use crate::simulation::{LossCurve, RegimeVerdict};
use crate::taxonomy::TaxonomyError;
use crate::trainer::{Dataset, Model, TrainError};
use crate::weights::{InstanceRating, RatingRecord, WeightError, WeightMatrix, MAX_LIKERT};

/// First line of a model file.
pub const MODEL_MAGIC: &str = "explicable-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line 1: expected header {expected:?}, got {got:?}")]
    Header { expected: String, got: String },
    #[error("line {line}: {source}")]
    Weights { line: usize, source: WeightError },
    #[error(transparent)]
    Matrix(#[from] WeightError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

impl FormatError {
    pub fn kind(&self) -> &'static str {
        match self {
            FormatError::Malformed { .. } => "malformed-input",
            FormatError::Header { .. } => "bad-header",
            FormatError::Weights { source, .. } => source.kind(),
            FormatError::Matrix(e) => e.kind(),
            FormatError::Train(e) => e.kind(),
            FormatError::Loss(e) => e.kind(),
            FormatError::Taxonomy(e) => e.kind(),
        }
    }
}

fn malformed(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        message: message.into(),
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_float(field: &str, line: usize) -> Result<f64, FormatError> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| malformed(line, format!("expected a finite number, got {field:?}")))
}

fn parse_index(field: &str, line: usize) -> Result<usize, FormatError> {
    field
        .parse::<usize>()
        .map_err(|_| malformed(line, format!("expected a class index, got {field:?}")))
}

/// A parsed CSV: header fields and data rows tagged with their line numbers.
struct Table {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(text: &str) -> Result<Table, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if header.is_none() {
            header = Some(fields);
        } else {
            rows.push((line, fields));
        }
    }
    let header = header.ok_or_else(|| malformed(1, "empty input"))?;
    Ok(Table { header, rows })
}

fn expect_header(got: &[String], expected: &[String]) -> Result<(), FormatError> {
    if got != expected {
        return Err(FormatError::Header {
            expected: expected.join(","),
            got: got.join(","),
        });
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.trim() != s {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Counts trailing columns `prefix0, prefix1, ...` starting at `from`.
fn indexed_columns(header: &[String], from: usize, prefix: &str) -> Result<usize, FormatError> {
    let tail = &header[from.min(header.len())..];
    for (i, h) in tail.iter().enumerate() {
        if *h != format!("{prefix}{i}") {
            return Err(FormatError::Header {
                expected: format!("{prefix}{i}"),
                got: h.clone(),
            });
        }
    }
    if tail.is_empty() {
        return Err(FormatError::Header {
            expected: format!("{prefix}0"),
            got: header.join(","),
        });
    }
    Ok(tail.len())
}

pub fn write_weight_matrix(w: &WeightMatrix) -> String {
    let mut out = String::new();
    for name in w.class_names() {
        out.push(',');
        out.push_str(&csv_field(name));
    }
    out.push('\n');
    for (name, row) in w.class_names().iter().zip(w.rows()) {
        out.push_str(&csv_field(name));
        for v in row {
            out.push(',');
            out.push_str(&fmt_float(*v));
        }
        out.push('\n');
    }
    out
}

pub fn read_weight_matrix(text: &str) -> Result<WeightMatrix, FormatError> {
    let table = read_table(text)?;
    if table.header.first().map(String::as_str) != Some("") || table.header.len() < 2 {
        return Err(malformed(
            1,
            "weight matrix header must be `,name_0,...,name_{n-1}`",
        ));
    }
    let names: Vec<String> = table.header[1..].to_vec();
    let n = names.len();
    if table.rows.len() != n {
        return Err(malformed(
            table.rows.last().map_or(1, |r| r.0),
            format!("expected {n} rows, got {}", table.rows.len()),
        ));
    }
    let mut rows = Vec::with_capacity(n);
    for (i, (line, fields)) in table.rows.iter().enumerate() {
        if fields.len() != n + 1 {
            return Err(malformed(
                *line,
                format!("expected {} fields, got {}", n + 1, fields.len()),
            ));
        }
        if fields[0] != names[i] {
            return Err(malformed(
                *line,
                format!(
                    "row {i} is labelled {:?}, expected {:?}",
                    fields[0], names[i]
                ),
            ));
        }
        rows.push(
            fields[1..]
                .iter()
                .map(|f| parse_float(f, *line))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(WeightMatrix::new(names, rows)?)
}

/// Reads `instance_id,true_class,count_0..count_{n-1}`; returns ratings and `n`.
pub fn read_instance_ratings(text: &str) -> Result<(Vec<InstanceRating>, usize), FormatError> {
    let table = read_table(text)?;
    if table.header.len() < 3 || table.header[0] != "instance_id" || table.header[1] != "true_class"
    {
        return Err(FormatError::Header {
            expected: "instance_id,true_class,count_0,...".into(),
            got: table.header.join(","),
        });
    }
    let n = indexed_columns(&table.header, 2, "count_")?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, fields) in table.rows {
        if fields.len() != n + 2 {
            return Err(malformed(
                line,
                format!("expected {} fields, got {}", n + 2, fields.len()),
            ));
        }
        let label_counts = fields[2..]
            .iter()
            .map(|f| {
                f.parse::<u64>()
                    .map_err(|_| malformed(line, format!("bad count {f:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(InstanceRating {
            instance_id: fields[0].clone(),
            true_class: parse_index(&fields[1], line)?,
            label_counts,
        });
    }
    Ok((out, n))
}

pub fn write_instance_ratings(ratings: &[InstanceRating], n: usize) -> String {
    let mut out = String::from("instance_id,true_class");
    for j in 0..n {
        let _ = write!(out, ",count_{j}");
    }
    out.push('\n');
    for r in ratings {
        let _ = write!(out, "{},{}", csv_field(&r.instance_id), r.true_class);
        for c in &r.label_counts {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

pub const RATINGS_HEADER: &str = "rater_id,true_class,predicted_class,score";

pub fn read_class_ratings(text: &str) -> Result<Vec<RatingRecord>, FormatError> {
    let table = read_table(text)?;
    let expected: Vec<String> = RATINGS_HEADER.split(',').map(str::to_string).collect();
    expect_header(&table.header, &expected)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (line, fields) in table.rows {
        if fields.len() != 4 {
            return Err(malformed(
                line,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let score: i64 = fields[3]
            .parse()
            .map_err(|_| malformed(line, format!("bad score {:?}", fields[3])))?;
        if !(0..=MAX_LIKERT as i64).contains(&score) {
            return Err(FormatError::Weights {
                line,
                source: WeightError::ScoreOutOfRange(score),
            });
        }
        out.push(RatingRecord {
            rater_id: fields[0].clone(),
            true_class: parse_index(&fields[1], line)?,
            predicted_class: parse_index(&fields[2], line)?,
            score: score as u8,
        });
    }
    Ok(out)
}

/// One ratings line, newline-terminated, for appending to a ratings file.
pub fn rating_line(r: &RatingRecord) -> String {
    format!(
        "{},{},{},{}\n",
        csv_field(&r.rater_id),
        r.true_class,
        r.predicted_class,
        r.score
    )
}

pub fn write_class_ratings(ratings: &[RatingRecord]) -> String {
    let mut out = format!("{RATINGS_HEADER}\n");
    for r in ratings {
        out.push_str(&rating_line(r));
    }
    out
}

/// Reads a class list `index,name[,...]`; extra columns are ignored so a
/// label map file can be used directly.
pub fn read_class_names(text: &str) -> Result<Vec<String>, FormatError> {
    let table = read_table(text)?;
    if table.header.len() < 2 || table.header[0] != "index" || table.header[1] != "name" {
        return Err(FormatError::Header {
            expected: "index,name[,...]".into(),
            got: table.header.join(","),
        });
    }
    let mut slots: Vec<Option<String>> = vec![None; table.rows.len()];
    for (line, fields) in &table.rows {
        if fields.len() != table.header.len() {
            return Err(malformed(*line, "field count differs from header"));
        }
        let i = parse_index(&fields[0], *line)?;
        if i >= slots.len() || slots[i].is_some() || fields[1].is_empty() {
            return Err(malformed(
                *line,
                format!("class index {i} is duplicated, out of range or unnamed"),
            ));
        }
        slots[i] = Some(fields[1].clone());
    }
    Ok(slots
        .into_iter()
        .map(|s| s.expect("indices cover 0..n"))
        .collect())
}

pub fn write_class_names(names: &[String]) -> String {
    let mut out = String::from("index,name\n");
    for (i, n) in names.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", csv_field(n));
    }
    out
}

/// Reads `f_0..f_{d-1},label`. Without explicit names, classes are named
/// `class_0..` up to the largest label.
pub fn read_dataset(text: &str, class_names: Option<Vec<String>>) -> Result<Dataset, FormatError> {
    let table = read_table(text)?;
    if table.header.last().map(String::as_str) != Some("label") {
        return Err(FormatError::Header {
            expected: "f_0,...,f_{d-1},label".into(),
            got: table.header.join(","),
        });
    }
    let d = table.header.len() - 1;
    let feature_header: Vec<String> = (0..d).map(|i| format!("f_{i}")).collect();
    expect_header(&table.header[..d], &feature_header)?;
    let mut features = Vec::with_capacity(table.rows.len());
    let mut labels = Vec::with_capacity(table.rows.len());
    for (line, fields) in table.rows {
        if fields.len() != d + 1 {
            return Err(malformed(
                line,
                format!("expected {} fields, got {}", d + 1, fields.len()),
            ));
        }
        features.push(
            fields[..d]
                .iter()
                .map(|f| parse_float(f, line))
                .collect::<Result<Vec<_>, _>>()?,
        );
        labels.push(parse_index(&fields[d], line)?);
    }
    let names = match class_names {
        Some(n) => n,
        None => {
            let n = labels.iter().max().map_or(0, |m| m + 1);
            (0..n).map(|i| format!("class_{i}")).collect()
        }
    };
    Ok(Dataset::new(features, labels, names)?)
}

pub fn write_dataset(data: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..data.dims() {
        let _ = write!(out, "f_{i},");
    }
    out.push_str("label\n");
    for i in 0..data.len() {
        for v in data.row(i) {
            out.push_str(&fmt_float(*v));
            out.push(',');
        }
        let _ = writeln!(out, "{}", data.label(i));
    }
    out
}

pub fn read_predictions(text: &str, classifier_name: &str) -> Result<PredictionSet, FormatError> {
    let table = read_table(text)?;
    if table.header.len() < 3 || table.header[0] != "instance" || table.header[1] != "true_class" {
        return Err(FormatError::Header {
            expected: "instance,true_class,p_0,...".into(),
            got: table.header.join(","),
        });
    }
    let n = indexed_columns(&table.header, 2, "p_")?;
    let mut rows = Vec::with_capacity(table.rows.len());
    for (line, fields) in table.rows {
        if fields.len() != n + 2 {
            return Err(malformed(
                line,
                format!("expected {} fields, got {}", n + 2, fields.len()),
            ));
        }
        let probs = fields[2..]
            .iter()
            .map(|f| parse_float(f, line))
            .collect::<Result<Vec<_>, _>>()?;
        let probs = ProbVector::new(probs).map_err(|e| malformed(line, e.to_string()))?;
        let true_class = parse_index(&fields[1], line)?;
        if true_class >= n {
            return Err(malformed(
                line,
                format!("true class {true_class} out of range for {n} classes"),
            ));
        }
        rows.push(PredictionRow {
            instance_id: fields[0].clone(),
            true_class,
            probs,
        });
    }
    Ok(PredictionSet {
        classifier_name: classifier_name.to_string(),
        rows,
    })
}

pub fn write_predictions(set: &PredictionSet) -> String {
    let n = set.rows.first().map_or(0, |r| r.probs.len());
    let mut out = String::from("instance,true_class");
    for j in 0..n {
        let _ = write!(out, ",p_{j}");
    }
    out.push('\n');
    for r in &set.rows {
        let _ = write!(out, "{},{}", csv_field(&r.instance_id), r.true_class);
        for p in r.probs.as_slice() {
            out.push(',');
            out.push_str(&fmt_float(*p));
        }
        out.push('\n');
    }
    out
}

/// Versioned plain-text model file:
///
/// ```text
/// explicable-model 1
/// dims <inputs> <hidden> <classes>
/// class <name>            (one line per class)
/// <parameter>             (one per line: hidden weights, hidden biases,
///                          output weights, output biases; row-major)
/// ```
pub fn write_model(model: &Model) -> String {
    let mut out = format!("{MODEL_MAGIC} {MODEL_VERSION}\n");
    let _ = writeln!(
        out,
        "dims {} {} {}",
        model.inputs,
        model.hidden,
        model.n_classes()
    );
    for name in &model.class_names {
        let _ = writeln!(out, "class {name}");
    }
    for p in model.params() {
        out.push_str(&fmt_float(p));
        out.push('\n');
    }
    out
}

pub fn read_model(text: &str) -> Result<Model, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| malformed(0, format!("unexpected end of file, expected {what}")))
    };

    let (line, magic) = next("header")?;
    let expected_magic = format!("{MODEL_MAGIC} {MODEL_VERSION}");
    if magic != expected_magic {
        return Err(malformed(
            line,
            format!("expected {expected_magic:?}, got {magic:?}"),
        ));
    }
    let (line, dims) = next("dims")?;
    let dims: Vec<usize> = match dims.strip_prefix("dims ") {
        Some(rest) => rest
            .split(' ')
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| malformed(line, format!("bad dimension {t:?}")))
            })
            .collect::<Result<_, _>>()?,
        None => {
            return Err(malformed(
                line,
                "expected `dims <inputs> <hidden> <classes>`",
            ))
        }
    };
    let [inputs, hidden, n] = dims[..] else {
        return Err(malformed(line, "expected three dimensions"));
    };
    // Bound sizes before allocating anything.
    const LIMIT: usize = 1 << 24;
    let fan_in = if hidden == 0 { inputs } else { hidden };
    let total = inputs
        .checked_mul(hidden)
        .and_then(|a| fan_in.checked_mul(n).and_then(|b| a.checked_add(b)))
        .and_then(|s| s.checked_add(hidden + n))
        .filter(|&s| s <= LIMIT && n <= LIMIT)
        .ok_or_else(|| malformed(line, "model dimensions too large"))?;

    let mut class_names = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, l) = next("class line")?;
        match l.strip_prefix("class ") {
            Some(name) if !name.is_empty() => class_names.push(name.to_string()),
            _ => return Err(malformed(line, "expected `class <name>`")),
        }
    }
    let mut params = Vec::with_capacity(total);
    for _ in 0..total {
        let (line, l) = next("parameter")?;
        params.push(parse_float(l, line)?);
    }
    if let Some((line, extra)) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(malformed(line, "trailing data after parameters"));
        }
    }
    let mut rest = params.into_iter();
    let mut take = |k: usize| rest.by_ref().take(k).collect::<Vec<_>>();
    let model = Model {
        inputs,
        hidden,
        hidden_w: take(inputs * hidden),
        hidden_b: take(hidden),
        out_w: take(fan_in * n),
        out_b: take(n),
        class_names,
    };
    model.validate()?;
    Ok(model)
}

pub fn write_score_report(r: &ScoreReport) -> String {
    let mut out = String::from("classifier,hard,soft\n");
    for ((name, hard), soft) in r.classifier_names.iter().zip(&r.hard).zip(&r.soft) {
        let _ = writeln!(out, "{},{hard},{}", csv_field(name), fmt_float(*soft));
    }
    out
}

/// Rows are models, columns are losses.
pub fn write_loss_table(t: &LossTable) -> String {
    let mut out = String::from("model");
    for l in &t.losses {
        out.push(',');
        out.push_str(&csv_field(l));
    }
    out.push('\n');
    for (m, row) in t.models.iter().zip(&t.values) {
        out.push_str(&csv_field(m));
        for v in row {
            out.push(',');
            out.push_str(&fmt_float(*v));
        }
        out.push('\n');
    }
    out
}

pub const CURVE_HEADER: &str = "regime,p_true,p_f,p_c,loss_weighted,loss_cce";

pub fn write_curves(curves: &[LossCurve], include_header: bool) -> String {
    let mut out = String::new();
    if include_header {
        out.push_str(CURVE_HEADER);
        out.push('\n');
    }
    for c in curves {
        for p in &c.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.regime.label(),
                fmt_float(c.p_true),
                fmt_float(p.p_f),
                fmt_float(p.p_c),
                fmt_float(p.loss),
                fmt_float(p.loss_cce)
            );
        }
    }
    out
}

pub const VERDICT_HEADER: &str = "regime,monotone_overall,condition_consistent,violations";

pub fn write_verdicts(verdicts: &[RegimeVerdict]) -> String {
    let mut out = format!("{VERDICT_HEADER}\n");
    for v in verdicts {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            v.regime.label(),
            v.monotone_overall,
            v.condition_consistent,
            v.violations
        );
    }
    out
}
