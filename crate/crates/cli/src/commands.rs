use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use explicable::formats::{self, fmt_float};
use explicable::metrics::{self, PredictionRow, PredictionSet};
use explicable::simulation::{self, SimConfig};
use explicable::trainer::{self, SyntheticSpec, TrainConfig};
use explicable::weights::{self, IhlAggregation};
use explicable::{LabelMap, Taxonomy, WeightMatrix};

use crate::error::CliError;
use crate::{
    lemmas, Aggregation, GenerateArgs, LossTableArgs, PredictArgs, ScoreArgs, SimulateArgs,
    TrainArgs,
};
use crate::{VerifyArgs, WeightsCommand};

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Reads `path` and parses it, tagging validation errors with the path.
pub fn load<T, E>(path: &Path, parse: impl FnOnce(&str) -> Result<T, E>) -> Result<T, CliError>
where
    CliError: From<E>,
{
    let text = read_text(path)?;
    parse(&text).map_err(|e| CliError::from(e).in_file(path))
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("class_{i}")).collect()
}

pub fn weights(cmd: WeightsCommand) -> Result<(), CliError> {
    let (w, out) = match cmd {
        WeightsCommand::Ihl(a) => {
            let (ratings, n) = load(&a.ratings, formats::read_instance_ratings)?;
            let names = match &a.classes {
                Some(p) => load(p, formats::read_class_names)?,
                None => default_names(n),
            };
            if names.len() != n {
                return Err(CliError::invalid(
                    "shape-mismatch",
                    format!(
                        "ratings have {n} count columns but {} classes are listed",
                        names.len()
                    ),
                ));
            }
            let agg = match a.aggregation {
                Aggregation::Pooled => IhlAggregation::PooledCounts,
                Aggregation::Mean => IhlAggregation::MeanOfDistributions,
            };
            (weights::from_instance_ratings(&ratings, names, agg)?, a.out)
        }
        WeightsCommand::Chl(a) => {
            let ratings = load(&a.ratings, formats::read_class_ratings)?;
            let names = load(&a.classes, formats::read_class_names)?;
            let raw = weights::class_ratings_raw(&ratings, names)?;
            (if a.raw { raw } else { raw.normalize_rows()? }, a.out)
        }
        WeightsCommand::Ekl(a) => {
            let tax = load(&a.taxonomy, Taxonomy::parse)?;
            let labels = load(&a.labels, LabelMap::from_csv)?;
            let raw = weights::taxonomy_similarity(&tax, &labels)?;
            (if a.raw { raw } else { raw.normalize_rows()? }, a.out)
        }
        WeightsCommand::Average(a) => {
            let ms = a
                .inputs
                .iter()
                .map(|p| load(p, formats::read_weight_matrix))
                .collect::<Result<Vec<_>, _>>()?;
            (weights::average_matrices(&ms)?, a.out)
        }
    };
    write_text(&out, &formats::write_weight_matrix(&w))?;
    println!(
        "wrote {}x{} weight matrix to {}",
        w.n(),
        w.n(),
        out.display()
    );
    Ok(())
}

fn parse_centers(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    text.split(';')
        .map(|point| {
            point
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| CliError::Usage(format!("bad center coordinate {v:?}")))
                })
                .collect()
        })
        .collect()
}

pub fn generate(a: GenerateArgs) -> Result<(), CliError> {
    let centers = parse_centers(&a.centers)?;
    let spec = SyntheticSpec {
        n_classes: centers.len(),
        per_class: a.per_class,
        dims: centers[0].len(),
        centers,
        spread: a.spread,
        seed: a.seed,
    };
    let data = trainer::generate_synthetic(&spec)?;
    write_text(&a.out, &formats::write_dataset(&data))?;
    if let Some(p) = &a.classes_out {
        write_text(p, &formats::write_class_names(data.class_names()))?;
    }
    println!("wrote {} rows to {}", data.len(), a.out.display());
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let w = a
        .weights
        .as_deref()
        .map(|p| load(p, formats::read_weight_matrix))
        .transpose()?;
    let names = match (&a.classes, &w) {
        (Some(p), _) => Some(load(p, formats::read_class_names)?),
        (None, Some(w)) => Some(w.class_names().to_vec()),
        (None, None) => None,
    };
    let data = load(&a.data, |t| formats::read_dataset(t, names))?;
    let w = match w {
        Some(w) => w,
        None => WeightMatrix::identity(data.class_names().to_vec())?,
    };
    let cfg = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch,
        seed: a.seed,
        hidden_units: a.hidden,
        l2: a.l2,
    };
    let out = trainer::train(&data, &w, &cfg)?;
    write_text(&a.out, &formats::write_model(&out.model))?;
    if let Some(p) = &a.trace {
        let mut text = String::from("epoch,loss\n");
        for (i, l) in out.loss_trace.iter().enumerate() {
            let _ = writeln!(text, "{},{}", i + 1, fmt_float(*l));
        }
        write_text(p, &text)?;
    }
    let acc = trainer::accuracy(&out.model, &data)?;
    println!(
        "trained {} epochs, final loss {:.6}, training accuracy {acc:.4}",
        cfg.epochs,
        out.loss_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<(), CliError> {
    let model = load(&a.model, formats::read_model)?;
    let data = load(&a.data, |t| {
        formats::read_dataset(t, Some(model.class_names.clone()))
    })?;
    let rows = (0..data.len())
        .map(|i| {
            Ok(PredictionRow {
                instance_id: i.to_string(),
                true_class: data.label(i),
                probs: trainer::predict(&model, data.row(i))?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let set = PredictionSet {
        classifier_name: stem(&a.model),
        rows,
    };
    write_text(&a.out, &formats::write_predictions(&set))?;
    println!(
        "wrote {} predictions to {}",
        set.rows.len(),
        a.out.display()
    );
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or_else(
        || p.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

fn load_sets(paths: &[PathBuf], names: &[String]) -> Result<Vec<PredictionSet>, CliError> {
    if !names.is_empty() && names.len() != paths.len() {
        return Err(CliError::Usage(format!(
            "{} names given for {} prediction files",
            names.len(),
            paths.len()
        )));
    }
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let name = names.get(i).cloned().unwrap_or_else(|| stem(p));
            load(p, |t| formats::read_predictions(t, &name))
        })
        .collect()
}

pub fn score(a: ScoreArgs) -> Result<(), CliError> {
    let sets = load_sets(&a.predictions, &a.names)?;
    let sim = load(&a.similarity, formats::read_weight_matrix)?;
    let report = metrics::score_prediction_sets(&sets, &sim)?;
    write_text(&a.out, &formats::write_score_report(&report))?;
    println!(
        "intersection={} tied={}",
        report.intersection_size, report.tied_instances
    );
    Ok(())
}

pub fn loss_table(a: LossTableArgs) -> Result<(), CliError> {
    let sets = load_sets(&a.predictions, &a.names)?;
    let losses = a
        .losses
        .iter()
        .map(|(name, path)| Ok((name.clone(), load(path, formats::read_weight_matrix)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let table = metrics::loss_table(&sets, &losses)?;
    write_text(&a.out, &formats::write_loss_table(&table))?;
    for (c, name) in table.losses.iter().enumerate() {
        println!("{name}: lowest {}", table.models[table.column_argmin(c)]);
    }
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let cfg = SimConfig {
        w_correct: a.w_correct,
        w_c: a.wc,
        w_f: a.wf,
        p_true_grid: a.grid,
        p_f_step: a.step,
        epsilon: a.epsilon,
    };
    let curves = simulation::sweep(&cfg)?;
    let verdict = simulation::regime_report(&curves, &cfg)?;
    write_text(&a.out, &formats::write_curves(&curves, true))?;
    let verdicts = formats::write_verdicts(std::slice::from_ref(&verdict));
    if let Some(p) = &a.verdict {
        write_text(p, &verdicts)?;
    }
    print!(
        "{}",
        verdicts
            .lines()
            .nth(1)
            .map(|l| format!("{l}\n"))
            .unwrap_or_default()
    );
    Ok(())
}

pub fn verify_lemmas(a: VerifyArgs) -> Result<(), CliError> {
    let s = lemmas::verify(a.trials, a.seed)?;
    println!(
        "lemma1 pass={} fail={}; lemma2 pass={} fail={} boundary={}",
        s.lemma1_pass, s.lemma1_fail, s.lemma2_pass, s.lemma2_fail, s.lemma2_boundary
    );
    println!(
        "lemma2 tau-rule agree={} disagree={}",
        s.tau_rule_agree, s.tau_rule_disagree
    );
    if s.lemma1_fail + s.lemma2_fail > 0 {
        return Err(CliError::invalid("lemma-failure", "a lemma check failed"));
    }
    Ok(())
}
