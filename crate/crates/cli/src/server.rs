//! HTTP endpoints behind the class-pair labeling UI.
//!
//! `GET /session?rater_id=R` returns the rater's next pending pair and
//! progress. `POST /rating` appends one rating to the ratings CSV and
//! answers only after the line is synced to disk. Each rater sees every
//! ordered pair of distinct classes once, in an order shuffled from the
//! server seed and the rater id. Optional attention checks ask about a class
//! paired with itself; their answers go to a sidecar CSV next to the ratings
//! file and never into the ratings themselves.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use explicable::formats::{self, RATINGS_HEADER};
use explicable::weights::{RatingRecord, MAX_LIKERT};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::{load, read_text};
use crate::error::CliError;
use crate::ServeArgs;

/// Likert anchors for scores 0 through 4.
pub const SCALE: [&str; 5] = [
    "Highly Unreasonable (surprised)",
    "Unreasonable",
    "Neutral",
    "Reasonable",
    "Highly Reasonable (Explicable)",
];

/// Example images listed per class.
pub const MAX_IMAGES: usize = 36;

pub const ATTENTION_HEADER: &str = "rater_id,class,expected_score,score,passed";

const MAX_RATER_ID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct AttentionCheck {
    pub class: usize,
    pub expected_score: u8,
}

#[derive(Debug, Clone)]
pub struct LabelConfig {
    pub class_names: Vec<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub images: Option<PathBuf>,
    pub attention: Vec<AttentionCheck>,
}

/// Sidecar path for attention-check answers: `ratings.csv` becomes
/// `ratings.attention.csv`.
pub fn attention_path(out: &Path) -> PathBuf {
    out.with_extension("attention.csv")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairView {
    pub true_class: usize,
    pub predicted_class: usize,
    pub true_name: String,
    pub predicted_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub rated: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub rater_id: String,
    pub class_names: Vec<String>,
    pub scale: Vec<String>,
    pub pair: Option<PairView>,
    pub progress: Progress,
    pub images: Option<BTreeMap<String, Vec<String>>>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingAck {
    pub accepted: bool,
    /// Ratings stored across all raters.
    pub count: usize,
    pub progress: Progress,
    /// Present for attention checks.
    pub attention_passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub error: &'static str,
    pub message: String,
}

impl Rejection {
    fn new(error: &'static str, message: impl Into<String>) -> Self {
        Rejection {
            error,
            message: message.into(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self.error {
            "duplicate-rating" => StatusCode::CONFLICT,
            "io-error" => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        }
    }
}

impl IntoResponse for Rejection {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

/// Raw request body; integers are wide so out-of-range scores are reported
/// as such rather than as parse failures.
#[derive(Debug, Deserialize)]
pub struct RatingRequest {
    pub rater_id: String,
    pub true_class: i64,
    pub predicted_class: i64,
    pub score: i64,
}

/// Decodes a rating body and checks the rater id and score range.
pub fn decode_rating(body: &[u8]) -> Result<RatingRequest, Rejection> {
    let req: RatingRequest = serde_json::from_slice(body).map_err(|e| {
        Rejection::new(
            "invalid-request",
            format!("expected rater_id, true_class, predicted_class, score: {e}"),
        )
    })?;
    if !valid_rater_id(&req.rater_id) {
        return Err(Rejection::new(
            "invalid-rater",
            "rater_id must be 1-64 characters of [A-Za-z0-9_.@-]",
        ));
    }
    if !(0..=MAX_LIKERT as i64).contains(&req.score) {
        return Err(Rejection::new(
            "invalid-score",
            format!("score must be 0-4, got {}", req.score),
        ));
    }
    Ok(req)
}

/// An append-only CSV log with a fixed header.
struct Log {
    file: File,
    len: u64,
}

impl Log {
    /// Opens or creates the log and drops a trailing partial line left by a
    /// crash. Returns the log and its complete text.
    fn open(path: &Path, header: &str) -> Result<(Self, String), CliError> {
        let io = |e| CliError::io(path, e);
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)
            .map_err(io)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(io)?;
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        if keep < bytes.len() {
            file.set_len(keep as u64).map_err(io)?;
            bytes.truncate(keep);
        }
        let mut text = String::from_utf8(bytes).map_err(|_| {
            CliError::invalid(
                "malformed-input",
                format!("{} is not UTF-8", path.display()),
            )
        })?;
        if text.is_empty() {
            text = format!("{header}\n");
            file.write_all(text.as_bytes()).map_err(io)?;
        }
        file.sync_all().map_err(io)?;
        let len = file.seek(SeekFrom::End(0)).map_err(io)?;
        Ok((Log { file, len }, text))
    }

    /// Appends one line and syncs it. On failure the file is cut back to its
    /// previous length.
    fn append(&mut self, line: &str) -> std::io::Result<()> {
        let result = self
            .file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data());
        match result {
            Ok(()) => {
                self.len += line.len() as u64;
                Ok(())
            }
            Err(e) => {
                let _ = self.file.set_len(self.len);
                let _ = self.file.seek(SeekFrom::End(0));
                Err(e)
            }
        }
    }
}

struct Store {
    ratings: Log,
    attention: Option<Log>,
    /// Pairs answered per rater, including attention checks as `(c, c)`.
    done: HashMap<String, HashSet<(usize, usize)>>,
    count: usize,
}

pub struct Labeling {
    config: LabelConfig,
    images: Option<BTreeMap<String, Vec<String>>>,
    store: Mutex<Store>,
}

fn valid_rater_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= MAX_RATER_ID
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-.@".contains(c))
}

fn image_manifest(dir: &Path, names: &[String]) -> Result<BTreeMap<String, Vec<String>>, CliError> {
    let mut out = BTreeMap::new();
    for name in names {
        let class_dir = dir.join(name);
        let mut files = Vec::new();
        if class_dir.is_dir() {
            for entry in fs::read_dir(&class_dir).map_err(|e| CliError::io(&class_dir, e))? {
                let entry = entry.map_err(|e| CliError::io(&class_dir, e))?;
                if entry.path().is_file() {
                    files.push(format!("{name}/{}", entry.file_name().to_string_lossy()));
                }
            }
        }
        files.sort();
        files.truncate(MAX_IMAGES);
        out.insert(name.clone(), files);
    }
    Ok(out)
}

pub fn read_attention_checks(text: &str) -> Result<Vec<AttentionCheck>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::invalid("malformed-input", e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["class", "expected_score"] {
        return Err(CliError::invalid(
            "bad-header",
            "attention checks need header `class,expected_score`",
        ));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e: csv::Error| CliError::invalid("malformed-input", e.to_string())))
        .collect()
}

impl Labeling {
    /// Opens the ratings log (and the attention sidecar when checks are
    /// configured), replaying whatever they already hold.
    pub fn open(config: LabelConfig) -> Result<Arc<Self>, CliError> {
        let n = config.class_names.len();
        if n < 2 {
            return Err(CliError::invalid(
                "invalid-class-names",
                "labeling needs at least two classes",
            ));
        }
        let mut seen = HashSet::new();
        for c in &config.attention {
            if c.class >= n || c.expected_score > MAX_LIKERT || !seen.insert(c.class) {
                return Err(CliError::invalid(
                    "invalid-attention-check",
                    format!(
                        "attention check for class {} is out of range or repeated",
                        c.class
                    ),
                ));
            }
        }
        let images = config
            .images
            .as_deref()
            .map(|d| image_manifest(d, &config.class_names))
            .transpose()?;

        let (ratings, text) = Log::open(&config.out, RATINGS_HEADER)?;
        let records = formats::read_class_ratings(&text)
            .map_err(|e| CliError::from(e).in_file(&config.out))?;
        let mut done: HashMap<String, HashSet<(usize, usize)>> = HashMap::new();
        for r in &records {
            r.validate(n)
                .map_err(|e| CliError::from(e).in_file(&config.out))?;
            if !valid_rater_id(&r.rater_id)
                || !done
                    .entry(r.rater_id.clone())
                    .or_default()
                    .insert((r.true_class, r.predicted_class))
            {
                return Err(CliError::invalid(
                    "invalid-ratings-log",
                    format!(
                        "{}: bad or repeated rating by {:?}",
                        config.out.display(),
                        r.rater_id
                    ),
                ));
            }
        }

        let attention = if config.attention.is_empty() {
            None
        } else {
            let path = attention_path(&config.out);
            let (log, text) = Log::open(&path, ATTENTION_HEADER)?;
            for (i, line) in text.lines().enumerate().skip(1) {
                let fields: Vec<&str> = line.split(',').collect();
                let class = fields.get(1).and_then(|f| f.parse::<usize>().ok());
                match (fields.len(), class) {
                    (5, Some(c)) if c < n && valid_rater_id(fields[0]) => {
                        done.entry(fields[0].to_string())
                            .or_default()
                            .insert((c, c));
                    }
                    _ => {
                        return Err(CliError::invalid(
                            "invalid-ratings-log",
                            format!("{}: line {} is malformed", path.display(), i + 1),
                        ))
                    }
                }
            }
            Some(log)
        };

        Ok(Arc::new(Labeling {
            images,
            store: Mutex::new(Store {
                ratings,
                attention,
                done,
                count: records.len(),
            }),
            config,
        }))
    }

    fn rater_seed(&self, rater_id: &str) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.config.seed.to_le_bytes());
        h.update(rater_id.as_bytes());
        h.finalize().into()
    }

    /// Every pair this rater will be asked about, in presentation order.
    pub fn pair_order(&self, rater_id: &str) -> Vec<(usize, usize)> {
        let n = self.config.class_names.len();
        let mut pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        pairs.extend(self.config.attention.iter().map(|c| (c.class, c.class)));
        pairs.shuffle(&mut ChaCha8Rng::from_seed(self.rater_seed(rater_id)));
        pairs
    }

    fn session_id(&self, rater_id: &str) -> String {
        let digest = self.rater_seed(rater_id);
        let mut h = Sha256::new();
        h.update(digest);
        for name in &self.config.class_names {
            h.update(name.as_bytes());
            h.update([0]);
        }
        h.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn progress(&self, store: &Store, rater_id: &str) -> Progress {
        Progress {
            rated: store.done.get(rater_id).map_or(0, HashSet::len),
            total: self.pair_order(rater_id).len(),
        }
    }

    pub fn session(&self, rater_id: &str) -> Result<SessionView, Rejection> {
        if !valid_rater_id(rater_id) {
            return Err(Rejection::new(
                "invalid-rater",
                "rater_id must be 1-64 characters of [A-Za-z0-9_.@-]",
            ));
        }
        let store = self.store.lock().expect("labeling store lock");
        let done = store.done.get(rater_id);
        let next = self
            .pair_order(rater_id)
            .into_iter()
            .find(|p| done.is_none_or(|d| !d.contains(p)));
        let names = &self.config.class_names;
        Ok(SessionView {
            session_id: self.session_id(rater_id),
            rater_id: rater_id.to_string(),
            class_names: names.clone(),
            scale: SCALE.iter().map(|s| s.to_string()).collect(),
            pair: next.map(|(t, p)| PairView {
                true_class: t,
                predicted_class: p,
                true_name: names[t].clone(),
                predicted_name: names[p].clone(),
            }),
            progress: self.progress(&store, rater_id),
            images: self.images.clone(),
            complete: next.is_none(),
        })
    }

    pub fn submit(&self, body: &[u8]) -> Result<RatingAck, Rejection> {
        let req = decode_rating(body)?;
        let n = self.config.class_names.len() as i64;
        let in_range = |c: i64| (0..n).contains(&c);
        let check =
            self.config.attention.iter().find(|c| {
                c.class as i64 == req.true_class && req.true_class == req.predicted_class
            });
        if !in_range(req.true_class)
            || !in_range(req.predicted_class)
            || (req.true_class == req.predicted_class && check.is_none())
        {
            return Err(Rejection::new(
                "unknown-pair",
                format!(
                    "({}, {}) is not a pair of this session",
                    req.true_class, req.predicted_class
                ),
            ));
        }
        let pair = (req.true_class as usize, req.predicted_class as usize);
        let score = req.score as u8;

        let mut guard = self.store.lock().expect("labeling store lock");
        let store = &mut *guard;
        if store
            .done
            .get(&req.rater_id)
            .is_some_and(|d| d.contains(&pair))
        {
            return Err(Rejection::new(
                "duplicate-rating",
                format!("{} already rated ({}, {})", req.rater_id, pair.0, pair.1),
            ));
        }
        let attention_passed = match check {
            Some(c) => {
                let passed = score == c.expected_score;
                let line = format!(
                    "{},{},{},{score},{passed}\n",
                    req.rater_id, c.class, c.expected_score
                );
                let log = store
                    .attention
                    .as_mut()
                    .expect("attention log open when checks exist");
                log.append(&line)
                    .map_err(|e| Rejection::new("io-error", e.to_string()))?;
                Some(passed)
            }
            None => {
                let record = RatingRecord {
                    rater_id: req.rater_id.clone(),
                    true_class: pair.0,
                    predicted_class: pair.1,
                    score,
                };
                store
                    .ratings
                    .append(&formats::rating_line(&record))
                    .map_err(|e| Rejection::new("io-error", e.to_string()))?;
                store.count += 1;
                None
            }
        };
        store
            .done
            .entry(req.rater_id.clone())
            .or_default()
            .insert(pair);
        Ok(RatingAck {
            accepted: true,
            count: store.count,
            progress: self.progress(store, &req.rater_id),
            attention_passed,
        })
    }
}

#[derive(Debug, Deserialize)]
struct SessionQuery {
    rater_id: Option<String>,
}

async fn get_session(State(app): State<Arc<Labeling>>, Query(q): Query<SessionQuery>) -> Response {
    match app.session(q.rater_id.as_deref().unwrap_or("")) {
        Ok(view) => Json(view).into_response(),
        Err(r) => r.into_response(),
    }
}

async fn post_rating(State(app): State<Arc<Labeling>>, body: Bytes) -> Response {
    match app.submit(&body) {
        Ok(ack) => Json(ack).into_response(),
        Err(r) => r.into_response(),
    }
}

pub fn router(app: Arc<Labeling>) -> Router {
    Router::new()
        .route("/session", get(get_session))
        .route("/rating", post(post_rating))
        .with_state(app)
}

pub fn config_from_args(a: &ServeArgs) -> Result<LabelConfig, CliError> {
    let class_names = load(&a.classes, formats::read_class_names)?;
    let attention = match &a.attention {
        Some(p) => read_attention_checks(&read_text(p)?).map_err(|e| e.in_file(p))?,
        None => Vec::new(),
    };
    Ok(LabelConfig {
        class_names,
        out: a.out.clone(),
        seed: a.seed,
        images: a.images.clone(),
        attention,
    })
}

pub fn serve(a: ServeArgs) -> Result<(), CliError> {
    let app = Labeling::open(config_from_args(&a)?)?;
    let addr = format!("{}:{}", a.host, a.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io(Path::new(&addr), e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::io(Path::new(&addr), e))?;
        let local = listener
            .local_addr()
            .map_err(|e| CliError::io(Path::new(&addr), e))?;
        eprintln!("listening on http://{local}");
        axum::serve(listener, router(app))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::io(Path::new(&addr), e))
    })
}
