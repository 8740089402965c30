//! Editor backends: the repair solver, or an external chat model driven by a
//! fixed prompt whose JSON answer is parsed, repaired and reassembled.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::datagen::{render_attributes, render_input};
use crate::design::{serialize_canvas, serialize_content_sequence, Design, Element, Geometry, TextAlign, TextAttrs};
use crate::graph::RelationGraph;
use crate::metrics::{op_satisfaction, relation_satisfaction_for_edit, RelationScore, DEFAULT_OP_TOLERANCE};
use crate::ops::{compose, parse_operation, prompt_design, Action, EditOperation, OpError, PreparedEdit};
use crate::solver::{residuals, solve, ConstraintResiduals, SolverConfig, SolverError};

const PROMPT_TEMPLATE: &str = include_str!("prompt_template.txt");
const PROMPT_EXAMPLE: &str = include_str!("prompt_example.txt");

/// Full prompt for one edit. `prompt_design` holds any added element at
/// its target slot; `g` is pruned at the target.
pub fn build_prompt(prompt_design: &Design, g: &RelationGraph, op: &EditOperation) -> String {
    PROMPT_TEMPLATE
        .replacen("{example}", PROMPT_EXAMPLE, 1)
        .replacen("{input}", &render_input(prompt_design, g, op), 1)
}

// Output parsing

/// One repaired attribute record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attributes {
    pub index: usize,
    pub geom: Geometry,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<TextAttrs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedOutput {
    /// Records in output order, renumbered to the edited design's ids.
    pub records: Vec<Attributes>,
    pub repairs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("{message}")]
pub struct ParseFailure {
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<usize>,
    pub raw: String,
}

/// First JSON array in `text` that parses, ignoring surrounding prose.
fn extract_array(text: &str) -> Option<Vec<Value>> {
    text.match_indices('[').find_map(|(i, _)| {
        let mut it = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
        match it.next() {
            Some(Ok(Value::Array(items))) if items.iter().all(Value::is_object) && !items.is_empty() => Some(items),
            _ => None,
        }
    })
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    }
    .filter(|f| f.is_finite())
}

const GEOMETRY_KEYS: [&str; 4] = ["x", "y", "width", "height"];
const TEXT_KEYS: [&str; 3] = ["angle", "font_size", "text_align"];

/// Parse and repair a model answer for an edit whose prompt listed
/// `prompt_design`. Indices may either follow the prompt (a delete target
/// simply left out) or be renumbered to the edited design.
pub fn parse_model_output(text: &str, prompt_design: &Design, op: &EditOperation) -> Result<ParsedOutput, ParseFailure> {
    let fail = |message: String, missing: Vec<usize>| ParseFailure {
        message,
        missing,
        raw: text.to_owned(),
    };
    let items = extract_array(text).ok_or_else(|| fail("no JSON attribute list found".into(), vec![]))?;
    let mut repairs = Vec::new();
    let mut by_index: BTreeMap<usize, &serde_json::Map<String, Value>> = BTreeMap::new();
    for (pos, item) in items.iter().enumerate() {
        let obj = item.as_object().expect("checked by extract_array");
        let Some(idx) = obj.get("index").and_then(number).filter(|f| *f >= 0.0 && f.fract() == 0.0) else {
            return Err(fail(format!("record {pos} has no usable index"), vec![]));
        };
        if by_index.insert(idx as usize, obj).is_some() {
            repairs.push(format!("index {idx}: duplicate record, kept the last one"));
        }
    }

    let n = prompt_design.len();
    let deleted = match *op {
        EditOperation::Delete { target } => Some(target),
        _ => None,
    };
    let prompt_ids: BTreeSet<usize> = (0..n).filter(|i| Some(*i) != deleted).collect();
    let out_len = prompt_ids.len();
    let renumbered: BTreeSet<usize> = (0..out_len).collect();
    let present: BTreeSet<usize> = by_index.keys().copied().collect();
    // source prompt id for each output slot
    let (mapping, expected): (Vec<(usize, usize)>, &BTreeSet<usize>) =
        if deleted.is_some() && present.is_superset(&renumbered) && !present.is_superset(&prompt_ids) {
            ((0..out_len).map(|k| (k, prompt_ids.iter().nth(k).copied().unwrap())).collect(), &renumbered)
        } else {
            (prompt_ids.iter().map(|&p| (p, p)).collect(), &prompt_ids)
        };
    let missing: Vec<usize> = expected.difference(&present).copied().collect();
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(usize::to_string).collect();
        return Err(fail(format!("missing attributes for index {}", list.join(", ")), missing));
    }
    for extra in present.difference(expected) {
        repairs.push(format!("index {extra}: not expected, dropped"));
    }

    let mut records = Vec::with_capacity(out_len);
    for (slot, (key, src)) in mapping.into_iter().enumerate() {
        let obj = by_index[&key];
        let original = &prompt_design.elements()[src];
        for k in obj.keys() {
            let known = k == "index" || GEOMETRY_KEYS.contains(&k.as_str()) || TEXT_KEYS.contains(&k.as_str());
            if !known {
                repairs.push(format!("index {key}: unknown key {k:?} dropped"));
            }
        }
        let mut vals = [0.0; 4];
        for (i, name) in GEOMETRY_KEYS.iter().enumerate() {
            let v = obj
                .get(*name)
                .ok_or_else(|| fail(format!("index {key}: missing {name}"), vec![key]))?;
            let f = number(v).ok_or_else(|| fail(format!("index {key}: {name} is not numeric: {v}"), vec![]))?;
            if v.is_string() {
                repairs.push(format!("index {key}: {name} coerced from string"));
            }
            vals[i] = f;
        }
        for (i, name) in [(2, "width"), (3, "height")] {
            if vals[i] < 1.0 {
                repairs.push(format!("index {key}: {name} {} clamped to 1", vals[i]));
                vals[i] = 1.0;
            }
        }
        let text = match original.text {
            Some(orig) => {
                let mut attrs = orig;
                match obj.get("angle").and_then(number) {
                    Some(a) => attrs.angle = a,
                    None => repairs.push(format!("index {key}: angle missing or invalid, kept original")),
                }
                match obj.get("font_size").and_then(number).filter(|f| *f > 0.0) {
                    Some(f) => attrs.font_size = f,
                    None => repairs.push(format!("index {key}: font_size missing or invalid, kept original")),
                }
                match obj.get("text_align").and_then(Value::as_str).and_then(TextAlign::parse) {
                    Some(t) => attrs.text_align = t,
                    None => repairs.push(format!("index {key}: text_align missing or invalid, kept original")),
                }
                Some(attrs)
            }
            None => {
                if TEXT_KEYS.iter().any(|k| obj.contains_key(*k)) {
                    repairs.push(format!("index {key}: text attributes on an image dropped"));
                }
                None
            }
        };
        records.push(Attributes {
            index: slot,
            geom: Geometry::new(vals[0], vals[1], vals[2], vals[3]),
            text,
        });
    }
    Ok(ParsedOutput { records, repairs })
}

/// Build the edited design from parsed records, keeping content and canvas.
pub fn assemble(prompt_design: &Design, op: &EditOperation, parsed: &ParsedOutput) -> Result<Design, crate::design::DesignError> {
    let mut base = prompt_design.clone();
    if let EditOperation::Delete { target } = *op {
        base.remove(target)?;
    }
    let elements: Vec<Element> = base
        .elements()
        .iter()
        .zip(&parsed.records)
        .map(|(e, r)| Element {
            content: e.content.clone(),
            geom: r.geom,
            text: r.text,
        })
        .collect();
    Design::new(base.canvas(), elements)
}

// Clients

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum ClientError {
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("request timed out")]
    Timeout,
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    Malformed(String),
    #[error("missing credentials: environment variable {0} is not set")]
    MissingCredentials(String),
    #[error("canned client has no responses left")]
    Exhausted,
}

/// Something that answers a prompt with text.
pub trait ChatClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ClientError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpClientConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub temperature: f64,
}

impl Default for HttpClientConfig {
    fn default() -> Self {
        HttpClientConfig {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "default".into(),
            api_key_env: "LAYOUTEDIT_API_KEY".into(),
            timeout_secs: 60,
            temperature: 0.7,
        }
    }
}

/// Chat-completions client. Must not be called from inside an
/// async runtime thread.
pub struct HttpChatClient {
    cfg: HttpClientConfig,
    http: reqwest::blocking::Client,
}

impl HttpChatClient {
    pub fn new(cfg: HttpClientConfig) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ClientError::Unreachable(e.to_string()))?;
        Ok(HttpChatClient { cfg, http })
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let token = std::env::var(&self.cfg.api_key_env)
            .map_err(|_| ClientError::MissingCredentials(self.cfg.api_key_env.clone()))?;
        let body = serde_json::json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let resp = self
            .http
            .post(&self.cfg.endpoint)
            .bearer_auth(token)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    ClientError::Timeout
                } else {
                    ClientError::Unreachable(e.to_string())
                }
            })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ClientError::Malformed(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| ClientError::Malformed(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| ClientError::Malformed("no choices[0].message.content".into()))
    }
}

/// One scripted reply of a [`CannedClient`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CannedReply {
    Text(String),
    Error { error: ClientError },
}

/// Replays scripted replies in order; the last one repeats when `repeat_last` is set.
pub struct CannedClient {
    replies: Mutex<VecDeque<CannedReply>>,
    repeat_last: bool,
    prompts: Mutex<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CannedFixture {
    pub replies: Vec<CannedReply>,
    #[serde(default)]
    pub repeat_last: bool,
}

impl CannedClient {
    pub fn new(replies: Vec<CannedReply>) -> Self {
        CannedClient {
            replies: Mutex::new(replies.into()),
            repeat_last: false,
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn always(text: impl Into<String>) -> Self {
        CannedClient {
            replies: Mutex::new(VecDeque::from([CannedReply::Text(text.into())])),
            repeat_last: true,
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn from_fixture(f: CannedFixture) -> Self {
        CannedClient {
            repeat_last: f.repeat_last,
            ..CannedClient::new(f.replies)
        }
    }

    /// Prompts received so far.
    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }
}

impl ChatClient for CannedClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        self.prompts.lock().unwrap().push(prompt.to_owned());
        let mut q = self.replies.lock().unwrap();
        let reply = if q.len() == 1 && self.repeat_last {
            q.front().cloned()
        } else {
            q.pop_front()
        };
        match reply.ok_or(ClientError::Exhausted)? {
            CannedReply::Text(t) => Ok(t),
            CannedReply::Error { error } => Err(error),
        }
    }
}

// Backends

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Solver,
    ExternalModel,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Solver => "solver",
            BackendKind::ExternalModel => "external-model",
        })
    }
}

/// Default attempts for the external backend.
pub const DEFAULT_MAX_ATTEMPTS: usize = 3;

#[derive(Clone)]
pub struct EditorBackend {
    pub kind: BackendKind,
    /// Used by the solver kind and for residual diagnostics of both kinds.
    pub solver: SolverConfig,
    pub client: Option<Arc<dyn ChatClient>>,
    pub max_attempts: usize,
}

impl EditorBackend {
    pub fn solver(cfg: SolverConfig) -> Self {
        EditorBackend {
            kind: BackendKind::Solver,
            solver: cfg,
            client: None,
            max_attempts: 1,
        }
    }

    pub fn external(client: Arc<dyn ChatClient>, cfg: SolverConfig) -> Self {
        EditorBackend {
            kind: BackendKind::ExternalModel,
            solver: cfg,
            client: Some(client),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

impl fmt::Debug for EditorBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EditorBackend")
            .field("kind", &self.kind)
            .field("max_attempts", &self.max_attempts)
            .finish_non_exhaustive()
    }
}

/// One round trip with the external model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExchange {
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub client_error: Option<ClientError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<ParseFailure>,
    pub repair_log: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub backend: BackendKind,
    pub residuals: ConstraintResiduals,
    pub op_satisfied: bool,
    pub relations: RelationScore,
    pub attempts: usize,
    pub retries: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exchanges: Vec<ModelExchange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditOutcome {
    pub design: Design,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error("external backend has no client configured")]
    NoClient,
    #[error("external model failed after {attempts} attempt(s): {last}")]
    Exhausted {
        attempts: usize,
        last: String,
        exchanges: Vec<ModelExchange>,
    },
}

/// Run one edit through `backend`. `g` is the prompt-indexed pruned graph;
/// `added` supplies the new element of an add.
pub fn edit_via_backend(
    backend: &EditorBackend,
    d: &Design,
    g: &RelationGraph,
    op: &EditOperation,
    added: Option<&Element>,
) -> Result<EditOutcome, BackendError> {
    let cfg = &backend.solver;
    let finish = |design: Design, attempts: usize, converged: Option<bool>, exchanges: Vec<ModelExchange>| {
        let residuals = residuals(d, g, op, &design, cfg)?;
        let relations = relation_satisfaction_for_edit(g, op, &design, cfg.alpha)
            .expect("edited designs from a backend cover every graph id");
        Ok::<_, BackendError>(EditOutcome {
            diagnostics: Diagnostics {
                backend: backend.kind,
                op_satisfied: op_satisfaction(op, d, &design, DEFAULT_OP_TOLERANCE),
                residuals,
                relations,
                attempts,
                retries: attempts.saturating_sub(1),
                converged,
                exchanges,
            },
            design,
        })
    };
    match backend.kind {
        BackendKind::Solver => {
            let sol = solve(d, g, op, added, cfg)?;
            finish(sol.design, 1, Some(sol.converged), Vec::new())
        }
        BackendKind::ExternalModel => {
            let client = backend.client.as_ref().ok_or(BackendError::NoClient)?;
            let pd = prompt_design(d, op, added)?;
            let prompt = build_prompt(&pd, g, op);
            let mut exchanges: Vec<ModelExchange> = Vec::new();
            let attempts = backend.max_attempts.max(1);
            for attempt in 1..=attempts {
                let mut ex = ModelExchange {
                    prompt: prompt.clone(),
                    raw_response: None,
                    client_error: None,
                    parse_error: None,
                    repair_log: Vec::new(),
                };
                match client.complete(&prompt) {
                    Err(e) => {
                        tracing::warn!(attempt, error = %e, "external model call failed");
                        ex.client_error = Some(e);
                    }
                    Ok(raw) => {
                        ex.raw_response = Some(raw.clone());
                        match parse_model_output(&raw, &pd, op) {
                            Err(pf) => {
                                tracing::warn!(attempt, error = %pf, "unusable model output");
                                ex.parse_error = Some(pf);
                            }
                            Ok(parsed) => {
                                ex.repair_log = parsed.repairs.clone();
                                match assemble(&pd, op, &parsed) {
                                    Ok(design) => {
                                        exchanges.push(ex);
                                        return finish(design, attempt, None, exchanges);
                                    }
                                    Err(e) => {
                                        ex.parse_error = Some(ParseFailure {
                                            message: e.to_string(),
                                            missing: vec![],
                                            raw,
                                        })
                                    }
                                }
                            }
                        }
                    }
                }
                exchanges.push(ex);
            }
            let last = exchanges
                .last()
                .map(|e| match (&e.client_error, &e.parse_error) {
                    (Some(c), _) => c.to_string(),
                    (_, Some(p)) => p.message.clone(),
                    _ => String::new(),
                })
                .unwrap_or_default();
            Err(BackendError::Exhausted {
                attempts,
                last,
                exchanges,
            })
        }
    }
}

/// [`edit_via_backend`] for a prepared edit.
pub fn edit_prepared(backend: &EditorBackend, edit: &PreparedEdit) -> Result<EditOutcome, BackendError> {
    edit_via_backend(backend, &edit.input_design, &edit.pruned_graph, &edit.operation, edit.added.as_ref())
}

// Batch evaluation

/// One evaluation input: a prepared edit, optionally with an edited design
/// produced elsewhere. Without one, the backend produces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInput {
    #[serde(flatten)]
    pub edit: PreparedEdit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited: Option<Design>,
}

/// Edit (when needed) and score every input in order. `progress` is called
/// after each case with the number processed so far.
pub fn evaluate_edits<I>(
    inputs: I,
    backend: &EditorBackend,
    alpha: f64,
    tol_px: f64,
    mut progress: impl FnMut(usize),
) -> crate::metrics::EvalReport
where
    I: IntoIterator<Item = Result<EvalInput, String>>,
{
    let mut builder = crate::metrics::ReportBuilder::default();
    for (i, input) in inputs.into_iter().enumerate() {
        let scored = input.and_then(|input| {
            let edited = match input.edited {
                Some(d) => d,
                None => edit_prepared(backend, &input.edit).map_err(|e| e.to_string())?.design,
            };
            let case = crate::metrics::EvalCase {
                original: input.edit.input_design,
                graph: input.edit.pruned_graph,
                operation: input.edit.operation,
                edited,
                added: input.edit.added,
            };
            crate::metrics::evaluate_case(&case, alpha, tol_px)
                .map(|m| (case.operation.action(), m))
                .map_err(|e| e.to_string())
        });
        match scored {
            Ok((action, m)) => builder.record(action, &m),
            Err(e) => builder.record_error(format!("case {i}: {e}")),
        }
        progress(builder.processed());
    }
    builder.finish()
}

// Instruction translation

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("could not translate instruction: {message}")]
pub struct TranslateError {
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

/// Canvas, content and current attributes, as shown to the translator.
pub fn design_summary(d: &Design) -> String {
    format!(
        "{}\n\n{}\n\nATTRIBUTES: {}",
        serialize_canvas(d.canvas()),
        serialize_content_sequence(d),
        render_attributes(d)
    )
}

fn translation_prompt(instruction: &str, d: &Design) -> String {
    format!(
        "Translate the user's layout editing request into editing operations, one per line, using only these forms:\n\
         move element <i> to {{\"x\": <int>, \"y\": <int>}}\n\
         resize element <i> to {{\"width\": <int>, \"height\": <int>}}\n\
         add element <i>\n\
         delete element <i>\n\
         Coordinates are element centers in pixels. Reply with the operations only.\n\n\
         DESIGN:\n{}\n\nREQUEST: {}\n",
        design_summary(d),
        instruction.trim()
    )
}

/// Ask `client` to turn a free-form request into operations. Lines starting
/// with an action word must all parse, or nothing is returned.
pub fn translate_instruction(instruction: &str, d: &Design, client: &dyn ChatClient) -> Result<Vec<EditOperation>, TranslateError> {
    let raw = client.complete(&translation_prompt(instruction, d)).map_err(|e| TranslateError {
        message: e.to_string(),
        raw: None,
    })?;
    let fail = |message: String| TranslateError {
        message,
        raw: Some(raw.clone()),
    };
    let mut ops = Vec::new();
    for line in raw.lines() {
        let line = line
            .trim()
            .trim_start_matches(|c: char| c == '-' || c == '*' || c == '`' || c.is_ascii_digit() || c == '.' || c == ')')
            .trim()
            .trim_end_matches('`')
            .trim();
        let first = line.split_whitespace().next().unwrap_or("");
        if Action::parse(first).is_none() {
            continue;
        }
        ops.push(parse_operation(line).map_err(|e| fail(format!("line {line:?}: {e}")))?);
    }
    if ops.is_empty() {
        return Err(fail("no operations in response".into()));
    }
    compose(d.len(), ops.clone()).map_err(|e| fail(e.to_string()))?;
    Ok(ops)
}
