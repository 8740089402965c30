//! Editing operations and their synthesis.
//!
//! Grammar of the canonical text form:
//!
//! ```text
//! op   := "move" ELEM "to" XY | "resize" ELEM "to" WH | "add" ELEM | "delete" ELEM
//! ELEM := "element" INT
//! XY   := '{"x": ' INT ', "y": ' INT '}'
//! WH   := '{"width": ' INT ', "height": ' INT '}'
//! ```
//!
//! The parser is lenient about whitespace and key order inside the braces;
//! printing always produces the canonical spelling above.
//!
//! Element ids in an operation (and in the relation graph of a
//! [`PreparedEdit`]) use the *prompt indexing*: the input design with the
//! added element inserted at its target slot, if any. For a delete the
//! target is an existing element; for an add the target is the slot the new
//! element will occupy.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{Design, DesignError, Element, ElementId};
use crate::graph::{build_relation_graph, remove_node_edges, GraphError, RelationGraph};

#[derive(Debug, Error)]
pub enum OpError {
    #[error("grammar error at `{token}`: {message}")]
    Grammar { token: String, message: String },
    #[error("operation targets element {target} but the design has {len} elements")]
    UnknownTarget { target: ElementId, len: usize },
    #[error("design has no elements")]
    EmptyDesign,
    #[error("donor pool is empty")]
    EmptyDonorPool,
    #[error("add operation needs the new element's content")]
    MissingAddContent,
    #[error("composite operation needs at least one step")]
    EmptyComposite,
    #[error("composite step {step}: {source}")]
    CompositeStep {
        step: usize,
        #[source]
        source: Box<OpError>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

fn grammar(token: &str, message: impl Into<String>) -> OpError {
    OpError::Grammar {
        token: token.to_owned(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Move,
    Resize,
    Add,
    Delete,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Add, Action::Delete, Action::Move, Action::Resize];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Move => "move",
            Action::Resize => "resize",
            Action::Add => "add",
            Action::Delete => "delete",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A standardized edit: action, target element and integer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditOperation {
    /// New center.
    Move { target: ElementId, x: i64, y: i64 },
    /// New width and height, both positive.
    Resize { target: ElementId, width: i64, height: i64 },
    Add { target: ElementId },
    Delete { target: ElementId },
}

impl EditOperation {
    pub fn action(&self) -> Action {
        match self {
            EditOperation::Move { .. } => Action::Move,
            EditOperation::Resize { .. } => Action::Resize,
            EditOperation::Add { .. } => Action::Add,
            EditOperation::Delete { .. } => Action::Delete,
        }
    }

    pub fn target(&self) -> ElementId {
        match *self {
            EditOperation::Move { target, .. }
            | EditOperation::Resize { target, .. }
            | EditOperation::Add { target }
            | EditOperation::Delete { target } => target,
        }
    }
}

impl fmt::Display for EditOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditOperation::Move { target, x, y } => {
                write!(f, "move element {target} to {{\"x\": {x}, \"y\": {y}}}")
            }
            EditOperation::Resize { target, width, height } => {
                write!(f, "resize element {target} to {{\"width\": {width}, \"height\": {height}}}")
            }
            EditOperation::Add { target } => write!(f, "add element {target}"),
            EditOperation::Delete { target } => write!(f, "delete element {target}"),
        }
    }
}

pub fn print_operation(op: &EditOperation) -> String {
    op.to_string()
}

impl FromStr for EditOperation {
    type Err = OpError;

    fn from_str(s: &str) -> Result<Self, OpError> {
        parse_operation(s)
    }
}

pub fn parse_operation(text: &str) -> Result<EditOperation, OpError> {
    let text = text.trim();
    let (action_tok, rest) = split_token(text);
    if action_tok.is_empty() {
        return Err(grammar("", "empty operation"));
    }
    let action = Action::parse(action_tok)
        .ok_or_else(|| grammar(action_tok, "unknown action; expected move, resize, add or delete"))?;
    let (elem_tok, rest) = split_token(rest);
    if elem_tok != "element" {
        return Err(grammar(elem_tok, "expected `element`"));
    }
    let (id_tok, rest) = split_token(rest);
    let target: ElementId = id_tok
        .parse()
        .map_err(|_| grammar(id_tok, "element id must be a non-negative integer"))?;

    match action {
        Action::Add | Action::Delete => {
            if !rest.is_empty() {
                return Err(grammar(rest, format!("`{action}` takes no parameters")));
            }
            Ok(if action == Action::Add {
                EditOperation::Add { target }
            } else {
                EditOperation::Delete { target }
            })
        }
        Action::Move | Action::Resize => {
            let (to_tok, params) = split_token(rest);
            if to_tok != "to" {
                return Err(grammar(to_tok, format!("`{action}` expects `to` followed by parameters")));
            }
            let keys = if action == Action::Move {
                ["x", "y"]
            } else {
                ["width", "height"]
            };
            let [a, b] = parse_params(params, keys)?;
            Ok(if action == Action::Move {
                EditOperation::Move { target, x: a, y: b }
            } else {
                check_size(a, b)?;
                EditOperation::Resize {
                    target,
                    width: a,
                    height: b,
                }
            })
        }
    }
}

fn check_size(w: i64, h: i64) -> Result<(), OpError> {
    for (name, v) in [("width", w), ("height", h)] {
        if v <= 0 {
            return Err(grammar(&v.to_string(), format!("{name} must be a positive integer")));
        }
    }
    Ok(())
}

fn split_token(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim_start()),
        None => (s, ""),
    }
}

fn parse_params(text: &str, keys: [&str; 2]) -> Result<[i64; 2], OpError> {
    if text.is_empty() {
        return Err(grammar("", format!("missing parameters {{\"{}\", \"{}\"}}", keys[0], keys[1])));
    }
    let map: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(text).map_err(|e| grammar(text, format!("parameters must be a JSON object: {e}")))?;
    if let Some(k) = map.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(grammar(k, format!("unexpected parameter; expected {} and {}", keys[0], keys[1])));
    }
    let mut out = [0i64; 2];
    for (slot, key) in out.iter_mut().zip(keys) {
        let v = map.get(key).ok_or_else(|| grammar(text, format!("missing parameter `{key}`")))?;
        *slot = v
            .as_i64()
            .ok_or_else(|| grammar(&v.to_string(), format!("parameter `{key}` must be an integer")))?;
    }
    Ok(out)
}

// Structured form: {"action": "move", "target": 3, "params": {"x": 583, "y": 394}}.
// Deserialization also accepts the grammar string.

#[derive(Serialize, Deserialize)]
struct StructuredOp {
    action: Action,
    target: ElementId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Map<String, serde_json::Value>>,
}

impl Serialize for EditOperation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut params = serde_json::Map::new();
        match *self {
            EditOperation::Move { x, y, .. } => {
                params.insert("x".into(), x.into());
                params.insert("y".into(), y.into());
            }
            EditOperation::Resize { width, height, .. } => {
                params.insert("width".into(), width.into());
                params.insert("height".into(), height.into());
            }
            _ => {}
        }
        StructuredOp {
            action: self.action(),
            target: self.target(),
            params: (!params.is_empty()).then_some(params),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EditOperation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            Text(String),
            Structured(StructuredOp),
        }
        let op = match Either::deserialize(d)? {
            Either::Text(t) => parse_operation(&t),
            Either::Structured(s) => from_structured(s),
        };
        op.map_err(serde::de::Error::custom)
    }
}

fn from_structured(s: StructuredOp) -> Result<EditOperation, OpError> {
    let target = s.target;
    match s.action {
        Action::Add | Action::Delete => {
            if s.params.as_ref().is_some_and(|p| !p.is_empty()) {
                return Err(grammar("params", format!("`{}` takes no parameters", s.action)));
            }
            Ok(if s.action == Action::Add {
                EditOperation::Add { target }
            } else {
                EditOperation::Delete { target }
            })
        }
        Action::Move | Action::Resize => {
            let params = s.params.ok_or_else(|| grammar("params", "missing parameters"))?;
            let text = serde_json::Value::Object(params).to_string();
            let keys = if s.action == Action::Move {
                ["x", "y"]
            } else {
                ["width", "height"]
            };
            let [a, b] = parse_params(&text, keys)?;
            if s.action == Action::Move {
                Ok(EditOperation::Move { target, x: a, y: b })
            } else {
                check_size(a, b)?;
                Ok(EditOperation::Resize {
                    target,
                    width: a,
                    height: b,
                })
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Prepared edits

/// Everything an editor needs for one operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedEdit {
    pub operation: EditOperation,
    /// Design the edit starts from. For an add it does not yet contain the
    /// new element.
    pub input_design: Design,
    /// Relation graph in prompt indexing, pruned at the operation target.
    pub pruned_graph: RelationGraph,
    /// Expected result, known only for reconstruction draws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Design>,
    /// Content (and size hint) of the element an add introduces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub added: Option<Element>,
}

impl PreparedEdit {
    /// The design whose element list the prompt describes: the input with
    /// the added element placed at its target slot.
    pub fn prompt_design(&self) -> Result<Design, OpError> {
        prompt_design(&self.input_design, &self.operation, self.added.as_ref())
    }

    /// The pruned graph with ids as they read in the edited design, plus the
    /// number of edges dropped because they touched a deleted element.
    pub fn output_graph(&self) -> (RelationGraph, usize) {
        output_graph(&self.pruned_graph, &self.operation)
    }
}

pub fn prompt_design(input: &Design, op: &EditOperation, added: Option<&Element>) -> Result<Design, OpError> {
    match op {
        EditOperation::Add { target } => {
            let added = added.ok_or(OpError::MissingAddContent)?;
            let mut d = input.clone();
            d.insert(*target, added.clone()).map_err(|_| OpError::UnknownTarget {
                target: *target,
                len: input.len(),
            })?;
            Ok(d)
        }
        _ => Ok(input.clone()),
    }
}

/// Rewrite a prompt-indexed graph into the indexing of the edited design.
pub fn output_graph(g: &RelationGraph, op: &EditOperation) -> (RelationGraph, usize) {
    match op {
        EditOperation::Delete { target } => g.after_delete(*target),
        _ => (g.clone(), 0),
    }
}

/// Check that an operation can be applied to a design with `len` elements.
pub fn check_target(op: &EditOperation, len: usize) -> Result<(), OpError> {
    let target = op.target();
    let ok = match op {
        EditOperation::Add { .. } => target <= len,
        _ => target < len,
    };
    if ok {
        Ok(())
    } else {
        Err(OpError::UnknownTarget { target, len })
    }
}

/// Prepare a user-specified edit on `d`: extract the graph, move it into
/// prompt indexing and prune it at the target.
pub fn prepare_edit<R: Rng + ?Sized>(
    d: &Design,
    op: EditOperation,
    added: Option<Element>,
    alpha: f64,
    rng: &mut R,
) -> Result<PreparedEdit, OpError> {
    check_target(&op, d.len())?;
    if let EditOperation::Resize { width, height, .. } = op {
        check_size(width, height)?;
    }
    let graph = build_relation_graph(d, alpha, rng)?;
    let pruned_graph = match op {
        EditOperation::Add { target } => {
            if added.is_none() {
                return Err(OpError::MissingAddContent);
            }
            graph.after_insert(target)
        }
        _ => remove_node_edges(&graph, op.target())?,
    };
    Ok(PreparedEdit {
        operation: op,
        input_design: d.clone(),
        pruned_graph,
        ground_truth: None,
        added: if op.action() == Action::Add { added } else { None },
    })
}

// ---------------------------------------------------------------------------
// Synthesis

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// Operations read off the design itself; the design is the ground truth.
    Reconstruction,
    /// Operations with sampled parameters simulating user edits.
    Generalization,
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reconstruction" => Ok(Setting::Reconstruction),
            "generalization" => Ok(Setting::Generalization),
            other => Err(format!("unknown setting {other:?}")),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Reconstruction => "reconstruction",
            Setting::Generalization => "generalization",
        })
    }
}

/// Reconstruction draw: action uniform over the four; move/resize carry the
/// target's own rounded center/size; add withholds an existing element's
/// geometry; delete appends a donor element and asks for its removal.
pub fn synthesize_reconstruction_op<R: Rng + ?Sized>(
    d: &Design,
    donors: &[Element],
    alpha: f64,
    rng: &mut R,
) -> Result<PreparedEdit, OpError> {
    synthesize(Setting::Reconstruction, d, donors, alpha, None, rng)
}

/// Generalization draw: move to a uniform point of the canvas, resize by a
/// uniform factor in [0.5, 2.0], add a donor element, delete an existing one.
pub fn synthesize_generalization_op<R: Rng + ?Sized>(
    d: &Design,
    donors: &[Element],
    alpha: f64,
    rng: &mut R,
) -> Result<PreparedEdit, OpError> {
    synthesize(Setting::Generalization, d, donors, alpha, None, rng)
}

/// Shared synthesis entry point; `action` forces the action instead of
/// drawing it.
pub fn synthesize<R: Rng + ?Sized>(
    setting: Setting,
    d: &Design,
    donors: &[Element],
    alpha: f64,
    action: Option<Action>,
    rng: &mut R,
) -> Result<PreparedEdit, OpError> {
    let n = d.len();
    if n == 0 {
        return Err(OpError::EmptyDesign);
    }
    let action = match action {
        Some(a) => a,
        None => Action::ALL[rng.gen_range(0..Action::ALL.len())],
    };
    let canvas = d.canvas();

    let (operation, input_design, added, graph_source, prune_at) = match (setting, action) {
        (_, Action::Move) => {
            let target = rng.gen_range(0..n);
            let g = d.geometry(target)?;
            let (x, y) = match setting {
                Setting::Reconstruction => (g.cx, g.cy),
                Setting::Generalization => (rng.gen_range(0.0..=canvas.w()), rng.gen_range(0.0..=canvas.h())),
            };
            let op = EditOperation::Move {
                target,
                x: x.round() as i64,
                y: y.round() as i64,
            };
            (op, d.clone(), None, d.clone(), Some(target))
        }
        (_, Action::Resize) => {
            let target = rng.gen_range(0..n);
            let g = d.geometry(target)?;
            let (w, h) = match setting {
                Setting::Reconstruction => (g.w, g.h),
                Setting::Generalization => {
                    let f = rng.gen_range(0.5..=2.0);
                    (g.w * f, g.h * f)
                }
            };
            let op = EditOperation::Resize {
                target,
                width: (w.round() as i64).max(1),
                height: (h.round() as i64).max(1),
            };
            (op, d.clone(), None, d.clone(), Some(target))
        }
        (Setting::Reconstruction, Action::Add) => {
            let target = rng.gen_range(0..n);
            let mut input = d.clone();
            let withheld = input.remove(target)?;
            (EditOperation::Add { target }, input, Some(withheld), d.clone(), Some(target))
        }
        (Setting::Generalization, Action::Add) => {
            let donor = pick_donor(donors, rng)?;
            (EditOperation::Add { target: n }, d.clone(), Some(donor), d.clone(), None)
        }
        (Setting::Reconstruction, Action::Delete) => {
            let donor = pick_donor(donors, rng)?;
            let mut input = d.clone();
            input.insert(n, donor)?;
            (EditOperation::Delete { target: n }, input, None, d.clone(), None)
        }
        (Setting::Generalization, Action::Delete) => {
            let target = rng.gen_range(0..n);
            (EditOperation::Delete { target }, d.clone(), None, d.clone(), Some(target))
        }
    };

    let graph = build_relation_graph(&graph_source, alpha, rng)?;
    let pruned_graph = match prune_at {
        Some(t) => remove_node_edges(&graph, t)?,
        None => {
            // The fresh id (donor or appended add) is a node with no edges.
            let mut nodes = graph.element_nodes().clone();
            nodes.insert(operation.target());
            RelationGraph::from_parts(graph.alpha, nodes, graph.edges().to_vec())?
        }
    };
    Ok(PreparedEdit {
        operation,
        input_design,
        pruned_graph,
        ground_truth: (setting == Setting::Reconstruction).then(|| d.clone()),
        added,
    })
}

fn pick_donor<R: Rng + ?Sized>(donors: &[Element], rng: &mut R) -> Result<Element, OpError> {
    if donors.is_empty() {
        return Err(OpError::EmptyDonorPool);
    }
    Ok(donors[rng.gen_range(0..donors.len())].clone())
}

// ---------------------------------------------------------------------------
// Composites

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompositeKind {
    Single,
    /// delete then add
    Replace,
    /// two adds
    DoubleAdd,
    /// move and resize of the same element
    MoveResize,
    Other,
}

/// Ordered sequence of operations applied left to right; each step's ids
/// refer to the design as it stands after the previous steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeOperation {
    steps: Vec<EditOperation>,
}

impl CompositeOperation {
    pub fn steps(&self) -> &[EditOperation] {
        &self.steps
    }

    pub fn kind(&self) -> CompositeKind {
        use EditOperation::*;
        match self.steps.as_slice() {
            [_] => CompositeKind::Single,
            [Delete { .. }, Add { .. }] => CompositeKind::Replace,
            [Add { .. }, Add { .. }] => CompositeKind::DoubleAdd,
            [Move { target: a, .. }, Resize { target: b, .. }] | [Resize { target: a, .. }, Move { target: b, .. }]
                if a == b =>
            {
                CompositeKind::MoveResize
            }
            _ => CompositeKind::Other,
        }
    }
}

/// Validate a step sequence against a design of `len` elements.
pub fn compose(len: usize, ops: Vec<EditOperation>) -> Result<CompositeOperation, OpError> {
    if ops.is_empty() {
        return Err(OpError::EmptyComposite);
    }
    let mut n = len;
    for (step, op) in ops.iter().enumerate() {
        check_target(op, n).map_err(|e| OpError::CompositeStep {
            step,
            source: Box::new(e),
        })?;
        match op {
            EditOperation::Add { .. } => n += 1,
            EditOperation::Delete { .. } => n -= 1,
            _ => {}
        }
    }
    Ok(CompositeOperation { steps: ops })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{parse_design, Geometry, POSTER_DOCUMENT};
    use crate::seeded_rng;

    #[test]
    fn parses_poster_move() {
        let op = parse_operation(r#"move element 3 to {"x": 583, "y": 394}"#).unwrap();
        assert_eq!(op, EditOperation::Move { target: 3, x: 583, y: 394 });
        assert_eq!(print_operation(&op), r#"move element 3 to {"x": 583, "y": 394}"#);
    }

    #[test]
    fn parses_param_free_and_resize() {
        assert_eq!(parse_operation("delete element 0").unwrap(), EditOperation::Delete { target: 0 });
        let op = parse_operation(r#"resize element 2 to {"width": 400, "height": 300}"#).unwrap();
        assert_eq!(
            op,
            EditOperation::Resize {
                target: 2,
                width: 400,
                height: 300
            }
        );
        assert_eq!(op.to_string(), r#"resize element 2 to {"width": 400, "height": 300}"#);
        assert_eq!(print_operation(&EditOperation::Add { target: 5 }), "add element 5");
    }

    #[test]
    fn canonicalizes_lenient_input() {
        let op = parse_operation("  move   element 3 to {\"y\":394,\"x\":583} ").unwrap();
        assert_eq!(op.to_string(), r#"move element 3 to {"x": 583, "y": 394}"#);
    }

    #[test]
    fn grammar_errors_name_the_token() {
        let cases = [
            ("rotate element 1", "rotate"),
            ("move element 1", ""),
            ("move item 1 to {\"x\": 1, \"y\": 2}", "item"),
            ("move element 1 to {\"x\": 1.5, \"y\": 2}", "1.5"),
            ("resize element 1 to {\"width\": 0, \"height\": 2}", "0"),
            ("add element 1 to {\"x\": 1}", "to {\"x\": 1}"),
            ("delete element -1", "-1"),
            ("move element 1 to {\"x\": 1, \"z\": 2}", "z"),
        ];
        for (text, token) in cases {
            match parse_operation(text) {
                Err(OpError::Grammar { token: t, .. }) => assert_eq!(t, token, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn structured_form_round_trips() {
        let op = EditOperation::Move { target: 3, x: 583, y: 394 };
        let json = serde_json::to_string(&op).unwrap();
        assert_eq!(json, r#"{"action":"move","target":3,"params":{"x":583,"y":394}}"#);
        assert_eq!(serde_json::from_str::<EditOperation>(&json).unwrap(), op);
        let from_text: EditOperation = serde_json::from_str(r#""delete element 4""#).unwrap();
        assert_eq!(from_text, EditOperation::Delete { target: 4 });
        assert!(serde_json::from_str::<EditOperation>(r#"{"action":"resize","target":1,"params":{"width":-3,"height":2}}"#).is_err());
    }

    fn poster() -> Design {
        parse_design(POSTER_DOCUMENT).unwrap()
    }

    fn donor() -> Element {
        Element::image(Some("donor.png"), Geometry::new(10.0, 10.0, 120.0, 80.0))
    }

    #[test]
    fn reconstruction_move_uses_true_coordinates() {
        let d = poster();
        let mut found = false;
        for seed in 0..200 {
            let e = synthesize_reconstruction_op(&d, &[donor()], 0.1, &mut seeded_rng(seed)).unwrap();
            if let EditOperation::Move { target: 3, .. } = e.operation {
                assert_eq!(e.operation.to_string(), r#"move element 3 to {"x": 583, "y": 394}"#);
                assert_eq!(e.ground_truth.as_ref(), Some(&d));
                found = true;
                break;
            }
        }
        assert!(found);
    }

    #[test]
    fn forced_move_on_single_element() {
        let d = parse_design(
            r#"{"canvas": {"width": 100, "height": 100}, "elements": [
                {"modality": "image", "x": 33.4, "y": 70.6, "width": 10, "height": 10}]}"#,
        )
        .unwrap();
        let e = synthesize(Setting::Reconstruction, &d, &[], 0.1, Some(Action::Move), &mut seeded_rng(1)).unwrap();
        assert_eq!(e.operation, EditOperation::Move { target: 0, x: 33, y: 71 });
        assert!(e.pruned_graph.edges().is_empty());
    }

    #[test]
    fn reconstruction_add_withholds_target() {
        let d = poster();
        let e = synthesize(Setting::Reconstruction, &d, &[], 0.1, Some(Action::Add), &mut seeded_rng(9)).unwrap();
        let t = e.operation.target();
        assert_eq!(e.input_design.len(), 3);
        assert_eq!(e.added.as_ref().unwrap(), d.element(t).unwrap());
        assert_eq!(e.prompt_design().unwrap(), d);
        assert!(e.pruned_graph.edges().iter().all(|edge| !edge.touches(t)));
    }

    #[test]
    fn reconstruction_delete_appends_donor() {
        let d = poster();
        let e = synthesize(Setting::Reconstruction, &d, &[donor()], 0.1, Some(Action::Delete), &mut seeded_rng(2)).unwrap();
        assert_eq!(e.operation, EditOperation::Delete { target: 4 });
        assert_eq!(e.input_design.len(), 5);
        assert_eq!(e.ground_truth.as_ref().unwrap(), &d);
        assert_eq!(e.pruned_graph.edges().len(), 16);
        let (out, dropped) = e.output_graph();
        assert_eq!(dropped, 0);
        assert_eq!(out.element_nodes().len(), 4);
    }

    #[test]
    fn delete_needs_donors() {
        let d = poster();
        let err = synthesize(Setting::Reconstruction, &d, &[], 0.1, Some(Action::Delete), &mut seeded_rng(2)).unwrap_err();
        assert!(matches!(err, OpError::EmptyDonorPool));
        let err = synthesize(Setting::Generalization, &d, &[], 0.1, Some(Action::Add), &mut seeded_rng(2)).unwrap_err();
        assert!(matches!(err, OpError::EmptyDonorPool));
    }

    #[test]
    fn generalization_resize_at_double_factor() {
        let d = parse_design(
            r#"{"canvas": {"width": 500, "height": 500}, "elements": [
                {"modality": "image", "x": 100, "y": 100, "width": 100, "height": 50}]}"#,
        )
        .unwrap();
        // f = 2.0 is the upper end of the range; emulate the rounding rule.
        let g = d.geometry(0).unwrap();
        assert_eq!(((g.w * 2.0).round() as i64, (g.h * 2.0).round() as i64), (200, 100));
        for seed in 0..50 {
            let e = synthesize(Setting::Generalization, &d, &[], 0.1, Some(Action::Resize), &mut seeded_rng(seed)).unwrap();
            let EditOperation::Resize { width, height, .. } = e.operation else {
                panic!()
            };
            assert!((50..=200).contains(&width) && (25..=100).contains(&height));
            assert!(e.ground_truth.is_none());
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let d = poster();
        for seed in 0..20 {
            let a = synthesize_generalization_op(&d, &[donor()], 0.1, &mut seeded_rng(seed)).unwrap();
            let b = synthesize_generalization_op(&d, &[donor()], 0.1, &mut seeded_rng(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn composites() {
        use EditOperation::*;
        let replace = compose(4, vec![Delete { target: 2 }, Add { target: 3 }]).unwrap();
        assert_eq!(replace.kind(), CompositeKind::Replace);
        let mr = compose(4, vec![Move { target: 3, x: 100, y: 100 }, Resize { target: 3, width: 50, height: 50 }]).unwrap();
        assert_eq!(mr.kind(), CompositeKind::MoveResize);
        assert_eq!(compose(4, vec![Add { target: 4 }, Add { target: 5 }]).unwrap().kind(), CompositeKind::DoubleAdd);
        assert_eq!(compose(4, vec![Delete { target: 0 }]).unwrap().kind(), CompositeKind::Single);
        // element 3 no longer exists after the delete
        let err = compose(4, vec![Delete { target: 0 }, Move { target: 3, x: 0, y: 0 }]).unwrap_err();
        assert!(matches!(err, OpError::CompositeStep { step: 1, .. }));
        assert!(matches!(compose(4, vec![]), Err(OpError::EmptyComposite)));
    }

    #[test]
    fn prepare_user_add_shifts_graph() {
        let d = poster();
        let e = prepare_edit(&d, EditOperation::Add { target: 1 }, Some(donor()), 0.1, &mut seeded_rng(0)).unwrap();
        assert!(e.pruned_graph.edges().iter().all(|edge| !edge.touches(1)));
        assert_eq!(e.pruned_graph.edges().len(), 16);
        assert!(prepare_edit(&d, EditOperation::Add { target: 1 }, None, 0.1, &mut seeded_rng(0)).is_err());
        assert!(prepare_edit(&d, EditOperation::Delete { target: 4 }, None, 0.1, &mut seeded_rng(0)).is_err());
    }
}
