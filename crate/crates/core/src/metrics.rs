//! Evaluation metrics.
//!
//! - Size Rel / Pos Rel: share of relation-graph edges whose label still
//!   holds in the edited design, split by edge kind.
//! - Op: whether the edited design meets the operation.
//! - Ove: mean pairwise overlap, `inter / min(area_i, area_j)`, ignoring
//!   backdrops that cover at least 99% of the canvas.
//! - Ali: mean over elements of `-log10(1 - d_i)`, where `d_i` is the
//!   smallest normalized gap between any of the element's six alignment
//!   lines (left, x-center, right, top, y-center, bottom) and the same line
//!   of another element.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{Design, Element, Geometry};
use crate::graph::{EdgeKind, RelationGraph};
use crate::ops::{output_graph, Action, EditOperation};

/// Default tolerance in pixels for operation satisfaction.
pub const DEFAULT_OP_TOLERANCE: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("edge {edge} references element {element}, which the edited design does not have")]
    DanglingEndpoint { edge: String, element: usize },
}

/// Satisfied and total edge counts for one case.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationScore {
    pub size_satisfied: usize,
    pub size_total: usize,
    pub pos_satisfied: usize,
    pub pos_total: usize,
    /// Edges left out of the denominators because they touch a deleted element.
    pub excluded: usize,
}

impl RelationScore {
    pub fn size_rel(&self) -> Option<f64> {
        ratio(self.size_satisfied, self.size_total)
    }

    pub fn pos_rel(&self) -> Option<f64> {
        ratio(self.pos_satisfied, self.pos_total)
    }

    pub fn violated(&self) -> usize {
        (self.size_total - self.size_satisfied) + (self.pos_total - self.pos_satisfied)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Re-classify every edge of `g` (ids in the edited design's indexing) on
/// `edited`, keeping each edge's direction.
pub fn relation_satisfaction(g: &RelationGraph, edited: &Design, alpha: f64) -> Result<RelationScore, MetricsError> {
    let mut score = RelationScore::default();
    for edge in g.edges() {
        let Some(now) = edge.classify_on(edited, alpha) else {
            let element = [edge.source, edge.target]
                .into_iter()
                .filter_map(|n| n.element())
                .find(|&id| id >= edited.len())
                .unwrap_or_default();
            return Err(MetricsError::DanglingEndpoint {
                edge: edge.to_string(),
                element,
            });
        };
        let hit = now == edge.relation;
        match edge.kind() {
            EdgeKind::Size => {
                score.size_total += 1;
                score.size_satisfied += hit as usize;
            }
            EdgeKind::Position => {
                score.pos_total += 1;
                score.pos_satisfied += hit as usize;
            }
        }
    }
    Ok(score)
}

/// Relation satisfaction for a prompt-indexed graph: ids are moved into the
/// edited design's indexing and edges touching a deleted element excluded.
pub fn relation_satisfaction_for_edit(
    g: &RelationGraph,
    op: &EditOperation,
    edited: &Design,
    alpha: f64,
) -> Result<RelationScore, MetricsError> {
    let (g, excluded) = output_graph(g, op);
    let mut score = relation_satisfaction(&g, edited, alpha)?;
    score.excluded = excluded;
    Ok(score)
}

/// Whether `edited` meets `op`. `original` is the design the operation was
/// issued against (without the added element, for an add). Add and delete
/// also require the other elements to be kept in order.
pub fn op_satisfaction(op: &EditOperation, original: &Design, edited: &Design, tol_px: f64) -> bool {
    let same_len = edited.len() == original.len();
    match *op {
        EditOperation::Move { target, x, y } => {
            same_len
                && edited
                    .geometry(target)
                    .is_ok_and(|g| (g.cx - x as f64).abs() <= tol_px && (g.cy - y as f64).abs() <= tol_px)
        }
        EditOperation::Resize { target, width, height } => {
            same_len
                && edited
                    .geometry(target)
                    .is_ok_and(|g| (g.w - width as f64).abs() <= tol_px && (g.h - height as f64).abs() <= tol_px)
        }
        EditOperation::Add { target } => {
            if edited.len() != original.len() + 1 || target >= edited.len() {
                return false;
            }
            let rest = edited
                .elements()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != target)
                .map(|(_, e)| &e.content);
            rest.eq(original.elements().iter().map(|e| &e.content))
        }
        EditOperation::Delete { target } => {
            if target >= original.len() || edited.len() + 1 != original.len() {
                return false;
            }
            let kept = original
                .elements()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != target)
                .map(|(_, e)| &e.content);
            kept.eq(edited.elements().iter().map(|e| &e.content))
        }
    }
}

fn overlap_ratio(a: &Geometry, b: &Geometry) -> f64 {
    let inter = a.bbox().intersection_area(&b.bbox());
    if inter <= 0.0 {
        0.0
    } else {
        inter / a.area().min(b.area())
    }
}

pub fn overlap(d: &Design) -> f64 {
    let boxes: Vec<Geometry> = d
        .ids()
        .filter(|&i| !d.is_background(i))
        .map(|i| d.elements()[i].geom)
        .collect();
    let n = boxes.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += overlap_ratio(&boxes[i], &boxes[j]);
        }
    }
    sum * 2.0 / (n * (n - 1)) as f64
}

pub fn alignment(d: &Design) -> f64 {
    let n = d.len();
    if n < 2 {
        return 0.0;
    }
    let (w, h) = (d.canvas().w(), d.canvas().h());
    let lines: Vec<[f64; 6]> = d
        .elements()
        .iter()
        .map(|e| {
            let r = e.bbox();
            let (cx, cy) = (e.geom.cx, e.geom.cy);
            [r.left / w, cx / w, r.right / w, r.top / h, cy / h, r.bottom / h]
        })
        .collect();
    let lines = &lines;
    let total: f64 = (0..n)
        .map(|i| {
            let gap = (0..n)
                .filter(|&j| j != i)
                .flat_map(|j| (0..6).map(move |a| (lines[i][a] - lines[j][a]).abs()))
                .fold(f64::INFINITY, f64::min);
            (1.0 - gap.clamp(0.0, 0.999_999)).log10().abs()
        })
        .sum();
    total / n as f64
}

/// One evaluated edit: the design it started from, the pruned graph, the
/// operation and the edited result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCase {
    pub original: Design,
    pub graph: RelationGraph,
    pub operation: EditOperation,
    pub edited: Design,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub added: Option<Element>,
}

/// Per-case metric values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub relations: RelationScore,
    pub op: bool,
    pub ove: f64,
    pub ali: f64,
}

pub fn evaluate_case(case: &EvalCase, alpha: f64, tol_px: f64) -> Result<CaseMetrics, MetricsError> {
    Ok(CaseMetrics {
        relations: relation_satisfaction_for_edit(&case.graph, &case.operation, &case.edited, alpha)?,
        op: op_satisfaction(&case.operation, &case.original, &case.edited, tol_px),
        ove: overlap(&case.edited),
        ali: alignment(&case.edited),
    })
}

/// Running sums behind a report; merging is associative.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub cases: usize,
    pub size_satisfied: usize,
    pub size_total: usize,
    pub pos_satisfied: usize,
    pub pos_total: usize,
    pub op_satisfied: usize,
    pub ove_sum: f64,
    pub ali_sum: f64,
}

impl Tally {
    pub fn add(&mut self, m: &CaseMetrics) {
        self.cases += 1;
        self.size_satisfied += m.relations.size_satisfied;
        self.size_total += m.relations.size_total;
        self.pos_satisfied += m.relations.pos_satisfied;
        self.pos_total += m.relations.pos_total;
        self.op_satisfied += m.op as usize;
        self.ove_sum += m.ove;
        self.ali_sum += m.ali;
    }

    pub fn merge(&mut self, other: &Tally) {
        self.cases += other.cases;
        self.size_satisfied += other.size_satisfied;
        self.size_total += other.size_total;
        self.pos_satisfied += other.pos_satisfied;
        self.pos_total += other.pos_total;
        self.op_satisfied += other.op_satisfied;
        self.ove_sum += other.ove_sum;
        self.ali_sum += other.ali_sum;
    }

    pub fn summary(&self) -> MetricSummary {
        let mean = |s: f64| (self.cases > 0).then(|| s / self.cases as f64);
        MetricSummary {
            n_cases: self.cases,
            size_rel: ratio(self.size_satisfied, self.size_total),
            pos_rel: ratio(self.pos_satisfied, self.pos_total),
            op: ratio(self.op_satisfied, self.cases),
            ove: mean(self.ove_sum),
            ali: mean(self.ali_sum),
        }
    }
}

/// Aggregated rates. `None` means the denominator was empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n_cases: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos_rel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ove: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ali: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub overall: MetricSummary,
    pub per_action: BTreeMap<Action, MetricSummary>,
    /// Cases that could not be scored.
    pub n_errors: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl EvalReport {
    pub fn size_rel(&self) -> Option<f64> {
        self.overall.size_rel
    }

    pub fn pos_rel(&self) -> Option<f64> {
        self.overall.pos_rel
    }

    pub fn op(&self) -> Option<f64> {
        self.overall.op
    }

    pub fn n_cases(&self) -> usize {
        self.overall.n_cases
    }

    /// Plain-text table with one row per action plus an overall row.
    pub fn table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{v:.4}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>8} {:>8} {:>9} {:>9} {:>8}",
            "Action", "N", "Ove", "Ali", "Size Rel", "Pos Rel", "Op"
        );
        let rows = self
            .per_action
            .iter()
            .map(|(a, s)| (a.as_str(), s))
            .chain(std::iter::once(("all", &self.overall)));
        for (name, s) in rows {
            let _ = writeln!(
                out,
                "{:<10} {:>6} {:>8} {:>8} {:>9} {:>9} {:>8}",
                name,
                s.n_cases,
                cell(s.ove),
                cell(s.ali),
                cell(s.size_rel),
                cell(s.pos_rel),
                cell(s.op)
            );
        }
        if self.n_errors > 0 {
            let _ = writeln!(out, "{} case(s) failed to evaluate", self.n_errors);
        }
        out
    }
}

/// Keeps at most this many error messages in a report.
const MAX_REPORTED_ERRORS: usize = 20;

/// Incremental report builder, for streaming and background jobs.
#[derive(Debug, Default, Clone)]
pub struct ReportBuilder {
    overall: Tally,
    per_action: BTreeMap<Action, Tally>,
    n_errors: usize,
    errors: Vec<String>,
}

impl ReportBuilder {
    pub fn record(&mut self, action: Action, m: &CaseMetrics) {
        self.overall.add(m);
        self.per_action.entry(action).or_default().add(m);
    }

    pub fn record_error(&mut self, message: impl Into<String>) {
        self.n_errors += 1;
        if self.errors.len() < MAX_REPORTED_ERRORS {
            self.errors.push(message.into());
        }
    }

    pub fn processed(&self) -> usize {
        self.overall.cases + self.n_errors
    }

    pub fn finish(self) -> EvalReport {
        EvalReport {
            overall: self.overall.summary(),
            per_action: self.per_action.iter().map(|(a, t)| (*a, t.summary())).collect(),
            n_errors: self.n_errors,
            errors: self.errors,
        }
    }
}

/// Score a stream of cases. Failing cases are counted, not fatal.
pub fn evaluate_corpus<I>(cases: I, alpha: f64, tol_px: f64) -> EvalReport
where
    I: IntoIterator<Item = EvalCase>,
{
    let mut builder = ReportBuilder::default();
    for (i, case) in cases.into_iter().enumerate() {
        match evaluate_case(&case, alpha, tol_px) {
            Ok(m) => builder.record(case.operation.action(), &m),
            Err(e) => builder.record_error(format!("case {i}: {e}")),
        }
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{parse_design, Canvas, POSTER_DOCUMENT};
    use crate::graph::{build_relation_graph, remove_node_edges};
    use crate::seeded_rng;

    fn boxes(canvas: Canvas, geoms: &[(f64, f64, f64, f64)]) -> Design {
        Design::new(
            canvas,
            geoms
                .iter()
                .map(|&(cx, cy, w, h)| Element::image(None, Geometry::new(cx, cy, w, h)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_is_fully_satisfied() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let g = build_relation_graph(&d, 0.1, &mut seeded_rng(1)).unwrap();
        let s = relation_satisfaction(&g, &d, 0.1).unwrap();
        assert_eq!((s.size_rel(), s.pos_rel()), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn moving_element_two_down_breaks_its_canvas_edge() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let g = build_relation_graph(&d, 0.1, &mut seeded_rng(1)).unwrap();
        let g = remove_node_edges(&g, 3).unwrap();
        let mut moved = d.clone();
        let mut geom = moved.geometry(2).unwrap();
        geom.cy = 700.0;
        moved.set_geometry(2, geom).unwrap();
        let s = relation_satisfaction(&g, &moved, 0.1).unwrap();
        // recount by hand: every position edge whose label changes
        let changed = g
            .position_edges()
            .filter(|e| e.classify_on(&moved, 0.1) != Some(e.relation))
            .count();
        assert!(g.position_edges().any(|e| e.to_string() == "element 2 top canvas"));
        assert!(changed >= 1);
        assert_eq!(s.pos_satisfied, s.pos_total - changed);
        assert_eq!(s.size_rel(), Some(1.0));
    }

    #[test]
    fn dangling_edges_are_errors() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let g = build_relation_graph(&d, 0.1, &mut seeded_rng(1)).unwrap();
        let mut smaller = d.clone();
        smaller.remove(3).unwrap();
        assert!(matches!(
            relation_satisfaction(&g, &smaller, 0.1),
            Err(MetricsError::DanglingEndpoint { element: 3, .. })
        ));
        // explained by a delete: excluded instead
        let s = relation_satisfaction_for_edit(&g, &EditOperation::Delete { target: 3 }, &smaller, 0.1).unwrap();
        assert_eq!(s.excluded, 7);
        assert_eq!(s.size_total + s.pos_total + s.excluded, g.edges().len());
    }

    #[test]
    fn op_satisfaction_thresholds() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let op = EditOperation::Move { target: 3, x: 583, y: 394 };
        assert!(op_satisfaction(&op, &d, &d, 1.0));
        let mut e = d.clone();
        e.set_geometry(3, Geometry::new(583.6, 394.0, 441.0, 336.0)).unwrap();
        assert!(op_satisfaction(&op, &d, &e, 1.0));
        e.set_geometry(3, Geometry::new(585.0, 394.0, 441.0, 336.0)).unwrap();
        assert!(!op_satisfaction(&op, &d, &e, 1.0));
        assert!(!op_satisfaction(&EditOperation::Delete { target: 2 }, &d, &d, 1.0));
        let mut del = d.clone();
        del.remove(2).unwrap();
        assert!(op_satisfaction(&EditOperation::Delete { target: 2 }, &d, &del, 1.0));
        assert!(!op_satisfaction(&EditOperation::Delete { target: 1 }, &d, &del, 1.0));
        assert!(op_satisfaction(&EditOperation::Add { target: 2 }, &del, &d, 1.0));
    }

    #[test]
    fn overlap_examples() {
        let c = Canvas::new(100, 100);
        assert_eq!(overlap(&boxes(c, &[(10., 10., 5., 5.), (50., 50., 5., 5.)])), 0.0);
        assert_eq!(overlap(&boxes(c, &[(20., 20., 10., 10.), (20., 20., 10., 10.)])), 1.0);
        // unit squares [0,1]^2 and [0.5,1.5]x[0,1]
        assert!((overlap(&boxes(c, &[(0.5, 0.5, 1., 1.), (1.0, 0.5, 1., 1.)])) - 0.5).abs() < 1e-12);
        // backdrop excluded
        assert_eq!(overlap(&boxes(c, &[(50., 50., 100., 100.), (20., 20., 10., 10.)])), 0.0);
    }

    #[test]
    fn alignment_examples() {
        let c = Canvas::new(940, 788);
        assert_eq!(alignment(&boxes(c, &[(100., 100., 50., 50.)])), 0.0);
        assert_eq!(alignment(&boxes(c, &[(100., 100., 50., 50.), (110., 500., 70., 30.)])), 0.0);
        // left edges 75 and 84.4; every other line pair is further apart
        let ali = alignment(&boxes(c, &[(100., 100., 50., 50.), (184.4, 600., 200., 80.)]));
        assert!((ali - (-(0.99f64).log10())).abs() < 1e-9, "{ali}");
    }

    #[test]
    fn corpus_report_handles_empty_and_identity() {
        let empty = evaluate_corpus(Vec::<EvalCase>::new(), 0.1, 1.0);
        assert_eq!(empty.n_cases(), 0);
        assert_eq!(empty.size_rel(), None);
        let json = serde_json::to_value(&empty).unwrap();
        assert!(json.get("size_rel").is_none());

        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let g = build_relation_graph(&d, 0.1, &mut seeded_rng(4)).unwrap();
        let case = EvalCase {
            original: d.clone(),
            graph: remove_node_edges(&g, 3).unwrap(),
            operation: EditOperation::Move { target: 3, x: 583, y: 394 },
            edited: d.clone(),
            added: None,
        };
        let r = evaluate_corpus(vec![case.clone(), case], 0.1, 1.0);
        assert_eq!((r.size_rel(), r.pos_rel(), r.op()), (Some(1.0), Some(1.0), Some(1.0)));
        assert!(r.table().contains("Size Rel"));
    }
}
