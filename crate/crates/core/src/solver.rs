//! Applying an operation while keeping the rest of the layout's relations.
//!
//! [`apply_operation_exact`] sets the target's attributes and nothing else.
//! [`solve`] starts from that result and repairs the other elements with a
//! seeded multi-start coordinate descent over
//!
//! ```text
//! dev_w * deviation + rel_w * sum_e (viol_e + res_e)^2 + ove_w * overlap
//! ```
//!
//! where `viol_e` is 1 for a broken edge and `res_e` measures how far the
//! edge is from holding with a safety margin. The edited target stays fixed.
//! The result never has a higher total residual than exact application.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{Canvas, Design, DesignError, Element, ElementId, Geometry, Rect};
use crate::graph::{
    size_label, Band, Edge, NodeId, Relation, RelationGraph, SizeRelation,
};
use crate::ops::{check_target, output_graph, prepare_edit, CompositeOperation, EditOperation, OpError, PreparedEdit};
use crate::{derive_seed, seeded_rng};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("infeasible operation: {0}")]
    Infeasible(String),
    #[error("bad solver config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub rel: f64,
    pub op: f64,
    pub dev: f64,
    pub ove: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            rel: 10.0,
            op: 10.0,
            dev: 1.0,
            ove: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Size-equality tolerance used to classify edges.
    pub alpha: f64,
    /// Extra slack on area ratios before a size edge counts as safely held.
    pub size_margin: f64,
    /// Pixels a center must sit inside its band to count as safely held.
    pub position_margin: f64,
    pub weights: Weights,
    /// Maximum descent sweeps per start.
    pub max_iters: usize,
    /// Number of starts; the first is deterministic, later ones are shuffled.
    pub restarts: usize,
    pub seed: u64,
    /// Wall-clock budget per solve. 0 disables it.
    pub time_budget_ms: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: crate::graph::DEFAULT_ALPHA,
            size_margin: 0.02,
            position_margin: 1.0,
            weights: Weights::default(),
            max_iters: 60,
            restarts: 3,
            seed: 0,
            time_budget_ms: 2000,
        }
    }
}

impl SolverConfig {
    /// Load from a `.toml` or `.json` file; missing fields keep defaults.
    pub fn from_file(path: &Path) -> Result<Self, SolverError> {
        let raw = std::fs::read_to_string(path).map_err(|e| SolverError::Config(format!("{}: {e}", path.display())))?;
        let cfg: SolverConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&raw).map_err(|e| SolverError::Config(e.to_string()))?
        } else {
            toml::from_str(&raw).map_err(|e| SolverError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let w = &self.weights;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SolverError::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if [w.rel, w.op, w.dev, w.ove, self.size_margin, self.position_margin]
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(SolverError::Config("weights and margins must be finite and non-negative".into()));
        }
        Ok(())
    }

    fn deadline(&self, start: Instant) -> Option<Instant> {
        (self.time_budget_ms > 0).then(|| start + Duration::from_millis(self.time_budget_ms))
    }
}

/// Residual breakdown for an edited design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// One entry per edge of the graph in output indexing, in graph order.
    pub edges: Vec<f64>,
    /// Edges whose label no longer holds.
    pub violated: usize,
    pub relation: f64,
    pub op: f64,
    pub overlap: f64,
    /// `rel_w * relation + op_w * op + ove_w * overlap`.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub design: Design,
    pub residuals: ConstraintResiduals,
    /// False when the time budget ran out or the sweep limit was hit.
    pub converged: bool,
    pub iterations: usize,
    /// True when repair could not beat exact application and its result was kept.
    pub fell_back_to_exact: bool,
}

/// Where a new element goes and how clean the spot is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub geom: Geometry,
    /// Overlap with other elements plus share of area off the canvas. 0 is clean.
    pub residual: f64,
}

// Exact application and placement

/// Set the target's attributes as the operation says and leave everything
/// else untouched. An add places `added` with [`place_new_element`].
pub fn apply_operation_exact(
    d: &Design,
    op: &EditOperation,
    added: Option<&Element>,
    cfg: &SolverConfig,
) -> Result<Design, SolverError> {
    check_target(op, d.len())?;
    let mut out = d.clone();
    match *op {
        EditOperation::Move { target, x, y } => {
            let mut g = out.geometry(target)?;
            g.cx = x as f64;
            g.cy = y as f64;
            out.set_geometry(target, g)?;
        }
        EditOperation::Resize { target, width, height } => {
            if width <= 0 || height <= 0 {
                return Err(SolverError::Infeasible(format!("resize to {width}x{height}")));
            }
            let mut g = out.geometry(target)?;
            let scale = height as f64 / g.h;
            g.w = width as f64;
            g.h = height as f64;
            out.set_geometry(target, g)?;
            scale_font(&mut out, target, scale)?;
        }
        EditOperation::Delete { target } => {
            out.remove(target)?;
        }
        EditOperation::Add { target } => {
            let donor = added.ok_or(OpError::MissingAddContent)?;
            let placement = place_new_element(d, donor, cfg);
            let mut e = donor.clone();
            let scale = placement.geom.h / e.geom.h;
            e.geom = placement.geom;
            out.insert(target, e)?;
            scale_font(&mut out, target, scale)?;
        }
    }
    Ok(out)
}

fn scale_font(d: &mut Design, id: ElementId, scale: f64) -> Result<(), DesignError> {
    if let Some(attrs) = d.element(id)?.text {
        if scale.is_finite() && scale > 0.0 && scale != 1.0 {
            d.set_font_size(id, (attrs.font_size * scale).max(1.0))?;
        }
    }
    Ok(())
}

/// Choose a spot for a new element: aligned to the canvas or an existing
/// element's edge or center line, overlapping as little as possible and
/// otherwise keeping clear of its neighbours. Elements larger than the
/// canvas are scaled down with their aspect ratio kept.
pub fn place_new_element(d: &Design, donor: &Element, _cfg: &SolverConfig) -> Placement {
    let canvas = d.canvas();
    let (cw, ch) = (canvas.w(), canvas.h());
    let (mut w, mut h) = (donor.geom.w.max(1.0), donor.geom.h.max(1.0));
    let fit = (cw / w).min(ch / h);
    if fit < 1.0 {
        w = (w * fit).max(1.0);
        h = (h * fit).max(1.0);
    }
    let others: Vec<Rect> = d
        .ids()
        .filter(|&i| !d.is_background(i))
        .map(|i| d.elements()[i].bbox())
        .collect();

    let axis = |extent: f64, size: f64, pick: fn(&Rect) -> [f64; 3]| {
        let mut lines = vec![0.0, extent / 3.0, extent / 2.0, 2.0 * extent / 3.0, extent];
        for r in &others {
            lines.extend(pick(r));
        }
        let mut centers: Vec<f64> = lines
            .iter()
            .flat_map(|&l| [l + size / 2.0, l, l - size / 2.0])
            .collect();
        centers.sort_by(f64::total_cmp);
        centers.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        centers
    };
    let xs = axis(cw, w, |r| [r.left, (r.left + r.right) / 2.0, r.right]);
    let ys = axis(ch, h, |r| [r.top, (r.top + r.bottom) / 2.0, r.bottom]);

    let diag = canvas.diagonal();
    let mut best: Option<(f64, Placement)> = None;
    for &y in &ys {
        for &x in &xs {
            let g = Geometry::new(x, y, w, h);
            let b = g.bbox();
            let area = g.area();
            let off = (area - b.intersection_area(&canvas.rect())).max(0.0) / area;
            let mut ove = 0.0;
            let mut gap = f64::INFINITY;
            for r in &others {
                let inter = b.intersection_area(r);
                if inter > 0.0 {
                    ove += inter / area.min(r.area());
                }
                gap = gap.min(rect_gap(&b, r));
            }
            let clearance = if others.is_empty() { 1.0 } else { (gap / (0.25 * diag)).min(1.0) };
            let centrality = ((x - cw / 2.0).hypot(y - ch / 2.0)) / diag;
            let residual = ove + off;
            let score = residual + 0.25 * (1.0 - clearance) + 1e-3 * centrality;
            if best.as_ref().is_none_or(|(s, _)| score < *s - 1e-12) {
                best = Some((score, Placement { geom: g, residual }));
            }
        }
    }
    best.expect("candidate set always contains the canvas lines").1
}

fn rect_gap(a: &Rect, b: &Rect) -> f64 {
    let dx = (b.left - a.right).max(a.left - b.right).max(0.0);
    let dy = (b.top - a.bottom).max(a.top - b.bottom).max(0.0);
    dx.hypot(dy)
}

// Residuals

fn shrink(lo: f64, hi: f64, m: f64) -> (f64, f64) {
    if lo + m <= hi - m {
        (lo + m, hi - m)
    } else {
        let mid = (lo + hi) / 2.0;
        (mid, mid)
    }
}

/// Interval a coordinate must fall in for `band`, pulled in by `m`.
fn band_interval(band: Band, lo: f64, hi: f64, m: f64) -> (f64, f64) {
    match band {
        Band::Low => (f64::NEG_INFINITY, lo - m),
        Band::Mid => shrink(lo, hi, m),
        Band::High => (hi + m, f64::INFINITY),
    }
}

fn dist_to(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if v < lo {
        lo - v
    } else if v > hi {
        v - hi
    } else {
        0.0
    }
}

/// Geometry-level edge evaluator shared by residuals and the descent.
struct EdgeEval<'a> {
    canvas: Canvas,
    cfg: &'a SolverConfig,
}

impl EdgeEval<'_> {
    /// `(broken, residual)` for one edge. A held edge has residual 0.
    fn eval(&self, edge: &Edge, geoms: &[Geometry]) -> (bool, f64) {
        let Some(s) = edge.source.element() else { return (false, 0.0) };
        let src = &geoms[s];
        match (edge.relation, edge.target) {
            (Relation::Size(want), NodeId::Element(t)) => {
                let ar = src.area() / geoms[t].area();
                if size_label(ar, self.cfg.alpha) == want {
                    return (false, 0.0);
                }
                let (a, m) = (self.cfg.alpha, self.cfg.size_margin);
                let res = match want {
                    SizeRelation::Small => (ar - (1.0 - a - m)) / (1.0 - a),
                    SizeRelation::Large => ((1.0 + a + m) - ar) / (1.0 + a),
                    SizeRelation::Equal => {
                        let (lo, hi) = shrink(1.0 - a, 1.0 + a, m);
                        if ar < lo {
                            (lo - ar) / (1.0 - a)
                        } else {
                            (ar - hi) / (1.0 + a)
                        }
                    }
                };
                (true, res.max(0.0))
            }
            (Relation::Position(want), target) => {
                let now_ok;
                let (xl, xh, yl, yh) = match target {
                    NodeId::Element(t) => {
                        let r = geoms[t].bbox();
                        now_ok = crate::graph::classify_position_element(src, &geoms[t]) == want;
                        (r.left, r.right, r.top, r.bottom)
                    }
                    NodeId::Canvas => {
                        let (w, h) = (self.canvas.w(), self.canvas.h());
                        now_ok = crate::graph::classify_position_canvas(src, self.canvas) == want;
                        (w / 3.0, 2.0 * w / 3.0, h / 3.0, 2.0 * h / 3.0)
                    }
                };
                if now_ok {
                    return (false, 0.0);
                }
                let (col, row) = want.bands();
                let m = self.cfg.position_margin;
                let dx = dist_to(src.cx, band_interval(col, xl, xh, m));
                let dy = dist_to(src.cy, band_interval(row, yl, yh, m));
                (true, dx.hypot(dy) / self.canvas.diagonal())
            }
            (Relation::Size(_), NodeId::Canvas) => (false, 0.0),
        }
    }
}

fn pair_ratio(a: &Geometry, b: &Geometry) -> f64 {
    let inter = a.bbox().intersection_area(&b.bbox());
    if inter <= 0.0 {
        0.0
    } else {
        inter / a.area().min(b.area())
    }
}

fn covers_canvas(g: &Geometry, canvas: Canvas) -> bool {
    g.bbox().intersection_area(&canvas.rect()) >= 0.99 * canvas.area()
}

/// Where each edited-design id came from in the input design.
fn source_index(op: &EditOperation, k: ElementId) -> Option<ElementId> {
    match *op {
        EditOperation::Add { target } if k == target => None,
        EditOperation::Add { target } if k > target => Some(k - 1),
        EditOperation::Delete { target } if k >= target => Some(k + 1),
        _ => Some(k),
    }
}

/// Everything the objective needs, in output indexing.
struct Problem<'a> {
    eval: EdgeEval<'a>,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
    /// Overlap level each pair already had before the edit.
    reference: Vec<Vec<f64>>,
    background: Vec<bool>,
    anchor: Vec<Geometry>,
    fixed: Option<ElementId>,
}

impl<'a> Problem<'a> {
    fn new(
        input: &Design,
        graph: &RelationGraph,
        op: &EditOperation,
        start: &Design,
        cfg: &'a SolverConfig,
    ) -> Problem<'a> {
        let (g, _) = output_graph(graph, op);
        let n = start.len();
        let edges: Vec<Edge> = g
            .edges()
            .iter()
            .copied()
            .filter(|e| [e.source, e.target].iter().all(|n| n.element().is_none_or(|i| i < start.len())))
            .collect();
        let mut incident = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            for id in [e.source, e.target].into_iter().filter_map(NodeId::element) {
                incident[id].push(k);
            }
        }
        let canvas = start.canvas();
        let anchor: Vec<Geometry> = start.elements().iter().map(|e| e.geom).collect();
        let background: Vec<bool> = anchor.iter().map(|g| covers_canvas(g, canvas)).collect();
        let src: Vec<Option<Geometry>> = (0..n)
            .map(|k| source_index(op, k).and_then(|i| input.elements().get(i)).map(|e| e.geom))
            .collect();
        let mut reference = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                if let (Some(a), Some(b)) = (&src[i], &src[j]) {
                    let r = pair_ratio(a, b);
                    reference[i][j] = r;
                    reference[j][i] = r;
                }
            }
        }
        let fixed = match *op {
            EditOperation::Delete { .. } => None,
            _ => Some(op.target()),
        };
        Problem {
            eval: EdgeEval {
                canvas,
                cfg,
            },
            edges,
            incident,
            reference,
            background,
            anchor,
            fixed,
        }
    }

    fn pair_penalty(&self, i: usize, j: usize, geoms: &[Geometry]) -> f64 {
        if self.background[i] || self.background[j] {
            return 0.0;
        }
        (pair_ratio(&geoms[i], &geoms[j]) - self.reference[i][j]).max(0.0)
    }

    fn deviation(&self, i: usize, g: &Geometry) -> f64 {
        let a = &self.anchor[i];
        let c = self.eval.canvas;
        ((g.cx - a.cx).abs() + (g.w - a.w).abs()) / c.w() + ((g.cy - a.cy).abs() + (g.h - a.h).abs()) / c.h()
    }

    /// Objective terms that change when element `i` changes.
    fn local(&self, i: usize, geoms: &[Geometry]) -> f64 {
        let w = &self.eval.cfg.weights;
        let rel: f64 = self.incident[i]
            .iter()
            .map(|&k| {
                let (broken, res) = self.eval.eval(&self.edges[k], geoms);
                let v = broken as u8 as f64 + res;
                v * v
            })
            .sum();
        let ove: f64 = (0..geoms.len()).filter(|&j| j != i).map(|j| self.pair_penalty(i, j, geoms)).sum();
        w.dev * self.deviation(i, &geoms[i]) + w.rel * rel + w.ove * ove
    }

    /// Relation and overlap part only, used to pick which elements to visit.
    fn needs_repair(&self, i: usize, geoms: &[Geometry]) -> bool {
        self.incident[i].iter().any(|&k| self.eval.eval(&self.edges[k], geoms).0)
            || (0..geoms.len()).any(|j| j != i && self.pair_penalty(i, j, geoms) > 1e-9)
    }

    fn objective(&self, geoms: &[Geometry]) -> f64 {
        let w = &self.eval.cfg.weights;
        let rel: f64 = self
            .edges
            .iter()
            .map(|e| {
                let (broken, res) = self.eval.eval(e, geoms);
                let v = broken as u8 as f64 + res;
                v * v
            })
            .sum();
        let mut ove = 0.0;
        let mut dev = 0.0;
        for i in 0..geoms.len() {
            dev += self.deviation(i, &geoms[i]);
            for j in (i + 1)..geoms.len() {
                ove += self.pair_penalty(i, j, geoms);
            }
        }
        w.dev * dev + w.rel * rel + w.ove * ove
    }

    fn overlap(&self, geoms: &[Geometry]) -> f64 {
        let mut ove = 0.0;
        for i in 0..geoms.len() {
            for j in (i + 1)..geoms.len() {
                ove += self.pair_penalty(i, j, geoms);
            }
        }
        ove
    }

    fn candidates(&self, i: usize, geoms: &[Geometry], out: &mut Vec<Geometry>) {
        out.clear();
        let g = geoms[i];
        let c = self.eval.canvas;
        let (cw, ch) = (c.w(), c.h());
        let mut xl = vec![0.0, cw / 3.0, cw / 2.0, 2.0 * cw / 3.0, cw];
        let mut yl = vec![0.0, ch / 3.0, ch / 2.0, 2.0 * ch / 3.0, ch];
        for (j, o) in geoms.iter().enumerate() {
            if j != i {
                let r = o.bbox();
                xl.extend([r.left, o.cx, r.right]);
                yl.extend([r.top, o.cy, r.bottom]);
            }
        }
        for l in xl {
            for cx in [l + g.w / 2.0, l, l - g.w / 2.0] {
                out.push(Geometry { cx, ..g });
            }
        }
        for l in yl {
            for cy in [l + g.h / 2.0, l, l - g.h / 2.0] {
                out.push(Geometry { cy, ..g });
            }
        }
        for f in [0.25, 1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0] {
            for s in [-1.0, 1.0] {
                out.push(Geometry { cx: g.cx + s * f * cw, ..g });
                out.push(Geometry { cy: g.cy + s * f * ch, ..g });
            }
        }
        let a = self.anchor[i];
        out.push(Geometry { cx: a.cx, cy: a.cy, ..g });
        // size changes only help broken size edges or overlaps
        let size_trouble = self.incident[i].iter().any(|&k| {
            matches!(self.edges[k].relation, Relation::Size(_)) && self.eval.eval(&self.edges[k], geoms).0
        });
        let overlapping = (0..geoms.len()).any(|j| j != i && self.pair_penalty(i, j, geoms) > 1e-9);
        if size_trouble || overlapping {
            for s in [0.8, 0.9, 0.95, 1.05, 1.1, 1.25] {
                out.push(Geometry { w: g.w * s, h: g.h * s, ..g });
            }
            out.push(Geometry { w: a.w, h: a.h, ..g });
        }
        if size_trouble {
            for &k in &self.incident[i] {
                let e = &self.edges[k];
                let (Relation::Size(want), NodeId::Element(t)) = (e.relation, e.target) else { continue };
                let Some(s) = e.source.element() else { continue };
                let alpha = self.eval.cfg.alpha;
                let m = self.eval.cfg.size_margin;
                let goal = match want {
                    SizeRelation::Small => 1.0 - alpha - 2.0 * m,
                    SizeRelation::Large => 1.0 + alpha + 2.0 * m,
                    SizeRelation::Equal => 1.0,
                };
                let ar = geoms[s].area() / geoms[t].area();
                // scale i so the ratio reaches goal
                let area_scale = if i == s { goal / ar } else { ar / goal };
                let lin = area_scale.sqrt();
                if lin.is_finite() && lin > 0.0 {
                    out.push(Geometry { w: g.w * lin, h: g.h * lin, ..g });
                }
            }
        }
        out.retain(|c| c.w >= 1.0 && c.h >= 1.0 && c.cx.is_finite() && c.cy.is_finite());
    }

    /// Run sweeps from `geoms`. Returns (sweeps, converged, timed_out).
    fn descend<R: Rng>(
        &self,
        geoms: &mut [Geometry],
        rng: Option<&mut R>,
        deadline: Option<Instant>,
        max_iters: usize,
    ) -> (usize, bool, bool) {
        let mut order: Vec<usize> = (0..geoms.len()).filter(|&i| Some(i) != self.fixed).collect();
        if let Some(rng) = rng {
            order.shuffle(rng);
        }
        let mut buf = Vec::new();
        for sweep in 0..max_iters {
            let mut improved = false;
            for &i in &order {
                if deadline.is_some_and(|d| Instant::now() >= d) {
                    return (sweep, false, true);
                }
                if !self.needs_repair(i, geoms) {
                    continue;
                }
                let current = geoms[i];
                let base = self.local(i, geoms);
                self.candidates(i, geoms, &mut buf);
                let mut best = (base, current);
                for cand in &buf {
                    geoms[i] = *cand;
                    let v = self.local(i, geoms);
                    if v < best.0 - 1e-12 {
                        best = (v, *cand);
                    }
                }
                geoms[i] = best.1;
                improved |= best.0 < base - 1e-12;
            }
            if !improved {
                return (sweep + 1, true, false);
            }
        }
        (max_iters, false, false)
    }
}

fn op_residual(op: &EditOperation, input: &Design, edited: &Design) -> f64 {
    let c = edited.canvas();
    match *op {
        EditOperation::Move { target, x, y } => match edited.geometry(target) {
            Ok(g) if edited.len() == input.len() => (g.cx - x as f64).hypot(g.cy - y as f64) / c.diagonal(),
            _ => 1.0,
        },
        EditOperation::Resize { target, width, height } => match edited.geometry(target) {
            Ok(g) if edited.len() == input.len() => {
                (g.w - width as f64).abs() / c.w() + (g.h - height as f64).abs() / c.h()
            }
            _ => 1.0,
        },
        EditOperation::Add { target } => {
            if edited.len() == input.len() + 1 && target < edited.len() {
                0.0
            } else {
                1.0
            }
        }
        EditOperation::Delete { .. } => {
            if edited.len() + 1 == input.len() {
                0.0
            } else {
                1.0
            }
        }
    }
}

fn residuals_with(problem: &Problem<'_>, op: &EditOperation, input: &Design, edited: &Design) -> ConstraintResiduals {
    let geoms: Vec<Geometry> = edited.elements().iter().map(|e| e.geom).collect();
    let mut edges = Vec::with_capacity(problem.edges.len());
    let mut violated = 0;
    for e in &problem.edges {
        let (broken, res) = problem.eval.eval(e, &geoms);
        violated += broken as usize;
        edges.push(res);
    }
    let w = &problem.eval.cfg.weights;
    let relation: f64 = edges.iter().sum();
    let op = op_residual(op, input, edited);
    let overlap = problem.overlap(&geoms);
    ConstraintResiduals {
        total: w.rel * relation + w.op * op + w.ove * overlap,
        edges,
        violated,
        relation,
        op,
        overlap,
    }
}

/// Residuals of `edited` against the prompt-indexed `graph` and `op`, which
/// was issued against `input`.
pub fn residuals(
    input: &Design,
    graph: &RelationGraph,
    op: &EditOperation,
    edited: &Design,
    cfg: &SolverConfig,
) -> Result<ConstraintResiduals, SolverError> {
    let problem = Problem::new(input, graph, op, edited, cfg);
    Ok(residuals_with(&problem, op, input, edited))
}

/// Apply `op` to `d` and repair the other elements so the relations in the
/// prompt-indexed graph `g` keep holding.
pub fn solve(
    d: &Design,
    g: &RelationGraph,
    op: &EditOperation,
    added: Option<&Element>,
    cfg: &SolverConfig,
) -> Result<Solution, SolverError> {
    cfg.validate()?;
    let started = Instant::now();
    let deadline = cfg.deadline(started);
    let exact = apply_operation_exact(d, op, added, cfg)?;
    let problem = Problem::new(d, g, op, &exact, cfg);
    let exact_res = residuals_with(&problem, op, d, &exact);
    let start: Vec<Geometry> = exact.elements().iter().map(|e| e.geom).collect();
    if exact_res.violated == 0 && exact_res.overlap <= 1e-12 {
        return Ok(Solution {
            design: exact,
            residuals: exact_res,
            converged: true,
            iterations: 0,
            fell_back_to_exact: false,
        });
    }

    let mut best = (problem.objective(&start), start.clone());
    let mut iterations = 0;
    let mut converged = true;
    for r in 0..cfg.restarts.max(1) {
        let mut geoms = start.clone();
        let (sweeps, conv, timed_out) = if r == 0 {
            problem.descend::<crate::SeededRng>(&mut geoms, None, deadline, cfg.max_iters)
        } else {
            let mut rng = seeded_rng(derive_seed(cfg.seed, &[r as u64]));
            problem.descend(&mut geoms, Some(&mut rng), deadline, cfg.max_iters)
        };
        iterations += sweeps;
        if r == 0 {
            converged = conv;
        }
        let v = problem.objective(&geoms);
        if v < best.0 - 1e-12 {
            best = (v, geoms);
        }
        if timed_out {
            converged = false;
            break;
        }
    }

    let mut design = exact.clone();
    for (i, g) in best.1.iter().enumerate() {
        let scale = g.h / design.elements()[i].geom.h;
        design.set_geometry(i, *g)?;
        scale_font(&mut design, i, scale)?;
    }
    let res = residuals_with(&problem, op, d, &design);
    if res.total > exact_res.total + 1e-12 {
        return Ok(Solution {
            design: exact,
            residuals: exact_res,
            converged,
            iterations,
            fell_back_to_exact: true,
        });
    }
    Ok(Solution {
        design,
        residuals: res,
        converged,
        iterations,
        fell_back_to_exact: false,
    })
}

/// [`solve`] for a prepared edit.
pub fn solve_prepared(edit: &PreparedEdit, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    solve(&edit.input_design, &edit.pruned_graph, &edit.operation, edit.added.as_ref(), cfg)
}

/// Apply a composite operation step by step. Each step re-extracts the
/// graph from the current state. `added` supplies one element per add step.
pub fn solve_composite(
    d: &Design,
    composite: &CompositeOperation,
    added: &[Element],
    cfg: &SolverConfig,
) -> Result<Solution, SolverError> {
    let mut current = d.clone();
    let mut adds = added.iter();
    let mut last = None;
    let mut iterations = 0;
    let mut converged = true;
    for (step, op) in composite.steps().iter().enumerate() {
        let element = match op {
            EditOperation::Add { .. } => Some(adds.next().ok_or(OpError::MissingAddContent)?.clone()),
            _ => None,
        };
        let mut rng = seeded_rng(derive_seed(cfg.seed, &[step as u64]));
        let edit = prepare_edit(&current, *op, element, cfg.alpha, &mut rng).map_err(|e| OpError::CompositeStep {
            step,
            source: Box::new(e),
        })?;
        let sol = solve_prepared(&edit, cfg)?;
        iterations += sol.iterations;
        converged &= sol.converged;
        current = sol.design.clone();
        last = Some(sol);
    }
    let mut sol = last.ok_or(OpError::EmptyComposite)?;
    sol.iterations = iterations;
    sol.converged = converged;
    Ok(sol)
}
