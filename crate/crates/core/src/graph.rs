//! Relation graphs: pairwise size and position relations between elements,
//! plus each element's position on the canvas.
//!
//! Size relations compare areas: with `AR = area(source) / area(target)`,
//! the label is `small` below `1 - alpha`, `large` above `1 + alpha` and
//! `equal` in between (inclusive). Position relations locate the source's
//! center in a 3x3 partition: around the target's bounding box for element
//! targets, or the equal thirds of the canvas for the canvas node. Bands are
//! half-open: a center on the left/top edge of the middle band belongs to
//! it, a center on its right/bottom edge does not.
//!
//! Each unordered element pair contributes one size edge and one position
//! edge, each in a direction drawn from the supplied random source. The
//! canvas is only ever a position target.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{bounding_box, Canvas, Design, ElementId, Geometry};
use crate::jsonfmt;

/// Tolerance used when none is configured.
pub const DEFAULT_ALPHA: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("size relation needs positive areas (source {source_area}, target {target_area})")]
    DegenerateArea { source_area: f64, target_area: f64 },
    #[error("tolerance alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("cannot build a relation graph for a design without elements")]
    EmptyDesign,
    #[error("element {0} is not a node of the graph")]
    UnknownNode(ElementId),
    #[error("malformed edge: {0}")]
    BadEdge(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Element(ElementId),
    Canvas,
}

impl NodeId {
    pub fn element(self) -> Option<ElementId> {
        match self {
            NodeId::Element(id) => Some(id),
            NodeId::Canvas => None,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Element(id) => write!(f, "element {id}"),
            NodeId::Canvas => f.write_str("canvas"),
        }
    }
}

// Element nodes serialize as their integer id, the canvas as "canvas".
impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NodeId::Element(id) => s.serialize_u64(*id as u64),
            NodeId::Canvas => s.serialize_str("canvas"),
        }
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Id(u64),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Id(id) => Ok(NodeId::Element(id as ElementId)),
            Raw::Name(n) if n == "canvas" => Ok(NodeId::Canvas),
            Raw::Name(n) => Err(serde::de::Error::custom(format!("unknown node {n:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeRelation {
    Small,
    Equal,
    Large,
}

impl SizeRelation {
    pub const ALL: [SizeRelation; 3] = [SizeRelation::Small, SizeRelation::Equal, SizeRelation::Large];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeRelation::Small => "small",
            SizeRelation::Equal => "equal",
            SizeRelation::Large => "large",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }

    /// Label of the same pair read in the opposite direction.
    pub fn reversed(self) -> Self {
        match self {
            SizeRelation::Small => SizeRelation::Large,
            SizeRelation::Equal => SizeRelation::Equal,
            SizeRelation::Large => SizeRelation::Small,
        }
    }
}

/// Band along one axis of a 3x3 partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    Low,
    Mid,
    High,
}

impl Band {
    /// Half-open banding: `[.., lo)`, `[lo, hi)`, `[hi, ..)`.
    pub fn of(v: f64, lo: f64, hi: f64) -> Band {
        if v < lo {
            Band::Low
        } else if v < hi {
            Band::Mid
        } else {
            Band::High
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositionRelation {
    TopLeft,
    Top,
    TopRight,
    Left,
    Center,
    Right,
    BottomLeft,
    Bottom,
    BottomRight,
}

impl PositionRelation {
    pub const ALL: [PositionRelation; 9] = [
        PositionRelation::TopLeft,
        PositionRelation::Top,
        PositionRelation::TopRight,
        PositionRelation::Left,
        PositionRelation::Center,
        PositionRelation::Right,
        PositionRelation::BottomLeft,
        PositionRelation::Bottom,
        PositionRelation::BottomRight,
    ];

    pub fn from_bands(column: Band, row: Band) -> Self {
        use Band::*;
        use PositionRelation::*;
        match (row, column) {
            (Low, Low) => TopLeft,
            (Low, Mid) => Top,
            (Low, High) => TopRight,
            (Mid, Low) => Left,
            (Mid, Mid) => Center,
            (Mid, High) => Right,
            (High, Low) => BottomLeft,
            (High, Mid) => Bottom,
            (High, High) => BottomRight,
        }
    }

    /// (column, row) bands of this label.
    pub fn bands(self) -> (Band, Band) {
        use Band::*;
        use PositionRelation::*;
        match self {
            TopLeft => (Low, Low),
            Top => (Mid, Low),
            TopRight => (High, Low),
            Left => (Low, Mid),
            Center => (Mid, Mid),
            Right => (High, Mid),
            BottomLeft => (Low, High),
            Bottom => (Mid, High),
            BottomRight => (High, High),
        }
    }

    pub fn as_str(self) -> &'static str {
        use PositionRelation::*;
        match self {
            TopLeft => "top-left",
            Top => "top",
            TopRight => "top-right",
            Left => "left",
            Center => "center",
            Right => "right",
            BottomLeft => "bottom-left",
            Bottom => "bottom",
            BottomRight => "bottom-right",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

pub fn classify_size(source: &Geometry, target: &Geometry, alpha: f64) -> Result<SizeRelation, GraphError> {
    check_alpha(alpha)?;
    let (sa, ta) = (source.area(), target.area());
    if !(source.w > 0.0 && source.h > 0.0 && target.w > 0.0 && target.h > 0.0) {
        return Err(GraphError::DegenerateArea {
            source_area: sa,
            target_area: ta,
        });
    }
    Ok(size_label(sa / ta, alpha))
}

pub(crate) fn size_label(area_ratio: f64, alpha: f64) -> SizeRelation {
    if area_ratio < 1.0 - alpha {
        SizeRelation::Small
    } else if area_ratio > 1.0 + alpha {
        SizeRelation::Large
    } else {
        SizeRelation::Equal
    }
}

fn check_alpha(alpha: f64) -> Result<(), GraphError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(GraphError::BadAlpha(alpha))
    }
}

/// Region of the target's extended bounding-box grid holding the source center.
pub fn classify_position_element(source: &Geometry, target: &Geometry) -> PositionRelation {
    let r = bounding_box(target);
    PositionRelation::from_bands(
        Band::of(source.cx, r.left, r.right),
        Band::of(source.cy, r.top, r.bottom),
    )
}

/// Cell of the canvas' equal 3x3 grid holding the source center. Centers
/// outside the canvas fall into the nearest border cell.
pub fn classify_position_canvas(source: &Geometry, canvas: Canvas) -> PositionRelation {
    let (w, h) = (canvas.w(), canvas.h());
    PositionRelation::from_bands(
        Band::of(source.cx, w / 3.0, 2.0 * w / 3.0),
        Band::of(source.cy, h / 3.0, 2.0 * h / 3.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Size(SizeRelation),
    Position(PositionRelation),
}

impl Relation {
    pub fn kind(&self) -> EdgeKind {
        match self {
            Relation::Size(_) => EdgeKind::Size,
            Relation::Position(_) => EdgeKind::Position,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Relation::Size(s) => s.as_str(),
            Relation::Position(p) => p.as_str(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Size,
    Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawEdge", into = "RawEdge")]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub relation: Relation,
}

#[derive(Serialize, Deserialize)]
struct RawEdge {
    source: NodeId,
    target: NodeId,
    kind: EdgeKind,
    label: String,
}

impl From<Edge> for RawEdge {
    fn from(e: Edge) -> Self {
        RawEdge {
            source: e.source,
            target: e.target,
            kind: e.relation.kind(),
            label: e.relation.label().to_owned(),
        }
    }
}

impl TryFrom<RawEdge> for Edge {
    type Error = GraphError;

    fn try_from(r: RawEdge) -> Result<Self, GraphError> {
        let relation = match r.kind {
            EdgeKind::Size => SizeRelation::parse(&r.label).map(Relation::Size),
            EdgeKind::Position => PositionRelation::parse(&r.label).map(Relation::Position),
        }
        .ok_or_else(|| GraphError::BadEdge(format!("label {:?} is not a {:?} relation", r.label, r.kind)))?;
        let edge = Edge {
            source: r.source,
            target: r.target,
            relation,
        };
        edge.check()?;
        Ok(edge)
    }
}

impl Edge {
    pub fn kind(&self) -> EdgeKind {
        self.relation.kind()
    }

    pub fn touches(&self, id: ElementId) -> bool {
        self.source == NodeId::Element(id) || self.target == NodeId::Element(id)
    }

    fn check(&self) -> Result<(), GraphError> {
        if self.source == NodeId::Canvas {
            return Err(GraphError::BadEdge("the canvas is never an edge source".into()));
        }
        if self.source == self.target {
            return Err(GraphError::BadEdge(format!("self loop on {}", self.source)));
        }
        if self.kind() == EdgeKind::Size && self.target == NodeId::Canvas {
            return Err(GraphError::BadEdge("size edges never involve the canvas".into()));
        }
        Ok(())
    }

    /// Re-derive this edge's label on a design. `None` when an endpoint is
    /// missing from the design.
    pub fn classify_on(&self, d: &Design, alpha: f64) -> Option<Relation> {
        let src = d.elements().get(self.source.element()?)?.geom;
        match (self.relation, self.target) {
            (Relation::Size(_), NodeId::Element(t)) => {
                let tgt = d.elements().get(t)?.geom;
                Some(Relation::Size(size_label(src.area() / tgt.area(), alpha)))
            }
            (Relation::Position(_), NodeId::Element(t)) => {
                let tgt = d.elements().get(t)?.geom;
                Some(Relation::Position(classify_position_element(&src, &tgt)))
            }
            (Relation::Position(_), NodeId::Canvas) => {
                Some(Relation::Position(classify_position_canvas(&src, d.canvas())))
            }
            (Relation::Size(_), NodeId::Canvas) => None,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.source, self.relation.label(), self.target)
    }
}

/// Nodes are the design's elements plus the implicit canvas node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph")]
pub struct RelationGraph {
    pub alpha: f64,
    nodes: BTreeSet<ElementId>,
    edges: Vec<Edge>,
}

#[derive(Deserialize)]
struct RawGraph {
    alpha: f64,
    nodes: BTreeSet<ElementId>,
    edges: Vec<Edge>,
}

impl TryFrom<RawGraph> for RelationGraph {
    type Error = GraphError;

    fn try_from(r: RawGraph) -> Result<Self, GraphError> {
        RelationGraph::from_parts(r.alpha, r.nodes, r.edges)
    }
}

impl RelationGraph {
    pub fn from_parts(alpha: f64, nodes: BTreeSet<ElementId>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        check_alpha(alpha)?;
        for e in &edges {
            e.check()?;
            for n in [e.source, e.target] {
                if let NodeId::Element(id) = n {
                    if !nodes.contains(&id) {
                        return Err(GraphError::UnknownNode(id));
                    }
                }
            }
        }
        Ok(Self { alpha, nodes, edges })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn element_nodes(&self) -> &BTreeSet<ElementId> {
        &self.nodes
    }

    pub fn size_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind() == EdgeKind::Size)
    }

    pub fn position_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind() == EdgeKind::Position)
    }

    /// Relabel element ids. Edges whose endpoint maps to `None` are dropped
    /// and counted in the returned total.
    pub fn remap(&self, f: impl Fn(ElementId) -> Option<ElementId>) -> (RelationGraph, usize) {
        let map = |n: NodeId| match n {
            NodeId::Element(id) => f(id).map(NodeId::Element),
            NodeId::Canvas => Some(NodeId::Canvas),
        };
        let mut dropped = 0;
        let edges = self
            .edges
            .iter()
            .filter_map(|e| match (map(e.source), map(e.target)) {
                (Some(source), Some(target)) => Some(Edge {
                    source,
                    target,
                    relation: e.relation,
                }),
                _ => {
                    dropped += 1;
                    None
                }
            })
            .collect();
        let nodes = self.nodes.iter().filter_map(|&id| f(id)).collect();
        (
            RelationGraph {
                alpha: self.alpha,
                nodes,
                edges,
            },
            dropped,
        )
    }

    /// Ids as they read after deleting element `removed` (later ids shift
    /// down). Edges touching `removed` are dropped.
    pub fn after_delete(&self, removed: ElementId) -> (RelationGraph, usize) {
        self.remap(|id| match id.cmp(&removed) {
            std::cmp::Ordering::Less => Some(id),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(id - 1),
        })
    }

    /// Ids as they read after inserting a new element at `inserted`
    /// (ids at or above it shift up). The new id joins the node set.
    pub fn after_insert(&self, inserted: ElementId) -> RelationGraph {
        let (mut g, _) = self.remap(|id| Some(if id >= inserted { id + 1 } else { id }));
        g.nodes.insert(inserted);
        g
    }
}

/// Extract the relation graph of a design.
pub fn build_relation_graph<R: Rng + ?Sized>(d: &Design, alpha: f64, rng: &mut R) -> Result<RelationGraph, GraphError> {
    check_alpha(alpha)?;
    let n = d.len();
    if n == 0 {
        return Err(GraphError::EmptyDesign);
    }
    let geoms: Vec<Geometry> = d.elements().iter().map(|e| e.geom).collect();
    let mut size = Vec::with_capacity(n * (n - 1) / 2);
    let mut position = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let (s, t) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
            size.push(Edge {
                source: NodeId::Element(s),
                target: NodeId::Element(t),
                relation: Relation::Size(classify_size(&geoms[s], &geoms[t], alpha)?),
            });
            let (s, t) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
            position.push(Edge {
                source: NodeId::Element(s),
                target: NodeId::Element(t),
                relation: Relation::Position(classify_position_element(&geoms[s], &geoms[t])),
            });
        }
    }
    let canvas = d.canvas();
    let mut edges = size;
    edges.extend(position);
    edges.extend(geoms.iter().enumerate().map(|(i, g)| Edge {
        source: NodeId::Element(i),
        target: NodeId::Canvas,
        relation: Relation::Position(classify_position_canvas(g, canvas)),
    }));
    Ok(RelationGraph {
        alpha,
        nodes: d.ids().collect(),
        edges,
    })
}

/// Drop every edge touching `target`; the node set is unchanged.
pub fn remove_node_edges(g: &RelationGraph, target: ElementId) -> Result<RelationGraph, GraphError> {
    if !g.nodes.contains(&target) {
        return Err(GraphError::UnknownNode(target));
    }
    Ok(RelationGraph {
        alpha: g.alpha,
        nodes: g.nodes.clone(),
        edges: g.edges.iter().filter(|e| !e.touches(target)).copied().collect(),
    })
}

/// The two relationship blocks, separated by a blank line:
///
/// ```text
/// SIZE RELATIONSHIP: ["element 0 large element 1", ...]
///
/// POSITION RELATIONSHIP: ["element 1 center element 0", "element 2 top canvas", ...]
/// ```
pub fn serialize_graph(g: &RelationGraph) -> String {
    let block = |edges: Vec<String>| jsonfmt::to_spaced_string(&edges);
    format!(
        "SIZE RELATIONSHIP: {}\n\nPOSITION RELATIONSHIP: {}",
        block(g.size_edges().map(Edge::to_string).collect()),
        block(g.position_edges().map(Edge::to_string).collect()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{parse_design, POSTER_DOCUMENT};
    use crate::seeded_rng;

    fn g(cx: f64, cy: f64, w: f64, h: f64) -> Geometry {
        Geometry::new(cx, cy, w, h)
    }

    #[test]
    fn size_examples() {
        // 940*806 / (873*721) = 1.2037 and 443*418 / (873*721) = 0.2942
        assert_eq!(classify_size(&g(0., 0., 940., 806.), &g(0., 0., 873., 721.), 0.1), Ok(SizeRelation::Large));
        assert_eq!(classify_size(&g(0., 0., 443., 418.), &g(0., 0., 873., 721.), 0.1), Ok(SizeRelation::Small));
        assert_eq!(classify_size(&g(1., 2., 30., 40.), &g(1., 2., 30., 40.), 0.1), Ok(SizeRelation::Equal));
    }

    #[test]
    fn size_thresholds_are_inclusive_for_equal() {
        // AR exactly 1 - alpha and 1 + alpha stay equal.
        assert_eq!(size_label(0.9, 0.1), SizeRelation::Equal);
        assert_eq!(size_label(1.1, 0.1), SizeRelation::Equal);
        assert_eq!(size_label(0.8999, 0.1), SizeRelation::Small);
        assert_eq!(size_label(1.1001, 0.1), SizeRelation::Large);
    }

    #[test]
    fn size_rejects_degenerate_inputs() {
        assert!(matches!(
            classify_size(&g(0., 0., 0., 5.), &g(0., 0., 1., 1.), 0.1),
            Err(GraphError::DegenerateArea { .. })
        ));
        assert_eq!(
            classify_size(&g(0., 0., 1., 1.), &g(0., 0., 1., 1.), 1.5),
            Err(GraphError::BadAlpha(1.5))
        );
    }

    #[test]
    fn position_examples() {
        assert_eq!(
            classify_position_element(&g(470., 394., 873., 721.), &g(470., 394., 940., 806.)),
            PositionRelation::Center
        );
        assert_eq!(
            classify_position_element(&g(10., 10., 4., 4.), &g(150., 150., 100., 100.)),
            PositionRelation::TopLeft
        );
        let canvas = Canvas::new(940, 788);
        assert_eq!(classify_position_canvas(&g(598., 147., 443., 418.), canvas), PositionRelation::Top);
        assert_eq!(classify_position_canvas(&g(470., 394., 10., 10.), canvas), PositionRelation::Center);
        assert_eq!(classify_position_canvas(&g(900., 700., 10., 10.), canvas), PositionRelation::BottomRight);
        assert_eq!(classify_position_canvas(&g(-50., 2000., 10., 10.), canvas), PositionRelation::BottomLeft);
    }

    #[test]
    fn boundaries_are_half_open() {
        let target = g(150., 150., 100., 100.); // bbox 100..200
        assert_eq!(classify_position_element(&g(100., 100., 1., 1.), &target), PositionRelation::Center);
        assert_eq!(classify_position_element(&g(200., 150., 1., 1.), &target), PositionRelation::Right);
        assert_eq!(classify_position_element(&g(150., 200., 1., 1.), &target), PositionRelation::Bottom);
    }

    #[test]
    fn poster_graph_has_expected_relations() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let graph = build_relation_graph(&d, 0.1, &mut seeded_rng(7)).unwrap();
        assert_eq!(graph.edges().len(), 16);
        let text = serialize_graph(&graph);
        let either = |a: &str, b: &str| text.contains(a) || text.contains(b);
        assert!(either("element 0 large element 1", "element 1 small element 0"), "{text}");
        assert!(either("element 2 small element 1", "element 1 large element 2"), "{text}");
        assert!(text.contains("element 2 top canvas"), "{text}");
    }

    #[test]
    fn single_element_graph() {
        let d = parse_design(
            r#"{"canvas": {"width": 100, "height": 100}, "elements": [
                {"modality": "image", "x": 50, "y": 50, "width": 10, "height": 10}]}"#,
        )
        .unwrap();
        let graph = build_relation_graph(&d, 0.1, &mut seeded_rng(0)).unwrap();
        assert_eq!(graph.edges().len(), 1);
        assert_eq!(serialize_graph(&graph), "SIZE RELATIONSHIP: []\n\nPOSITION RELATIONSHIP: [\"element 0 center canvas\"]");
    }

    #[test]
    fn empty_design_is_rejected() {
        let d = Design::new(Canvas::new(10, 10), vec![]).unwrap();
        assert_eq!(build_relation_graph(&d, 0.1, &mut seeded_rng(0)), Err(GraphError::EmptyDesign));
    }

    #[test]
    fn pruning_removes_incident_edges_only() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let graph = build_relation_graph(&d, 0.1, &mut seeded_rng(3)).unwrap();
        let pruned = remove_node_edges(&graph, 3).unwrap();
        assert!(pruned.edges().iter().all(|e| !e.touches(3)));
        // 3 size + 3 position among {0,1,2} + 3 canvas edges
        assert_eq!(pruned.edges().len(), 9);
        assert!(!serialize_graph(&pruned).contains("element 3"));
        assert_eq!(pruned.element_nodes(), graph.element_nodes());
        assert_eq!(remove_node_edges(&pruned, 3).unwrap(), pruned);
        assert_eq!(remove_node_edges(&graph, 9), Err(GraphError::UnknownNode(9)));
    }

    #[test]
    fn empty_edge_list_serializes_empty_blocks() {
        let graph = RelationGraph::from_parts(0.1, BTreeSet::from([0]), vec![]).unwrap();
        assert_eq!(serialize_graph(&graph), "SIZE RELATIONSHIP: []\n\nPOSITION RELATIONSHIP: []");
    }

    #[test]
    fn dump_round_trips_and_rejects_canvas_sources() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let graph = build_relation_graph(&d, 0.1, &mut seeded_rng(11)).unwrap();
        let json = serde_json::to_string(&graph).unwrap();
        assert!(json.contains(r#""target":"canvas""#));
        let back: RelationGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, graph);
        let bad = r#"{"alpha": 0.1, "nodes": [0], "edges": [{"source": "canvas", "target": 0, "kind": "position", "label": "top"}]}"#;
        assert!(serde_json::from_str::<RelationGraph>(bad).is_err());
        let bad = r#"{"alpha": 0.1, "nodes": [0], "edges": [{"source": 0, "target": "canvas", "kind": "size", "label": "small"}]}"#;
        assert!(serde_json::from_str::<RelationGraph>(bad).is_err());
    }

    #[test]
    fn delete_and_insert_remapping() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let graph = build_relation_graph(&d, 0.1, &mut seeded_rng(5)).unwrap();
        let (after, dropped) = graph.after_delete(1);
        assert_eq!(dropped, 3 + 1 + 3);
        assert_eq!(after.element_nodes(), &BTreeSet::from([0, 1, 2]));
        let shifted = after.after_insert(1);
        assert_eq!(shifted.element_nodes(), &BTreeSet::from([0, 1, 2, 3]));
        assert!(shifted.edges().iter().all(|e| !e.touches(1)));
    }
}
