//! Design documents: canvas, layered elements, ingestion and canonical
//! emission.
//!
//! The on-disk form is JSON:
//!
//! ```json
//! {
//!   "canvas": {"height": 788, "width": 940},
//!   "elements": [
//!     {"asset": "bg.png", "height": 806, "index": 0, "modality": "image", "width": 940, "x": 470, "y": 394},
//!     {"angle": 0, "content": "HELLO", "font_size": 70, "height": 336, "index": 1,
//!      "modality": "text", "text_align": "left", "width": 441, "x": 583, "y": 394}
//!   ]
//! }
//! ```
//!
//! Coordinates are pixels with the origin at the top-left and y growing
//! downward; `x`/`y` are the element center. List order is layer order
//! (index 0 at the bottom). Element ids are always list positions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::jsonfmt;

pub type ElementId = usize;

/// Placeholder token standing in for image pixels in content sequences.
pub const IMAGE_TOKEN: &str = "<image>";

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("parse error at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid design: {}", format_problems(.0))]
    Validation(Vec<Problem>),
    #[error("element {0} does not exist")]
    UnknownElement(ElementId),
}

/// One invariant violation found while validating a design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Problem {
    /// Field path such as `elements[2].width`.
    pub path: String,
    /// Element position in the input list, when the problem is element-local.
    pub element: Option<usize>,
    pub message: String,
}

fn format_problems(problems: &[Problem]) -> String {
    problems
        .iter()
        .map(|p| format!("{}: {}", p.path, p.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl DesignError {
    /// Field path of the first offending location, for API error bodies.
    pub fn path(&self) -> Option<String> {
        match self {
            DesignError::Parse { path, .. } => Some(path.clone()),
            DesignError::Validation(p) => p.first().map(|p| p.path.clone()),
            DesignError::UnknownElement(id) => Some(format!("elements[{id}]")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Canvas {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn w(&self) -> f64 {
        self.width as f64
    }

    pub fn h(&self) -> f64 {
        self.height as f64
    }

    pub fn diagonal(&self) -> f64 {
        self.w().hypot(self.h())
    }

    pub fn area(&self) -> f64 {
        self.w() * self.h()
    }

    pub fn rect(&self) -> Rect {
        Rect {
            left: 0.0,
            top: 0.0,
            right: self.w(),
            bottom: self.h(),
        }
    }
}

/// Center-based geometry of an element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Geometry {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { cx, cy, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn bbox(&self) -> Rect {
        bounding_box(self)
    }

    fn is_valid(&self) -> bool {
        self.cx.is_finite() && self.cy.is_finite() && self.w.is_finite() && self.h.is_finite() && self.w > 0.0 && self.h > 0.0
    }
}

/// Axis-aligned box in canvas pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.left + self.right) / 2.0, (self.top + self.bottom) / 2.0)
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let w = self.right.min(other.right) - self.left.max(other.left);
        let h = self.bottom.min(other.bottom) - self.top.max(other.top);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

pub fn bounding_box(g: &Geometry) -> Rect {
    Rect {
        left: g.cx - g.w / 2.0,
        top: g.cy - g.h / 2.0,
        right: g.cx + g.w / 2.0,
        bottom: g.cy + g.h / 2.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextAlign {
    Left,
    Center,
    Right,
}

impl TextAlign {
    pub fn as_str(self) -> &'static str {
        match self {
            TextAlign::Left => "left",
            TextAlign::Center => "center",
            TextAlign::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "left" => Some(TextAlign::Left),
            "center" => Some(TextAlign::Center),
            "right" => Some(TextAlign::Right),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextAttrs {
    pub angle: f64,
    pub font_size: f64,
    pub text_align: TextAlign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Image,
    Text,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Image => "image",
            Modality::Text => "text",
        }
    }
}

/// What an element shows. Image assets are opaque references; `None`
/// marks a placeholder (also used for vector shapes, masks and other kinds
/// that are ingested as images).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "modality", rename_all = "lowercase")]
pub enum Content {
    Image { asset: Option<String> },
    Text { text: String },
}

impl Content {
    pub fn modality(&self) -> Modality {
        match self {
            Content::Image { .. } => Modality::Image,
            Content::Text { .. } => Modality::Text,
        }
    }

    pub fn placeholder() -> Self {
        Content::Image { asset: None }
    }

    /// Rendering inside the content sequence block.
    pub fn sequence_token(&self) -> &str {
        match self {
            Content::Image { .. } => IMAGE_TOKEN,
            Content::Text { text } => text,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub content: Content,
    pub geom: Geometry,
    /// Present exactly when the content is text.
    pub text: Option<TextAttrs>,
}

impl Element {
    pub fn image(asset: Option<&str>, geom: Geometry) -> Self {
        Self {
            content: Content::Image {
                asset: asset.map(str::to_owned),
            },
            geom,
            text: None,
        }
    }

    pub fn text(text: &str, geom: Geometry, attrs: TextAttrs) -> Self {
        Self {
            content: Content::Text { text: text.to_owned() },
            geom,
            text: Some(attrs),
        }
    }

    pub fn modality(&self) -> Modality {
        self.content.modality()
    }

    pub fn bbox(&self) -> Rect {
        self.geom.bbox()
    }

    fn problems(&self, pos: usize, out: &mut Vec<Problem>) {
        let mut push = |field: &str, message: String| {
            out.push(Problem {
                path: if field.is_empty() {
                    format!("elements[{pos}]")
                } else {
                    format!("elements[{pos}].{field}")
                },
                element: Some(pos),
                message,
            })
        };
        let g = &self.geom;
        for (name, v) in [("x", g.cx), ("y", g.cy), ("width", g.w), ("height", g.h)] {
            if !v.is_finite() {
                push(name, format!("must be finite, got {v}"));
            }
        }
        if !(g.w > 0.0) {
            push("width", format!("must be > 0, got {}", g.w));
        }
        if !(g.h > 0.0) {
            push("height", format!("must be > 0, got {}", g.h));
        }
        match (&self.content, &self.text) {
            (Content::Text { text }, Some(attrs)) => {
                if text.is_empty() {
                    push("content", "text content must be non-empty".into());
                }
                if !(attrs.font_size > 0.0) || !attrs.font_size.is_finite() {
                    push("font_size", format!("must be > 0, got {}", attrs.font_size));
                }
                if !attrs.angle.is_finite() {
                    push("angle", format!("must be finite, got {}", attrs.angle));
                }
            }
            (Content::Text { .. }, None) => push("", "text element is missing text attributes".into()),
            (Content::Image { .. }, Some(_)) => push("", "image element must not carry text attributes".into()),
            (Content::Image { asset: Some(a) }, None) if a.is_empty() => {
                push("asset", "asset reference must be non-empty (omit it for a placeholder)".into())
            }
            (Content::Image { .. }, None) => {}
        }
    }
}

/// A canvas with an ordered stack of elements. Element ids are positions in
/// the stack; the canvas never changes under editing.
///
/// Serializes to (and deserializes from) the design document format.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    canvas: Canvas,
    elements: Vec<Element>,
}

impl Design {
    pub fn new(canvas: Canvas, elements: Vec<Element>) -> Result<Self, DesignError> {
        let mut problems = Vec::new();
        if canvas.width < 1 {
            problems.push(Problem {
                path: "canvas.width".into(),
                element: None,
                message: "must be >= 1".into(),
            });
        }
        if canvas.height < 1 {
            problems.push(Problem {
                path: "canvas.height".into(),
                element: None,
                message: "must be >= 1".into(),
            });
        }
        for (i, e) in elements.iter().enumerate() {
            e.problems(i, &mut problems);
        }
        if problems.is_empty() {
            Ok(Self { canvas, elements })
        } else {
            Err(DesignError::Validation(problems))
        }
    }

    pub fn canvas(&self) -> Canvas {
        self.canvas
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, id: ElementId) -> Result<&Element, DesignError> {
        self.elements.get(id).ok_or(DesignError::UnknownElement(id))
    }

    pub fn geometry(&self, id: ElementId) -> Result<Geometry, DesignError> {
        self.element(id).map(|e| e.geom)
    }

    pub fn ids(&self) -> std::ops::Range<ElementId> {
        0..self.elements.len()
    }

    /// Replace an element's geometry, keeping every invariant.
    pub fn set_geometry(&mut self, id: ElementId, geom: Geometry) -> Result<(), DesignError> {
        if !geom.is_valid() {
            return Err(DesignError::Validation(vec![Problem {
                path: format!("elements[{id}]"),
                element: Some(id),
                message: format!("invalid geometry {geom:?}"),
            }]));
        }
        let e = self.elements.get_mut(id).ok_or(DesignError::UnknownElement(id))?;
        e.geom = geom;
        Ok(())
    }

    pub fn set_font_size(&mut self, id: ElementId, font_size: f64) -> Result<(), DesignError> {
        let e = self.elements.get_mut(id).ok_or(DesignError::UnknownElement(id))?;
        if let Some(t) = e.text.as_mut() {
            if font_size > 0.0 && font_size.is_finite() {
                t.font_size = font_size;
            }
        }
        Ok(())
    }

    /// Insert at layer `id` (`id == len` appends). Later ids shift up by one.
    pub fn insert(&mut self, id: ElementId, element: Element) -> Result<(), DesignError> {
        if id > self.elements.len() {
            return Err(DesignError::UnknownElement(id));
        }
        let mut problems = Vec::new();
        element.problems(id, &mut problems);
        if !problems.is_empty() {
            return Err(DesignError::Validation(problems));
        }
        self.elements.insert(id, element);
        Ok(())
    }

    /// Remove layer `id`; later ids shift down by one.
    pub fn remove(&mut self, id: ElementId) -> Result<Element, DesignError> {
        if id >= self.elements.len() {
            return Err(DesignError::UnknownElement(id));
        }
        Ok(self.elements.remove(id))
    }

    /// Whether an element fills at least 99% of the canvas (a backdrop).
    pub fn is_background(&self, id: ElementId) -> bool {
        let Some(e) = self.elements.get(id) else {
            return false;
        };
        let clipped = e.bbox().intersection_area(&self.canvas.rect());
        clipped >= 0.99 * self.canvas.area()
    }
}

// ---------------------------------------------------------------------------
// Ingestion

#[derive(Deserialize)]
struct RawDocument {
    canvas: RawCanvas,
    elements: Vec<RawElement>,
}

#[derive(Deserialize)]
struct RawCanvas {
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct RawElement {
    index: Option<i64>,
    modality: String,
    content: Option<String>,
    asset: Option<String>,
    x: f64,
    y: f64,
    width: f64,
    height: f64,
    angle: Option<f64>,
    font_size: Option<f64>,
    text_align: Option<String>,
}

/// Parse and validate a design document. Ids are renumbered to list
/// positions; the `index` fields only need to be unique.
pub fn parse_design(raw: &str) -> Result<Design, DesignError> {
    let de = &mut serde_json::Deserializer::from_str(raw);
    let doc: RawDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        DesignError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })?;
    design_from_raw(doc)
}

fn design_from_raw(doc: RawDocument) -> Result<Design, DesignError> {
    let mut problems = Vec::new();
    let mut seen: BTreeMap<i64, usize> = BTreeMap::new();
    let mut elements = Vec::with_capacity(doc.elements.len());
    for (pos, raw) in doc.elements.into_iter().enumerate() {
        if let Some(idx) = raw.index {
            if idx < 0 {
                problems.push(Problem {
                    path: format!("elements[{pos}].index"),
                    element: Some(pos),
                    message: format!("index must be non-negative, got {idx}"),
                });
            } else if let Some(first) = seen.insert(idx, pos) {
                problems.push(Problem {
                    path: format!("elements[{pos}].index"),
                    element: Some(pos),
                    message: format!("duplicate index {idx} (first used by elements[{first}])"),
                });
            }
        }
        match element_from_raw(pos, raw) {
            Ok(e) => {
                e.problems(pos, &mut problems);
                elements.push(e);
            }
            Err(p) => problems.extend(p),
        }
    }
    let canvas = Canvas::new(doc.canvas.width, doc.canvas.height);
    if let Err(DesignError::Validation(more)) = Design::new(canvas, Vec::new()) {
        problems.splice(0..0, more);
    }
    if problems.is_empty() {
        Ok(Design { canvas, elements })
    } else {
        Err(DesignError::Validation(problems))
    }
}

fn element_from_raw(pos: usize, raw: RawElement) -> Result<Element, Vec<Problem>> {
    let geom = Geometry::new(raw.x, raw.y, raw.width, raw.height);
    let problem = |field: &str, message: &str| Problem {
        path: format!("elements[{pos}].{field}"),
        element: Some(pos),
        message: message.to_owned(),
    };
    match raw.modality.as_str() {
        "text" => {
            let mut problems = Vec::new();
            let text = raw.content.unwrap_or_default();
            if raw.asset.is_some() {
                problems.push(problem("asset", "text elements carry `content`, not `asset`"));
            }
            let align = match raw.text_align.as_deref() {
                Some(s) => TextAlign::parse(s).ok_or_else(|| {
                    problem("text_align", &format!("expected one of left, center, right; got {s:?}"))
                }),
                None => Err(problem("text_align", "missing for text element")),
            };
            let font_size = raw
                .font_size
                .ok_or_else(|| problem("font_size", "missing for text element"));
            match (align, font_size) {
                (Ok(text_align), Ok(font_size)) if problems.is_empty() => Ok(Element {
                    content: Content::Text { text },
                    geom,
                    text: Some(TextAttrs {
                        angle: raw.angle.unwrap_or(0.0),
                        font_size,
                        text_align,
                    }),
                }),
                (a, f) => {
                    problems.extend(a.err());
                    problems.extend(f.err());
                    Err(problems)
                }
            }
        }
        other => {
            let mut problems = Vec::new();
            for (field, present) in [
                ("angle", raw.angle.is_some()),
                ("font_size", raw.font_size.is_some()),
                ("text_align", raw.text_align.is_some()),
            ] {
                if present {
                    problems.push(problem(field, "only text elements carry text attributes"));
                }
            }
            if !problems.is_empty() {
                return Err(problems);
            }
            // Shapes, masks and other non-text kinds become placeholders.
            let asset = if other == "image" { raw.asset.or(raw.content) } else { None };
            Ok(Element {
                content: Content::Image { asset },
                geom,
                text: None,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical emission

/// Number that prints without a decimal point when integral.
#[derive(Clone, Copy)]
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.fract() == 0.0 && v.abs() < 9.0e15 {
            s.serialize_i64(v as i64)
        } else {
            s.serialize_f64(v)
        }
    }
}

// Field order is alphabetical: the canonical form has sorted keys.
#[derive(Serialize)]
struct OutDocument<'a> {
    canvas: Canvas2,
    elements: Vec<OutElement<'a>>,
}

#[derive(Serialize)]
struct Canvas2 {
    height: u32,
    width: u32,
}

#[derive(Serialize)]
struct OutElement<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    angle: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    asset: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    content: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    font_size: Option<Num>,
    height: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    modality: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    text_align: Option<&'static str>,
    width: Num,
    x: Num,
    y: Num,
}

fn out_element(e: &Element, index: Option<usize>) -> OutElement<'_> {
    let (asset, content) = match &e.content {
        Content::Image { asset } => (asset.as_deref(), None),
        Content::Text { text } => (None, Some(text.as_str())),
    };
    OutElement {
        angle: e.text.map(|t| Num(t.angle)),
        asset,
        content,
        font_size: e.text.map(|t| Num(t.font_size)),
        height: Num(e.geom.h),
        index,
        modality: e.modality().as_str(),
        text_align: e.text.map(|t| t.text_align.as_str()),
        width: Num(e.geom.w),
        x: Num(e.geom.cx),
        y: Num(e.geom.cy),
    }
}

fn out_document(d: &Design) -> OutDocument<'_> {
    OutDocument {
        canvas: Canvas2 {
            height: d.canvas.height,
            width: d.canvas.width,
        },
        elements: d
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| out_element(e, Some(i)))
            .collect(),
    }
}

/// Canonical document text: sorted keys, two-space indentation, integral
/// numbers without a decimal point, trailing newline.
pub fn emit_design(d: &Design) -> String {
    let mut s = serde_json::to_string_pretty(&out_document(d)).expect("design serialization cannot fail");
    s.push('\n');
    s
}

impl Serialize for Design {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        out_document(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Design {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawDocument::deserialize(d)?;
        design_from_raw(raw).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        out_element(self, None).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawElement::deserialize(d)?;
        let e = element_from_raw(0, raw).map_err(|p| serde::de::Error::custom(format_problems(&p)))?;
        let mut problems = Vec::new();
        e.problems(0, &mut problems);
        if problems.is_empty() {
            Ok(e)
        } else {
            Err(serde::de::Error::custom(format_problems(&problems)))
        }
    }
}

#[derive(Serialize)]
struct ContentEntry<'a> {
    index: usize,
    content: &'a str,
}

/// `ELEMENT CONTENT: [{"index": 0, "content": "<image>"}, ...]`
pub fn serialize_content_sequence(d: &Design) -> String {
    let entries: Vec<_> = d
        .elements
        .iter()
        .enumerate()
        .map(|(index, e)| ContentEntry {
            index,
            content: e.content.sequence_token(),
        })
        .collect();
    format!("ELEMENT CONTENT: {}", jsonfmt::to_spaced_string(&entries))
}

/// `CANVAS SIZE: {"width": 940, "height": 788}`
pub fn serialize_canvas(c: Canvas) -> String {
    format!("CANVAS SIZE: {{\"width\": {}, \"height\": {}}}", c.width, c.height)
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_design(self))
    }
}

#[cfg(test)]
pub(crate) use tests::POSTER as POSTER_DOCUMENT;
