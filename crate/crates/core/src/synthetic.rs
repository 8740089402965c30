//! Seeded random designs for tests, demos and benchmarks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{Canvas, Design, Element, Geometry, TextAlign, TextAttrs};

const WORDS: &[&str] = &[
    "SUMMER", "SALE", "OPEN", "HOUSE", "FRESH", "COFFEE", "JOIN", "US", "TODAY", "NEW", "ARRIVALS", "BIG",
    "DEALS", "LIVE", "MUSIC", "FREE", "ENTRY",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub min_elements: usize,
    pub max_elements: usize,
    /// Chance of a full-canvas backdrop as element 0.
    pub background_prob: f64,
    pub text_prob: f64,
    pub canvas_sizes: Vec<(u32, u32)>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            min_elements: 2,
            max_elements: 12,
            background_prob: 0.5,
            text_prob: 0.4,
            canvas_sizes: vec![(940, 788), (1080, 1080), (1200, 628), (800, 1200), (1920, 1080)],
        }
    }
}

/// Draw one design with coordinates rounded to whole pixels.
pub fn random_design<R: Rng + ?Sized>(cfg: &SyntheticConfig, rng: &mut R) -> Design {
    let (w, h) = cfg.canvas_sizes[rng.gen_range(0..cfg.canvas_sizes.len())];
    let canvas = Canvas::new(w, h);
    let n = rng.gen_range(cfg.min_elements.max(1)..=cfg.max_elements.max(cfg.min_elements.max(1)));
    let (wf, hf) = (w as f64, h as f64);
    let mut elements = Vec::with_capacity(n);
    if rng.gen_bool(cfg.background_prob.clamp(0.0, 1.0)) {
        elements.push(Element::image(
            Some("background.png"),
            Geometry::new((wf / 2.0).round(), (hf / 2.0).round(), wf, hf),
        ));
    }
    while elements.len() < n {
        let ew = (wf * rng.gen_range(0.08..0.6)).round().max(1.0);
        let eh = (hf * rng.gen_range(0.06..0.5)).round().max(1.0);
        let cx = rng.gen_range(ew / 2.0..=wf - ew / 2.0).round();
        let cy = rng.gen_range(eh / 2.0..=hf - eh / 2.0).round();
        let geom = Geometry::new(cx, cy, ew, eh);
        let e = if rng.gen_bool(cfg.text_prob.clamp(0.0, 1.0)) {
            let words = rng.gen_range(1..=3);
            let text: Vec<&str> = (0..words).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
            let align = [TextAlign::Left, TextAlign::Center, TextAlign::Right][rng.gen_range(0..3)];
            Element::text(
                &text.join(" "),
                geom,
                TextAttrs {
                    angle: 0.0,
                    font_size: (eh / 3.0).round().max(8.0),
                    text_align: align,
                },
            )
        } else {
            Element::image(Some(&format!("asset_{}.png", elements.len())), geom)
        };
        elements.push(e);
    }
    Design::new(canvas, elements).expect("generated geometry is valid")
}
