//! Reconstruction training samples and line-delimited corpora.
//!
//! A sample pairs the model input (canvas size, content sequence, pruned
//! relation graph, operation) with the expected attribute list. Corpora are
//! written one JSON record per line: `{"input": ..., "output": ..., "meta": ...}`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{parse_design, serialize_canvas, serialize_content_sequence, Design, DesignError, Element};
use crate::graph::{serialize_graph, RelationGraph, DEFAULT_ALPHA};
use crate::jsonfmt::to_spaced_string;
use crate::ops::{synthesize, Action, EditOperation, OpError, PreparedEdit, Setting};
use crate::{derive_seed, seeded_rng};

/// Designs handed to the parallel stage at once.
const CHUNK: usize = 256;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("design {id}: {count} elements exceeds the limit of {max}")]
    TooManyElements { id: String, count: usize, max: usize },
    #[error("design {id}: {source}")]
    Synthesis {
        id: String,
        #[source]
        source: OpError,
    },
    #[error("design {id}: {source}")]
    Design {
        id: String,
        #[source]
        source: DesignError,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("bad corpus config: {0}")]
    Config(String),
}

impl DatagenError {
    fn io(context: impl Into<String>, source: io::Error) -> Self {
        DatagenError::Io {
            context: context.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub alpha: f64,
    pub max_elements: usize,
    pub samples_per_design: usize,
    pub seed: u64,
    pub setting: Setting,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            alpha: DEFAULT_ALPHA,
            max_elements: 25,
            samples_per_design: 2,
            seed: 0,
            setting: Setting::Reconstruction,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.max_elements < 1 {
            return Err(DatagenError::Config("max_elements must be >= 1".into()));
        }
        if self.samples_per_design < 1 {
            return Err(DatagenError::Config("samples_per_design must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DatagenError::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub design_id: String,
    pub draw: usize,
    pub setting: Setting,
    pub action: Action,
    pub target: usize,
    pub seed: u64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadrSample {
    #[serde(rename = "input")]
    pub input_text: String,
    /// Expected attribute list; absent for generalization draws.
    #[serde(rename = "output")]
    pub output_text: Option<String>,
    pub meta: SampleMeta,
}

/// The model input: canvas, content sequence, graph blocks and operation,
/// separated by blank lines. `prompt_design` already holds any added element.
pub fn render_input(prompt_design: &Design, graph: &RelationGraph, op: &EditOperation) -> String {
    format!(
        "{}\n\n{}\n\n{}\n\nEDITING OPERATION: {}",
        serialize_canvas(prompt_design.canvas()),
        serialize_content_sequence(prompt_design),
        serialize_graph(graph),
        op
    )
}

/// Same as [`render_input`] for a prepared edit.
pub fn render_prepared_input(edit: &PreparedEdit) -> Result<String, OpError> {
    Ok(render_input(&edit.prompt_design()?, &edit.pruned_graph, &edit.operation))
}

#[derive(Serialize)]
struct AttributeRecord<'a> {
    index: usize,
    x: i64,
    y: i64,
    width: i64,
    height: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    angle: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    font_size: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text_align: Option<&'a str>,
}

fn round(v: f64) -> i64 {
    v.round() as i64
}

/// Attribute list with integer values, one record per line.
pub fn render_attributes(d: &Design) -> String {
    let records: Vec<String> = d
        .elements()
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let g = e.geom;
            to_spaced_string(&AttributeRecord {
                index,
                x: round(g.cx),
                y: round(g.cy),
                width: round(g.w),
                height: round(g.h),
                angle: e.text.map(|t| round(t.angle)),
                font_size: e.text.map(|t| round(t.font_size)),
                text_align: e.text.map(|t| t.text_align.as_str()),
            })
        })
        .collect();
    format!("[\n{}\n]", records.join(",\n"))
}

/// Build the sample for draw `seed` on design `d`.
pub fn build_radr_sample(
    id: &str,
    draw: usize,
    d: &Design,
    cfg: &CorpusConfig,
    donors: &[Element],
    seed: u64,
) -> Result<RadrSample, DatagenError> {
    if d.len() > cfg.max_elements {
        return Err(DatagenError::TooManyElements {
            id: id.to_owned(),
            count: d.len(),
            max: cfg.max_elements,
        });
    }
    let synth_err = |source| DatagenError::Synthesis {
        id: id.to_owned(),
        source,
    };
    let mut rng = seeded_rng(seed);
    let edit = synthesize(cfg.setting, d, donors, cfg.alpha, None, &mut rng).map_err(synth_err)?;
    let input_text = render_prepared_input(&edit).map_err(synth_err)?;
    Ok(RadrSample {
        input_text,
        output_text: edit.ground_truth.as_ref().map(render_attributes),
        meta: SampleMeta {
            design_id: id.to_owned(),
            draw,
            setting: cfg.setting,
            action: edit.operation.action(),
            target: edit.operation.target(),
            seed,
            alpha: cfg.alpha,
        },
    })
}

/// Keep designs with at most `max_elements` elements, in order.
pub fn filter_corpus<T: AsRef<Design>>(designs: Vec<T>, max_elements: usize) -> Vec<T> {
    designs.into_iter().filter(|d| d.as_ref().len() <= max_elements).collect()
}

impl AsRef<Design> for Design {
    fn as_ref(&self) -> &Design {
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub designs: usize,
    pub filtered: usize,
    pub records: usize,
    pub per_action: BTreeMap<Action, usize>,
    /// Element count of each emitted design.
    pub element_histogram: BTreeMap<usize, usize>,
}

/// Donor elements: every element of the given designs except full-canvas
/// backdrops.
pub fn donor_pool<'a>(designs: impl IntoIterator<Item = &'a Design>) -> Vec<Element> {
    designs
        .into_iter()
        .flat_map(|d| d.ids().filter(|&i| !d.is_background(i)).map(|i| d.elements()[i].clone()))
        .collect()
}

/// Emit one record per (design, draw) to `out`, in input order. Designs over
/// the element limit are skipped and counted. Work runs in parallel per
/// chunk; the merge is by sequence number so the bytes do not depend on
/// thread count.
pub fn emit_corpus<I, W>(designs: I, cfg: &CorpusConfig, donors: &[Element], out: &mut W) -> Result<CorpusStats, DatagenError>
where
    I: IntoIterator<Item = Result<(String, Design), DatagenError>>,
    W: Write,
{
    cfg.validate()?;
    let mut stats = CorpusStats::default();
    let mut iter = designs.into_iter();
    let mut seq = 0u64;
    loop {
        let mut chunk = Vec::with_capacity(CHUNK);
        for item in iter.by_ref().take(CHUNK) {
            chunk.push((seq, item?));
            seq += 1;
        }
        if chunk.is_empty() {
            break;
        }
        let results: Vec<Result<Option<Vec<RadrSample>>, DatagenError>> = chunk
            .par_iter()
            .map(|(seq, (id, d))| {
                if d.len() > cfg.max_elements {
                    return Ok(None);
                }
                (0..cfg.samples_per_design)
                    .map(|draw| build_radr_sample(id, draw, d, cfg, donors, derive_seed(cfg.seed, &[*seq, draw as u64])))
                    .collect::<Result<Vec<_>, _>>()
                    .map(Some)
            })
            .collect();
        for ((_, (id, d)), res) in chunk.iter().zip(results) {
            stats.designs += 1;
            let Some(samples) = res? else {
                stats.filtered += 1;
                continue;
            };
            *stats.element_histogram.entry(d.len()).or_default() += 1;
            for s in samples {
                let line = serde_json::to_string(&s).expect("sample serialization cannot fail");
                writeln!(out, "{line}").map_err(|e| DatagenError::io(format!("writing records of design {id}"), e))?;
                stats.records += 1;
                *stats.per_action.entry(s.meta.action).or_default() += 1;
            }
        }
    }
    Ok(stats)
}

/// Design files in a directory (`*.json`, sorted by name, id = file stem) or
/// a line-delimited file of design documents (id = line number).
pub fn read_designs(path: &Path) -> Result<Vec<(String, Design)>, DatagenError> {
    let meta = fs::metadata(path).map_err(|e| DatagenError::io(path.display().to_string(), e))?;
    if meta.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| DatagenError::io(path.display().to_string(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| {
                let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let raw = fs::read_to_string(&p).map_err(|e| DatagenError::io(p.display().to_string(), e))?;
                let d = parse_design(&raw).map_err(|source| DatagenError::Design { id: id.clone(), source })?;
                Ok((id, d))
            })
            .collect()
    } else {
        let file = fs::File::open(path).map_err(|e| DatagenError::io(path.display().to_string(), e))?;
        let mut out = Vec::new();
        for (n, line) in io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| DatagenError::io(format!("{}:{}", path.display(), n + 1), e))?;
            if line.trim().is_empty() {
                continue;
            }
            let id = format!("{}", n + 1);
            let d = parse_design(&line).map_err(|source| DatagenError::Design { id: id.clone(), source })?;
            out.push((id, d));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::POSTER_DOCUMENT;
    use crate::graph::{build_relation_graph, remove_node_edges};

    const POSTER_OUTPUT: &str = "[\n{\"index\": 0, \"x\": 470, \"y\": 394, \"width\": 940, \"height\": 806},\n{\"index\": 1, \"x\": 470, \"y\": 394, \"width\": 873, \"height\": 721},\n{\"index\": 2, \"x\": 598, \"y\": 147, \"width\": 443, \"height\": 418},\n{\"index\": 3, \"x\": 583, \"y\": 394, \"width\": 441, \"height\": 336, \"angle\": 0, \"font_size\": 70, \"text_align\": \"left\"}\n]";

    #[test]
    fn poster_output_block() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        assert_eq!(render_attributes(&d), POSTER_OUTPUT);
    }

    #[test]
    fn poster_input_blocks() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let g = build_relation_graph(&d, 0.1, &mut seeded_rng(0)).unwrap();
        let g = remove_node_edges(&g, 3).unwrap();
        let op = EditOperation::Move { target: 3, x: 583, y: 394 };
        let text = render_input(&d, &g, &op);
        assert!(text.starts_with(
            "CANVAS SIZE: {\"width\": 940, \"height\": 788}\n\nELEMENT CONTENT: [{\"index\": 0, \"content\": \"<image>\"}, "
        ));
        assert!(text.contains("\n\nSIZE RELATIONSHIP: ["));
        assert!(text.contains("]\n\nPOSITION RELATIONSHIP: ["));
        assert!(text.ends_with("\n\nEDITING OPERATION: move element 3 to {\"x\": 583, \"y\": 394}"));
        assert!(text.contains("\"element 2 top canvas\""));
    }

    #[test]
    fn single_element_sample_has_one_record() {
        let d = parse_design(
            r#"{"canvas": {"width": 100, "height": 100}, "elements": [{"modality": "image", "x": 50, "y": 50, "width": 10, "height": 10}]}"#,
        )
        .unwrap();
        let cfg = CorpusConfig::default();
        for seed in 0..20 {
            let s = build_radr_sample("one", 0, &d, &cfg, &donor_pool([&d]), seed).unwrap();
            if matches!(s.meta.action, Action::Move | Action::Resize) {
                let out = s.output_text.unwrap();
                assert_eq!(out.matches("\"index\"").count(), 1, "{out}");
            }
        }
    }

    #[test]
    fn add_target_attributes_do_not_leak() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let cfg = CorpusConfig::default();
        let mut seen_add = false;
        for seed in 0..40 {
            let s = build_radr_sample("a", 0, &d, &cfg, &donor_pool([&d]), seed).unwrap();
            if s.meta.action == Action::Add {
                seen_add = true;
                let t = s.meta.target;
                assert!(!s.input_text.contains(&format!("\"element {t} ")), "{}", s.input_text);
                assert!(!s.input_text.contains(&format!(" element {t}\"")), "{}", s.input_text);
            }
        }
        assert!(seen_add);
    }

    #[test]
    fn limit_is_inclusive() {
        let d = parse_design(POSTER_DOCUMENT).unwrap();
        let cfg = CorpusConfig {
            max_elements: 4,
            ..CorpusConfig::default()
        };
        assert!(build_radr_sample("x", 0, &d, &cfg, &donor_pool([&d]), 1).is_ok());
        let tight = CorpusConfig {
            max_elements: 3,
            ..CorpusConfig::default()
        };
        assert!(matches!(
            build_radr_sample("x", 0, &d, &tight, &[], 1),
            Err(DatagenError::TooManyElements { count: 4, max: 3, .. })
        ));
        assert_eq!(filter_corpus(vec![d.clone(), d.clone()], 4).len(), 2);
        assert!(filter_corpus(vec![d], 3).is_empty());
    }

    #[test]
    fn empty_stream_gives_empty_output() {
        let mut out = Vec::new();
        let stats = emit_corpus(Vec::new(), &CorpusConfig::default(), &[], &mut out).unwrap();
        assert!(out.is_empty());
        assert_eq!(stats, CorpusStats::default());
    }

    #[test]
    fn emission_is_deterministic_and_counted() {
        let cfg = crate::synthetic::SyntheticConfig::default();
        let designs: Vec<(String, Design)> = (0..30)
            .map(|i| (format!("d{i}"), crate::synthetic::random_design(&cfg, &mut seeded_rng(i))))
            .collect();
        let donors = donor_pool(designs.iter().map(|(_, d)| d));
        let corpus = CorpusConfig {
            seed: 9,
            ..CorpusConfig::default()
        };
        let run = || {
            let mut out = Vec::new();
            let stats = emit_corpus(designs.iter().cloned().map(Ok), &corpus, &donors, &mut out).unwrap();
            (out, stats)
        };
        let (a, sa) = run();
        let (b, _) = run();
        assert_eq!(a, b);
        assert_eq!(sa.records, 60);
        assert_eq!(sa.per_action.values().sum::<usize>(), 60);
        assert_eq!(String::from_utf8(a).unwrap().lines().count(), 60);
    }
}
