//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "layoutedit.h"

static const char *DOC =
  "{\"canvas\": {\"width\": 400, \"height\": 300}, \"elements\": ["
  "{\"index\": 0, \"modality\": \"image\", \"x\": 200, \"y\": 150, \"width\": 400, \"height\": 300},"
  "{\"index\": 1, \"modality\": \"text\", \"content\": \"Hi\", \"x\": 100, \"y\": 60, \"width\": 120, \"height\": 40,"
  " \"angle\": 0, \"font_size\": 24, \"text_align\": \"left\"}]}";

int main(void) {
  LeDesign *d = NULL;
  if (le_design_parse(DOC, &d) != LE_STATUS_OK) { fprintf(stderr, "parse: %s\n", le_last_error_message()); return 1; }
  LeGraph *g = NULL, *p = NULL;
  if (le_graph_build(d, 0.1, 7, &g) != LE_STATUS_OK) return 2;
  if (le_graph_remove_node(g, 1, &p) != LE_STATUS_OK) return 3;
  LeDesign *e = NULL;
  if (le_edit_solve(d, p, "move element 1 to {\"x\": 300, \"y\": 240}", NULL, 0, &e) != LE_STATUS_OK) {
    fprintf(stderr, "solve: %s\n", le_last_error_message());
    return 4;
  }
  LeGeometry geom;
  if (le_design_element_geometry(e, 1, &geom) != LE_STATUS_OK) return 5;
  if (geom.x != 300.0 || geom.y != 240.0) return 6;
  char *json = NULL;
  if (le_design_to_json(e, &json) != LE_STATUS_OK) return 7;
  if (strstr(json, "\"Hi\"") == NULL) return 8;
  le_string_free(json);
  if (le_design_parse("{", &d) != LE_STATUS_PARSE_ERROR) return 9;
  if (le_last_error_message() == NULL) return 10;
  le_design_free(e);
  le_graph_free(p);
  le_graph_free(g);
  le_design_free(d);
  printf("ok %s\n", le_version());
  return 0;
}
"#;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn header_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(header_dir().join("layoutedit.h")).unwrap();
    for name in [
        "le_design_parse",
        "le_design_free",
        "le_design_to_json",
        "le_design_content_sequence",
        "le_design_element_count",
        "le_design_element_geometry",
        "le_graph_build",
        "le_graph_remove_node",
        "le_graph_serialize",
        "le_graph_edge_count",
        "le_graph_free",
        "le_operation_canonicalize",
        "le_edit_solve",
        "le_metrics_overlap",
        "le_metrics_alignment",
        "le_relation_satisfaction",
        "le_last_error_message",
        "le_string_free",
        "le_version",
        "typedef struct LeDesign LeDesign",
        "typedef struct LeGraph LeGraph",
        "LE_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("liblayoutedit_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("smoke.c");
    let bin = work.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header_dir())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "compiling the C smoke program failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "smoke program exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
