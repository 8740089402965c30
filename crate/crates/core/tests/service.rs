mod common;

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use layoutedit::backend::{CannedClient, ChatClient};
use layoutedit::seeded_rng;
use layoutedit::synthetic::{random_design, SyntheticConfig};

use common::{Server, POSTER, POSTER_REPLY};

async fn send(req: reqwest::RequestBuilder) -> (u16, Value) {
    let resp = req.send().await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.json().await.unwrap_or(Value::Null))
}

struct Fixture {
    _dir: tempfile::TempDir,
    server: Server,
    http: reqwest::Client,
    design: String,
}

impl Fixture {
    async fn new(client: Option<Arc<dyn ChatClient>>) -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let server = Server::start(dir.path(), client).await;
        let http = reqwest::Client::new();
        let (st, body) = send(http.post(server.url("/designs")).body(POSTER)).await;
        assert_eq!(st, 201, "{body}");
        Fixture {
            design: body["id"].as_str().unwrap().to_owned(),
            _dir: dir,
            server,
            http,
        }
    }

    async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        send(self.http.post(self.server.url(path)).json(&body)).await
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        send(self.http.get(self.server.url(path))).await
    }

    async fn session(&self, extra: Value) -> String {
        let mut body = json!({"design_id": self.design});
        body.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
        let (st, s) = self.post("/sessions", body).await;
        assert_eq!(st, 201, "{s}");
        s["id"].as_str().unwrap().to_owned()
    }
}

fn move_op(target: usize, x: i64, y: i64) -> String {
    format!(r#"move element {target} to {{"x": {x}, "y": {y}}}"#)
}

#[tokio::test]
async fn design_endpoints_report_structured_errors() {
    let f = Fixture::new(None).await;
    let (st, again) = send(f.http.post(f.server.url("/designs")).body(POSTER)).await;
    assert_eq!(st, 201);
    assert_eq!(again["id"], json!(f.design), "content-addressed ids");

    let (st, d) = f.get(&format!("/designs/{}", f.design)).await;
    assert_eq!(st, 200);
    assert_eq!(d["elements"][3]["content"], json!("STOP DREAMING START DOING"));

    let bad = POSTER.replace("\"width\": 443", "\"width\": 0");
    let (st, err) = send(f.http.post(f.server.url("/designs")).body(bad)).await;
    assert_eq!(st, 422);
    assert_eq!(err["code"], json!("validation_error"));
    assert_eq!(err["path"], json!("elements[2].width"));

    let (st, err) = send(f.http.post(f.server.url("/designs")).body("{\"canvas\": ")).await;
    assert_eq!(st, 400);
    assert_eq!(err["code"], json!("parse_error"));

    let (st, err) = f.get("/designs/0123456789abcdef0123456789abcdef").await;
    assert_eq!(st, 404);
    assert_eq!(err["code"], json!("not_found"));
    let (st, _) = f.get("/designs/..%2F..%2Fetc").await;
    assert_eq!(st, 404);
}

#[tokio::test]
async fn graph_endpoint_serializes_relations() {
    let f = Fixture::new(None).await;
    let (st, g) = f.post(&format!("/designs/{}/graph?alpha=0.1&seed=5", f.design), Value::Null).await;
    assert_eq!(st, 200);
    let text = g["text"].as_str().unwrap();
    assert!(text.contains("\"element 0 large element 1\""), "{text}");
    assert!(text.contains("\"element 2 top canvas\""), "{text}");
    assert_eq!(g["graph"]["edges"].as_array().unwrap().len(), 16);

    let (st, err) = f.post(&format!("/designs/{}/graph?alpha=1.5", f.design), Value::Null).await;
    assert_eq!(st, 422);
    assert_eq!(err["path"], json!("alpha"));
}

#[tokio::test]
async fn cursor_arithmetic_and_boundaries() {
    let f = Fixture::new(None).await;
    let id = f.session(json!({})).await;
    let (st, err) = f.post(&format!("/sessions/{id}/undo"), Value::Null).await;
    assert_eq!(st, 409);
    assert_eq!(err["code"], json!("history_boundary"));

    for k in 0..3 {
        let (st, r) = f.post(&format!("/sessions/{id}/edits"), json!({"op": move_op(3, 400 + k, 300)})).await;
        assert_eq!(st, 200, "{r}");
        assert_eq!(r["session"]["cursor"], json!(k + 1));
    }
    f.post(&format!("/sessions/{id}/undo"), Value::Null).await;
    let (_, s) = f.post(&format!("/sessions/{id}/undo"), Value::Null).await;
    assert_eq!(s["cursor"], json!(1));
    assert_eq!(s["design"]["elements"][3]["x"], json!(400));
    let (_, s) = f.post(&format!("/sessions/{id}/redo"), Value::Null).await;
    assert_eq!(s["cursor"], json!(2));
    assert_eq!(s["history_len"], json!(3));

    // a new edit after undo drops the redo tail
    let (_, r) = f.post(&format!("/sessions/{id}/edits"), json!({"op": move_op(2, 100, 100)})).await;
    assert_eq!(r["session"]["cursor"], json!(3));
    assert_eq!(r["session"]["history_len"], json!(3));
    let (st, _) = f.post(&format!("/sessions/{id}/redo"), Value::Null).await;
    assert_eq!(st, 409);
}

#[tokio::test]
async fn preview_does_not_commit() {
    let f = Fixture::new(None).await;
    let id = f.session(json!({})).await;
    let (st, r) = f
        .post(&format!("/sessions/{id}/edits"), json!({"op": move_op(3, 100, 100), "preview": true}))
        .await;
    assert_eq!(st, 200);
    assert_eq!(r["committed"], json!(false));
    assert_eq!(r["edits"][0]["design"]["elements"][3]["x"], json!(100));
    let (_, s) = f.get(&format!("/sessions/{id}")).await;
    assert_eq!(s["cursor"], json!(0));
    assert_eq!(s["design"]["elements"][3]["x"], json!(583));
}

#[tokio::test]
async fn add_and_delete_through_a_session() {
    let f = Fixture::new(None).await;
    let id = f.session(json!({})).await;
    let element = json!({"index": 4, "modality": "text", "content": "NOW", "x": 0, "y": 0,
        "width": 200, "height": 60, "angle": 0, "font_size": 30, "text_align": "center"});
    let (st, r) = f
        .post(&format!("/sessions/{id}/edits"), json!({"op": "add element 4", "element": element}))
        .await;
    assert_eq!(st, 200, "{r}");
    let els = r["session"]["design"]["elements"].as_array().unwrap();
    assert_eq!(els.len(), 5);
    assert_eq!(els[4]["content"], json!("NOW"));
    assert_eq!(r["edits"][0]["diagnostics"]["op_satisfied"], json!(true));

    let (st, r) = f.post(&format!("/sessions/{id}/edits"), json!({"op": "delete element 2"})).await;
    assert_eq!(st, 200, "{r}");
    let els = r["session"]["design"]["elements"].as_array().unwrap();
    assert_eq!(els.len(), 4);
    assert_eq!(els[3]["content"], json!("NOW"));
}

#[tokio::test]
async fn bad_requests_name_the_offending_field() {
    let f = Fixture::new(None).await;
    let (st, err) = f.post("/sessions", json!({"design_id": f.design, "colour": "red"})).await;
    assert_eq!(st, 400);
    assert_eq!(err["code"], json!("bad_request"));
    let (st, err) = f.post("/sessions", json!({"design_id": f.design, "alpha": 2.0})).await;
    assert_eq!(st, 400);
    assert_eq!(err["path"], json!("alpha"));
    let (st, _) = f.post("/sessions", json!({"design_id": "feedface"})).await;
    assert_eq!(st, 404);

    let id = f.session(json!({})).await;
    let (st, err) = f.post(&format!("/sessions/{id}/edits"), json!({"op": "move element 3"})).await;
    assert_eq!(st, 400, "{err}");
    assert_eq!(err["path"], json!("op"));
    let (st, _) = f.post(&format!("/sessions/{id}/edits"), json!({})).await;
    assert_eq!(st, 400);
    let (st, err) = f.post(&format!("/sessions/{id}/edits"), json!({"op": "add element 4"})).await;
    assert_eq!(st, 422, "{err}");
    assert_eq!(err["code"], json!("edit_failed"));

    // no model client configured
    let (st, err) = f.post("/sessions", json!({"design_id": f.design, "backend": {"kind": "external-model"}})).await;
    assert_eq!(st, 503);
    assert_eq!(err["code"], json!("backend_unavailable"));
}

#[tokio::test]
async fn instructions_are_translated_with_the_model_client() {
    let client = Arc::new(CannedClient::new(vec![
        layoutedit::backend::CannedReply::Text(r#"resize element 2 to {"width": 886, "height": 836}"#.into()),
        layoutedit::backend::CannedReply::Text("That sounds lovely!".into()),
    ]));
    let f = Fixture::new(Some(client.clone())).await;
    let id = f.session(json!({})).await;
    let (st, r) = f
        .post(&format!("/sessions/{id}/edits"), json!({"instruction": "make the logo twice as big", "preview": true}))
        .await;
    assert_eq!(st, 200, "{r}");
    assert_eq!(r["edits"][0]["operation"], json!(r#"resize element 2 to {"width": 886, "height": 836}"#));
    assert_eq!(r["edits"][0]["design"]["elements"][2]["width"], json!(886));
    assert!(client.prompts()[0].contains("REQUEST: make the logo twice as big"));

    let (st, err) = f.post(&format!("/sessions/{id}/edits"), json!({"instruction": "make it nicer"})).await;
    assert_eq!(st, 422);
    assert_eq!(err["code"], json!("translation_failed"));
    let (_, s) = f.get(&format!("/sessions/{id}")).await;
    assert_eq!(s["cursor"], json!(0));
}

#[tokio::test]
async fn external_model_sessions_record_exchanges() {
    let client: Arc<dyn ChatClient> = Arc::new(CannedClient::always(POSTER_REPLY));
    let f = Fixture::new(Some(client)).await;
    let id = f.session(json!({"backend": {"kind": "external-model"}})).await;
    let (st, r) = f.post(&format!("/sessions/{id}/edits"), json!({"op": move_op(3, 583, 394)})).await;
    assert_eq!(st, 200, "{r}");
    let diag = &r["edits"][0]["diagnostics"];
    assert_eq!(diag["backend"], json!("external-model"));
    assert_eq!(diag["attempts"], json!(1));
    assert_eq!(diag["exchanges"].as_array().unwrap().len(), 1);
    let (_, original) = f.get(&format!("/designs/{}", f.design)).await;
    assert_eq!(r["session"]["design"], original);
}

#[tokio::test]
async fn evaluation_jobs_report_progress() {
    let f = Fixture::new(None).await;
    let corpus = tempfile::tempdir().unwrap();
    let mut rng = seeded_rng(31);
    let lines: Vec<String> = (0..150)
        .map(|_| serde_json::to_string(&random_design(&SyntheticConfig::default(), &mut rng)).unwrap())
        .collect();
    let path = corpus.path().join("designs.jsonl");
    std::fs::write(&path, lines.join("\n")).unwrap();

    let (st, job) = f
        .post("/eval", json!({"corpus_path": path, "setting": "generalization", "seed": 3, "samples_per_design": 2}))
        .await;
    assert_eq!(st, 202, "{job}");
    assert_eq!(job["status"], json!("running"));
    assert_eq!(job["processed"], json!(0));
    assert_eq!(job["total"], json!(300));
    let id = job["id"].as_str().unwrap();

    let mut last = 0;
    let done = loop {
        let (st, s) = f.get(&format!("/eval/{id}")).await;
        assert_eq!(st, 200);
        let processed = s["processed"].as_u64().unwrap();
        assert!(processed >= last && processed <= 300);
        last = processed;
        if s["status"] == json!("done") {
            break s;
        }
        assert_eq!(s["status"], json!("running"));
        tokio::time::sleep(Duration::from_millis(5)).await;
    };
    assert_eq!(done["processed"], json!(300));
    let report = &done["report"];
    assert_eq!(report["n_cases"], json!(300), "{report}");
    assert_eq!(report["op"], json!(1.0));

    let (st, err) = f.post("/eval", json!({"corpus_path": "/nonexistent/corpus"})).await;
    assert_eq!(st, 422);
    assert_eq!(err["code"], json!("corpus_unreadable"));
    let (st, _) = f.get("/eval/unknown-job").await;
    assert_eq!(st, 404);
}
