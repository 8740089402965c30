#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use layoutedit::backend::ChatClient;
use layoutedit::design::{Canvas, Design, Element, Geometry, TextAlign, TextAttrs};
use layoutedit::service::{router, AppState, Store};
use rand::Rng;

pub const POSTER: &str = r#"{
  "canvas": {"width": 940, "height": 788},
  "elements": [
    {"index": 0, "modality": "image", "asset": "bg.png", "x": 470, "y": 394, "width": 940, "height": 806},
    {"index": 1, "modality": "image", "asset": "frame.png", "x": 470, "y": 394, "width": 873, "height": 721},
    {"index": 2, "modality": "image", "asset": "deco.png", "x": 598, "y": 147, "width": 443, "height": 418},
    {"index": 3, "modality": "text", "content": "STOP DREAMING START DOING", "x": 583, "y": 394,
     "width": 441, "height": 336, "angle": 0, "font_size": 70, "text_align": "left"}
  ]
}"#;

/// Attribute list a model would return for `move element 3 to (583, 394)` on [`POSTER`].
pub const POSTER_REPLY: &str = r#"[
{"index": 0, "x": 470, "y": 394, "width": 940, "height": 806},
{"index": 1, "x": 470, "y": 394, "width": 873, "height": 721},
{"index": 2, "x": 598, "y": 147, "width": 443, "height": 418},
{"index": 3, "x": 583, "y": 394, "width": 441, "height": 336, "angle": 0, "font_size": 70, "text_align": "left"}
]"#;

pub fn poster() -> Design {
    layoutedit::parse_design(POSTER).unwrap()
}

/// Random design with unrounded coordinates; centers may leave the canvas.
pub fn float_design<R: Rng>(rng: &mut R, min_n: usize, max_n: usize) -> Design {
    let canvas = Canvas::new(rng.gen_range(200..2000), rng.gen_range(200..2000));
    let (w, h) = (canvas.w(), canvas.h());
    let n = rng.gen_range(min_n..=max_n);
    let elements = (0..n)
        .map(|i| {
            let geom = Geometry::new(
                rng.gen_range(-0.1 * w..1.1 * w),
                rng.gen_range(-0.1 * h..1.1 * h),
                rng.gen_range(1.0..w),
                rng.gen_range(1.0..h),
            );
            if rng.gen_bool(0.3) {
                Element::text(
                    &format!("T{i}"),
                    geom,
                    TextAttrs {
                        angle: 0.0,
                        font_size: 12.0,
                        text_align: TextAlign::Center,
                    },
                )
            } else {
                Element::image(None, geom)
            }
        })
        .collect();
    Design::new(canvas, elements).unwrap()
}

/// A running service bound to an ephemeral port.
pub struct Server {
    pub base: String,
    task: tokio::task::JoinHandle<()>,
}

impl Server {
    pub async fn start(store: &Path, client: Option<Arc<dyn ChatClient>>) -> Server {
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
        let addr = listener.local_addr().unwrap();
        let app = router(AppState::new(Store::open(store).unwrap(), client));
        let task = tokio::spawn(async move {
            axum::serve(listener, app).await.unwrap();
        });
        Server {
            base: format!("http://{addr}"),
            task,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn stop(self) {
        self.task.abort();
        let _ = self.task.await;
    }
}
