#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use futures::StreamExt;
use privacycube_core::{load_profile_dir, Registry};
use privacycube_service::sse::{SseDecoder, SseItem};
use privacycube_service::{Server, ServiceConfig};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub fn fixture_profiles() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/profiles")
}

pub fn fixture_registry() -> Registry {
    load_profile_dir(&fixture_profiles()).expect("fixtures load")
}

pub struct TestServer {
    pub base: String,
    pub client: reqwest::Client,
    stop: Option<oneshot::Sender<()>>,
    handle: Option<JoinHandle<()>>,
}

impl TestServer {
    pub async fn start(event_log: &Path, keep_alive: Duration) -> TestServer {
        Self::start_with(event_log, keep_alive, fixture_registry()).await
    }

    pub async fn start_with(event_log: &Path, keep_alive: Duration, registry: Registry) -> TestServer {
        let mut config = ServiceConfig::new(0, fixture_profiles(), event_log);
        config.keep_alive = keep_alive;
        let server = Server::bind(&config, registry).await.expect("server binds");
        let base = format!("http://{}", server.local_addr());
        let (stop, stopped) = oneshot::channel::<()>();
        let handle = tokio::spawn(async move {
            server
                .run(async {
                    let _ = stopped.await;
                })
                .await
                .expect("server runs");
        });
        TestServer {
            base,
            client: reqwest::Client::new(),
            stop: Some(stop),
            handle: Some(handle),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn get_state_text(&self) -> String {
        self.client.get(self.url("/api/state")).send().await.unwrap().text().await.unwrap()
    }

    pub async fn post(&self, path: &str, body: serde_json::Value) -> reqwest::Response {
        self.client.post(self.url(path)).json(&body).send().await.unwrap()
    }

    /// Stops the server and waits for it to drain, open streams included.
    pub async fn shutdown(mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(handle) = self.handle.take() {
            tokio::time::timeout(Duration::from_secs(5), handle)
                .await
                .expect("server drains within 5s")
                .unwrap();
        }
    }
}

/// A live `GET /api/stream` connection.
pub struct StreamClient {
    body: futures::stream::BoxStream<'static, reqwest::Result<Vec<u8>>>,
    decoder: SseDecoder,
    queued: std::collections::VecDeque<SseItem>,
}

impl StreamClient {
    pub async fn connect(server: &TestServer) -> StreamClient {
        let response = server.client.get(server.url("/api/stream")).send().await.unwrap();
        assert_eq!(response.status(), 200);
        let content_type = response.headers()["content-type"].to_str().unwrap().to_owned();
        assert!(content_type.starts_with("text/event-stream"), "{content_type}");
        StreamClient {
            body: response.bytes_stream().map(|chunk| chunk.map(|b| b.to_vec())).boxed(),
            decoder: SseDecoder::new(),
            queued: Default::default(),
        }
    }

    /// Next item, comments included. `None` once the server closes the stream.
    pub async fn next_item(&mut self) -> Option<SseItem> {
        loop {
            if let Some(item) = self.queued.pop_front() {
                return Some(item);
            }
            let chunk = tokio::time::timeout(Duration::from_secs(5), self.body.next())
                .await
                .expect("stream item within 5s")?;
            self.queued.extend(self.decoder.push(&chunk.unwrap()));
        }
    }

    /// Next event, skipping keep-alive comments.
    pub async fn next_event(&mut self) -> (String, String) {
        loop {
            match self.next_item().await.expect("stream still open") {
                SseItem::Event { event, data } => return (event, data),
                SseItem::Comment(_) => continue,
            }
        }
    }
}
