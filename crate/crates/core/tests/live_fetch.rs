//! Live platform clients against an in-process HTTP server.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crs_core::evidence::{fetch_evidence, Endpoints, FetchConfig, FetchError, KEY_OPT_OUT};
use crs_core::tracelog::{validate_log_bytes, ChangeKind, TraceLog, TraceRecord};
use crs_core::{DatasetRef, PlatformKind};

#[derive(Clone)]
struct Route {
    status: u16,
    body: Vec<u8>,
    /// Respond 429 this many times before serving the route.
    throttle: usize,
}

#[derive(Default)]
struct State {
    routes: HashMap<String, Route>,
    hits: HashMap<String, usize>,
    auth: Vec<Option<String>>,
}

struct Server {
    base: String,
    state: Arc<Mutex<State>>,
    peak: Arc<AtomicUsize>,
}

impl Server {
    fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let state = Arc::new(Mutex::new(State::default()));
        let in_flight = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let (s, f, p) = (state.clone(), in_flight.clone(), peak.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (s, f, p) = (s.clone(), f.clone(), p.clone());
                std::thread::spawn(move || handle(stream, &s, &f, &p));
            }
        });
        Server { base, state, peak }
    }

    fn route(&self, path: &str, status: u16, body: impl Into<Vec<u8>>) {
        self.throttled(path, status, body, 0);
    }

    fn throttled(&self, path: &str, status: u16, body: impl Into<Vec<u8>>, throttle: usize) {
        self.state.lock().unwrap().routes.insert(
            path.to_string(),
            Route {
                status,
                body: body.into(),
                throttle,
            },
        );
    }

    fn hits(&self, path: &str) -> usize {
        self.state.lock().unwrap().hits.get(path).copied().unwrap_or(0)
    }

    fn config(&self) -> FetchConfig {
        FetchConfig {
            snapshot: None,
            endpoints: Endpoints {
                huggingface: self.base.clone(),
                kaggle: self.base.clone(),
                github_api: self.base.clone(),
                github_raw: format!("{}/raw", self.base),
            },
            token: Some("secret-token".into()),
            max_concurrency: 8,
            max_attempts: 3,
            base_backoff: Duration::from_millis(1),
            timeout: Duration::from_secs(5),
            max_corpus_files: 32,
        }
    }
}

fn handle(stream: TcpStream, state: &Mutex<State>, in_flight: &AtomicUsize, peak: &AtomicUsize) {
    let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    peak.fetch_max(now, Ordering::SeqCst);
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    reader.read_line(&mut request_line).unwrap();
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut auth = None;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("authorization") {
                auth = Some(v.trim().to_string());
            }
        }
    }
    std::thread::sleep(Duration::from_millis(15));
    let (status, body) = {
        let mut st = state.lock().unwrap();
        st.auth.push(auth);
        let hit = {
            let h = st.hits.entry(path.clone()).or_default();
            *h += 1;
            *h
        };
        match st.routes.get(&path) {
            Some(r) if hit <= r.throttle => (429, b"slow down".to_vec()),
            Some(r) => (r.status, r.body.clone()),
            None => (404, b"not found".to_vec()),
        }
    };
    in_flight.fetch_sub(1, Ordering::SeqCst);
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    let _ = stream.write_all(&body);
}

fn sample_log() -> Vec<u8> {
    let mut log = TraceLog::new("remote");
    log.append(TraceRecord {
        recorded_at: "2024-01-01T00:00:00Z".parse().unwrap(),
        change_kind: ChangeKind::PointAdded,
        affected_points: vec!["a.png".into()],
        description: "added".into(),
        actor: "me".into(),
    })
    .unwrap();
    log.to_jsonl().into_bytes()
}

#[test]
fn huggingface_card_files_and_retry() {
    let server = Server::start();
    let mut siblings = vec![
        serde_json::json!({"rfilename": "README.md"}),
        serde_json::json!({"rfilename": "CHANGES.crs.jsonl"}),
        serde_json::json!({"rfilename": "data/a.png"}),
    ];
    for i in 0..12 {
        siblings.push(serde_json::json!({"rfilename": format!("docs/n{i}.md")}));
        server.route(
            &format!("/datasets/org/ds/resolve/main/docs/n{i}.md"),
            200,
            format!("note {i}"),
        );
    }
    server.route(
        "/api/datasets/org/ds",
        200,
        serde_json::json!({
            "id": "org/ds",
            "cardData": {"crs.opt_out": "mailto:optout@example.org", "crs.reproducibility": "see README"},
            "siblings": siblings,
        })
        .to_string(),
    );
    server.throttled(
        "/datasets/org/ds/resolve/main/README.md",
        200,
        "# Dataset\nscraped and filtered",
        2,
    );
    server.route("/datasets/org/ds/resolve/main/CHANGES.crs.jsonl", 200, sample_log());

    let r = DatasetRef::new(PlatformKind::Huggingface, "org/ds").unwrap();
    let ev = fetch_evidence(&r, &server.config()).unwrap();
    assert_eq!(ev.platform, PlatformKind::Huggingface);
    assert_eq!(ev.card_value(KEY_OPT_OUT), Some("mailto:optout@example.org"));
    assert_eq!(ev.c4_optout.as_ref().unwrap().excerpt, "mailto:optout@example.org");
    assert_eq!(ev.c1_docs.len(), 1);
    assert!(ev
        .corpus
        .iter()
        .any(|d| d.path == "README.md" && d.text.contains("scraped")));
    assert_eq!(ev.corpus.len(), 13);
    assert!(validate_log_bytes(&ev.c5_tracelog.as_ref().unwrap().bytes).is_valid());
    assert_eq!(server.hits("/datasets/org/ds/resolve/main/README.md"), 3);

    let peak = server.peak.load(Ordering::SeqCst);
    assert!(peak <= 4, "peak concurrency {peak}");
    let st = server.state.lock().unwrap();
    assert!(st.auth.iter().all(|a| a.as_deref() == Some("Bearer secret-token")));
}

#[test]
fn missing_dataset_is_not_found() {
    let server = Server::start();
    let r = DatasetRef::new(PlatformKind::Huggingface, "org/missing").unwrap();
    let err = fetch_evidence(&r, &server.config()).unwrap_err();
    assert!(matches!(err, FetchError::NotFound(_)), "{err}");
    assert!(!err.is_retryable());
}

#[test]
fn persistent_rate_limit_gives_up_after_max_attempts() {
    let server = Server::start();
    server.throttled("/api/datasets/org/busy", 200, "{}", 100);
    let r = DatasetRef::new(PlatformKind::Huggingface, "org/busy").unwrap();
    let err = fetch_evidence(&r, &server.config()).unwrap_err();
    assert!(matches!(err, FetchError::RateLimited { .. }), "{err}");
    assert!(err.is_retryable());
    assert_eq!(server.hits("/api/datasets/org/busy"), 3);
}

#[test]
fn server_errors_are_retried_then_reported() {
    let server = Server::start();
    server.route("/api/datasets/org/broken", 503, "down");
    let r = DatasetRef::new(PlatformKind::Huggingface, "org/broken").unwrap();
    let err = fetch_evidence(&r, &server.config()).unwrap_err();
    assert!(matches!(err, FetchError::Http { status: 503, .. }), "{err}");
    assert_eq!(server.hits("/api/datasets/org/broken"), 3);
}

#[test]
fn unreachable_host_is_a_network_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let mut config = Server::start().config();
    config.endpoints.huggingface = base;
    let r = DatasetRef::new(PlatformKind::Huggingface, "org/ds").unwrap();
    let err = fetch_evidence(&r, &config).unwrap_err();
    assert!(matches!(err, FetchError::Network { .. }), "{err}");
}

#[test]
fn kaggle_metadata_and_files() {
    let server = Server::start();
    server.route(
        "/api/v1/datasets/view/owner/slug",
        200,
        serde_json::json!({"title": "Clips", "description": "Contact us to opt out.", "licenseName": "CC0"})
            .to_string(),
    );
    server.route(
        "/api/v1/datasets/list/owner/slug",
        200,
        serde_json::json!({"datasetFiles": [{"name": "README.md"}, {"name": "clips/a.mp4"}]}).to_string(),
    );
    server.route(
        "/api/v1/datasets/download/owner/slug/README.md",
        200,
        "collected from volunteers",
    );
    let r = DatasetRef::new(PlatformKind::Kaggle, "owner/slug").unwrap();
    let ev = fetch_evidence(&r, &server.config()).unwrap();
    assert!(ev.card_present);
    assert_eq!(ev.raw_metadata.get("title").map(String::as_str), Some("Clips"));
    assert!(ev.corpus.iter().any(|d| d.text.contains("opt out")));
    assert!(ev.corpus.iter().any(|d| d.path == "README.md"));
    assert!(ev.c5_tracelog.is_none());
}

#[test]
fn github_tree_readme_and_card() {
    let server = Server::start();
    server.route("/repos/o/r", 200, r#"{"default_branch":"trunk"}"#);
    server.route(
        "/repos/o/r/git/trees/trunk?recursive=1",
        200,
        serde_json::json!({"tree": [
            {"path": "README.md", "type": "blob"},
            {"path": "card.json", "type": "blob"},
            {"path": "src", "type": "tree"},
            {"path": "src/scrape.py", "type": "blob"},
            {"path": "CHANGES.crs.jsonl", "type": "blob"}
        ]})
        .to_string(),
    );
    server.route(
        "/raw/o/r/trunk/README.md",
        200,
        "Email takedown@example.org to opt out.",
    );
    server.route("/raw/o/r/trunk/src/scrape.py", 200, "import requests");
    server.route(
        "/raw/o/r/trunk/card.json",
        200,
        r#"{"dataset_source":"https://github.com/o/r","metadata":{"crs.opt_out":"mailto:a@b.org"}}"#,
    );
    server.route("/raw/o/r/trunk/CHANGES.crs.jsonl", 200, sample_log());
    let r = DatasetRef::new(PlatformKind::Github, "https://github.com/o/r").unwrap();
    let ev = fetch_evidence(&r, &server.config()).unwrap();
    assert_eq!(ev.platform, PlatformKind::Github);
    assert_eq!(ev.dataset_source.as_deref(), Some("https://github.com/o/r"));
    let paths: Vec<&str> = ev.corpus.iter().map(|d| d.path.as_str()).collect();
    assert_eq!(paths, ["README.md", "src/scrape.py"]);
    assert!(ev.c5_tracelog.is_some());
}

#[test]
fn custom_page_is_reduced_to_text() {
    let server = Server::start();
    server.route(
        "/data/page.html",
        200,
        "<html><body><h1>Photos</h1><p>To request removal of your data, email x@y.org</p></body></html>",
    );
    let r = DatasetRef::new(PlatformKind::CustomUrl, format!("{}/data/page.html", server.base)).unwrap();
    let ev = fetch_evidence(&r, &server.config()).unwrap();
    assert_eq!(ev.corpus.len(), 1);
    assert!(ev.corpus[0].text.contains("To request removal of your data"));
    assert!(!ev.corpus[0].text.contains("<p>"));
}

#[test]
fn configured_snapshot_bypasses_network() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("README.md"), "offline").unwrap();
    let r = DatasetRef::new(PlatformKind::Huggingface, "org/ds").unwrap();
    let ev = fetch_evidence(&r, &FetchConfig::offline(dir.path())).unwrap();
    assert_eq!(ev.platform, PlatformKind::Huggingface);
    assert_eq!(ev.corpus.len(), 1);
}
