//! Read-only JSON API over a directory of profile graphs.
//!
//! Routing lives in [`handle`], a pure function of the store and the request;
//! the HTTP server only adapts it.
//!
//! | route | body |
//! |---|---|
//! | `GET /profiles` | sorted target names |
//! | `GET /profiles/{name}/graph` | filtered graph |
//! | `GET /profiles/{name}/ranked` | ranked entities |
//! | `GET /profiles/{name}/edges/{id}/cloud` | `{cloud, snippets}` |
//! | `GET /path?from=&to=&max_hops=` | path steps or `null` |
//!
//! Graph and ranked routes take `relations`, `types`, `sources` (repeatable),
//! `topk` (positive integer or `all`), `year_from` and `year_to`.

use std::collections::BTreeMap;
use std::path::Path;

use percent_encoding::percent_decode_str;
use serde_json::json;

use crate::digest::sha256_hex;
use crate::extraction::{EntityType, SourceKind};
use crate::graph::{apply_filter, canonical_json, export_graph_json, ranked_entities, GraphFilter, MergedGraph, ProfileGraph};
use crate::relations::RelationType;

pub const DEFAULT_PORT: u16 = 8080;
pub const PORT_ENV: &str = "PROFILE_FORGE_PORT";
pub const DEFAULT_MAX_HOPS: usize = 6;

pub const HEADERS: [(&str, &str); 4] = [
    ("content-type", "application/json"),
    ("access-control-allow-origin", "*"),
    ("access-control-allow-methods", "GET, OPTIONS"),
    ("access-control-allow-headers", "*"),
];

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error("two graphs for target {0:?}")]
    DuplicateName(String),
}

/// Profile graphs keyed by target name, immutable once loaded.
#[derive(Debug, Clone, Default)]
pub struct ProfileStore {
    graphs: BTreeMap<String, ProfileGraph>,
    merged: MergedGraph,
}

impl ProfileStore {
    pub fn from_graphs(graphs: impl IntoIterator<Item = ProfileGraph>) -> Result<Self, StoreError> {
        let mut map = BTreeMap::new();
        for g in graphs {
            let key = g.target.name.to_lowercase();
            if map.contains_key(&key) {
                return Err(StoreError::DuplicateName(g.target.name.clone()));
            }
            map.insert(key, g);
        }
        let merged = MergedGraph::new(map.values());
        Ok(Self { graphs: map, merged })
    }

    /// Every `*.graph.json` directly inside `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        let io = |path: &Path, e: std::io::Error| StoreError::Io { path: path.display().to_string(), message: e.to_string() };
        let mut paths = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(|e| io(dir, e))? {
            let path = entry.map_err(|e| io(dir, e))?.path();
            if path.is_file() && path.to_string_lossy().ends_with(".graph.json") {
                paths.push(path);
            }
        }
        paths.sort();
        let mut graphs = Vec::with_capacity(paths.len());
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|e| io(&path, e))?;
            let graph = ProfileGraph::from_json(&text)
                .map_err(|e| StoreError::Malformed { path: path.display().to_string(), message: e.to_string() })?;
            graphs.push(graph);
        }
        Self::from_graphs(graphs)
    }

    /// Target names in sorted order.
    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.graphs.values().map(|g| g.target.name.as_str()).collect();
        names.sort();
        names
    }

    /// Lookup by target name (case-insensitive) or its file slug.
    pub fn get(&self, name: &str) -> Option<&ProfileGraph> {
        self.graphs
            .get(&name.to_lowercase())
            .or_else(|| self.graphs.values().find(|g| crate::pipeline::slug(&g.target.name) == name))
    }

    pub fn merged(&self) -> &MergedGraph {
        &self.merged
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Content hash of every stored graph.
    pub fn hash(&self) -> String {
        let mut buf = String::new();
        for g in self.graphs.values() {
            buf.push_str(&export_graph_json(g));
        }
        sha256_hex(buf.as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: String,
}

impl Response {
    fn ok(body: String) -> Self {
        Self { status: 200, body }
    }

    fn error(status: u16, message: impl Into<String>) -> Self {
        Self { status, body: canonical_json(&json!({ "error": message.into() })) }
    }
}

fn parse_query(query: &str) -> Vec<(String, String)> {
    url::form_urlencoded::parse(query.as_bytes()).into_owned().collect()
}

fn values(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|v| !v.is_empty())
}

fn parse_year(key: &str, value: &str) -> Result<i32, String> {
    value.trim().parse().map_err(|_| format!("{key} must be an integer"))
}

/// Build a filter from graph/ranked query parameters. Unknown keys and
/// malformed values are errors; empty values mean "no constraint".
pub fn parse_filter(query: &str) -> Result<GraphFilter, String> {
    let mut f = GraphFilter::default();
    let (mut year_from, mut year_to) = (None, None);
    for (key, value) in parse_query(query) {
        match key.as_str() {
            "relations" => {
                for v in values(&value) {
                    f.relation_types.get_or_insert_with(Default::default).insert(RelationType::new(v));
                }
            }
            "types" => {
                for v in values(&value) {
                    let t = EntityType::parse(v).ok_or_else(|| format!("unknown entity type {v:?}"))?;
                    f.entity_types.get_or_insert_with(Default::default).insert(t);
                }
            }
            "sources" => {
                for v in values(&value) {
                    let s = SourceKind::parse(v).ok_or_else(|| format!("unknown source {v:?}"))?;
                    f.sources.get_or_insert_with(Default::default).insert(s);
                }
            }
            "topk" => {
                let v = value.trim();
                f.top_k = match v {
                    "" | "all" => None,
                    _ => match v.parse::<usize>() {
                        Ok(k) if k > 0 => Some(k),
                        _ => return Err("topk must be a positive integer or \"all\"".into()),
                    },
                };
            }
            "year_from" => year_from = Some(parse_year("year_from", &value)?),
            "year_to" => year_to = Some(parse_year("year_to", &value)?),
            other => return Err(format!("unknown query parameter {other:?}")),
        }
    }
    if year_from.is_some() || year_to.is_some() {
        f.year_range = Some((year_from.unwrap_or(i32::MIN), year_to.unwrap_or(i32::MAX)));
    }
    f.validate().map_err(|e| e.to_string())?;
    Ok(f)
}

/// Answer one request. Only `GET` (and `OPTIONS` preflight) are served.
pub fn handle(store: &ProfileStore, method: &str, path: &str, query: &str) -> Response {
    match method {
        "GET" => {}
        "OPTIONS" => return Response { status: 204, body: String::new() },
        _ => return Response::error(405, "read-only service"),
    }
    let segments: Vec<String> = path
        .trim_matches('/')
        .split('/')
        .filter(|s| !s.is_empty())
        .map(|s| percent_decode_str(s).decode_utf8_lossy().into_owned())
        .collect();
    let segments: Vec<&str> = segments.iter().map(String::as_str).collect();
    match segments.as_slice() {
        ["profiles"] => {
            if !query.is_empty() {
                return Response::error(400, "/profiles takes no parameters");
            }
            Response::ok(canonical_json(&store.names()))
        }
        ["profiles", name, rest @ ..] => {
            let Some(graph) = store.get(name) else {
                return Response::error(404, format!("unknown profile {name:?}"));
            };
            profile_route(graph, rest, query)
        }
        ["path"] => path_route(store, query),
        _ => Response::error(404, "no such route"),
    }
}

fn profile_route(graph: &ProfileGraph, rest: &[&str], query: &str) -> Response {
    match rest {
        ["graph"] => match parse_filter(query) {
            Ok(f) => Response::ok(export_graph_json(&apply_filter(graph, &f))),
            Err(e) => Response::error(400, e),
        },
        ["ranked"] => match parse_filter(query) {
            Ok(f) => Response::ok(canonical_json(&ranked_entities(graph, &f))),
            Err(e) => Response::error(400, e),
        },
        ["edges", id, "cloud"] => match graph.edge(id) {
            Some(e) if query.is_empty() => Response::ok(canonical_json(&json!({ "cloud": e.cloud, "snippets": e.snippets }))),
            Some(_) => Response::error(400, "cloud takes no parameters"),
            None => Response::error(404, format!("unknown edge {id:?}")),
        },
        _ => Response::error(404, "no such route"),
    }
}

fn path_route(store: &ProfileStore, query: &str) -> Response {
    let (mut from, mut to, mut max_hops) = (None, None, DEFAULT_MAX_HOPS);
    for (key, value) in parse_query(query) {
        match key.as_str() {
            "from" => from = Some(value),
            "to" => to = Some(value),
            "max_hops" => match value.trim().parse() {
                Ok(h) => max_hops = h,
                Err(_) => return Response::error(400, "max_hops must be a non-negative integer"),
            },
            other => return Response::error(400, format!("unknown query parameter {other:?}")),
        }
    }
    let (Some(from), Some(to)) = (from, to) else {
        return Response::error(400, "from and to are required");
    };
    match store.merged().find_path(&from, &to, max_hops) {
        Ok(path) => Response::ok(canonical_json(&path)),
        Err(e) => Response::error(404, e.to_string()),
    }
}

/// Port from [`PORT_ENV`] when set, else `port`.
pub fn effective_port(port: u16) -> u16 {
    std::env::var(PORT_ENV).ok().and_then(|p| p.parse().ok()).unwrap_or(port)
}

#[cfg(feature = "cli")]
pub async fn serve(store: ProfileStore, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    serve_on(store, listener).await
}

#[cfg(feature = "cli")]
pub async fn serve_on(store: ProfileStore, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    use std::sync::Arc;

    use axum::extract::State;
    use axum::http::{HeaderValue, Method, StatusCode, Uri};
    use axum::response::IntoResponse;

    async fn adapt(State(store): State<Arc<ProfileStore>>, method: Method, uri: Uri) -> axum::response::Response {
        let r = handle(&store, method.as_str(), uri.path(), uri.query().unwrap_or(""));
        let mut response = (StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), r.body).into_response();
        for (k, v) in HEADERS {
            response.headers_mut().insert(k, HeaderValue::from_static(v));
        }
        response
    }

    let app = axum::Router::new().fallback(adapt).with_state(Arc::new(store));
    log::info!("serving on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
