//! Browser demo over profile graphs: filter and rank a graph, tag entities in
//! pasted text, and find a path across several graphs.
//!
//! Each operation is a plain function returning JSON text so it can be tested
//! natively; the `wasm_bindgen` wrappers only convert errors.

use profile_forge::corpus::{name_variants, parse_html, TargetEntity};
use profile_forge::extraction::{drop_target_mentions, tag_entities, GazetteerTagger, SourceKind};
use profile_forge::graph::{apply_filter, canonical_json, ranked_entities, MergedGraph, ProfileGraph};
use profile_forge::service::parse_filter;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn escape_html(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// `{"graph": ..., "ranked": [...]}` for `graph_json` under a filter given
/// in the service's query syntax (`relations=education&topk=5`).
pub fn filter_and_rank(graph_json: &str, query: &str) -> Result<String, String> {
    let graph = ProfileGraph::from_json(graph_json).map_err(|e| e.to_string())?;
    let filter = parse_filter(query)?;
    let filtered = apply_filter(&graph, &filter);
    let ranked = ranked_entities(&graph, &filter);
    Ok(canonical_json(&json!({ "graph": filtered, "ranked": ranked })))
}

/// Entity mentions in plain text. Paragraphs are separated by blank lines;
/// mentions of `target` (any name variant) are dropped when it is non-empty.
pub fn extract_entities(text: &str, gazetteer_tsv: &str, target: &str) -> Result<String, String> {
    let tagger = GazetteerTagger::parse_tsv(gazetteer_tsv, "gazetteer").map_err(|e| e.to_string())?;
    let body: String = text
        .split("\n\n")
        .map(|p| format!("<p>{}</p>\n", escape_html(p.trim())))
        .collect();
    let doc = parse_html(format!("<html><body>{body}</body></html>").as_bytes());
    let mut mentions = tag_entities(&doc, "input", SourceKind::OtherRelevant, &tagger);
    if !target.trim().is_empty() {
        let entity = TargetEntity::new(target.trim()).map_err(|e| e.to_string())?;
        mentions = drop_target_mentions(mentions, &name_variants(&entity));
    }
    let out: Vec<_> = mentions
        .iter()
        .map(|m| {
            json!({
                "name": m.entity.name(),
                "type": m.entity.entity_type,
                "span": [m.span.0, m.span.1],
                "years": m.years,
                "context": format!("{} [{}] {}", m.context_before.join(" "), m.entity.name(), m.context_after.join(" ")),
            })
        })
        .collect();
    Ok(canonical_json(&out))
}

/// Shortest path between two entities over a JSON array of graphs; `null`
/// when none exists within `max_hops`.
pub fn find_path(graphs_json: &str, from: &str, to: &str, max_hops: usize) -> Result<String, String> {
    let values: Vec<serde_json::Value> = serde_json::from_str(graphs_json).map_err(|e| e.to_string())?;
    let graphs = values
        .into_iter()
        .map(|v| ProfileGraph::from_json(&v.to_string()).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let merged = MergedGraph::new(&graphs);
    let path = merged.find_path(from, to, max_hops).map_err(|e| e.to_string())?;
    Ok(canonical_json(&path))
}

#[wasm_bindgen(js_name = filterAndRank)]
pub fn filter_and_rank_js(graph_json: &str, query: &str) -> Result<String, JsError> {
    filter_and_rank(graph_json, query).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = extractEntities)]
pub fn extract_entities_js(text: &str, gazetteer_tsv: &str, target: &str) -> Result<String, JsError> {
    extract_entities(text, gazetteer_tsv, target).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = findPath)]
pub fn find_path_js(graphs_json: &str, from: &str, to: &str, max_hops: usize) -> Result<String, JsError> {
    find_path(graphs_json, from, to, max_hops).map_err(|e| JsError::new(&e))
}
