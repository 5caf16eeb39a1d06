//! Browser bindings for the static page in `www/`. Every export takes plain
//! strings and numbers and returns a JSON string; failures come back as
//! `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use cliquedex::digraph::{down_chromatic_bounds, AcyclicDigraph};
use cliquedex::intersection::{build_intersection_graph, clique_lower_bound, greedy_color, ColoringOrder};
use cliquedex::interval_endpoint::{build_endpoint_schema, read_intervals_csv};
use cliquedex::interval_tree::{build_tree_schema, TreeParams, TreeVariant};
use cliquedex::schema::{materialize, verify_schema, CliqueTable};

/// Largest tree the page will draw.
const MAX_LEVELS: u32 = 8;

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn table_json(t: &CliqueTable) -> Value {
    let rows: Vec<Value> = (0..t.row_count())
        .map(|r| {
            let cells: Vec<Value> = t.row(r).map(|c| c.map_or(Value::Null, |s| json!(s))).collect();
            json!({ "node": t.node(r), "cells": cells })
        })
        .collect();
    json!({ "k": t.k(), "rows": rows })
}

pub fn tree_overlap_value(levels: u32, k: u32, literal: bool) -> Result<Value, String> {
    if levels > MAX_LEVELS {
        return Err(format!("at most {MAX_LEVELS} levels"));
    }
    let variant = if literal { TreeVariant::Literal } else { TreeVariant::TableConsistent };
    let t = build_tree_schema(levels, variant, MAX_LEVELS).map_err(|e| e.to_string())?;
    let p = TreeParams::new(levels).map_err(|e| e.to_string())?;
    let k = u64::from(k);
    let pieces = p.overlap_decomposition(k).map_err(|e| e.to_string())?;
    let level = p.level(k).map_err(|e| e.to_string())?;
    let extent = p.extent(k).map_err(|e| e.to_string())?;
    let members: Vec<u64> = {
        let mut all: Vec<u64> = pieces.iter().flat_map(|(_, m)| m.iter().copied()).collect();
        all.sort_unstable();
        all
    };
    let pieces: Vec<Value> = pieces.into_iter().map(|(r, m)| json!({ "cell": r, "members": m })).collect();
    Ok(json!({
        "table": table_json(&t),
        "level": level,
        "extent": [extent.lower(), extent.upper()],
        "overlap": members,
        "pieces": pieces,
    }))
}

pub fn interval_query_value(csv: &str, a: f64, b: f64) -> Result<Value, String> {
    let intervals = read_intervals_csv(csv.as_bytes()).map_err(|e| e.to_string())?;
    let s = build_endpoint_schema(&intervals).map_err(|e| e.to_string())?;
    let r = s.query(a, b).map_err(|e| e.to_string())?;
    let ids = |js: &[usize]| -> Vec<String> { js.iter().map(|&j| intervals[j].id.clone()).collect() };
    Ok(json!({
        "entries": s.entries().len(),
        "k": s.k(),
        "straddling": ids(&r.straddling),
        "ending": ids(&r.ending),
        "ids": s.query_ids(a, b).map_err(|e| e.to_string())?,
    }))
}

pub fn dag_schema_value(edges: &str) -> Result<Value, String> {
    let g = AcyclicDigraph::parse_edge_list(edges).map_err(|e| e.to_string())?;
    let f = g.descendant_function();
    let c = greedy_color(&build_intersection_graph(&f), ColoringOrder::SmallestLast);
    let t = materialize(&f, &c, None).map_err(|e| e.to_string())?;
    let verified = verify_schema(&f, &t, &c).valid;
    let bounds = down_chromatic_bounds(&g, 16).map_err(|e| e.to_string())?;
    Ok(json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "clique_lower_bound": clique_lower_bound(&f),
        "down_bounds": [bounds.lower, bounds.upper],
        "verified": verified,
        "table": table_json(&t),
    }))
}

#[wasm_bindgen]
pub fn tree_overlap(levels: u32, k: u32, literal: bool) -> String {
    respond(tree_overlap_value(levels, k, literal))
}

#[wasm_bindgen]
pub fn interval_query(csv: &str, a: f64, b: f64) -> String {
    respond(interval_query_value(csv, a, b))
}

#[wasm_bindgen]
pub fn dag_schema(edges: &str) -> String {
    respond(dag_schema_value(edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_of_five() {
        let v = tree_overlap_value(4, 5, false).unwrap();
        assert_eq!(v["overlap"], json!([1, 2, 5, 10, 11]));
        assert_eq!(v["level"], 3);
        assert_eq!(v["table"]["rows"][9]["cells"], json!(["1", "2", "5", "10"]));
    }

    #[test]
    fn errors_are_json() {
        let v: Value = serde_json::from_str(&tree_overlap(4, 99, false)).unwrap();
        assert!(v["error"].is_string());
        let v: Value = serde_json::from_str(&dag_schema("a\tb\nb\ta\n")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("cycle"));
    }

    #[test]
    fn intervals() {
        let v = interval_query_value("id,x,y\na,0,2\nb,1,3\nc,4,5\n", 1.5, 3.5).unwrap();
        assert_eq!(v["ids"], json!(["a", "b"]));
        assert_eq!(v["k"], 2);
    }

    #[test]
    fn dag() {
        let v = dag_schema_value("r\ta\nr\tb\na\tc\n").unwrap();
        assert_eq!(v["verified"], true);
        assert_eq!(v["table"]["rows"].as_array().unwrap().len(), 4);
    }
}
