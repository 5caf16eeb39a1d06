use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use cliquedex::digraph::{
    down_chromatic_bounds, exact_down_chromatic, greedy_down_coloring, max_down_set_size, AcyclicDigraph,
};
use cliquedex::intersection::{
    build_intersection_graph, clique_lower_bound, exact_chromatic, greedy_color, EntryColoring, SetValuedFunction,
};
use cliquedex::interval_endpoint::{bucketed_schema, build_endpoint_schema, read_intervals_csv};
use cliquedex::interval_tree::{build_tree_schema, overlap_query, tree_fact_query, tree_function, TreeVariant};
use cliquedex::query::bench::{generate_workload, run_bench, write_report, QuerySpec, WorkloadSpec};
use cliquedex::query::{build_index, evaluate_with_stats, full_scan_oracle, sum_rows, FactTable, QueryExpr};
use cliquedex::schema::{materialize, verify_schema, CliqueTable, Sidecar};
use cliquedex::verify;

use crate::{
    BenchArgs, BuildCommand, BuildDagArgs, BuildIntervalsArgs, BuildTreeArgs, CliError, CliResult, Closure, ColorArgs,
    Command, ExportArgs, IndexArgs, MaterializeArgs, QueryArgs, QueryIntervalsArgs, QueryTreeArgs, TableFormat,
    VerifyArgs,
};

pub fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Build(BuildCommand::Dag(a)) => build_dag(a, out, err),
        Command::Build(BuildCommand::Intervals(a)) => build_intervals(a, out),
        Command::Build(BuildCommand::Tree(a)) => build_tree(a, out),
        Command::Color(a) => color(a, out, err),
        Command::Materialize(a) => materialize_cmd(a, out),
        Command::Index(a) => index(a, out, err),
        Command::Query(a) => query(a, out),
        Command::QueryIntervals(a) => query_intervals(a, out),
        Command::QueryTree(a) => query_tree(a, out),
        Command::Verify(a) => verify_cmd(a, out, err),
        Command::Bench(a) => bench(a, out, err),
        Command::Export(a) => export(a, out),
    }
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("input file {} does not exist", path.display())))
    }
}

fn require_output(path: Option<&PathBuf>) -> CliResult<()> {
    let Some(path) = path else { return Ok(()) };
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(CliError::Invalid(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes to `path`, or to `out` when there is none.
fn emit(
    path: Option<&PathBuf>,
    out: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> cliquedex::Result<()>,
) -> CliResult<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(io_err(p))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush().map_err(io_err(p))
        }
        None => Ok(body(out)?),
    }
}

fn write_json(out: &mut dyn Write, value: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(cliquedex::Error::from)?;
    writeln!(out, "{text}").map_err(|e| CliError::Domain(e.into()))
}

fn wide(v: i128) -> Value {
    match i64::try_from(v) {
        Ok(small) => json!(small),
        Err(_) => json!(v.to_string()),
    }
}

fn read_dag(path: &Path) -> CliResult<AcyclicDigraph> {
    Ok(AcyclicDigraph::parse_edge_list(&read_text(path)?)?)
}

fn read_table(path: &Path) -> CliResult<CliqueTable> {
    Ok(CliqueTable::read_csv(open(path)?)?)
}

fn write_sidecar(path: Option<&PathBuf>, sidecar: &Sidecar) -> CliResult<()> {
    if let Some(p) = path {
        fs::write(p, sidecar.to_json()? + "\n").map_err(io_err(p))?;
    }
    Ok(())
}

fn build_dag(a: BuildDagArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    require_file(&a.edges)?;
    require_output(a.out.as_ref())?;
    require_output(a.sidecar.as_ref())?;
    let g = read_dag(&a.edges)?;
    let f = g.descendant_function();
    let graph = build_intersection_graph(&f);
    let mut c = greedy_color(&graph, a.order);
    if a.compact_colors {
        c = c.compact();
    }
    let t = materialize(&f, &c, None)?;
    let verdict = verify_schema(&f, &t, &c);
    if !verdict.valid {
        return Err(CliError::Verification(format!("{:?}", verdict.counterexample)));
    }
    let lower = clique_lower_bound(&f);
    let _ = writeln!(
        err,
        "{} nodes, {} edges: k = {} (clique lower bound {lower})",
        g.node_count(),
        g.edge_count(),
        c.k()
    );
    write_sidecar(
        a.sidecar.as_ref(),
        &Sidecar::from_coloring(&f, &c, &format!("dag:{}", a.edges.display()), a.order.as_str()),
    )?;
    emit(a.out.as_ref(), out, |w| t.write_csv(w))?;
    if a.out.is_some() {
        write_json(
            out,
            &json!({
                "source": "dag",
                "nodes": g.node_count(),
                "edges": g.edge_count(),
                "k": c.k(),
                "clique_lower_bound": lower,
                "max_down_set": max_down_set_size(&g).unwrap_or(0),
                "order": a.order.as_str(),
                "verified": true,
            }),
        )?;
    }
    Ok(())
}

fn build_intervals(a: BuildIntervalsArgs, out: &mut dyn Write) -> CliResult<()> {
    require_file(&a.input)?;
    require_output(a.out.as_ref())?;
    require_output(a.sidecar.as_ref())?;
    let intervals = read_intervals_csv(open(&a.input)?)?;
    let s = build_endpoint_schema(&intervals)?;
    let mut verified = Value::Null;
    if a.verify {
        let v = verify_schema(&s.endpoint_function(), s.table(), &s.coloring());
        if !v.valid {
            return Err(CliError::Verification(format!("{:?}", v.counterexample)));
        }
        verified = json!(true);
    }
    if let Some(p) = &a.sidecar {
        let colors = s.entries().iter().zip(s.colors()).map(|(e, c)| (e.to_string(), *c)).collect();
        let sidecar = Sidecar {
            k: s.k(),
            colors,
            labels: Default::default(),
            color_rule: Some("entries in ascending order, color = position mod k + 1".into()),
            source: format!("intervals:{}", a.input.display()),
            strategy: "cyclic".into(),
        };
        write_sidecar(Some(p), &sidecar)?;
    }
    emit(a.out.as_ref(), out, |w| s.table().write_csv(w))?;
    if a.out.is_some() {
        write_json(
            out,
            &json!({
                "source": "intervals",
                "intervals": intervals.len(),
                "entries": s.entries().len(),
                "window": s.window(),
                "k": s.k(),
                "escalations": s.escalations(),
                "verified": verified,
            }),
        )?;
    }
    Ok(())
}

fn variant(literal: bool) -> TreeVariant {
    if literal {
        TreeVariant::Literal
    } else {
        TreeVariant::TableConsistent
    }
}

fn build_tree(a: BuildTreeArgs, out: &mut dyn Write) -> CliResult<()> {
    require_output(a.out.as_ref())?;
    require_output(a.sidecar.as_ref())?;
    let v = variant(a.literal);
    let t = build_tree_schema(a.levels, v, a.cap)?;
    if let Some(p) = &a.sidecar {
        let sidecar = Sidecar {
            k: a.levels,
            colors: Default::default(),
            labels: Default::default(),
            color_rule: Some("entry (p,q) has color q and is stored as p".into()),
            source: format!("tree:{}", a.levels),
            strategy: if a.literal { "literal" } else { "table-consistent" }.into(),
        };
        write_sidecar(Some(p), &sidecar)?;
    }
    emit(a.out.as_ref(), out, |w| t.write_csv(w))?;
    if a.out.is_some() {
        write_json(
            out,
            &json!({
                "source": "tree",
                "levels": a.levels,
                "rows": t.row_count(),
                "columns": t.k() + 1,
                "nulls": t.null_count(),
                "variant": if a.literal { "literal" } else { "table-consistent" },
            }),
        )?;
    }
    Ok(())
}

fn read_function(edges: Option<&PathBuf>, function: Option<&PathBuf>) -> CliResult<(SetValuedFunction, String)> {
    match (edges, function) {
        (Some(e), _) => {
            require_file(e)?;
            Ok((read_dag(e)?.descendant_function(), format!("dag:{}", e.display())))
        }
        (None, Some(f)) => {
            require_file(f)?;
            Ok((SetValuedFunction::read_csv(open(f)?)?, format!("function:{}", f.display())))
        }
        (None, None) => Err(CliError::Invalid("need --edges or --function".into())),
    }
}

fn color(a: ColorArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    require_output(a.out.as_ref())?;
    if a.down {
        let path = a.edges.as_ref().expect("clap enforces --edges");
        require_file(path)?;
        let g = read_dag(path)?;
        let c = greedy_down_coloring(&g, a.order)?;
        if !c.is_valid(&g) {
            return Err(CliError::Verification("greedy down-coloring is not valid".into()));
        }
        let b = down_chromatic_bounds(&g, a.caps.degeneracy_cap)?;
        let exact = if a.exact {
            json!(exact_down_chromatic(&g, a.caps.exact_cap)?)
        } else {
            Value::Null
        };
        if b.is_estimate() {
            let _ = writeln!(err, "degeneracy is a peeled estimate; the upper bound may be too low");
        }
        let colors: serde_json::Map<String, Value> = g
            .names()
            .iter()
            .zip(&c.colors)
            .map(|(n, c)| (n.clone(), json!(c)))
            .collect();
        let body = json!({
            "k": c.k,
            "order": a.order.as_str(),
            "max_down_set": b.max_down_set,
            "degeneracy": b.degeneracy.value,
            "degeneracy_exact": b.degeneracy.exact,
            "lower": b.lower,
            "upper": b.upper,
            "rule": b.rule,
            "exact": exact,
            "colors": colors,
        });
        return emit(a.out.as_ref(), out, |w| {
            serde_json::to_writer_pretty(&mut *w, &body)?;
            Ok(writeln!(w)?)
        });
    }
    let (f, source) = read_function(a.edges.as_ref(), a.function.as_ref())?;
    let g = build_intersection_graph(&f);
    let c = greedy_color(&g, a.order);
    let _ = writeln!(
        err,
        "{} entries, {} edges: k = {} (clique lower bound {})",
        g.vertex_count(),
        g.edge_count(),
        c.k(),
        clique_lower_bound(&f)
    );
    if a.exact {
        let chi = exact_chromatic(&g, a.caps.exact_cap)?;
        let _ = writeln!(err, "exact chromatic number {chi}");
    }
    let sidecar = Sidecar::from_coloring(&f, &c, &source, a.order.as_str());
    emit(a.out.as_ref(), out, |w| Ok(writeln!(w, "{}", sidecar.to_json()?)?))
}

fn materialize_cmd(a: MaterializeArgs, out: &mut dyn Write) -> CliResult<()> {
    require_output(a.out.as_ref())?;
    require_output(a.sidecar.as_ref())?;
    if let Some(c) = &a.coloring {
        require_file(c)?;
    }
    let (f, source) = read_function(a.edges.as_ref(), a.function.as_ref())?;
    let (mut c, strategy) = match &a.coloring {
        Some(p) => {
            let sidecar = Sidecar::from_json(&read_text(p)?)?;
            (sidecar.coloring_for(&f)?, sidecar.strategy)
        }
        None => (
            greedy_color(&build_intersection_graph(&f), a.order),
            a.order.as_str().to_owned(),
        ),
    };
    if a.compact_colors {
        c = c.compact();
    }
    let t = materialize(&f, &c, None)?;
    let verdict = verify_schema(&f, &t, &c);
    if !verdict.valid {
        return Err(CliError::Verification(format!("{:?}", verdict.counterexample)));
    }
    write_sidecar(a.sidecar.as_ref(), &Sidecar::from_coloring(&f, &c, &source, &strategy))?;
    emit(a.out.as_ref(), out, |w| t.write_csv(w))
}

fn index(a: IndexArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    require_file(&a.fact)?;
    require_file(&a.table)?;
    require_output(a.out.as_ref())?;
    let fact = FactTable::read_csv(open(&a.fact)?)?;
    let t = read_table(&a.table)?;
    let idx = build_index(&fact, &t);
    let _ = writeln!(
        err,
        "{} rows, {} unresolved, {} postings, {} bytes",
        fact.len(),
        idx.unresolved(),
        idx.posting_count(),
        idx.total_bytes()
    );
    emit(a.out.as_ref(), out, |w| {
        writeln!(w, "column,entry,rows,bytes")?;
        for (col, entry, posting) in idx.postings() {
            writeln!(w, "{col},{},{},{}", csv_field(entry), posting.len(), posting.bytes())?;
        }
        Ok(())
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn query(a: QueryArgs, out: &mut dyn Write) -> CliResult<()> {
    require_file(&a.fact)?;
    require_file(&a.table)?;
    let q: QueryExpr = a.expr.parse()?;
    let fact = FactTable::read_csv(open(&a.fact)?)?;
    let t = read_table(&a.table)?;
    let idx = build_index(&fact, &t);
    let (rows, stats) = evaluate_with_stats(&q, &idx)?;
    let sum = sum_rows(&rows, &fact)?;
    if a.check {
        let scan = full_scan_oracle(&q, &fact, &t);
        if scan != rows.to_vec() {
            return Err(CliError::Verification(format!(
                "index returned {} rows, scan {}",
                rows.len(),
                scan.len()
            )));
        }
    }
    if a.rids {
        for rid in rows.iter() {
            writeln!(out, "{rid}").map_err(|e| CliError::Domain(e.into()))?;
        }
        return Ok(());
    }
    let selectivity = if fact.is_empty() {
        Value::Null
    } else {
        json!(rows.len() as f64 / fact.len() as f64)
    };
    write_json(
        out,
        &json!({
            "expr": q.to_string(),
            "rows": rows.len(),
            "sum": wide(sum),
            "selectivity": selectivity,
            "postings_touched": stats.postings_touched,
            "bytes_touched": stats.bytes_touched,
            "checked": a.check,
        }),
    )
}

fn query_intervals(a: QueryIntervalsArgs, out: &mut dyn Write) -> CliResult<()> {
    require_file(&a.input)?;
    let intervals = read_intervals_csv(open(&a.input)?)?;
    let ids: Vec<String> = if a.bucketed {
        let b = bucketed_schema(&intervals)?;
        let mut ids: Vec<String> = b.query(a.a, a.b)?.into_iter().map(|j| intervals[j].id.clone()).collect();
        ids.sort_by(|x, y| cliquedex::interval_endpoint::id_cmp(x, y));
        ids
    } else {
        build_endpoint_schema(&intervals)?.query_ids(a.a, a.b)?
    };
    for id in ids {
        writeln!(out, "{id}").map_err(|e| CliError::Domain(e.into()))?;
    }
    Ok(())
}

fn query_tree(a: QueryTreeArgs, out: &mut dyn Write) -> CliResult<()> {
    if let Some(p) = &a.table {
        require_file(p)?;
    }
    if let Some(p) = &a.fact {
        require_file(p)?;
    }
    let t = match (&a.table, a.levels) {
        (Some(p), _) => read_table(p)?,
        (None, Some(n)) => build_tree_schema(n, TreeVariant::TableConsistent, a.cap)?,
        (None, None) => return Err(CliError::Invalid("need --levels or --table".into())),
    };
    let w = |e: std::io::Error| CliError::Domain(e.into());
    match &a.fact {
        None => {
            for k in overlap_query(a.k, &t)? {
                writeln!(out, "{k}").map_err(w)?;
            }
        }
        Some(p) => {
            let fact = FactTable::read_csv(open(p)?)?;
            let idx = build_index(&fact, &t);
            let rows = tree_fact_query(a.k, &idx)?;
            writeln!(out, "rid,acc,m").map_err(w)?;
            for rid in rows.iter() {
                writeln!(out, "{rid},{},{}", csv_field(fact.acc(rid)), fact.measure(rid)).map_err(w)?;
            }
        }
    }
    Ok(())
}

fn verify_cmd(a: VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let w = |e: std::io::Error| CliError::Domain(e.into());
    if let Some(table) = &a.table {
        let (fpath, cpath) = (a.function.as_ref().unwrap(), a.coloring.as_ref().unwrap());
        for p in [table, fpath, cpath] {
            require_file(p)?;
        }
        let t = read_table(table)?;
        let f = SetValuedFunction::read_csv(open(fpath)?)?;
        let c: EntryColoring = Sidecar::from_json(&read_text(cpath)?)?.coloring_for(&f)?;
        let v = verify_schema(&f, &t, &c);
        write_json(out, &serde_json::to_value(&v).map_err(cliquedex::Error::from)?)?;
        return if v.valid {
            Ok(())
        } else {
            Err(CliError::Verification("table does not realize the function".into()))
        };
    }
    let seed = a
        .seed
        .ok_or_else(|| CliError::Invalid("verify needs --all or --check with --seed, or --table".into()))?;
    let names: Vec<String> = if a.all || a.checks.is_empty() {
        verify::CHECKS.iter().map(|s| s.to_string()).collect()
    } else {
        a.checks.clone()
    };
    writeln!(out, "check,comparisons,mismatches").map_err(w)?;
    let (mut total, mut bad) = (0, 0);
    for name in &names {
        let r = verify::run_check(name, seed)?;
        writeln!(out, "{},{},{}", r.name, r.comparisons, r.mismatches).map_err(w)?;
        if let Some(first) = &r.first_failure {
            let _ = writeln!(err, "{}: {first}", r.name);
        }
        total += r.comparisons;
        bad += r.mismatches;
    }
    writeln!(out, "total,{total},{bad}").map_err(w)?;
    let _ = writeln!(err, "{total} oracle comparisons, {bad} mismatches");
    if bad > 0 {
        return Err(CliError::Verification(format!("{bad} mismatches")));
    }
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    if let Some(p) = &a.workload {
        require_file(p)?;
    }
    require_output(a.out.as_ref())?;
    let spec = match &a.workload {
        Some(p) => {
            let mut spec: WorkloadSpec = serde_json::from_str(&read_text(p)?).map_err(cliquedex::Error::from)?;
            spec.seed = a.seed;
            spec
        }
        None => {
            let mut spec = WorkloadSpec::standard(a.seed);
            spec.rows = a.rows;
            spec.dag_nodes = a.dag_nodes;
            spec.lanes = a.lanes;
            if a.no_queries {
                spec.queries.clear();
            } else if !a.queries.is_empty() {
                spec.queries = a.queries.iter().map(|q| q.parse::<QuerySpec>()).collect::<Result<_, _>>()?;
            }
            spec
        }
    };
    let workload = generate_workload(&spec)?;
    let rows = run_bench(&workload, spec.lanes)?;
    for r in &rows {
        let _ = writeln!(
            err,
            "query {}: sigma {:.5} (target {:.5}), index {:.2} ms, scan {:.2} ms",
            r.query_id,
            r.achieved_sigma,
            r.target_sigma,
            r.index_ns as f64 / 1e6,
            r.scan_ns as f64 / 1e6
        );
    }
    emit(a.out.as_ref(), out, |w| write_report(&rows, w))?;
    if let Some(r) = rows.iter().find(|r| !r.agrees()) {
        return Err(CliError::Verification(format!("index and scan disagree on query {}", r.query_id)));
    }
    Ok(())
}

fn export(a: ExportArgs, out: &mut dyn Write) -> CliResult<()> {
    require_output(a.out.as_ref())?;
    if let Some(p) = &a.table {
        require_file(p)?;
        let t = read_table(p)?;
        return match a.format {
            TableFormat::Csv => emit(a.out.as_ref(), out, |w| t.write_csv(w)),
            TableFormat::Json => {
                let rows: Vec<Value> = (0..t.row_count())
                    .map(|r| json!({ "node": t.node(r), "cells": t.row(r).collect::<Vec<_>>() }))
                    .collect();
                let body = json!({ "k": t.k(), "rows": rows });
                emit(a.out.as_ref(), out, |w| {
                    serde_json::to_writer(&mut *w, &body)?;
                    Ok(writeln!(w)?)
                })
            }
        };
    }
    let f = if let Some(p) = &a.edges {
        require_file(p)?;
        let g = read_dag(p)?;
        match a.closure {
            Closure::Descendants => g.descendant_function(),
            Closure::Ancestors => g.ancestor_function(),
        }
    } else {
        let levels = a.levels.expect("clap requires one source");
        tree_function(levels, variant(a.literal))?.0
    };
    emit(a.out.as_ref(), out, |w| f.write_csv(w))
}
