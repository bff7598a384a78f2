use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use geogrid_core::cover::{covering, CoverMode};
use geogrid_core::discretize::{
    discretize_raster, discretize_vector, parse_observation_lines, DiscretizeError, Manifest, Observation,
    RasterGrid,
};
use geogrid_core::enrich::{
    enrich_all, enrich_compressed, enrich_feature, parse_record_lines, CompressedParams, Entity, Feature,
    RelationRecord,
};
use geogrid_core::sphere::Shape;
use geogrid_core::wkt::cell_to_wkt;
use geogrid_core::CellId;
use geogrid_graph::bench::{bench_compare, BenchSpec};
use geogrid_graph::emit::{
    emit_cells, emit_observations, emit_relations, materialize_transitive, ontology_triples, CellGeometry,
    ClosureScope, EmitConfig,
};
use geogrid_graph::query::{
    eval_path_terms, evaluate, parse_path, parse_query, parse_term_text, Node, PathQuery, QueryError,
};
use geogrid_graph::rdf::{read_ntriples, write_ntriples, ParseError, Triple};
use geogrid_graph::shard::{plan, route, split_triples, ShardMap};
use geogrid_graph::store::TripleStore;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::io::{header, open, read_features, read_text, sink, write_err};
use crate::{
    BenchArgs, CellCmd, ClosureArg, CliError, Command, CoverArgs, DiscretizeCmd, DiscretizeCommon, EmitArgs,
    EmitKind, EnrichArgs, QueryArgs, QueryFormat, RecordFormat, RunConfig, ShardCmd, WktCmd,
};

fn rt(e: impl std::fmt::Display) -> CliError {
    CliError::runtime(e.to_string())
}

fn parse_cell(s: &str) -> Result<CellId, CliError> {
    CellId::parse_any(s).map_err(|e| CliError::usage(format!("{s:?}: {e}")))
}

fn check_level(level: u8) -> Result<u8, CliError> {
    if level > 30 {
        return Err(CliError::usage(format!("level {level} > 30")));
    }
    Ok(level)
}

fn write_lines(out: Option<&Path>, lines: impl IntoIterator<Item = String>) -> Result<(), CliError> {
    let mut w = sink(out)?;
    for l in lines {
        writeln!(w, "{l}").map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

fn write_json(out: Option<&Path>, v: &Value) -> Result<(), CliError> {
    write_lines(out, [serde_json::to_string_pretty(v).expect("serializable")])
}

fn write_triples(out: Option<&Path>, config: &RunConfig, triples: &[Triple]) -> Result<(), CliError> {
    let mut w = sink(out)?;
    writeln!(w, "{}", header(config)).map_err(write_err)?;
    write_ntriples(&mut w, triples).map_err(write_err)?;
    w.flush().map_err(write_err)
}

fn features(path: &str, config: &RunConfig) -> Result<Vec<Feature>, CliError> {
    read_features(path)?
        .into_iter()
        .map(|(id, g)| Feature::new(&id, g, config.densify).map_err(|e| rt(format!("feature {id}: {e}")).at(path, None)))
        .collect()
}

fn manifest(path: Option<&Path>) -> Result<Option<Manifest>, CliError> {
    path.map(|p| {
        let text = read_text(&p.display().to_string())?;
        Manifest::parse(&text).map_err(|e| {
            let line = match &e {
                DiscretizeError::Manifest { line, .. } => Some(*line),
                _ => None,
            };
            rt(e).at(&p.display().to_string(), line)
        })
    })
    .transpose()
}

pub fn dispatch(cmd: Command, mut config: RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    // per-command overrides land in the config before it is validated and echoed
    match &cmd {
        Command::Cover(a) => {
            if let Some(l) = a.level {
                config.cover_max_level = l;
                if a.mode == CoverMode::Homogeneous {
                    config.cover_min_level = l;
                }
            }
            if let Some(l) = a.min_level {
                config.cover_min_level = l;
            }
            if let Some(n) = a.max_cells {
                config.cover_max_cells = n;
            }
        }
        Command::Enrich(EnrichArgs { level: Some(l), .. }) | Command::Bench(BenchArgs { level: Some(l), .. }) => {
            config.level = *l
        }
        Command::Discretize(DiscretizeCmd::Vector { common, .. } | DiscretizeCmd::Raster { common, .. }) => {
            if let Some(l) = common.level {
                config.level = l;
            }
        }
        _ => {}
    }
    if let Command::Bench(BenchArgs { seed: Some(s), .. }) = &cmd {
        config.seed = *s;
    }
    config.validate().map_err(|e| CliError::usage(e.to_string()))?;
    match cmd {
        Command::Cell(c) => cell(c, &config, out),
        Command::Wkt(w) => wkt(w, &config, out),
        Command::Cover(a) => cover(a, &config, out),
        Command::Enrich(a) => enrich(a, &config, out),
        Command::Discretize(d) => discretize(d, &config, out),
        Command::Emit(a) => emit(a, &config, out),
        Command::Query(a) => query(a, &config, out),
        Command::Bench(a) => bench(a, &config, out),
        Command::Shard(s) => shard(s, &config, out),
        Command::Config => write_lines(out, [header(&config), config.to_text().trim_end().to_string()]),
    }
}

fn cell_json(c: CellId) -> Value {
    let ij = c.to_face_ij();
    let center = c.center_latlng();
    json!({
        "token": c.token(),
        "id": c.raw().to_string(),
        "face": c.face(),
        "level": c.level(),
        "i": ij.i,
        "j": ij.j,
        "orientation": ij.orientation,
        "center": [center.lat(), center.lng()],
        "area_km2": c.area_km2(),
    })
}

fn cell(cmd: CellCmd, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    match cmd {
        CellCmd::Info { cell, json } => {
            let v = cell_json(parse_cell(&cell)?);
            if json {
                let mut v = v;
                v["config"] = json!(config);
                return write_json(out, &v);
            }
            let keys = ["token", "id", "face", "level", "i", "j", "orientation", "center", "area_km2"];
            write_lines(
                out,
                keys.iter().map(|k| {
                    let val = match &v[k] {
                        Value::String(s) => s.clone(),
                        Value::Array(a) => a.iter().map(Value::to_string).collect::<Vec<_>>().join(" "),
                        other => other.to_string(),
                    };
                    format!("{k}\t{val}")
                }),
            )
        }
        CellCmd::Children { cell, json } => {
            let c = parse_cell(&cell)?;
            let kids = c.children().map_err(|e| CliError::usage(e.to_string()))?;
            if json {
                return write_json(out, &json!({ "config": config, "children": kids.map(cell_json) }));
            }
            write_lines(out, kids.map(|k| k.token()))
        }
        CellCmd::Wkt { cell, edge_step } => cell_wkt(&cell, edge_step, config, out),
    }
}

fn cell_wkt(cell: &str, edge_step: Option<f64>, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let c = parse_cell(cell)?;
    write_lines(out, [cell_to_wkt(c, config.antimeridian, edge_step).map_err(rt)?])
}

fn wkt(cmd: WktCmd, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    match cmd {
        WktCmd::Parse { input } => {
            let fs = read_features(&input)?;
            let mut lines = vec![header(config)];
            for (id, g) in fs {
                g.to_shape(config.densify).map_err(|e| rt(format!("feature {id}: {e}")).at(&input, None))?;
                lines.push(format!("{id}\t{}", g.to_wkt()));
            }
            write_lines(out, lines)
        }
        WktCmd::Cell { cell, edge_step } => cell_wkt(&cell, edge_step, config, out),
    }
}

fn cover(a: CoverArgs, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let params = config.covering_params(a.mode);
    let fs = features(&a.input, config)?;
    let covers: Vec<Result<Vec<String>, CliError>> = fs
        .par_iter()
        .map(|f| {
            let c = covering(&f.shape, params).map_err(|e| rt(format!("feature {}: {e}", f.id)))?;
            Ok(c.cells.iter().map(|k| format!("{}\t{}", f.id, k.token())).collect())
        })
        .collect();
    let mut lines = vec![header(config)];
    for c in covers {
        lines.extend(c?);
    }
    write_lines(out, lines)
}

fn records_out(records: &[RelationRecord], format: RecordFormat, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    match format {
        RecordFormat::Tsv => write_lines(out, std::iter::once(header(config)).chain(records.iter().map(RelationRecord::to_tsv))),
        RecordFormat::Ntriples => {
            let scheme = config.scheme().map_err(rt)?;
            write_triples(out, config, &emit_relations(records, &scheme).map_err(rt)?)
        }
    }
}

fn enrich(a: EnrichArgs, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let level = check_level(config.level)?;
    let fs = features(&a.input, config)?;
    let results = if a.compressed {
        let params = CompressedParams {
            min_level: a.min_level,
            max_level: level,
            boundary_level: a.boundary_level.unwrap_or(level),
        };
        enrich_all(&fs, |f| enrich_compressed(f, params))
    } else {
        enrich_all(&fs, |f| enrich_feature(f, level))
    };
    let mut records = Vec::new();
    for (f, r) in fs.iter().zip(results) {
        records.extend(r.map_err(|e| rt(format!("feature {}: {e}", f.id)).at(&a.input, None))?);
    }
    records_out(&records, a.format, config, out)
}

/// Local name of a property given either bare or under the ontology base.
fn property_name(p: &str, config: &RunConfig) -> Result<String, CliError> {
    let local = p.strip_prefix(config.ontology_base.as_str()).unwrap_or(p);
    let local = local.strip_prefix("kwg-ont:").unwrap_or(local);
    if local.is_empty() || local.contains([':', '/', '#']) || !geogrid_core::enrich::is_iri_safe(local) {
        return Err(CliError::usage(format!("property {p:?} is not a local name under the ontology base")));
    }
    Ok(local.to_string())
}

fn observations_out(obs: &[Observation], common: &DiscretizeCommon, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    match common.format {
        RecordFormat::Tsv => write_lines(out, std::iter::once(header(config)).chain(obs.iter().map(Observation::to_tsv))),
        RecordFormat::Ntriples => {
            let scheme = config.scheme().map_err(rt)?;
            write_triples(out, config, &emit_observations(obs, &scheme).map_err(rt)?)
        }
    }
}

fn discretize(cmd: DiscretizeCmd, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let level = check_level(config.level)?;
    match cmd {
        DiscretizeCmd::Vector { input, common } => {
            let property = property_name(&common.property, config)?;
            let m = manifest(common.manifest.as_deref())?;
            let fs = features(&input, config)?;
            let mut obs = Vec::new();
            for f in &fs {
                let o = discretize_vector(f, level, &property, &common.time, m.as_ref())
                    .map_err(|e| rt(format!("feature {}: {e}", f.id)).at(&input, None))?;
                obs.extend(o);
            }
            observations_out(&obs, &common, config, out)
        }
        DiscretizeCmd::Raster { input, stat, common } => {
            let property = property_name(&common.property, config)?;
            let m = manifest(common.manifest.as_deref())?;
            let grid = if input == "-" {
                RasterGrid::parse_ascii(&read_text("-")?).map_err(|e| rt(e).at("stdin", None))?
            } else {
                RasterGrid::load(Path::new(&input)).map_err(|e| rt(e).at(&input, None))?
            };
            let obs = discretize_raster(&grid, level, stat, &property, &common.time, m.as_ref()).map_err(|e| rt(e).at(&input, None))?;
            observations_out(&obs, &common, config, out)
        }
    }
}

/// Input kind from the first data line: one or two columns list cells,
/// three or four are relation records, seven are observations.
fn detect_kind(text: &str) -> Result<EmitKind, CliError> {
    let Some(first) = text.lines().find(|l| !l.trim().is_empty() && !l.starts_with('#')) else {
        return Ok(EmitKind::Relations);
    };
    match first.split('\t').count() {
        1 | 2 => Ok(EmitKind::Cells),
        3 | 4 => Ok(EmitKind::Relations),
        7 => Ok(EmitKind::Observations),
        n => Err(CliError::usage(format!("cannot tell the input kind from {n} columns; pass --kind"))),
    }
}

fn emit(a: EmitArgs, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let scheme = config.scheme().map_err(rt)?;
    let cfg = EmitConfig {
        scheme: scheme.clone(),
        geometry: a.geometry.unwrap_or(CellGeometry::Wkt(config.antimeridian)),
        densify: a.edge_step,
    };
    let text = read_text(&a.input)?;
    let kind = match a.kind {
        EmitKind::Auto => detect_kind(&text)?,
        k => k,
    };
    let mut triples = if a.axioms { ontology_triples(&scheme) } else { Vec::new() };
    match kind {
        EmitKind::Relations => {
            let records = parse_record_lines(&text).map_err(|(l, m)| rt(m).at(&a.input, Some(l)))?;
            let mut ts = emit_relations(&records, &scheme).map_err(rt)?;
            let scope = match a.closure {
                ClosureArg::None => None,
                ClosureArg::Cells => Some(ClosureScope::CellEdges),
                ClosureArg::All => Some(ClosureScope::All),
            };
            if let Some(scope) = scope {
                ts = materialize_transitive(&ts, &scheme, scope).map_err(rt)?;
            }
            triples.extend(ts);
            if a.with_cells {
                let cells: BTreeSet<CellId> = records
                    .iter()
                    .flat_map(|r| [&r.subject, &r.object])
                    .filter_map(|e| match e {
                        Entity::Cell(c) => Some(*c),
                        Entity::Feature(_) => None,
                    })
                    .collect();
                triples.extend(emit_cells(&cells.into_iter().collect::<Vec<_>>(), &cfg).map_err(rt)?);
            }
        }
        EmitKind::Observations => {
            let obs = parse_observation_lines(&text).map_err(|(l, m)| rt(m).at(&a.input, Some(l)))?;
            triples.extend(emit_observations(&obs, &scheme).map_err(rt)?);
        }
        EmitKind::Cells => {
            let mut cells = Vec::new();
            for (i, l) in text.lines().enumerate() {
                if l.trim().is_empty() || l.starts_with('#') {
                    continue;
                }
                let tok = l.rsplit('\t').next().unwrap_or(l);
                cells.push(CellId::parse_any(tok).map_err(|e| rt(e).at(&a.input, Some(i + 1)))?);
            }
            triples.extend(emit_cells(&cells, &cfg).map_err(rt)?);
        }
        EmitKind::Auto => unreachable!("resolved above"),
    }
    if a.manifest.is_some() && kind != EmitKind::Observations {
        return Err(CliError::usage("--manifest applies to observations only"));
    }
    write_triples(out, config, &triples)
}

fn load_store(input: &str) -> Result<TripleStore, CliError> {
    TripleStore::load(open(input)?).map_err(|e| {
        let line = e.line();
        let name = if input == "-" { "stdin" } else { input };
        rt(e).at(name, line)
    })
}

fn query_err(e: QueryError, source: &str) -> CliError {
    match &e {
        QueryError::Syntax { line, .. } => CliError::usage(e.to_string()).at(source, Some(*line)),
        QueryError::EmptyPath => CliError::usage(e.to_string()),
    }
}

fn query(a: QueryArgs, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let scheme = config.scheme().map_err(rt)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let vars: Vec<String>;
    if let Some(path) = &a.path {
        let steps = parse_path(path, &scheme).map_err(|e| query_err(e, "--path"))?;
        let mut q = PathQuery { steps, start: None, end: None };
        for b in &a.bind {
            let (end, term) = b
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("--bind {b:?}: expected start=TERM or end=TERM")))?;
            let t = parse_term_text(term, &scheme).map_err(|e| query_err(e, "--bind"))?;
            match end {
                "start" => q.start = Some(t),
                "end" => q.end = Some(t),
                other => return Err(CliError::usage(format!("--bind: unknown end {other:?}"))),
            }
        }
        let store = load_store(&a.input)?;
        let res = eval_path_terms(&store, &q).map_err(|e| query_err(e, "--path"))?;
        vars = vec!["start".into(), "end".into()];
        rows.extend(res.into_iter().map(|(s, e)| vec![s.to_string(), e.to_string()]));
    } else {
        let file = a.bgp.as_ref().expect("clap requires --path or --bgp").display().to_string();
        let q = parse_query(&read_text(&file)?, &scheme).map_err(|e| query_err(e, &file))?;
        vars = if q.select.is_empty() {
            let mut vs = BTreeSet::new();
            for p in &q.patterns {
                for n in [&p.subject, &p.object] {
                    if let Node::Var(v) = n {
                        vs.insert(v.clone());
                    }
                }
            }
            vs.into_iter().collect()
        } else {
            q.select.clone()
        };
        let store = load_store(&a.input)?;
        let res = evaluate(&store, &q).map_err(|e| query_err(e, &file))?;
        rows.extend(res.into_iter().map(|r| r.iter().map(ToString::to_string).collect()));
    }
    match a.format {
        QueryFormat::Tsv => {
            let head = vars.iter().map(|v| format!("?{v}")).collect::<Vec<_>>().join("\t");
            write_lines(out, [header(config), head].into_iter().chain(rows.into_iter().map(|r| r.join("\t"))))
        }
        QueryFormat::Json => write_json(out, &json!({ "config": config, "vars": vars, "rows": rows })),
    }
}

fn bench(a: BenchArgs, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let spec = BenchSpec {
        points: a.points,
        regions: a.regions,
        level: check_level(config.level)?,
        seed: config.seed,
        runs: a.runs.max(1),
    };
    let report = bench_compare(spec).map_err(rt)?;
    let mut v = json!({ "config": config, "report": report });
    if a.summary {
        for q in ["q1_point_in_area", "q3_area_overlaps_area"] {
            let n = v["report"][q]["mismatches"].as_array().map_or(0, Vec::len);
            v["report"][q]["mismatches"] = json!(n);
        }
    }
    write_json(out, &v)
}

fn shapes(path: &str, config: &RunConfig) -> Result<Vec<(String, Shape)>, CliError> {
    read_features(path)?
        .into_iter()
        .map(|(id, g)| {
            let s = g.to_shape(config.densify).map_err(|e| rt(format!("feature {id}: {e}")).at(path, None))?;
            Ok((id, s))
        })
        .collect()
}

fn load_map(path: &Path) -> Result<ShardMap, CliError> {
    let name = path.display().to_string();
    ShardMap::from_json(&read_text(&name)?).map_err(|e| rt(e).at(&name, None))
}

fn shard(cmd: ShardCmd, config: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    match cmd {
        ShardCmd::Plan { input, level } => {
            let level = check_level(level)?;
            let mut keys = Vec::new();
            for (id, s) in shapes(&input, config)? {
                keys.extend(plan(&s, level).map_err(|e| rt(format!("feature {id}: {e}")))?.keys);
            }
            let map = ShardMap::new(level, keys).map_err(rt)?;
            let mut v: Value = serde_json::from_str(&map.to_json()).expect("map JSON");
            v["config"] = json!(config);
            write_json(out, &v)
        }
        ShardCmd::Route { input, map } => {
            let m = load_map(&map)?;
            let params = config.covering_params(CoverMode::Ordinary);
            let mut routes = Vec::new();
            for (id, s) in shapes(&input, config)? {
                let c = covering(&s, params).map_err(|e| rt(format!("feature {id}: {e}")))?;
                let r = route(&c, &m);
                routes.push(json!({
                    "id": id,
                    "shards": r.shards.iter().map(|k| k.token()).collect::<Vec<_>>(),
                    "unroutable": r.unroutable.iter().map(|k| k.token()).collect::<Vec<_>>(),
                }));
            }
            write_json(out, &json!({ "config": config, "routes": routes }))
        }
        ShardCmd::Split { input, map, out_dir } => {
            let m = load_map(&map)?;
            let scheme = config.scheme().map_err(rt)?;
            let name = if input == "-" { "stdin".to_string() } else { input.clone() };
            let triples: Vec<Triple> = read_ntriples(open(&input)?)
                .collect::<Result<_, ParseError>>()
                .map_err(|e| {
                    let line = e.line();
                    rt(e).at(&name, line)
                })?;
            let split = split_triples(triples, &m, &scheme).map_err(rt)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| rt(e).at(&out_dir.display().to_string(), None))?;
            let mut streams: Vec<(String, &Vec<Triple>)> = split.shards.iter().map(|(k, v)| (k.token(), v)).collect();
            streams.push(("global".to_string(), &split.global));
            // one writer per shard stream
            streams
                .par_iter()
                .map(|(name, ts)| write_triples(Some(&out_dir.join(format!("{name}.nt"))), config, ts))
                .collect::<Result<Vec<()>, CliError>>()?;
            let counts: BTreeMap<String, usize> = streams.iter().map(|(n, ts)| (n.clone(), ts.len())).collect();
            write_json(
                out,
                &json!({
                    "config": config,
                    "input": split.input,
                    "cross_shard": split.cross_shard,
                    "duplicates": split.duplicates,
                    "outside": split.outside,
                    "conserved": split.conserved(),
                    "streams": counts,
                }),
            )
        }
    }
}
