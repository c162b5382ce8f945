//! Subcommand bodies. Each returns `Ok(false)` when a check it ran failed.

use std::error::Error;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ebc_core::chain::{
    functional_external_length, functional_j, functional_total_length, functional_total_length_power, sample_block_path,
    PathOptions,
};
use ebc_core::evolving::{EventLog, EventModel, GenealogyTrace, StreamingLog};
use ebc_core::replicate::{replicate_map, stream, try_replicate_map, DOMAIN_REFERENCE};
use ebc_core::stable::{cf_stable, joint_cf_limit_series, sample_stable, MovingAverage, MovingAverageOptions};
use ebc_core::verify::{ecf_distance, ks_two_sample, SampleMeta, SampleSet};
use ebc_core::{RatesContext, StableParams};
use ebc_suite::{Runner, MASTER_SEED};
use rand::Rng;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::output::{stamped, write_json, Column, Format, Table};
use crate::plot;

type Res = Result<bool, Box<dyn Error>>;

fn path(cfg: &ExperimentConfig, key: &str) -> Option<PathBuf> {
    cfg.get(key).map(PathBuf::from)
}

fn format(cfg: &ExperimentConfig) -> Result<Format, Box<dyn Error>> {
    Ok(Format::parse(cfg.get("format").unwrap_or("csv"))?)
}

fn time_label(s: f64) -> String {
    format!("J@{s}")
}

pub fn rates(cfg: &ExperimentConfig) -> Res {
    let alpha = cfg.alpha()?;
    let n = cfg.n()?;
    let ctx = RatesContext::new(alpha);
    let mut t = Table::new(
        "rates",
        vec![
            Column::new("b", "number of blocks"),
            Column::new("k", "merger size"),
            Column::new("lambda_bk", "rate of one given k-subset merging"),
            Column::new("size_prob", "probability that a merger among b blocks has size k"),
            Column::new("total_rate", "total merger rate with b blocks"),
        ],
    );
    for b in 2..=n {
        let pmf = ctx.merger_size_pmf(b)?;
        let total = ctx.total_rate(b)?;
        for k in 2..=b {
            t.push(vec![json!(b), json!(k), json!(ctx.merger_rate(b, k)?), json!(pmf[k - 2]), json!(total)]);
        }
    }
    t.emit(cfg, format(cfg)?, path(cfg, "out").as_deref())?;
    Ok(true)
}

pub fn static_run(cfg: &ExperimentConfig) -> Res {
    let alpha = cfg.alpha()?;
    let (n, reps, seed) = (cfg.n()?, cfg.replicates()?, cfg.seed()?);
    let f = cfg.functional()?;
    let ctx = RatesContext::new(alpha);
    let rows = try_replicate_map(seed, reps, |_, rng| {
        let p = sample_block_path(&ctx, n, rng, PathOptions::FULL)?;
        Ok((
            p.tau(),
            functional_total_length(&p)?,
            functional_total_length_power(&ctx, &p),
            functional_external_length(&p)?,
            functional_j(&p, &f),
        ))
    })?;
    let mut t = Table::new(
        "static-run",
        vec![
            Column::new("seed", "master seed"),
            Column::new("replicate", "replicate index; its stream is keyed by (seed, index)"),
            Column::new("n", "sample size"),
            Column::new("alpha", "stability index"),
            Column::new("tau", "number of mergers"),
            Column::new("L", "total branch length"),
            Column::new("L2prime", "alpha Gamma(alpha) times the sum of X_k^(1 - alpha) over the chain"),
            Column::new("ell", "total external branch length"),
            Column::new("J_f", "J_n(f) for the configured functional"),
        ],
    );
    for (i, (tau, l, l2, ell, j)) in rows.into_iter().enumerate() {
        t.push(vec![json!(seed), json!(i), json!(n), json!(alpha.value()), json!(tau), json!(l), json!(l2), json!(ell), json!(j)]);
    }
    t.emit(cfg, format(cfg)?, path(cfg, "out").as_deref())?;
    Ok(true)
}

fn series_table(kind: &'static str, seed: u64, n: Option<usize>, alpha: f64, times: &[f64], rows: Vec<Vec<f64>>) -> Table {
    let mut columns = vec![Column::new("seed", "master seed"), Column::new("replicate", "replicate index")];
    if n.is_some() {
        columns.push(Column::new("n", "population size"));
    }
    columns.push(Column::new("alpha", "stability index"));
    for &s in times {
        columns.push(Column::new(time_label(s), format!("value at scaled time s = {s}")));
    }
    let mut t = Table::new(kind, columns);
    for (i, row) in rows.into_iter().enumerate() {
        let mut cells = vec![json!(seed), json!(i)];
        if let Some(n) = n {
            cells.push(json!(n));
        }
        cells.push(json!(alpha));
        cells.extend(row.into_iter().map(Value::from));
        t.push(cells);
    }
    t
}

fn plot_paths(cfg: &ExperimentConfig, title: &str, times: &[f64], rows: &[Vec<f64>]) -> Result<(), Box<dyn Error>> {
    if let Some(p) = path(cfg, "plot") {
        let shown: Vec<Vec<f64>> = rows.iter().take(20).cloned().collect();
        std::fs::write(p, plot::series_paths(title, times, &shown))?;
    }
    Ok(())
}

/// Dump of one extracted genealogy.
fn trace_json(s: f64, t: &GenealogyTrace) -> Value {
    json!({
        "scaled_time": s,
        "query_time": t.query_time,
        "tau": t.tau(),
        "mrca_depth": t.mrca_depth(),
        "depths": t.depths,
        "blocks": t.blocks,
        "singletons": t.singletons,
        "external_length": t.external_length(),
    })
}

/// Config identifying a trace dump: the log header plus the query times.
fn trace_config(log: &EventLog, times: &[f64]) -> Result<ExperimentConfig, Box<dyn Error>> {
    let mut c = ExperimentConfig::default();
    c.set("alpha", &log.alpha().value().to_string())?;
    c.set("n", &log.n().to_string())?;
    c.set("seed", &log.seed().to_string())?;
    c.set("times", &times.iter().map(f64::to_string).collect::<Vec<_>>().join(","))?;
    Ok(c)
}

fn traces(log: &mut EventLog, times: &[f64]) -> Result<Value, Box<dyn Error>> {
    let unit = log.model().time_unit();
    let mut out = Vec::new();
    for &s in times {
        out.push(trace_json(s, &log.extract_tree(s * unit)?));
    }
    let c = trace_config(log, times)?;
    Ok(stamped("traces", &c, json!({ "window": log.window(), "traces": out })))
}

fn traces_path(log: &Path) -> PathBuf {
    let mut s = log.as_os_str().to_owned();
    s.push(".traces.json");
    PathBuf::from(s)
}

pub fn evolve_run(cfg: &ExperimentConfig) -> Res {
    let alpha = cfg.alpha()?;
    let (n, reps, seed) = (cfg.n()?, cfg.replicates()?, cfg.seed()?);
    let f = cfg.functional()?;
    let times = cfg.times()?;
    let ctx = RatesContext::new(alpha);
    let model = EventModel::new(&ctx, n)?;
    let rows = try_replicate_map(seed, reps, |_, rng| {
        let mut log = StreamingLog::new(Arc::clone(&model), rng.random());
        log.functional_series(&times, &f)
    })?;
    if let Some(p) = path(cfg, "save-log") {
        let log_seed: u64 = ebc_core::replicate::replicate_rng(seed, 0).random();
        let mut log = EventLog::with_model(Arc::clone(&model), log_seed);
        let doc = traces(&mut log, &times)?;
        log.write_binary(std::io::BufWriter::new(File::create(&p)?))?;
        write_json(&doc, Some(&traces_path(&p)))?;
    }
    plot_paths(cfg, &format!("J(s) for {}, n = {n}", cfg.get("functional").unwrap_or("")), &times, &rows)?;
    let t = series_table("evolve-run", seed, Some(n), alpha.value(), &times, rows);
    t.emit(cfg, format(cfg)?, path(cfg, "out").as_deref())?;
    Ok(true)
}

pub fn replay(cfg: &ExperimentConfig) -> Res {
    let p = path(cfg, "log").ok_or("replay needs --log")?;
    let mut log = EventLog::read_binary(BufReader::new(File::open(&p)?))?;
    let times = cfg.times()?;
    let doc = traces(&mut log, &times)?;
    write_json(&doc, path(cfg, "out").as_deref())?;
    Ok(true)
}

pub fn limit_run(cfg: &ExperimentConfig) -> Res {
    let alpha = cfg.alpha()?;
    let (reps, seed) = (cfg.replicates()?, cfg.seed()?);
    let f = cfg.functional()?;
    let times = cfg.times()?;
    let opts = MovingAverageOptions { eps: cfg.eps()?, r_max: cfg.rmax()?, ..MovingAverageOptions::default() };
    let process = MovingAverage::new(&f, &times, opts)?;
    // the limit of J is the negated compensated sum
    let rows = replicate_map(seed, reps, |_, rng| process.sample(rng).into_iter().map(|v| -v).collect::<Vec<f64>>());
    plot_paths(cfg, &format!("limit of J(s) for {}", cfg.get("functional").unwrap_or("")), &times, &rows)?;
    let t = series_table("limit-run", seed, None, alpha.value(), &times, rows);
    t.emit(cfg, format(cfg)?, path(cfg, "out").as_deref())?;
    Ok(true)
}

pub fn limit_cf(cfg: &ExperimentConfig) -> Res {
    let f = cfg.functional()?;
    let times = cfg.times()?;
    let grid = cfg.theta(times.len())?;
    let mut re = Vec::new();
    let mut im = Vec::new();
    for t in &grid {
        let z = joint_cf_limit_series(&f, &times, t)?;
        re.push(z.re);
        im.push(z.im);
    }
    let theta: Value = if times.len() == 1 { grid.iter().map(|t| t[0]).collect() } else { json!(grid) };
    let doc = stamped("limit-cf", cfg, json!({ "times": times, "theta": theta, "re": re, "im": im }));
    write_json(&doc, path(cfg, "out").as_deref())?;
    Ok(true)
}

fn read_column(input: &Path, column: Option<&str>) -> Result<(String, Vec<f64>), Box<dyn Error>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(input)?;
    let headers = r.headers()?.clone();
    let name = match column {
        Some(c) => c.to_string(),
        None => headers.iter().next_back().ok_or("input has no columns")?.to_string(),
    };
    let j = headers.iter().position(|h| h == name).ok_or_else(|| format!("column '{name}' not in {}", input.display()))?;
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let cell = rec.get(j).ok_or("short row")?;
        values.push(cell.parse::<f64>().map_err(|e| format!("column '{name}': '{cell}': {e}"))?);
    }
    Ok((name, values))
}

pub fn verify(cfg: &ExperimentConfig) -> Res {
    let alpha = cfg.alpha()?;
    let seed = cfg.seed()?;
    let input = path(cfg, "input").ok_or("verify needs --input")?;
    let (name, values) = read_column(&input, cfg.get("column"))?;
    let f = cfg.functional()?;
    let (sigma, beta) = f.j_limit()?;
    let law = StableParams::new(alpha, sigma, beta)?;
    let count = cfg.reference()?;
    let reference: Vec<f64> = (0..count as u64).map(|i| sample_stable(&law, &mut stream(seed, DOMAIN_REFERENCE, i))).collect();
    let meta = |label: &str, s: Option<u64>| SampleMeta {
        label: label.into(),
        n: None,
        alpha: Some(alpha.value()),
        functional: cfg.get("functional").map(Into::into),
        seed: s,
    };
    let sample = SampleSet::univariate(values.clone(), meta(&name, None))?;
    let refset = SampleSet::univariate(reference.clone(), meta("stable reference", Some(seed)))?;
    let ks = ks_two_sample(&sample, &refset, 1e-3)?.with_meta("sigma", sigma).with_meta("beta", beta);
    let grid: Vec<Vec<f64>> = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0].iter().map(|&t| vec![t]).collect();
    let cf = ecf_distance(&sample, |t| cf_stable(&law, t[0]), &grid, 0.0)?;
    if let Some(p) = path(cfg, "qq") {
        std::fs::write(p, plot::qq(&format!("{name} against S(sigma = {sigma:.4}, beta = {beta})"), &values, &reference))?;
    }
    let pass = ks.pass && cf.pass;
    let reports = vec![serde_json::to_value(&ks)?, serde_json::to_value(&cf)?];
    write_json(&stamped("verify", cfg, json!({ "column": name, "pass": pass, "reports": reports })), path(cfg, "out").as_deref())?;
    Ok(pass)
}

pub fn suite(cfg: &ExperimentConfig) -> Res {
    let seed = cfg.seed_or(MASTER_SEED)?;
    match cfg.get("suite").unwrap_or("smoke") {
        "smoke" => {
            let reports = ebc_suite::smoke(seed)?;
            for r in &reports {
                eprintln!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.test);
            }
            let pass = reports.iter().all(|r| r.pass);
            write_json(&stamped("suite-smoke", cfg, json!({ "pass": pass, "reports": reports })), path(cfg, "out").as_deref())?;
            Ok(pass)
        }
        "acceptance" => {
            let only = cfg.criteria()?;
            let outcomes = Runner::new(seed).run(&only, |o| eprintln!("{}", o.line()));
            let ok = outcomes.iter().all(|o| o.pass || o.shortfall.is_some());
            write_json(&stamped("suite-acceptance", cfg, json!({ "seed": seed, "outcomes": outcomes })), path(cfg, "out").as_deref())?;
            Ok(ok)
        }
        other => Err(format!("config field 'suite': '{other}' is not smoke or acceptance").into()),
    }
}
