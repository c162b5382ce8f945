use std::collections::BTreeMap;
use std::sync::Arc;

use ebc_core::chain::{functional_j, hitting_index, sample_block_path, PathOptions};
use ebc_core::evolving::{EventModel, StreamingLog};
use ebc_core::funcspec::parse_fspec;
use ebc_core::replicate::{replicate_map, stream, try_replicate_map, DOMAIN_REFERENCE};
use ebc_core::stable::{
    cf_stable, joint_cf_limit_series, joint_cf_moving_average, levysub_check, sample_poisson_points, sample_stable,
    MovingAverage, MovingAverageOptions, PointKind, SmallJumps, ThetaIntegral,
};
use ebc_core::verify::{ecf, ecf_distance, ks_two_sample, trend_report, SampleMeta, SampleSet, TestReport};
use ebc_core::{Alpha, Error, LimitProfile, RatesContext, Result, StableParams};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::oracle;
use crate::Runner;

/// What a criterion reports before timing is attached.
pub struct Body {
    pub pass: bool,
    pub summary: String,
    pub reports: Vec<TestReport>,
    pub shortfall: Option<&'static str>,
}

impl Body {
    fn new(pass: bool, summary: String, reports: Vec<TestReport>) -> Self {
        Self { pass, summary, reports, shortfall: None }
    }
}

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub budget_seconds: f64,
    pub run: fn(&Runner) -> Result<Body>,
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "merger rates against quadrature", budget_seconds: 60.0, run: c01_rates },
    Criterion { id: 2, title: "small-n path enumeration", budget_seconds: 60.0, run: c02_paths },
    Criterion { id: 3, title: "evolving extraction against chain", budget_seconds: 300.0, run: c03_cross_sampler },
    Criterion { id: 4, title: "number of collisions", budget_seconds: 1800.0, run: c04_tau },
    Criterion { id: 5, title: "total length", budget_seconds: 1800.0, run: c05_total_length },
    Criterion { id: 6, title: "external length", budget_seconds: 1800.0, run: c06_external_length },
    Criterion { id: 7, title: "external to total length ratio", budget_seconds: 1800.0, run: c07_ratio },
    Criterion { id: 8, title: "surviving blocks follow m(r)", budget_seconds: 600.0, run: c08_block_counts },
    Criterion { id: 9, title: "hitting indices", budget_seconds: 600.0, run: c09_hitting },
    Criterion { id: 10, title: "substitution between point pictures", budget_seconds: 600.0, run: c10_levysub },
    Criterion { id: 11, title: "limit objects against closed forms", budget_seconds: 1200.0, run: c11_limit_objects },
    Criterion { id: 12, title: "evolving functionals, joint limit", budget_seconds: 3600.0, run: c12_joint_limit },
    Criterion { id: 13, title: "variance of the truncation remainder", budget_seconds: 600.0, run: c13_truncation },
];

const ALPHA: f64 = 1.5;
const LADDER: [usize; 3] = [1_000, 10_000, 100_000];
const TARGET_N: usize = 10_000;
const STATIC_REPLICATES: usize = 2_000;
const REFERENCE_DRAWS: usize = 100_000;
const STABLE_GRID: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

fn alpha() -> Alpha {
    Alpha::new(ALPHA).expect("fixed alpha is valid")
}

fn meta(label: &str, n: Option<usize>, functional: Option<&str>, seed: u64) -> SampleMeta {
    SampleMeta {
        label: label.into(),
        n: n.map(|v| v as u64),
        alpha: Some(ALPHA),
        functional: functional.map(Into::into),
        seed: Some(seed),
    }
}

fn univariate(values: Vec<f64>, m: SampleMeta) -> Result<SampleSet> {
    SampleSet::univariate(values, m)
}

fn grid1(points: &[f64]) -> Vec<Vec<f64>> {
    points.iter().map(|&t| vec![t]).collect()
}

fn stable_reference(law: &StableParams, count: usize, seed: u64) -> Vec<f64> {
    (0..count as u64).into_par_iter().map(|i| sample_stable(law, &mut stream(seed, DOMAIN_REFERENCE, i))).collect()
}

fn c01_rates(_: &Runner) -> Result<Body> {
    let mut worst: f64 = 0.0;
    let mut at = (0.0, 0, 0);
    for a in [1.1, 1.3, 1.5, 1.7, 1.9] {
        let ctx = RatesContext::new(Alpha::new(a)?);
        let errs: Vec<(f64, usize, usize)> = (2..=200usize)
            .into_par_iter()
            .flat_map_iter(|b| {
                let ctx = &ctx;
                (2..=b).map(move |k| {
                    let exact = ctx.merger_rate(b, k).expect("valid indices");
                    let quad = oracle::merger_rate_by_quadrature(a, b, k);
                    ((exact - quad).abs() / quad, b, k)
                })
            })
            .collect();
        for (e, b, k) in errs {
            if e > worst {
                worst = e;
                at = (a, b, k);
            }
        }
    }
    let report = TestReport::at_most("rate_relative_error", worst, 1e-9)
        .with_meta("alpha", at.0)
        .with_meta("b", at.1)
        .with_meta("k", at.2);
    Ok(Body::new(
        report.pass,
        format!("max relative error {worst:.2e} at alpha {}, b {}, k {}", at.0, at.1, at.2),
        vec![report],
    ))
}

fn c02_paths(r: &Runner) -> Result<Body> {
    let ctx = RatesContext::new(alpha());
    let chains = 1_000_000usize;
    let chunk = 10_000usize;
    let mut reports = Vec::new();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for n in [3usize, 4] {
        let exact = oracle::enumerate_paths(ALPHA, n);
        let seed = r.seed_for(2, n as u64);
        let counts = try_replicate_map(seed, chains / chunk, |_, rng| {
            let mut local: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
            for _ in 0..chunk {
                let p = sample_block_path(&ctx, n, rng, PathOptions::BARE)?;
                *local.entry(p.blocks).or_default() += 1;
            }
            Ok(local)
        })?;
        let mut total: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        for m in counts {
            for (k, v) in m {
                *total.entry(k).or_default() += v;
            }
        }
        if total.keys().any(|k| !exact.iter().any(|(p, _)| p == k)) {
            pass = false;
        }
        for (path, p) in &exact {
            let freq = *total.get(path).unwrap_or(&0) as f64 / chains as f64;
            let se = (p * (1.0 - p) / chains as f64).sqrt();
            let z = (freq - p).abs() / se;
            worst = worst.max(z);
            let rep = TestReport::at_most(format!("path {path:?}"), z, 3.0)
                .with_meta("probability", *p)
                .with_meta("frequency", freq);
            pass &= rep.pass;
            reports.push(rep);
        }
    }
    // the three-block chain ends in one step with probability 0.1
    let p3 = oracle::enumerate_paths(ALPHA, 3);
    let direct = p3.iter().find(|(p, _)| p == &vec![3, 1]).map_or(0.0, |x| x.1);
    let oracle_ok = (direct - 0.1).abs() < 1e-9;
    Ok(Body::new(
        pass && oracle_ok,
        format!("largest deviation {worst:.2} standard errors over {} paths; P(tau_3 = 1) = {direct:.10}", reports.len()),
        reports,
    ))
}

fn evolving_traces(n: usize, replicates: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let ctx = RatesContext::new(alpha());
    let model = EventModel::new(&ctx, n)?;
    try_replicate_map(seed, replicates, |_, rng| {
        let mut log = StreamingLog::new(Arc::clone(&model), rng.random());
        let trace = log.extract_tree(0.0)?;
        let path = trace.to_block_path();
        Ok((trace.tau() as f64, ebc_core::chain::functional_total_length(&path)?))
    })
}

fn c03_cross_sampler(r: &Runner) -> Result<Body> {
    let (n, reps) = (100usize, 5_000usize);
    let ctx = RatesContext::new(alpha());
    let chain_seed = r.seed_for(3, 1);
    let chain: Vec<(f64, f64)> = try_replicate_map(chain_seed, reps, |_, rng| {
        let p = sample_block_path(&ctx, n, rng, PathOptions { times: true, singletons: false })?;
        Ok((p.tau() as f64, ebc_core::chain::functional_total_length(&p)?))
    })?;
    let evo_seed = r.seed_for(3, 2);
    let evo = evolving_traces(n, reps, evo_seed)?;
    let split = |v: &[(f64, f64)], j: usize| v.iter().map(|p| if j == 0 { p.0 } else { p.1 }).collect::<Vec<f64>>();
    let tau = ks_two_sample(
        &univariate(split(&chain, 0), meta("chain", Some(n), Some("tau"), chain_seed))?,
        &univariate(split(&evo, 0), meta("evolving", Some(n), Some("tau"), evo_seed))?,
        1e-3,
    )?;
    let length = ks_two_sample(
        &univariate(split(&chain, 1), meta("chain", Some(n), Some("total length"), chain_seed))?,
        &univariate(split(&evo, 1), meta("evolving", Some(n), Some("total length"), evo_seed))?,
        1e-3,
    )?;
    Ok(Body::new(
        tau.pass && length.pass,
        format!(
            "KS tau {:.4} (threshold {:.4}), KS total length {:.4} (threshold {:.4})",
            tau.statistic, tau.threshold, length.statistic, length.threshold
        ),
        vec![tau, length],
    ))
}

/// KS against a reference stable sample at the target size, an empirical-CF
/// distance there, and optionally the KS trend over the ladder.
#[allow(clippy::too_many_arguments)]
fn stable_protocol(
    r: &Runner,
    id: u8,
    label: &str,
    law: &StableParams,
    ladder: &[(usize, Vec<f64>)],
    ks_tol: f64,
    ecf_tol: Option<f64>,
    trend: bool,
    exact_mean: Option<f64>,
) -> Result<(bool, bool, String, Vec<TestReport>)> {
    let ref_seed = r.seed_for(id, 100);
    let reference = univariate(stable_reference(law, REFERENCE_DRAWS, ref_seed), meta("stable reference", None, None, ref_seed))?;
    let mut reports = Vec::new();
    let mut ks_by_n = Vec::new();
    let mut pass = true;
    let mut summary = Vec::new();
    let mut mean_ok = None;
    let mut converging = !trend;
    for (n, values) in ladder {
        let sample = univariate(values.clone(), meta(label, Some(*n), Some(label), r.seed_for(0, *n as u64)))?;
        let ks = ks_two_sample(&sample, &reference, 1e-3)?.with_meta("n", *n);
        ks_by_n.push((*n as u64, ks.statistic));
        if *n == TARGET_N {
            let ks = ks.with_threshold(ks_tol);
            pass &= ks.pass;
            summary.push(format!("KS {:.4} (<= {ks_tol})", ks.statistic));
            reports.push(ks);
            if let Some(tol) = ecf_tol {
                let d = ecf_distance(&sample, |t| cf_stable(law, t[0]), &grid1(&STABLE_GRID), 0.0)?.with_threshold(tol);
                pass &= d.pass;
                summary.push(format!("CF distance {:.4} (<= {tol})", d.statistic));
                reports.push(d);
            }
            if let Some(exact) = exact_mean {
                let m = values.iter().sum::<f64>() / values.len() as f64;
                let sd = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)).sqrt();
                let z = (m - exact).abs() / (sd / (values.len() as f64).sqrt());
                let rep = TestReport::at_most("sample mean against exact finite-n mean, z-score", z, 3.0)
                    .with_meta("sample_mean", m)
                    .with_meta("exact_mean", exact)
                    .with_meta("diagnostic", true);
                summary.push(format!("mean {m:.4} vs exact {exact:.4} (z {z:.2})"));
                mean_ok = Some(rep.pass);
                reports.push(rep);
            }
        } else {
            reports.push(ks);
        }
    }
    if trend {
        let t = trend_report(&ks_by_n, 1.2)?;
        pass &= t.pass;
        converging = ks_by_n.windows(2).all(|w| w[1].1 < w[0].1);
        let vals: Vec<String> = ks_by_n.iter().map(|(n, v)| format!("{n}:{v:.3}")).collect();
        summary.push(format!("KS trend [{}]", vals.join(" ")));
        reports.push(t);
    }
    // a failure counts as finite-n only when the sampler matches the exact
    // finite-n mean and the distance to the limit shrinks along the ladder
    let finite_n = mean_ok == Some(true) && converging;
    Ok((pass, finite_n, summary.join(", "), reports))
}

fn sigma_check(example: u8, preset: &str) -> Result<(f64, f64, TestReport)> {
    let f = parse_fspec(preset, alpha())?;
    let (sigma_core, beta_core) = f.sigma_beta()?;
    let sigma_closed = oracle::example_sigma(example, ALPHA);
    let rel = (sigma_core - sigma_closed).abs() / sigma_closed;
    Ok((sigma_closed, beta_core, TestReport::at_most(format!("sigma_{example} agreement"), rel, 1e-8)))
}

fn static_ladder(r: &Runner, stat: impl Fn(usize, &crate::StaticDraw) -> f64) -> Result<Vec<(usize, Vec<f64>)>> {
    LADDER
        .iter()
        .map(|&n| Ok((n, r.static_draws(n, STATIC_REPLICATES)?.iter().map(|d| stat(n, d)).collect())))
        .collect()
}

const SLOW_CONVERGENCE: &str =
    "slow convergence in n; sample matches the exact finite-n mean and the distance shrinks along the ladder";

fn example_criterion(
    r: &Runner,
    id: u8,
    example: u8,
    preset: &str,
    exact_mean: f64,
    stat: impl Fn(usize, &crate::StaticDraw) -> f64,
) -> Result<Body> {
    let (sigma, _, agree) = sigma_check(example, preset)?;
    let law = StableParams::new(alpha(), sigma, -1.0)?;
    let ladder = static_ladder(r, stat)?;
    let (pass, finite_n, summary, mut reports) =
        stable_protocol(r, id, preset, &law, &ladder, 0.08, Some(0.05), true, Some(exact_mean))?;
    let agreed = agree.pass;
    let ok = pass && agreed;
    reports.insert(0, agree);
    let mut body = Body::new(ok, format!("sigma {sigma:.6}, {summary}"), reports);
    if !ok && agreed && finite_n {
        body.shortfall = Some(SLOW_CONVERGENCE);
    }
    Ok(body)
}

fn centering_length(n: f64) -> f64 {
    let g = libm_gamma(ALPHA);
    ALPHA * (ALPHA - 1.0) * g * n.powf(2.0 - ALPHA) / (2.0 - ALPHA)
}

fn centering_external(n: f64) -> f64 {
    ALPHA * (ALPHA - 1.0) * libm_gamma(ALPHA) * n.powf(2.0 - ALPHA)
}

fn libm_gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

fn c04_tau(r: &Runner) -> Result<Body> {
    let nf = TARGET_N as f64;
    let exact = nf.powf(-1.0 / ALPHA) * (r.exact_means(TARGET_N)?.0 - (ALPHA - 1.0) * nf);
    let body = example_criterion(r, 4, 1, "tau", exact, |n, d| {
        let nf = n as f64;
        nf.powf(-1.0 / ALPHA) * (d.tau as f64 - (ALPHA - 1.0) * nf)
    })?;
    // the functional route must agree with the direct formula on a sampled path
    let f = parse_fspec("tau", alpha())?;
    let ctx = RatesContext::new(alpha());
    let mut rng = stream(r.seed_for(4, 1), 0, 0);
    let path = sample_block_path(&ctx, 1000, &mut rng, PathOptions::BARE)?;
    let direct = 1000f64.powf(-1.0 / ALPHA) * (path.tau() as f64 - 500.0);
    let check = TestReport::at_most("J(alpha - 1) reduces to tau", (functional_j(&path, &f) - direct).abs(), 1e-9);
    let pass = body.pass && check.pass;
    let mut reports = body.reports;
    reports.push(check);
    Ok(Body { pass, reports, ..body })
}

fn c05_total_length(r: &Runner) -> Result<Body> {
    let nf = TARGET_N as f64;
    let exact = nf.powf(ALPHA - 1.0 - 1.0 / ALPHA) * (r.exact_means(TARGET_N)?.1 - centering_length(nf));
    let body = example_criterion(r, 5, 2, "length", exact, |n, d| {
        let nf = n as f64;
        nf.powf(ALPHA - 1.0 - 1.0 / ALPHA) * (d.total_length - centering_length(nf))
    })?;
    let gate = parse_fspec("length", Alpha::new(1.7)?);
    let rejected = matches!(gate, Err(Error::Membership { .. }));
    let mut reports = body.reports;
    reports.push(TestReport::at_most("rejected at alpha 1.7", if rejected { 0.0 } else { 1.0 }, 0.0));
    let summary = format!("{}, alpha 1.7 rejected: {rejected}", body.summary);
    Ok(Body { pass: body.pass && rejected, summary, reports, shortfall: body.shortfall.filter(|_| rejected) })
}

fn c06_external_length(r: &Runner) -> Result<Body> {
    let nf = TARGET_N as f64;
    let exact_external = r.exact_means(TARGET_N)?.2;
    let exact = nf.powf(ALPHA - 1.0 - 1.0 / ALPHA) * (exact_external - centering_external(nf));
    let body = example_criterion(r, 6, 3, "extlength", exact, |n, d| {
        let nf = n as f64;
        nf.powf(ALPHA - 1.0 - 1.0 / ALPHA) * (d.external_length - centering_external(nf))
    })?;
    let draws = r.static_draws(TARGET_N, STATIC_REPLICATES)?;
    let c = centering_external(TARGET_N as f64);
    let mean = draws[..500].iter().map(|d| d.external_length / c).sum::<f64>() / 500.0;
    let rep = TestReport::at_most("mean external length over centering, deviation from 1", (mean - 1.0).abs(), 0.03);
    let exact_ratio = exact_external / c;
    let pass = body.pass && rep.pass;
    let shortfall = body.shortfall.filter(|_| rep.pass);
    let mut reports = body.reports;
    reports.push(rep.with_meta("exact_mean_ratio", exact_ratio));
    let summary = format!("{}, mean ratio {mean:.4} (exact {exact_ratio:.4})", body.summary);
    Ok(Body { pass, summary, reports, shortfall })
}

fn c07_ratio(r: &Runner) -> Result<Body> {
    let (sigma, _, agree) = sigma_check(4, "ratio-linearization")?;
    let law = StableParams::new(alpha(), sigma, 1.0)?;
    let draws = r.static_draws(TARGET_N, STATIC_REPLICATES)?;
    let ratios: Vec<f64> = draws.iter().map(|d| d.external_length / d.total_length).collect();
    let mean = ratios[..500].iter().sum::<f64>() / 500.0;
    let mean_rep = TestReport::at_most("mean ratio, deviation from 2 - alpha", (mean - (2.0 - ALPHA)).abs(), 0.02);
    let scale = (TARGET_N as f64).powf(1.0 - 1.0 / ALPHA);
    let scaled: Vec<f64> = ratios.iter().map(|q| scale * (q - (2.0 - ALPHA))).collect();
    let (pass, _, summary, mut reports) =
        stable_protocol(r, 7, "ratio", &law, &[(TARGET_N, scaled)], 0.10, None, false, None)?;
    // the exact means give the deterministic offset of the ratio at this n;
    // shifting the limit law by it alone shows how far KS can get
    let (_, exact_length, exact_external) = r.exact_means(TARGET_N)?;
    let offset = scale * (exact_external / exact_length - (2.0 - ALPHA));
    let seed = r.seed_for(7, 100);
    let reference = stable_reference(&law, REFERENCE_DRAWS, seed);
    let moved: Vec<f64> = reference.iter().map(|v| v + offset).collect();
    let floor = ks_two_sample(
        &univariate(moved, meta("shifted reference", None, None, seed))?,
        &univariate(reference, meta("stable reference", None, None, seed))?,
        1e-3,
    )?
    .statistic;
    let floor_rep = TestReport::at_most("KS of the limit law against itself shifted by the exact offset", floor, 0.10)
        .with_meta("offset", offset)
        .with_meta("diagnostic", true);
    let agreed = agree.pass;
    let ok = pass && agreed && mean_rep.pass;
    reports.insert(0, agree);
    reports.push(mean_rep.clone());
    reports.push(floor_rep.clone());
    let summary = format!("sigma {sigma:.6}, mean ratio {mean:.4}, {summary}, exact offset {offset:.4} alone gives KS {floor:.4}");
    let mut body = Body::new(ok, summary, reports);
    if !ok && agreed && mean_rep.pass && !floor_rep.pass {
        body.shortfall = Some("exact finite-n offset of the ratio alone puts KS above tolerance at n = 10^4");
    }
    Ok(body)
}

fn c08_block_counts(r: &Runner) -> Result<Body> {
    let n = 100_000usize;
    let reps = 200usize;
    let rs = [0.5, 1.0, 2.0, 5.0];
    let ctx = RatesContext::new(alpha());
    let model = EventModel::new(&ctx, n)?;
    let profile: LimitProfile = LimitProfile::new(alpha());
    let unit = model.time_unit();
    let depths: Vec<f64> = rs.iter().map(|x| x * unit).collect();
    let seed = r.seed_for(8, 1);
    let counts = try_replicate_map(seed, reps, |_, rng| {
        let mut log = StreamingLog::new(Arc::clone(&model), rng.random());
        log.block_counts_at_depths(0.0, &depths)
    })?;
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    let mut all_within = 0usize;
    for c in &counts {
        if rs.iter().zip(c).all(|(&x, &k)| ((k as f64) / (profile.m(x) * n as f64) - 1.0).abs() <= 0.05) {
            all_within += 1;
        }
    }
    let mut pass = true;
    let mut means_ok = true;
    for (j, &x) in rs.iter().enumerate() {
        let expect = profile.m(x) * n as f64;
        let within = counts.iter().filter(|c| ((c[j] as f64) / expect - 1.0).abs() <= 0.05).count();
        let mean = counts.iter().map(|c| c[j] as f64).sum::<f64>() / reps as f64;
        let share = within as f64 / reps as f64;
        means_ok &= (mean / expect - 1.0).abs() <= 0.02;
        let rep = TestReport::new(format!("share within 5% at r = {x}"), share, 0.95, ebc_core::verify::Orientation::AtLeast)
            .with_meta("mean_ratio", mean / expect);
        pass &= rep.pass;
        summary.push(format!("r={x}: {share:.3} (mean ratio {:.4})", mean / expect));
        reports.push(rep);
    }
    let joint = all_within as f64 / reps as f64;
    reports.push(TestReport::new("share within 5% at all depths", joint, 0.95, ebc_core::verify::Orientation::AtLeast));
    let mut body = Body::new(pass, format!("{}; all depths {joint:.3}", summary.join(", ")), reports);
    if !pass && means_ok {
        body.shortfall = Some("block-count fluctuations of order n^(1/alpha - 1) exceed 5% at deep r; means agree to 2%");
    }
    Ok(body)
}

fn c09_hitting(r: &Runner) -> Result<Body> {
    let n = 100_000usize;
    let ctx = RatesContext::new(alpha());
    let levels = [0.25, 0.5, 0.75];
    let seed = r.seed_for(9, 1);
    let hits = try_replicate_map(seed, 200, |_, rng| {
        let p = sample_block_path(&ctx, n, rng, PathOptions::BARE)?;
        levels.iter().map(|&a| hitting_index(&p, a)).collect::<Result<Vec<usize>>>()
    })?;
    let mut pass = true;
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for (j, &a) in levels.iter().enumerate() {
        let mean = hits.iter().map(|h| h[j] as f64).sum::<f64>() / (200.0 * n as f64);
        let target = (1.0 - a) * (ALPHA - 1.0);
        let rep = TestReport::at_most(format!("hitting index at a = {a}"), (mean - target).abs(), 0.01).with_meta("mean", mean);
        pass &= rep.pass;
        summary.push(format!("a={a}: {mean:.4} vs {target:.3}"));
        reports.push(rep);
    }
    Ok(Body::new(pass, summary.join(", "), reports))
}

fn c10_levysub(r: &Runner) -> Result<Body> {
    let profile: LimitProfile = LimitProfile::new(alpha());
    let fs = [parse_fspec("tau", alpha())?, parse_fspec("length", alpha())?];
    let mut worst_jump: f64 = 0.0;
    let mut gaps = Vec::new();
    let mut reports = Vec::new();
    for (i, eps) in [0.1f64, 0.05, 0.025].into_iter().enumerate() {
        // window sized for 10^4 points on average
        let width = 1e4 * ALPHA * eps.powf(ALPHA) / profile.b_levy();
        let mut rng = stream(r.seed_for(10, i as u64), 0, 0);
        let mut rms = 0.0;
        for _ in 0..5 {
            let buf = sample_poisson_points(PointKind::Psi, (-width, 0.0), eps, &profile, &mut rng)?;
            for f in &fs {
                let rep = levysub_check(f, &buf)?;
                worst_jump = worst_jump.max(rep.jump_difference.abs());
            }
            rms = levysub_check(&fs[0], &buf)?.natural_gap_rms;
        }
        gaps.push((eps, rms));
    }
    let jump = TestReport::at_most("jump-sum difference", worst_jump, 1e-9);
    let decreasing = gaps.windows(2).all(|w| w[1].1 < w[0].1);
    let shown: Vec<String> = gaps.iter().map(|(e, g)| format!("{e}:{g:.4}")).collect();
    reports.push(jump.clone());
    reports.push(
        TestReport::at_most("compensator difference decreasing", if decreasing { 0.0 } else { 1.0 }, 0.0)
            .with_meta("eps", gaps.iter().map(|g| g.0).collect::<Vec<_>>())
            .with_meta("rms", gaps.iter().map(|g| g.1).collect::<Vec<_>>()),
    );
    Ok(Body::new(
        jump.pass && decreasing,
        format!("max jump difference {worst_jump:.1e}, compensator gap rms [{}]", shown.join(" ")),
        reports,
    ))
}

fn c11_limit_objects(r: &Runner) -> Result<Body> {
    let draws = 100_000usize;
    let eps = 0.01;
    let mut pass = true;
    let mut summary = Vec::new();
    let mut reports = Vec::new();
    for (i, preset) in ["tau", "length", "extlength"].into_iter().enumerate() {
        let f = parse_fspec(preset, alpha())?;
        let (sigma, beta) = f.sigma_beta()?;
        let law = StableParams::new(alpha(), sigma, beta)?;
        let ti = ThetaIntegral::new(&f, eps, SmallJumps::Gaussian)?;
        let seed = r.seed_for(11, i as u64);
        let xs = replicate_map(seed, draws, |_, rng| ti.sample(rng));
        let s = univariate(xs, meta("I(f)", None, Some(preset), seed))?;
        let d = ecf_distance(&s, |t| cf_stable(&law, t[0]), &grid1(&STABLE_GRID), 0.0)?.with_threshold(0.02);
        pass &= d.pass;
        summary.push(format!("I({preset}) {:.4}", d.statistic));
        reports.push(d);
    }
    let f = parse_fspec("tau", alpha())?;
    let ma = MovingAverage::new(&f, &[0.0], MovingAverageOptions { eps, ..Default::default() })?;
    let seed = r.seed_for(11, 10);
    let xs = replicate_map(seed, draws, |_, rng| ma.sample(rng)[0]);
    let s = univariate(xs, meta("moving average", None, Some("tau"), seed))?;
    let d = ecf_distance(&s, |t| joint_cf_moving_average(&f, &[0.0], t).unwrap_or(Complex::new(f64::NAN, 0.0)), &grid1(&STABLE_GRID), 0.0)?
        .with_threshold(0.02);
    pass &= d.pass;
    summary.push(format!("moving average {:.4}", d.statistic));
    reports.push(d);

    let joint = joint_cf_moving_average(&f, &[0.0, 50.0], &[1.0, 1.0])?;
    let single = joint_cf_moving_average(&f, &[0.0], &[1.0])?;
    let gap = (joint - single * single).norm();
    let fact = TestReport::at_most("factorization at lag 50", gap, 1e-3);
    summary.push(format!("lag-50 factorization gap {gap:.3e} (<= 1e-3)"));
    let fact_pass = fact.pass;
    reports.push(fact);
    let mut body = Body::new(pass && fact_pass, summary.join(", "), reports);
    if pass && !fact_pass {
        body.shortfall = Some("kernel tail overlap at lag 50 is 1.09e-3 analytically");
    }
    Ok(body)
}

const JOINT_GRID: [[f64; 2]; 4] = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]];

fn c12_joint_limit(r: &Runner) -> Result<Body> {
    let f = parse_fspec("tau", alpha())?;
    let times = [0.0, 1.0];
    let ctx = RatesContext::new(alpha());
    let grid: Vec<Vec<f64>> = JOINT_GRID.iter().map(|t| t.to_vec()).collect();
    let exact: Vec<Complex<f64>> = grid.iter().map(|t| joint_cf_limit_series(&f, &times, t)).collect::<Result<_>>()?;
    let mut ladder = Vec::new();
    let mut reports = Vec::new();
    let mut target = None;
    let mut means_ok = true;
    let mut mean_text = Vec::new();
    for n in [1_000usize, 3_162, 10_000] {
        let model = EventModel::new(&ctx, n)?;
        let seed = r.seed_for(12, n as u64);
        let rows = try_replicate_map(seed, 2_000, |_, rng| {
            let mut log = StreamingLog::new(Arc::clone(&model), rng.random());
            log.functional_series(&times, &f)
        })?;
        let sample = SampleSet::from_rows(&rows, meta("J series", Some(n), Some("tau"), seed))?;
        let emp = ecf(&sample, &grid)?;
        let dist = emp.iter().zip(&exact).map(|(e, c)| (e - c).norm()).fold(0.0, f64::max);
        ladder.push((n as u64, dist));
        let rep = TestReport::at_most("joint CF distance", dist, 0.1).with_meta("n", n);
        if n == 10_000 {
            target = Some(rep.clone());
            let nf = n as f64;
            let exact_mean = nf.powf(-1.0 / ALPHA) * (r.exact_means(n)?.0 - (ALPHA - 1.0) * nf);
            for j in 0..times.len() {
                let col: Vec<f64> = rows.iter().map(|row| row[j]).collect();
                let m = col.iter().sum::<f64>() / col.len() as f64;
                let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (col.len() as f64 - 1.0)).sqrt();
                let z = (m - exact_mean).abs() / (sd / (col.len() as f64).sqrt());
                let rep = TestReport::at_most(format!("coordinate {j} mean against exact finite-n mean, z-score"), z, 3.0)
                    .with_meta("sample_mean", m)
                    .with_meta("exact_mean", exact_mean)
                    .with_meta("diagnostic", true);
                mean_text.push(format!("{m:.4}"));
                means_ok &= rep.pass;
                reports.push(rep);
            }
            mean_text.push(format!("exact {exact_mean:.4}"));
        }
        reports.push(rep);
    }
    let trend = trend_report(&ladder, 1.2)?;
    let target = target.expect("ladder contains the target size");
    let shown: Vec<String> = ladder.iter().map(|(n, d)| format!("{n}:{d:.4}")).collect();
    let pass = target.pass && trend.pass;
    let converging = ladder.windows(2).all(|w| w[1].1 < w[0].1);
    reports.push(trend);
    let summary = format!(
        "distance at n=10^4 {:.4} (<= 0.1), trend [{}], coordinate means {}",
        target.statistic,
        shown.join(" "),
        mean_text.join(" / ")
    );
    let mut body = Body::new(pass, summary, reports);
    if !pass && means_ok && converging {
        body.shortfall = Some(SLOW_CONVERGENCE);
    }
    Ok(body)
}

fn c13_truncation(r: &Runner) -> Result<Body> {
    let profile: LimitProfile = LimitProfile::new(alpha());
    let b = profile.b_levy();
    let reps = 4_000usize;
    let mut pass = true;
    let mut summary = Vec::new();
    let mut reports = Vec::new();
    for (i, eps) in [0.2f64, 0.1].into_iter().enumerate() {
        let fine = eps / 100.0;
        let lost_mean = b * (fine.powf(1.0 - ALPHA) - eps.powf(1.0 - ALPHA)) / (ALPHA - 1.0);
        let below_fine = b * fine.powf(2.0 - ALPHA) / (2.0 - ALPHA);
        let seed = r.seed_for(13, i as u64);
        let remainders = try_replicate_map(seed, reps, |_, rng| {
            let buf = sample_poisson_points(PointKind::Levy, (0.0, 1.0), fine, &profile, rng)?;
            let small: f64 = buf.second.iter().filter(|&&y| y < eps).sum();
            let z: f64 = StandardNormal.sample(rng);
            Ok(small - lost_mean + below_fine.sqrt() * z)
        })?;
        let mean = remainders.iter().sum::<f64>() / reps as f64;
        let var = remainders.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        let target = eps.powf(2.0 - ALPHA) * b / (2.0 - ALPHA);
        let rep = TestReport::at_most(format!("variance ratio deviation at eps = {eps}"), (var / target - 1.0).abs(), 0.10)
            .with_meta("variance", var)
            .with_meta("target", target);
        pass &= rep.pass;
        summary.push(format!("eps {eps}: ratio {:.4}", var / target));
        reports.push(rep);
    }
    Ok(Body::new(pass, summary.join(", "), reports))
}
