//! Dispatch from experiment configs to the library constructions.

use std::collections::BTreeMap;
use std::time::Instant;

use nclab_core::amplification::{amplification_iso_check_with, IsoOptions};
use nclab_core::exec::{self, Execution};
use nclab_core::span::{generate_span_with, SpanOptions};
use nclab_core::torus::{anticommuting_root_example, clock_shift_with_max, theta_halving_tower};
use nclab_core::tower::{build_tower, level_independence_sweep};
use nclab_core::TorusParams;
use serde_json::Value;

use crate::config::{
    default_hat_family, parameters, ExperimentConfig, Kind, IsoParams, NoParams, RunConfig, SpanParams,
    ThetaTowerParams, TorusConfig, TowerParams,
};
use crate::report::{ExperimentReport, Residual, RunReport};
use crate::RunError;

pub const DEFAULT_MAX_DIM: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides every seed in the config.
    pub seed: Option<u64>,
    pub max_dim: usize,
    pub exec: Execution,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { seed: None, max_dim: DEFAULT_MAX_DIM, exec: Execution::default() }
    }
}

#[derive(Default)]
struct Table {
    rows: Vec<(String, f64, f64)>,
    metrics: BTreeMap<String, f64>,
}

impl Table {
    fn residual(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.rows.push((name.into(), value, threshold));
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }
}

fn to_residuals(cfg: &ExperimentConfig, name: &str, t: Table) -> Result<Vec<Residual>, RunError> {
    for k in cfg.tolerances.keys() {
        if !t.rows.iter().any(|(n, _, _)| n == k) {
            return Err(RunError::Schema(format!("{name}: tolerance for unknown residual `{k}`")));
        }
    }
    let threshold = |n: &str, default: f64| cfg.tolerances.get(n).copied().unwrap_or(default);
    let Some(checks) = &cfg.checks else {
        return Ok(t.rows.iter().map(|(n, v, d)| Residual::new(n.clone(), *v, threshold(n, *d))).collect());
    };
    let mut out = Vec::with_capacity(checks.len());
    for c in checks {
        if out.iter().any(|r: &Residual| &r.name == c) {
            return Err(RunError::Schema(format!("{name}: check `{c}` listed twice")));
        }
        let Some((n, v, d)) = t.rows.iter().find(|(n, _, _)| n == c) else {
            let known: Vec<&str> = t.rows.iter().map(|(n, _, _)| n.as_str()).collect();
            return Err(RunError::Schema(format!("{name}: unknown check `{c}` (available: {})", known.join(", "))));
        };
        out.push(Residual::new(n.clone(), *v, threshold(n, *d)));
    }
    Ok(out)
}

fn tower(cfg: &ExperimentConfig, name: &str, seed: u64, opts: &RunOptions) -> Result<Table, RunError> {
    let p: TowerParams = parameters(cfg, name)?;
    let u = p.base.build_unitary(seed, opts.max_dim)?;
    let t = build_tower(&u, p.depth, &p.branches)?;
    let functions = p.functions.unwrap_or_else(default_hat_family);
    let sweep = level_independence_sweep(&t, &functions, Execution::Sequential)?;
    let mut table = Table::default();
    table.residual("squaring", t.max_residual(), 1e-9);
    table.residual("level_independence", sweep.iter().map(|r| r.residual).fold(0.0, f64::max), 1e-9);
    table.metric("dim", t.dim() as f64);
    table.metric("depth", t.depth() as f64);
    table.metric("level_pairs", sweep.len() as f64);
    Ok(table)
}

fn torus(cfg: &ExperimentConfig, name: &str, opts: &RunOptions) -> Result<Table, RunError> {
    let p: TorusConfig = parameters(cfg, name)?;
    let params = TorusParams::new(p.p, p.q)?;
    let rep = clock_shift_with_max(params, opts.max_dim)?;
    let mut t = Table::default();
    t.residual("relation", rep.commutation_residual, 1e-10);
    t.residual("order_u", rep.order_residual_u, 1e-10);
    t.residual("order_v", rep.order_residual_v, 1e-10);
    t.metric("dim", params.q() as f64);
    t.metric("theta", params.theta());
    t.metric("was_coprime", params.was_coprime() as u8 as f64);
    Ok(t)
}

fn theta_tower(cfg: &ExperimentConfig, name: &str, opts: &RunOptions) -> Result<Table, RunError> {
    let p: ThetaTowerParams = parameters(cfg, name)?;
    let steps = theta_halving_tower(TorusParams::new(p.p, p.q)?, p.steps, opts.max_dim)?;
    let mut t = Table::default();
    for (i, s) in steps.iter().enumerate() {
        let k = i + 1;
        t.residual(format!("step{k}.source_relation"), s.source_relation_residual, 1e-9);
        t.residual(format!("step{k}.target_relation"), s.target_relation_residual, 1e-9);
        t.residual(format!("step{k}.image_relation"), s.image_relation_residual, 1e-9);
        t.residual(format!("step{k}.image_order"), s.image_order_residual, 1e-9);
        t.residual(format!("step{k}.shift_order"), s.shift_order_residual, 1e-9);
        t.metric(format!("step{k}.source_theta"), s.source.theta());
        t.metric(format!("step{k}.source_dim"), s.source_dim as f64);
        t.metric(format!("step{k}.target_dim"), s.target_dim as f64);
    }
    Ok(t)
}

fn span(cfg: &ExperimentConfig, name: &str, seed: u64, opts: &RunOptions) -> Result<Table, RunError> {
    let p: SpanParams = parameters(cfg, name)?;
    let gens = p.generators.iter().map(|g| g.build(seed, opts.max_dim)).collect::<Result<Vec<_>, _>>()?;
    let mut so = SpanOptions { exec: Execution::Sequential, ..SpanOptions::default() };
    if let Some(r) = p.rank_tol {
        so.rank_tol = r;
    }
    if let Some(b) = p.word_budget {
        so.word_budget = b;
    }
    let s = generate_span_with(&gens, p.word_cap, so)?;
    let mut t = Table::default();
    t.residual("orthonormality", s.basis().orthonormality_defect(), 1e-9);
    if let Some(d) = p.expected_dim {
        t.residual("dim_gap", (s.span_dim() as f64 - d as f64).abs(), 0.0);
    }
    for (i, m) in p.members.iter().enumerate() {
        t.residual(format!("member{i}"), s.membership_residual(&m.build(seed, opts.max_dim)?)?, 1e-8);
    }
    t.metric("span_dim", s.span_dim() as f64);
    t.metric("words_enumerated", s.words_enumerated() as f64);
    Ok(t)
}

fn iso(cfg: &ExperimentConfig, name: &str, seed: u64, opts: &RunOptions) -> Result<Table, RunError> {
    let p: IsoParams = parameters(cfg, name)?;
    let amplified = p.u.dim().saturating_mul(p.m);
    if amplified > opts.max_dim {
        return Err(RunError::Schema(format!("{name}: amplified dimension {amplified} exceeds the guard {}", opts.max_dim)));
    }
    let a = p.a_generators.iter().map(|g| g.build(seed, opts.max_dim)).collect::<Result<Vec<_>, _>>()?;
    let u = p.u.build_unitary(seed, opts.max_dim)?;
    let mut io = IsoOptions { seed, ..IsoOptions::default() };
    io.span.exec = Execution::Sequential;
    if let Some(s) = p.samples {
        io.samples = s;
    }
    let r = amplification_iso_check_with(&a, &u, &p.xi, &p.eta, p.m, p.word_cap, io)?;
    let mut t = Table::default();
    t.residual("multiplicativity", r.multiplicativity, 1e-8);
    t.residual("adjoint", r.adjoint, 1e-8);
    t.residual("left_module", r.left_module, 1e-8);
    t.residual("dim_gap", (r.domain_span_dim as f64 - r.image_span_dim as f64).abs(), 0.0);
    t.residual("correction_defect", r.correction_defect, 1e-9);
    t.metric("domain_span_dim", r.domain_span_dim as f64);
    t.metric("image_span_dim", r.image_span_dim as f64);
    t.metric("domain_closure", r.domain_closure);
    t.metric("literal_composition_gap", r.literal_composition_gap);
    t.metric("identity_map", r.identity_map as u8 as f64);
    for (i, x) in r.root_outside_base.iter().enumerate() {
        t.metric(format!("root_outside_base.{}", i + 1), *x);
    }
    Ok(t)
}

fn anticommute(cfg: &ExperimentConfig, name: &str) -> Result<Table, RunError> {
    let _: NoParams = parameters(cfg, name)?;
    let w = anticommuting_root_example();
    let mut t = Table::default();
    t.residual("square", w.square_residual, 0.0);
    t.residual("anticommutator", w.anticommutator_residual, 0.0);
    Ok(t)
}

/// Runs one experiment. `index` names it when the config does not.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    index: usize,
    default_seed: u64,
    opts: &RunOptions,
) -> Result<ExperimentReport, RunError> {
    let start = Instant::now();
    let name = cfg.name.clone().unwrap_or_else(|| format!("{}-{index}", cfg.kind.as_str()));
    let seed = opts.seed.or(cfg.seed).unwrap_or(default_seed);
    let table = match cfg.kind {
        Kind::Tower => tower(cfg, &name, seed, opts),
        Kind::Torus => torus(cfg, &name, opts),
        Kind::ThetaTower => theta_tower(cfg, &name, opts),
        Kind::Span => span(cfg, &name, seed, opts),
        Kind::LemmaIso => iso(cfg, &name, seed, opts),
        Kind::AnticommuteDemo => anticommute(cfg, &name),
    }
    .map_err(|e| match e {
        RunError::Lab(err) => RunError::Schema(format!("{name}: {err}")),
        other => other,
    })?;
    let metrics = table.metrics.clone();
    let residuals = to_residuals(cfg, &name, table)?;
    Ok(ExperimentReport {
        pass: residuals.iter().all(|r| r.pass),
        kind: cfg.kind.as_str().to_string(),
        config: serde_json::to_value(cfg).unwrap_or(Value::Null),
        name,
        seed,
        residuals,
        metrics,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs every experiment, independently and in parallel when enabled. Reports keep
/// config order; the first failing experiment in config order decides the error.
pub fn run_all(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let seed = opts.seed.or(cfg.seed).unwrap_or(0);
    let indexed: Vec<(usize, &ExperimentConfig)> = cfg.experiments.iter().enumerate().collect();
    let experiments = exec::try_map(opts.exec, &indexed, |(i, e)| run_experiment(e, *i, seed, opts))?;
    Ok(RunReport {
        version: crate::VERSION.to_string(),
        seed,
        max_dim: opts.max_dim,
        pass: experiments.iter().all(|e| e.pass),
        experiments,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
