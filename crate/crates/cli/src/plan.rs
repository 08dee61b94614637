//! Execution plan and memory estimates, computed without touching any data.

use std::fmt::Write as _;

use hsmax::digest;

use crate::config::{Check, RunConfig};
use crate::error::CliError;

/// Rough working set: zero-padded complex transform buffers plus a few real
/// arrays per test function held at once.
fn estimate_bytes(samples: u64, dim: usize, members: usize) -> u64 {
    samples * (32 * (1 << dim) + 32 * members as u64)
}

fn samples(n: usize, dim: usize) -> u64 {
    (n as u64).pow(dim as u32)
}

pub fn evaluation_bytes(cfg: &RunConfig, id: &str) -> u64 {
    let g = cfg.grid(&cfg.evaluations[id].grid);
    estimate_bytes(samples(g.n, g.dim), g.dim, 1)
}

pub fn check_bytes(cfg: &RunConfig, id: &str) -> u64 {
    let c = &cfg.checks[id];
    match c.grid() {
        Some(name) => {
            let g = cfg.grid(name);
            let n = if c.refines() { 2 * g.n } else { g.n };
            estimate_bytes(samples(n, g.dim), g.dim, c.members(cfg))
        }
        // Fixed internal grids: at most 256 samples in one dimension or 64^2 in two.
        None => estimate_bytes(64 * 64, 2, 2),
    }
}

fn mib(bytes: u64) -> f64 {
    bytes as f64 / (1024.0 * 1024.0)
}

/// Fails when any single unit of work exceeds the configured budget.
pub fn enforce_budget(cfg: &RunConfig) -> Result<(), CliError> {
    let budget = cfg.limits.memory_mb * 1024 * 1024;
    let units = cfg
        .evaluations
        .keys()
        .map(|id| (format!("evaluations.{id}"), evaluation_bytes(cfg, id)))
        .chain(cfg.checks.keys().map(|id| (format!("checks.{id}"), check_bytes(cfg, id))));
    for (name, bytes) in units {
        if bytes > budget {
            return Err(CliError::Resource(format!(
                "{name} needs about {:.0} MiB, over the {} MiB budget (limits.memory_mb)",
                mib(bytes),
                cfg.limits.memory_mb
            )));
        }
    }
    Ok(())
}

fn check_params(c: &Check) -> String {
    match c {
        Check::ConvOracle { seed, count } => format!("{count} pairs, seed offset {seed}"),
        Check::WeakEmbedding { seed, count } => format!("{count} cases, seed offset {seed}"),
        Check::Theorem1 { p, .. }
        | Check::LocalTheorem { p, .. }
        | Check::ModulusComparison { p, .. } => format!("p = {p}"),
        Check::Sharpness { points, .. } => format!("{points} fit points"),
        Check::NormEquivalence { p, aperture, ks, .. } => {
            format!("p = {p}, aperture {aperture}, k in {ks:?}")
        }
        Check::Miyachi { p, r_max, weight, .. } => {
            format!("p = {p}, r_max = {r_max}, weight {weight:?}")
        }
        Check::LernerPerez { p, q, r_max, balls, .. } => {
            format!("p = {p}, q = {q}, r_max = {r_max}, {} balls", balls.count)
        }
        Check::E1E2 { p, points, .. } => format!("p = {p}, {} points", points.count),
        Check::DyadicEnvelope { dim, k_max, .. } => format!("d = {dim}, k_max = {k_max}"),
        Check::UnitMass {} | Check::NpExact {} | Check::Kinnunen { .. } | Check::Corollary1 { .. } => {
            String::new()
        }
    }
}

/// Human-readable plan. Depends only on the config, so it is identical across runs.
pub fn describe(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let json = serde_json::to_value(cfg).expect("config serializes");
    let _ = writeln!(s, "config digest {}", digest::of_json(&json));
    let _ = writeln!(s, "seed {}", cfg.seed);
    let _ = writeln!(s, "memory budget {} MiB per unit", cfg.limits.memory_mb);

    let _ = writeln!(s, "\ngrids ({})", cfg.grids.len());
    for (name, g) in &cfg.grids {
        let _ = writeln!(
            s,
            "  {name:<16} d={} L={} n={} h={} scales/decade={}",
            g.dim,
            g.extent,
            g.n,
            g.h(),
            g.per_decade
        );
    }

    let _ = writeln!(s, "\nevaluations ({})", cfg.evaluations.len());
    for (id, e) in &cfg.evaluations {
        let g = cfg.grid(&e.grid);
        let _ = writeln!(
            s,
            "  {id:<24} {:<20} {}[{}] on {} ({}^{} samples, ~{:.1} MiB)",
            e.operator.name(),
            e.input,
            e.member,
            e.grid,
            g.n,
            g.dim,
            mib(evaluation_bytes(cfg, id))
        );
    }

    let _ = writeln!(s, "\nchecks ({})", cfg.checks.len());
    for (id, c) in &cfg.checks {
        let grid = match c.grid() {
            Some(name) => {
                let g = cfg.grid(name);
                let refined = if c.refines() { format!(" and {}^{}", 2 * g.n, g.dim) } else { String::new() };
                format!("on {name} ({}^{}{refined})", g.n, g.dim)
            }
            None => "on internal grids".to_string(),
        };
        let params = check_params(c);
        let _ = writeln!(
            s,
            "  {id:<24} {:<20} {grid}, {} member(s), ~{:.1} MiB{}",
            c.kind(),
            c.members(cfg),
            mib(check_bytes(cfg, id)),
            if params.is_empty() { String::new() } else { format!(", {params}") }
        );
        let _ = writeln!(s, "      claim: {}", c.claim());
    }
    s
}
