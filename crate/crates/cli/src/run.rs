//! Executes a validated config and writes its artifacts.
//!
//! Layout of the output directory:
//! - `reports.json`: every check report, ordered by check id
//! - `summary.csv`: `check_id, pass, constant, slack, runtime_s`
//! - `norms.json`, `norms.csv`: scalar evaluations
//! - `fields/<id>.bin` with a `<id>.json` sidecar for every grid-function evaluation
//! - `plots/<id>.csv`: `x, value` along the first axis (through the centre in 2-d),
//!   and `plots/<check>.sharpness.csv` with the decay profile and its fitted power law

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hsmax::convolve::ScaleSet;
use hsmax::gridfn::{io, make_test_function, GridFunction, KernelSpec};
use hsmax::maxops::{
    hl_maximal, maximal_many, miyachi_np, nontangential_many, weak_quasinorm, BallFamily, ConeParams,
};
use hsmax::norms::{
    gradient, hardy_quasinorm, hardy_sobolev_quasinorm, local_hardy_quasinorm,
    local_hardy_sobolev_quasinorm, lp_norm, HardyParams, NormMethod, NormReport,
};
use hsmax::verify::{self, Resolution, Tolerances};
use hsmax::CheckReport;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Check, Evaluation, Operator, RunConfig};
use crate::error::CliError;
use crate::plan;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub workers: usize,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub tolerance_scale: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub reports: Vec<CheckReport>,
    pub norms: BTreeMap<String, NormReport>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

fn scale_set(cfg: &RunConfig, name: &str) -> Result<ScaleSet, CliError> {
    let def = &cfg.scales[name];
    let res = cfg.grid(&def.grid);
    let set = match &def.explicit {
        Some(ts) => ScaleSet::explicit(ts.clone()),
        None => ScaleSet::per_decade(
            def.t_min.unwrap_or(res.h() / 2.0),
            def.t_max.unwrap_or(2.0 * res.extent),
            def.per_decade.unwrap_or(res.per_decade),
        ),
    };
    set.map_err(|e| CliError::Config(format!("scales.{name}: {e}")))
}

fn hardy_params(cfg: &RunConfig, e: &Evaluation, dim: usize) -> Result<HardyParams, CliError> {
    let kernel = match &e.kernel {
        Some(k) => cfg.kernel(k, dim)?,
        None => KernelSpec::poisson(dim),
    };
    let cone = match e.t_cap {
        Some(t) => ConeParams::truncated(e.aperture, t),
        None => ConeParams::new(e.aperture),
    };
    let scales = scale_set(cfg, e.scales.as_ref().expect("validated"))?;
    Ok(HardyParams { p: e.p.expect("validated"), kernel, cone, scales })
}

fn direct_norm(value: f64) -> NormReport {
    NormReport {
        value,
        method: NormMethod::Direct,
        kernel_digest: String::new(),
        scale_digest: String::new(),
        components: Vec::new(),
        refinement_delta: None,
    }
}

enum Output {
    Fields(Vec<(String, GridFunction)>),
    Norm(NormReport),
}

fn evaluate(cfg: &RunConfig, id: &str) -> Result<Output, CliError> {
    let e = &cfg.evaluations[id];
    let res = cfg.grid(&e.grid);
    let grid = res.grid()?;
    let spec = &cfg.members(&e.input)[e.member];
    let f = make_test_function(spec, &grid)?;
    let dim = res.dim;
    let one = |g: GridFunction| Output::Fields(vec![(id.to_string(), g)]);
    let kernel = || cfg.kernel(e.kernel.as_ref().expect("validated"), dim);
    let scales = || scale_set(cfg, e.scales.as_ref().expect("validated"));
    let balls = || {
        let def = &cfg.balls[e.balls.as_ref().expect("validated")];
        BallFamily::log_uniform(&grid, def.r_max, def.per_decade).map_err(CliError::from)
    };
    let p = || e.p.expect("validated");
    Ok(match e.operator {
        Operator::Sample => one(f),
        Operator::Gradient => Output::Fields(
            gradient(&f).into_iter().enumerate().map(|(j, g)| (format!("{id}.d{j}"), g)).collect(),
        ),
        Operator::Maximal => one(maximal_many(&[&f], &kernel()?, &scales()?, f64::INFINITY)?.remove(0)),
        Operator::TruncatedMaximal => {
            one(maximal_many(&[&f], &kernel()?, &scales()?, e.t_cap.expect("validated"))?.remove(0))
        }
        Operator::Nontangential => {
            let cone = ConeParams::truncated(e.aperture, e.t_cap.unwrap_or(f64::INFINITY));
            one(nontangential_many(&[&f], &kernel()?, &scales()?, &cone)?.remove(0))
        }
        Operator::HlMaximal => one(hl_maximal(&f, &balls()?, p())?),
        Operator::MiyachiNp => one(miyachi_np(&f, p(), &balls()?, e.weight)?),
        Operator::LpNorm => Output::Norm(direct_norm(lp_norm(&f, p())?)),
        Operator::WeakNorm => Output::Norm(direct_norm(weak_quasinorm(&f, p(), None)?)),
        Operator::Hardy => Output::Norm(hardy_quasinorm(&f, &hardy_params(cfg, e, dim)?)?),
        Operator::LocalHardy => Output::Norm(local_hardy_quasinorm(&f, &hardy_params(cfg, e, dim)?)?),
        Operator::HardySobolev => Output::Norm(hardy_sobolev_quasinorm(&f, &hardy_params(cfg, e, dim)?)?),
        Operator::LocalHardySobolev => {
            Output::Norm(local_hardy_sobolev_quasinorm(&f, &hardy_params(cfg, e, dim)?)?)
        }
    })
}

fn write_slice(path: &Path, f: &GridFunction) -> Result<(), CliError> {
    let mut s = String::from("x,value\n");
    for (x, v) in f.center_slice() {
        let _ = writeln!(s, "{x},{v}");
    }
    fs::write(path, s)?;
    Ok(())
}

fn persist_fields(cfg: &RunConfig, id: &str, fields: &[(String, GridFunction)], out: &Path) -> Result<(), CliError> {
    let e = &cfg.evaluations[id];
    let spec = &cfg.members(&e.input)[e.member];
    let scales = match &e.scales {
        Some(s) => Some(scale_set(cfg, s)?.digest()),
        None => None,
    };
    let balls = match &e.balls {
        Some(b) => {
            let def = &cfg.balls[b];
            Some(BallFamily::log_uniform(&cfg.grid(&e.grid).grid()?, def.r_max, def.per_decade)?.digest())
        }
        None => None,
    };
    for (stem, g) in fields {
        let meta = json!({
            "evaluation": id,
            "operator": e.operator.name(),
            "input": spec,
            "grid": cfg.grid(&e.grid),
            "kernel": e.kernel.as_ref().map(|k| &cfg.kernels[k]),
            "p": e.p,
            "aperture": e.aperture,
            "t_cap": e.t_cap,
            "weight": e.weight,
            "scale_digest": scales,
            "ball_digest": balls,
        });
        io::write_with_sidecar(g, &out.join("fields"), stem, &meta)?;
        write_slice(&out.join("plots").join(format!("{stem}.csv")), g)?;
    }
    Ok(())
}

fn failed(id: &str, claim: &str, err: &hsmax::Error) -> CheckReport {
    let mut r = CheckReport::new(id, claim);
    r.note(format!("error: {err}"));
    r
}

fn relabel(mut r: CheckReport, id: &str) -> CheckReport {
    r.check_id = id.to_string();
    r
}

/// Runs one configured check; several reports when the check covers several cases.
fn run_check(cfg: &RunConfig, id: &str, tol: &Tolerances, out: &Path) -> Result<Vec<CheckReport>, CliError> {
    let c = &cfg.checks[id];
    let seed = |offset: u64| cfg.seed.wrapping_add(offset);
    let res = |name: &str| -> &Resolution { cfg.grid(name) };
    let family = |name: &str| cfg.members(name);
    let single = |name: &str| cfg.members(name).remove(0);
    let result = match c {
        Check::ConvOracle { seed: s, count } => verify::check_conv_oracle(seed(*s), *count, tol),
        Check::UnitMass {} => verify::check_unit_mass(tol),
        Check::Kinnunen { family: f, kernel, grid } => {
            verify::check_kinnunen(&family(f), &cfg.kernel(kernel, res(grid).dim)?, res(grid), tol)
        }
        Check::Theorem1 { family: f, kernel, grid, p } => {
            verify::check_theorem1(&family(f), *p, &cfg.kernel(kernel, res(grid).dim)?, res(grid), tol)
        }
        Check::LocalTheorem { family: f, kernel, grid, p } => {
            verify::check_local_theorem(&family(f), *p, &cfg.kernel(kernel, res(grid).dim)?, res(grid), tol)
        }
        Check::Corollary1 { family: f, kernel, grid } => {
            verify::check_corollary1(&family(f), &cfg.kernel(kernel, res(grid).dim)?, res(grid), tol)
        }
        Check::ModulusComparison { family: f, grid, p } => {
            verify::check_modulus_comparison(&family(f), *p, res(grid), tol)
        }
        Check::Sharpness { function, kernel, grid, points } => {
            let k = cfg.kernel(kernel, res(grid).dim)?;
            let spec = single(function);
            let r = verify::sharpness_experiment(&k, &spec, res(grid), *points, tol);
            if let Ok(rep) = &r {
                write_sharpness_plot(&out.join("plots").join(format!("{id}.sharpness.csv")), &k, &spec, res(grid), *points, rep)?;
            }
            r
        }
        Check::WeakEmbedding { seed: s, count } => {
            let cases = verify::weak_embedding_cases(seed(*s), *count)?;
            let width = count.to_string().len();
            return Ok(cases
                .iter()
                .enumerate()
                .map(|(k, case)| {
                    let case_id = format!("{id}/{k:0width$}");
                    match verify::check_weak_embedding(&case.h, &case.mask, case.r, tol) {
                        Ok(r) => relabel(r, &case_id),
                        Err(e) => failed(&case_id, c.claim(), &e),
                    }
                })
                .collect());
        }
        Check::NormEquivalence { function, grid, p, aperture, ks } => {
            verify::check_norm_equivalence(&single(function), ks, *p, *aperture, res(grid), tol)
        }
        Check::Miyachi { family: f, grid, p, r_max, weight } => {
            verify::check_miyachi(&family(f), *p, res(grid), *r_max, *weight, tol)
        }
        Check::LernerPerez { function, grid, p, q, r_max, balls, seed: s } => {
            let dim = res(grid).dim;
            let sample = verify::seeded_balls(seed(*s), balls.count, dim, balls.span, balls.radii);
            verify::check_lerner_perez(&single(function), *p, *q, &sample, res(grid), *r_max, tol)
        }
        Check::NpExact {} => verify::check_np_exact(tol),
        Check::E1E2 { function, kernel, grid, p, points, seed: s } => {
            let dim = res(grid).dim;
            let sample = verify::seeded_split_points(seed(*s), points.count, dim, points.span, points.radii);
            verify::e1_e2_diagnostic(&single(function), &cfg.kernel(kernel, dim)?, *p, &sample, res(grid), tol)
        }
        Check::DyadicEnvelope { kernel, dim, k_max } => {
            hsmax::convolve::dyadic_envelope_check(&cfg.kernel(kernel, *dim)?, *k_max)
        }
    };
    Ok(vec![match result {
        Ok(r) => relabel(r, id),
        Err(e) => failed(id, c.claim(), &e),
    }])
}

fn write_sharpness_plot(
    path: &Path,
    kernel: &KernelSpec,
    spec: &hsmax::TestFunctionSpec,
    res: &Resolution,
    points: usize,
    report: &CheckReport,
) -> Result<(), CliError> {
    let samples = verify::decay_profile(kernel, spec, res, [10.0, 100.0], points)?;
    let slope = report.constant_measured;
    let intercept = samples.iter().map(|s| s.derivative.ln() - slope * s.radius.ln()).sum::<f64>()
        / samples.len() as f64;
    let mut s = String::from("radius,derivative,scale,frozen_scale_derivative,fit\n");
    for d in &samples {
        let fit = (intercept + slope * d.radius.ln()).exp();
        let _ = writeln!(s, "{},{},{},{},{fit}", d.radius, d.derivative, d.scale, d.frozen_scale_derivative);
    }
    fs::write(path, s)?;
    Ok(())
}

fn summary_csv(reports: &[CheckReport]) -> String {
    let mut s = String::from("check_id,pass,constant,slack,runtime_s\n");
    for r in reports {
        let _ = writeln!(s, "{},{},{},{},{}", r.check_id, r.pass, r.constant_measured, r.slack, r.runtime_s);
    }
    s
}

fn norms_csv(cfg: &RunConfig, norms: &BTreeMap<String, NormReport>) -> String {
    let mut s = String::from("id,operator,value,method\n");
    for (id, n) in norms {
        let op = cfg.evaluations[id].operator.name();
        let method = serde_json::to_value(n.method).expect("enum serializes");
        let _ = writeln!(s, "{id},{op},{},{}", n.value, method.as_str().unwrap_or_default());
    }
    s
}

/// Aligned table of check outcomes for the terminal.
pub fn table(outcome: &RunOutcome) -> String {
    let mut s = String::new();
    if !outcome.norms.is_empty() {
        let _ = writeln!(s, "{:<28} {:>16}", "evaluation", "value");
        for (id, n) in &outcome.norms {
            let _ = writeln!(s, "{id:<28} {:>16.8e}", n.value);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "{:<28} {:<5} {:>14} {:>14} {:>10}", "check", "pass", "constant", "slack", "runtime_s");
    for r in &outcome.reports {
        let _ = writeln!(
            s,
            "{:<28} {:<5} {:>14.6e} {:>14.6e} {:>10.3}",
            r.check_id,
            if r.pass { "PASS" } else { "FAIL" },
            r.constant_measured,
            r.slack,
            r.runtime_s
        );
    }
    s
}

pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if !(opts.tolerance_scale > 0.0) {
        return Err(CliError::Config(format!("tolerance scale {} must be positive", opts.tolerance_scale)));
    }
    let tol = cfg.tolerances.scaled(opts.tolerance_scale);
    plan::enforce_budget(&cfg)?;
    for dir in ["fields", "plots"] {
        fs::create_dir_all(opts.out.join(dir))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| CliError::Execution(e.to_string()))?;
    let cfg = &cfg;
    let out = opts.out.as_path();
    let (norms, reports) = pool.install(|| -> Result<_, CliError> {
        let ids: Vec<&String> = cfg.evaluations.keys().collect();
        let outputs = ids
            .par_iter()
            .map(|id| evaluate(cfg, id).map_err(|e| CliError::Execution(format!("evaluations.{id}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut norms = BTreeMap::new();
        for (id, output) in ids.into_iter().zip(outputs) {
            match output {
                Output::Fields(fields) => persist_fields(cfg, id, &fields, out)?,
                Output::Norm(n) => {
                    norms.insert(id.clone(), n);
                }
            }
        }
        let checks: Vec<&String> = cfg.checks.keys().collect();
        let reports = checks
            .par_iter()
            .map(|id| run_check(cfg, id, &tol, out))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((norms, reports.into_iter().flatten().collect::<Vec<_>>()))
    })?;

    let json = serde_json::to_string_pretty(&reports).map_err(|e| CliError::Execution(e.to_string()))?;
    fs::write(out.join("reports.json"), json)?;
    fs::write(out.join("summary.csv"), summary_csv(&reports))?;
    let json = serde_json::to_string_pretty(&norms).map_err(|e| CliError::Execution(e.to_string()))?;
    fs::write(out.join("norms.json"), json)?;
    fs::write(out.join("norms.csv"), norms_csv(cfg, &norms))?;
    Ok(RunOutcome { reports, norms })
}
