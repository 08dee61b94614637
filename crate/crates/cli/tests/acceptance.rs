//! Acceptance gate. Runs every criterion at its stated tolerance and prints one
//! PASS/FAIL line per criterion; exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use hsmax::maxops::BallWeight;
use hsmax::verify::*;
use hsmax::{CheckReport, KernelSpec, TestFunctionSpec};

type Outcome = Result<(bool, String), String>;

fn metric(r: &CheckReport, key: &str) -> f64 {
    r.metrics.get(key).copied().unwrap_or(f64::NAN)
}

fn smooth_family() -> Vec<TestFunctionSpec> {
    (0..20).map(|s| TestFunctionSpec::superposition(5, 3.0, s)).collect()
}

fn conv_oracle(tol: &Tolerances) -> Outcome {
    let r = check_conv_oracle(7, 50, tol).map_err(|e| e.to_string())?;
    Ok((r.pass && r.constant_measured <= 1e-10, format!("max |fft - direct| = {:.2e} over 50 pairs", r.constant_measured)))
}

fn unit_mass(tol: &Tolerances) -> Outcome {
    let r = check_unit_mass(tol).map_err(|e| e.to_string())?;
    let (mass, constant) = (metric(&r, "mass_error"), metric(&r, "constant_error"));
    Ok((r.pass && constant <= 1e-10, format!("mass error {mass:.2e}, |M(1) - 1| {constant:.2e}")))
}

fn kinnunen(tol: &Tolerances) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (dim, res) in [
        (1, Resolution::new(1, 8.0, 1024)),
        (2, Resolution::new(2, 8.0, 256).with_per_decade(16.0)),
    ] {
        let r = check_kinnunen(&smooth_family(), &KernelSpec::gaussian(dim), &res, tol).map_err(|e| e.to_string())?;
        ok &= r.pass;
        detail.push(format!(
            "d={dim}: excess {:.2e} -> {:.2e} (round-off floor 1e-10)",
            metric(&r, "excess_relative"),
            metric(&r, "excess_relative_refined")
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn theorem1(tol: &Tolerances) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for p in [1.0, 0.9] {
        let r = check_theorem1(&smooth_family(), p, &KernelSpec::gaussian(1), &Resolution::new(1, 16.0, 1024), tol)
            .map_err(|e| e.to_string())?;
        ok &= r.pass && metric(&r, "members") == 20.0;
        detail.push(format!(
            "p={p}: max ratio {:.4} -> {:.4} ({:.2e})",
            metric(&r, "max_ratio"),
            metric(&r, "max_ratio_refined"),
            metric(&r, "relative_change")
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn sharpness(tol: &Tolerances) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (dim, width, n) in [(1usize, 1.0, 4096), (2, 2.0, 1024)] {
        let center = vec![0.0; dim];
        let r = sharpness_experiment(
            &KernelSpec::bump(dim),
            &TestFunctionSpec::vanishing_moment(&center, width),
            &Resolution::new(dim, 128.0, n),
            20,
            tol,
        )
        .map_err(|e| e.to_string())?;
        ok &= r.pass;
        detail.push(format!(
            "d={dim}: slope {:.3}, t/|x| in [{:.2}, {:.2}]",
            r.constant_measured,
            metric(&r, "scale_ratio_min"),
            metric(&r, "scale_ratio_max")
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn weak_embedding(tol: &Tolerances) -> Outcome {
    let cases = weak_embedding_cases(11, 100).map_err(|e| e.to_string())?;
    let mut worst = f64::INFINITY;
    let mut passed = 0;
    for c in &cases {
        let r = check_weak_embedding(&c.h, &c.mask, c.r, tol).map_err(|e| e.to_string())?;
        passed += r.pass as usize;
        worst = worst.min(r.slack);
    }
    Ok((passed == 100 && worst >= -1e-12, format!("{passed}/100 pass, worst slack {worst:.2e}")))
}

fn norm_equivalence(tol: &Tolerances) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for a in [1.0, 4.0] {
        let r = check_norm_equivalence(
            &TestFunctionSpec::bump(&[0.0], 1.0),
            &[-3, -2, -1, 0, 1, 2, 3],
            1.0,
            a,
            &Resolution::new(1, 256.0, 32768),
            tol,
        )
        .map_err(|e| e.to_string())?;
        ok &= r.pass;
        detail.push(format!("a={a}: spread {:.3}", metric(&r, "spread")));
    }
    Ok((ok, detail.join("; ")))
}

fn miyachi(tol: &Tolerances) -> Outcome {
    let r = check_miyachi(&smooth_family(), 1.0, &Resolution::new(1, 8.0, 512), 4.0, BallWeight::InverseVolume, tol)
        .map_err(|e| e.to_string())?;
    Ok((
        r.pass,
        format!(
            "band {:.3} -> {:.3}, changes {:.2e} / {:.2e}",
            metric(&r, "band"),
            metric(&r, "band_refined"),
            metric(&r, "min_change"),
            metric(&r, "max_change")
        ),
    ))
}

fn lerner_perez(tol: &Tolerances) -> Outcome {
    let balls = seeded_balls(5, 50, 1, 1.5, [0.2, 2.0]);
    let r = check_lerner_perez(
        &TestFunctionSpec::bump(&[0.0], 1.0),
        1.0,
        0.8,
        &balls,
        &Resolution::new(1, 8.0, 1024),
        4.0,
        tol,
    )
    .map_err(|e| e.to_string())?;
    Ok((
        r.pass && metric(&r, "balls") == 50.0,
        format!(
            "max ratio {:.4} -> {:.4} ({:.2e})",
            metric(&r, "max_ratio"),
            metric(&r, "max_ratio_refined"),
            metric(&r, "relative_change")
        ),
    ))
}

fn np_exact(tol: &Tolerances) -> Outcome {
    let r = check_np_exact(tol).map_err(|e| e.to_string())?;
    let (lin, step) = (metric(&r, "linear_error"), metric(&r, "step_error"));
    Ok((r.pass && lin <= 1e-2 && step <= 2e-2, format!("linear error {lin:.2e}, step error {step:.2e}")))
}

fn e1_e2(tol: &Tolerances) -> Outcome {
    let points = seeded_split_points(3, 10, 1, 1.5, [0.1, 1.0]);
    let r = e1_e2_diagnostic(
        &TestFunctionSpec::bump(&[0.0], 1.0),
        &KernelSpec::gaussian(1),
        1.0,
        &points,
        &Resolution::new(1, 16.0, 2048),
        tol,
    )
    .map_err(|e| e.to_string())?;
    Ok((
        r.pass,
        format!(
            "E1 {:.3} ({:.2e}), E2 {:.3} ({:.2e}), partition {:.1e}",
            metric(&r, "constant_small"),
            metric(&r, "change_small"),
            metric(&r, "constant_large"),
            metric(&r, "change_large"),
            metric(&r, "partition_error")
        ),
    ))
}

fn strip_runtime_json(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    for r in v.as_array_mut().ok_or("reports.json is not an array")? {
        r.as_object_mut().ok_or("report is not an object")?.remove("runtime_s");
    }
    Ok(v)
}

fn strip_runtime_csv(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()).collect())
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = walk(dir).into_iter().map(|p| p.strip_prefix(dir).unwrap().to_path_buf()).collect();
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).into_iter().flatten().flatten() {
        let p = entry.path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn determinism() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut dirs = Vec::new();
    for workers in [1, 8] {
        let out = tmp.path().join(format!("w{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_hsmax"))
            .args(["run", root.to_str().unwrap(), "--workers", &workers.to_string(), "--out", out.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Ok((false, format!("--workers {workers} exited with {}", status.status)));
        }
        dirs.push(out);
    }
    let (a, b) = (&dirs[0], &dirs[1]);
    let mut mismatches = Vec::new();
    if strip_runtime_json(&a.join("reports.json"))? != strip_runtime_json(&b.join("reports.json"))? {
        mismatches.push("reports.json".to_string());
    }
    if strip_runtime_csv(&a.join("summary.csv"))? != strip_runtime_csv(&b.join("summary.csv"))? {
        mismatches.push("summary.csv".to_string());
    }
    let listing = files(a);
    if listing != files(b) {
        mismatches.push("file listing".to_string());
    }
    for rel in &listing {
        let name = rel.to_string_lossy();
        if name == "reports.json" || name == "summary.csv" {
            continue;
        }
        if std::fs::read(a.join(rel)).ok() != std::fs::read(b.join(rel)).ok() {
            mismatches.push(name.into_owned());
        }
    }
    let rows = strip_runtime_csv(&a.join("summary.csv"))?.len() - 1;
    Ok((
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{} files identical across --workers 1/8, {rows} report rows", listing.len())
        } else {
            format!("differs: {}", mismatches.join(", "))
        },
    ))
}

struct Criterion {
    number: usize,
    name: &'static str,
    limit_s: f64,
    run: fn(&Tolerances) -> Outcome,
}

fn main() {
    let tol = Tolerances::default();
    let criteria = [
        Criterion { number: 1, name: "convolution oracle", limit_s: 30.0, run: conv_oracle },
        Criterion { number: 2, name: "unit mass", limit_s: 10.0, run: unit_mass },
        Criterion { number: 3, name: "pointwise gradient bound", limit_s: 120.0, run: kinnunen },
        Criterion { number: 4, name: "gradient boundedness ratio", limit_s: 300.0, run: theorem1 },
        Criterion { number: 5, name: "sharpness slopes", limit_s: 300.0, run: sharpness },
        Criterion { number: 6, name: "weak-norm embedding", limit_s: 10.0, run: weak_embedding },
        Criterion { number: 7, name: "kernel equivalence", limit_s: 120.0, run: norm_equivalence },
        Criterion { number: 8, name: "oscillation band", limit_s: 180.0, run: miyachi },
        Criterion { number: 9, name: "per-ball oscillation", limit_s: 180.0, run: lerner_perez },
        Criterion { number: 10, name: "N_p closed forms", limit_s: 30.0, run: np_exact },
        Criterion { number: 11, name: "split integrals", limit_s: 60.0, run: e1_e2 },
    ];
    let mut failures = 0;
    let mut budget = 0.0;
    let mut report = |number: usize, name: &str, limit_s: f64, elapsed: f64, outcome: Outcome| {
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && elapsed < limit_s, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {number:>2} {name}: {detail} [{elapsed:.1}s of {limit_s:.0}s]",
            if pass { "PASS" } else { "FAIL" }
        );
    };
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)(&tol);
        budget += c.limit_s;
        report(c.number, c.name, c.limit_s, start.elapsed().as_secs_f64(), outcome);
    }
    let start = Instant::now();
    let outcome = determinism();
    report(12, "determinism", 2.0 * budget, start.elapsed().as_secs_f64(), outcome);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
