use std::time::Instant;

use serde_json::json;

use super::settings::{relative_change, Resolution, Tolerances};
use crate::claims;
use crate::digest;
use crate::error::Result;
use crate::gridfn::{make_test_function, GridFunction, KernelSpec, TestFunctionSpec};
use crate::maxops::{maximal_many, miyachi_np, BallFamily, BallWeight, ConeParams};
use crate::norms::{
    gradient_with, hardy_quasinorms, lp_norm, EdgeRule, ExponentConfig, HardyParams,
};
use crate::report::{CheckReport, Quantity};

/// `sum_j ||d_j f||_{H^p}` per input, differentiating with `rule`.
fn sobolev_sums(inputs: &[GridFunction], params: &HardyParams, rule: EdgeRule) -> Result<Vec<f64>> {
    let Some(first) = inputs.first() else {
        return Ok(Vec::new());
    };
    let d = first.dim();
    let grads: Vec<GridFunction> = inputs.iter().flat_map(|f| gradient_with(f, rule)).collect();
    let refs: Vec<&GridFunction> = grads.iter().collect();
    let parts = hardy_quasinorms(&refs, params)?;
    Ok(parts
        .chunks(d)
        .map(|c| c.iter().map(|r| r.value).sum())
        .collect())
}

fn sample_family(family: &[TestFunctionSpec], res: &Resolution) -> Result<Vec<GridFunction>> {
    let grid = res.grid()?;
    family
        .iter()
        .map(|s| make_test_function(s, &grid))
        .collect()
}

/// Ratios with zero denominators replaced by NaN (degenerate members).
fn ratios(num: &[f64], den: &[f64]) -> Vec<f64> {
    num.iter()
        .zip(den)
        .map(|(n, d)| if *d > 0.0 { n / d } else { f64::NAN })
        .collect()
}

fn max_of(values: &[f64]) -> f64 {
    values
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(values: &[f64]) -> f64 {
    values
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::INFINITY, f64::min)
}

fn kept(values: &[f64]) -> Vec<f64> {
    values.iter().copied().filter(|v| !v.is_nan()).collect()
}

/// Finite ratios everywhere and a maximum that moves less than `tol` under refinement.
fn stability_report(id: &str, claim: &str, base: &[f64], fine: &[f64], tol: f64) -> CheckReport {
    let mut r = CheckReport::new(id, claim);
    let degenerate: Vec<usize> = (0..base.len())
        .filter(|&i| base[i].is_nan() || fine[i].is_nan())
        .collect();
    let b: Vec<f64> = base
        .iter()
        .enumerate()
        .filter(|(i, _)| !degenerate.contains(i))
        .map(|(_, v)| *v)
        .collect();
    let f: Vec<f64> = fine
        .iter()
        .enumerate()
        .filter(|(i, _)| !degenerate.contains(i))
        .map(|(_, v)| *v)
        .collect();
    for i in &degenerate {
        r.note(format!("member {i} skipped: zero denominator"));
    }
    let finite = !b.is_empty() && b.iter().chain(&f).all(|v| v.is_finite());
    let (mb, mf) = (max_of(&b), max_of(&f));
    let change = relative_change(mb, mf);
    r.lhs = Quantity::summary(&b);
    r.rhs = Quantity::summary(&f);
    r.constant_measured = mf;
    r.tolerance_used = tol;
    r.slack = tol - change;
    r.pass = finite && change < tol;
    r.metric("max_ratio", mb);
    r.metric("max_ratio_refined", mf);
    r.metric("relative_change", change);
    r.metric("members", b.len() as f64);
    if !finite {
        r.note("non-finite ratio or empty family");
    }
    r
}

fn boundedness_ratios(
    family: &[TestFunctionSpec],
    p: f64,
    kernel: &KernelSpec,
    res: &Resolution,
    t_cap: f64,
) -> Result<Vec<f64>> {
    let fs = sample_family(family, res)?;
    let scales = res.scales()?;
    let params = HardyParams::poisson(p, res.dim, scales.clone()).local(t_cap);
    let den = sobolev_sums(&fs, &params, EdgeRule::Extension)?;
    let refs: Vec<&GridFunction> = fs.iter().collect();
    let mf = maximal_many(&refs, kernel, &scales, t_cap)?;
    // M_phi f does not vanish at the box edge; one-sided differences there avoid
    // reading the zero extension as a jump.
    let num = sobolev_sums(&mf, &params, EdgeRule::OneSided)?;
    Ok(ratios(&num, &den))
}

fn digest_for(
    family: &[TestFunctionSpec],
    p: f64,
    kernel: &KernelSpec,
    res: &Resolution,
    extra: f64,
) -> String {
    digest::of_json(
        &json!({ "family": family, "p": p, "kernel": kernel, "resolution": res, "extra": extra }),
    )
}

/// `||M_phi f||_{Hdot^{1,p}} / ||f||_{Hdot^{1,p}}` per member; passes when all ratios
/// are finite and the maximum is stable under refinement.
pub fn check_theorem1(
    family: &[TestFunctionSpec],
    p: f64,
    kernel: &KernelSpec,
    res: &Resolution,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let start = Instant::now();
    ExponentConfig::hardy_sobolev(p, res.dim)?;
    let base = boundedness_ratios(family, p, kernel, res, f64::INFINITY)?;
    let fine = boundedness_ratios(family, p, kernel, &res.refined(), f64::INFINITY)?;
    let mut r = stability_report("theorem1", claims::THEOREM1, &base, &fine, tol.refinement);
    r.metric("p", p);
    r.inputs_digest = digest_for(family, p, kernel, res, f64::INFINITY);
    r.runtime_s = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Local version: `m_phi` and the `h^p` quasi-norms, all truncated at `t <= 1`.
pub fn check_local_theorem(
    family: &[TestFunctionSpec],
    p: f64,
    kernel: &KernelSpec,
    res: &Resolution,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let start = Instant::now();
    ExponentConfig::hardy_sobolev(p, res.dim)?;
    let base = boundedness_ratios(family, p, kernel, res, 1.0)?;
    let fine = boundedness_ratios(family, p, kernel, &res.refined(), 1.0)?;
    let mut r = stability_report(
        "local_theorem",
        claims::LOCAL_THEOREM,
        &base,
        &fine,
        tol.refinement,
    );
    r.metric("p", p);
    r.inputs_digest = digest_for(family, p, kernel, res, 1.0);
    r.runtime_s = start.elapsed().as_secs_f64();
    Ok(r)
}

fn corollary_ratios(
    family: &[TestFunctionSpec],
    kernel: &KernelSpec,
    res: &Resolution,
) -> Result<Vec<f64>> {
    let fs = sample_family(family, res)?;
    let scales = res.scales()?;
    let params = HardyParams::poisson(1.0, res.dim, scales.clone());
    let den = sobolev_sums(&fs, &params, EdgeRule::Extension)?;
    let refs: Vec<&GridFunction> = fs.iter().collect();
    let mf = maximal_many(&refs, kernel, &scales, f64::INFINITY)?;
    let num: Vec<f64> = mf
        .iter()
        .map(|m| {
            gradient_with(m, EdgeRule::OneSided)
                .iter()
                .map(|g| lp_norm(g, 1.0))
                .sum()
        })
        .collect::<Result<_>>()?;
    Ok(ratios(&num, &den))
}

/// `||grad M_phi f||_1 / ||f||_{Hdot^{1,1}}`, same pass rule as [`check_theorem1`].
pub fn check_corollary1(
    family: &[TestFunctionSpec],
    kernel: &KernelSpec,
    res: &Resolution,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let start = Instant::now();
    let base = corollary_ratios(family, kernel, res)?;
    let fine = corollary_ratios(family, kernel, &res.refined())?;
    let mut r = stability_report(
        "corollary1",
        claims::COROLLARY1,
        &base,
        &fine,
        tol.refinement,
    );
    r.inputs_digest = digest_for(family, 1.0, kernel, res, 0.0);
    r.runtime_s = start.elapsed().as_secs_f64();
    Ok(r)
}

fn modulus_ratios(family: &[TestFunctionSpec], p: f64, res: &Resolution) -> Result<Vec<f64>> {
    let fs = sample_family(family, res)?;
    let params = HardyParams::poisson(p, res.dim, res.scales()?);
    let abs: Vec<GridFunction> = fs.iter().map(GridFunction::abs).collect();
    let mut both = fs;
    both.extend(abs);
    let sums = sobolev_sums(&both, &params, EdgeRule::Extension)?;
    let (den, num) = sums.split_at(family.len());
    Ok(ratios(num, den))
}

/// `sum_j ||d_j |f| ||_{H^p} / sum_j ||d_j f||_{H^p}` on sign-changing inputs.
pub fn check_modulus_comparison(
    family: &[TestFunctionSpec],
    p: f64,
    res: &Resolution,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let start = Instant::now();
    ExponentConfig::hardy_sobolev(p, res.dim)?;
    let base = modulus_ratios(family, p, res)?;
    let fine = modulus_ratios(family, p, &res.refined())?;
    let mut r = stability_report(
        "modulus_comparison",
        claims::MODULUS_COMPARISON,
        &base,
        &fine,
        tol.refinement,
    );
    r.metric("p", p);
    r.inputs_digest = digest_for(family, p, &KernelSpec::poisson(res.dim), res, 0.0);
    r.runtime_s = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Ball radii per decade at the unrefined level.
pub const BALLS_PER_DECADE: f64 = 24.0;

fn miyachi_ratios(
    family: &[TestFunctionSpec],
    p: f64,
    res: &Resolution,
    r_max: f64,
    weight: BallWeight,
) -> Result<Vec<f64>> {
    let fs = sample_family(family, res)?;
    let grid = res.grid()?;
    let params = HardyParams::poisson(p, res.dim, res.scales()?);
    let den = sobolev_sums(&fs, &params, EdgeRule::Extension)?;
    let balls =
        BallFamily::log_uniform(&grid, r_max, BALLS_PER_DECADE * 2f64.powi(res.level as i32))?;
    let num: Vec<f64> = fs
        .iter()
        .map(|f| lp_norm(&miyachi_np(f, p, &balls, weight)?, p))
        .collect::<Result<_>>()?;
    Ok(ratios(&num, &den))
}

/// `||N_p f||_p / ||f||_{Hdot^{1,p}}` across a family: passes when `max / min`
/// stays within `tol.band` at both resolutions and both ends of the band move
/// less than `tol.refinement`.
pub fn check_miyachi(
    family: &[TestFunctionSpec],
    p: f64,
    res: &Resolution,
    r_max: f64,
    weight: BallWeight,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let start = Instant::now();
    ExponentConfig::hardy_sobolev(p, res.dim)?;
    let base = miyachi_ratios(family, p, res, r_max, weight)?;
    let fine = miyachi_ratios(family, p, &res.refined(), r_max, weight)?;
    let mut r = stability_report("miyachi", claims::MIYACHI, &base, &fine, tol.refinement);
    let (b, f) = (kept(&base), kept(&fine));
    let band = max_of(&b) / min_of(&b);
    let band_fine = max_of(&f) / min_of(&f);
    let low_change = relative_change(min_of(&b), min_of(&f));
    let high_change = relative_change(max_of(&b), max_of(&f));
    let change = low_change.max(high_change);
    r.constant_measured = band_fine;
    r.slack = (tol.band - band.max(band_fine)).min(tol.refinement - change);
    r.pass = r.pass && band <= tol.band && band_fine <= tol.band && change < tol.refinement;
    r.metric("band", band);
    r.metric("band_refined", band_fine);
    r.metric("min_change", low_change);
    r.metric("max_change", high_change);
    r.metric("p", p);
    r.metric("r_max", r_max);
    r.note(format!("band limit {}, ball weight {weight:?}", tol.band));
    r.inputs_digest = digest::of_json(&json!({
        "family": family, "p": p, "resolution": res, "r_max": r_max, "weight": weight
    }));
    r.runtime_s = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Ratio of the Poisson and Gaussian `H^p` quasi-norms of `d_j f_k`,
/// `f_k(x) = f(2^k x)`, for each `k`. Passes when `max / min - 1 < tol.equivalence`.
///
/// Derivatives are used because a positive bump has nonzero integral and so is
/// not in `H^p` for `p <= 1`; its gradient is.
pub fn check_norm_equivalence(
    base: &TestFunctionSpec,
    ks: &[i32],
    p: f64,
    aperture: f64,
    res: &Resolution,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let start = Instant::now();
    let grid = res.grid()?;
    let scales = res.scales()?;
    let grads: Vec<GridFunction> = ks
        .iter()
        .map(|&k| make_test_function(&base.clone().dilated(2f64.powi(k)), &grid))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .flat_map(|f| gradient_with(f, EdgeRule::Extension))
        .collect();
    let refs: Vec<&GridFunction> = grads.iter().collect();
    let d = res.dim;
    let cone = ConeParams::new(aperture);
    let norms = |kernel: KernelSpec| -> Result<Vec<f64>> {
        let params = HardyParams {
            p,
            kernel,
            cone,
            scales: scales.clone(),
        };
        let parts = hardy_quasinorms(&refs, &params)?;
        Ok(parts
            .chunks(d)
            .map(|c| c.iter().map(|r| r.value).sum())
            .collect())
    };
    let poisson = norms(KernelSpec::poisson(d))?;
    let gauss = norms(KernelSpec::gaussian(d))?;
    let rat = ratios(&poisson, &gauss);
    let spread = max_of(&rat) / min_of(&rat) - 1.0;
    let mut r = CheckReport::new("norm_equivalence", claims::NORM_EQUIVALENCE);
    r.lhs = Quantity::summary(&poisson);
    r.rhs = Quantity::summary(&gauss);
    r.constant_measured = max_of(&rat);
    r.tolerance_used = tol.equivalence;
    r.slack = tol.equivalence - spread;
    r.pass = rat.iter().all(|v| v.is_finite()) && spread < tol.equivalence;
    for (k, v) in ks.iter().zip(&rat) {
        r.metric(&format!("ratio_k{k:+}"), *v);
    }
    r.metric("spread", spread);
    r.metric("aperture", aperture);
    r.inputs_digest = digest::of_json(
        &json!({ "base": base, "ks": ks, "p": p, "aperture": aperture, "resolution": res }),
    );
    r.runtime_s = start.elapsed().as_secs_f64();
    Ok(r)
}
