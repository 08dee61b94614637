use std::time::Instant;

use crate::claims;
use crate::error::{Error, Result};
use crate::gridfn::KernelSpec;
use crate::report::{CheckReport, Quantity};

const SAMPLES_PER_SHELL: usize = 64;
const STABILITY: f64 = 0.05;
const K_START: u32 = 8;

fn unit_ball_volume(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        std::f64::consts::PI
    }
}

/// `sum_{k=0}^{k_max} 2^{-k} |B(0, 2^k)|^{-1} 1_{B(0, 2^k)}(r)`.
pub fn dyadic_envelope(dim: usize, k_max: u32, r: f64) -> f64 {
    let v = unit_ball_volume(dim);
    (0..=k_max)
        .filter(|&k| r <= 2f64.powi(k as i32))
        .map(|k| 2f64.powi(-(k as i32)) / (v * 2f64.powi((k as usize * dim) as i32)))
        .sum()
}

/// Smallest `C` with `phi(r) <= C * envelope(r)` over sampled radii `r <= 2^k_max`.
pub fn dyadic_envelope_constant(kernel: &KernelSpec, k_max: u32) -> f64 {
    let mut radii = vec![0.0];
    for j in 0..=k_max as i32 {
        let (lo, hi) = if j == 0 {
            (0.0, 1.0)
        } else {
            (2f64.powi(j - 1), 2f64.powi(j))
        };
        for s in 0..=SAMPLES_PER_SHELL {
            let u = s as f64 / SAMPLES_PER_SHELL as f64;
            // Just past the left end of the shell, where the envelope has dropped.
            radii.push(if s == 0 {
                lo * (1.0 + 1e-12) + 1e-300
            } else {
                lo + u * (hi - lo)
            });
        }
    }
    radii
        .iter()
        .map(|&r| kernel.eval_radial(r) / dyadic_envelope(kernel.dim, k_max, r))
        .fold(0.0, f64::max)
}

/// Checks that the envelope constant stays put as the dyadic sum grows from 2^8 to 2^k_max.
pub fn dyadic_envelope_check(kernel: &KernelSpec, k_max: u32) -> Result<CheckReport> {
    let start = Instant::now();
    if k_max < K_START {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} must be at least {K_START}"
        )));
    }
    let constants: Vec<f64> = (K_START..=k_max)
        .map(|k| dyadic_envelope_constant(kernel, k))
        .collect();
    let c0 = constants[0];
    let c1 = *constants.last().unwrap();
    let change = (c1 - c0).abs() / c0;
    let mut report = CheckReport::new("dyadic_envelope", claims::DYADIC_ENVELOPE);
    for (k, c) in (K_START..=k_max).zip(&constants) {
        report.metric(&format!("C_{k}"), *c);
    }
    report.metric("declared_decay_exponent", kernel.decay_exponent);
    report.lhs = Quantity::scalar(c0);
    report.rhs = Quantity::scalar(c1);
    report.constant_measured = c1;
    report.tolerance_used = STABILITY;
    report.slack = STABILITY - change;
    report.pass = c1.is_finite() && change < STABILITY;
    report.inputs_digest = kernel.digest();
    report.runtime_s = start.elapsed().as_secs_f64();
    if !report.pass {
        return Err(Error::EnvelopeViolated(format!(
            "{} kernel: C grows from {c0:.4e} to {c1:.4e} between k_max = {K_START} and {k_max} (declared decay {})",
            kernel.name(),
            kernel.decay_exponent
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::KernelFamily;

    #[test]
    fn envelope_values() {
        // d = 1, r <= 1: all terms, sum 2^-k / 2^(k+1).
        let e: f64 = (0..=3).map(|k| 0.5 * 4f64.powi(-k)).sum();
        assert!((dyadic_envelope(1, 3, 0.5) - e).abs() < 1e-15);
        assert_eq!(dyadic_envelope(1, 3, 9.0), 0.0);
    }

    #[test]
    fn fast_decay_is_stable() {
        for dim in [1, 2] {
            for k in [
                KernelSpec::gaussian(dim),
                KernelSpec::poisson(dim),
                KernelSpec::bump(dim),
            ] {
                let r = dyadic_envelope_check(&k, 12).unwrap();
                assert!(r.pass && r.constant_measured.is_finite(), "{}", k.name());
            }
        }
    }

    #[test]
    fn slow_decay_is_rejected() {
        let radii: Vec<f64> = (0..=4000)
            .map(|i| (i as f64 * 0.004).exp2() - 1.0)
            .collect();
        let values: Vec<f64> = radii.iter().map(|r| 1.0 / (1.0 + r)).collect();
        let k = KernelSpec::new(
            KernelFamily::CustomTable {
                radii,
                values,
                decay_exponent: Some(1.0),
            },
            1,
        )
        .unwrap();
        assert!(matches!(
            dyadic_envelope_check(&k, 12),
            Err(Error::EnvelopeViolated(_))
        ));
    }
}
