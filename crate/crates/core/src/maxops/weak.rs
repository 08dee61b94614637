use crate::error::{Error, Result};
use crate::gridfn::GridFunction;

/// `sup_lambda lambda |{x in mask : |f(x)| > lambda}|^{1/r}`, computed exactly from
/// order statistics as `max_k |f|_(k) (k h^d)^{1/r}` with `|f|_(k)` the k-th largest.
pub fn weak_quasinorm(f: &GridFunction, r: f64, mask: Option<&[bool]>) -> Result<f64> {
    weak_quasinorm_values(&f.values, f.grid.cell(), r, mask)
}

pub fn weak_quasinorm_values(
    values: &[f64],
    cell: f64,
    r: f64,
    mask: Option<&[bool]>,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::ExponentOutOfRange(format!(
            "r = {r} must be positive"
        )));
    }
    if mask.is_some_and(|m| m.len() != values.len()) {
        return Err(Error::InvalidSize(
            "mask length differs from the function".into(),
        ));
    }
    let mut mags: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| mask.is_none_or(|m| m[*i]))
        .map(|(_, v)| v.abs())
        .collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(mags
        .iter()
        .enumerate()
        .map(|(k, v)| v * ((k + 1) as f64 * cell).powf(1.0 / r))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::{make_grid, Extension};

    #[test]
    fn indicator_and_zero() {
        let g = make_grid(1, 2.0, 64, Extension::Zero).unwrap();
        let f = GridFunction::from_fn(&g, |x| if x[0] >= 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 })
            .unwrap();
        assert!((weak_quasinorm(&f, 2.0, None).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(
            weak_quasinorm(&GridFunction::zeros(&g), 2.0, None).unwrap(),
            0.0
        );
    }

    #[test]
    fn power_singularity() {
        // |x|^{-1/2} on [-1, 1]: |{|f| > l}| = 2 / l^2, so l |.|^{1/2} = sqrt(2).
        let g = make_grid(1, 1.0, 1 << 16, Extension::Zero).unwrap();
        let f = GridFunction::from_fn(&g, |x| {
            if x[0] == 0.0 {
                0.0
            } else {
                x[0].abs().powf(-0.5)
            }
        })
        .unwrap();
        let v = weak_quasinorm(&f, 2.0, None).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 0.02 * 2f64.sqrt(), "{v}");
    }

    #[test]
    fn masked_subset() {
        let g = make_grid(1, 1.0, 8, Extension::Zero).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0]).unwrap();
        let mask: Vec<bool> = (0..8).map(|i| i >= 4).collect();
        // Values 0, .25, .5, .75 with h = .25: max of .75 (.25)^1, .5 (.5), .25 (.75) = .25.
        assert!((weak_quasinorm(&f, 1.0, Some(&mask)).unwrap() - 0.25).abs() < 1e-15);
    }
}
