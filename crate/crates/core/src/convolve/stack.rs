use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scales::ScaleSet;
use super::sweep::collect_layers;
use crate::digest;
use crate::error::{Error, Result};
use crate::gridfn::{io, GridFunction, KernelSpec};

/// `phi_t * base` for every scale of a [`ScaleSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleStack {
    pub base: GridFunction,
    pub kernel: KernelSpec,
    pub scales: ScaleSet,
    pub absolute: bool,
    pub layers: Vec<GridFunction>,
}

/// Builds the stack of `phi_t * f` (or `phi_t * |f|` when `absolute`).
pub fn build_scale_stack(
    f: &GridFunction,
    kernel: &KernelSpec,
    scales: &ScaleSet,
    absolute: bool,
) -> Result<ScaleStack> {
    let base = if absolute { f.abs() } else { f.clone() };
    let layers = collect_layers(&base, kernel, scales)?
        .into_iter()
        .map(|v| GridFunction::from_parts(base.grid.clone(), v))
        .collect();
    Ok(ScaleStack {
        base,
        kernel: kernel.clone(),
        scales: scales.clone(),
        absolute,
        layers,
    })
}

#[derive(Serialize, Deserialize)]
struct LayerEntry {
    file: String,
    t: f64,
    checksum: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    kernel: KernelSpec,
    scales: ScaleSet,
    absolute: bool,
    base: LayerEntry,
    layers: Vec<LayerEntry>,
}

fn write_checked(f: &GridFunction, dir: &Path, file: String, t: f64) -> Result<LayerEntry> {
    let bytes = io::encode(f);
    fs::write(dir.join(&file), &bytes)?;
    Ok(LayerEntry {
        file,
        t,
        checksum: digest::of_bytes(&bytes),
    })
}

fn read_checked(dir: &Path, entry: &LayerEntry) -> Result<GridFunction> {
    let bytes = fs::read(dir.join(&entry.file))?;
    if digest::of_bytes(&bytes) != entry.checksum {
        return Err(Error::Format(format!(
            "checksum mismatch for {}",
            entry.file
        )));
    }
    io::decode(&bytes)
}

impl ScaleStack {
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Writes `manifest.json`, `base.bin` and one `layer_XXXX.bin` per scale.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let base = write_checked(&self.base, dir, "base.bin".into(), 0.0)?;
        let layers = self
            .layers
            .iter()
            .zip(self.scales.as_slice())
            .enumerate()
            .map(|(k, (l, &t))| write_checked(l, dir, format!("layer_{k:04}.bin"), t))
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            kernel: self.kernel.clone(),
            scales: self.scales.clone(),
            absolute: self.absolute,
            base,
            layers,
        };
        let json =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(dir.join("manifest.json"), json)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<ScaleStack> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        if m.layers.len() != m.scales.len() {
            return Err(Error::Format("layer count differs from scale count".into()));
        }
        let base = read_checked(dir, &m.base)?;
        let layers = m
            .layers
            .iter()
            .map(|e| read_checked(dir, e))
            .collect::<Result<Vec<_>>>()?;
        if layers.iter().any(|l| !l.grid.same_box(&base.grid)) {
            return Err(Error::Format("layer grid differs from base grid".into()));
        }
        Ok(ScaleStack {
            base,
            kernel: m.kernel,
            scales: m.scales,
            absolute: m.absolute,
            layers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolve::{convolve, dilate};
    use crate::gridfn::{make_grid, Extension};

    #[test]
    fn constant_layers_and_single_scale() {
        let g = make_grid(1, 4.0, 64, Extension::Periodic).unwrap();
        let f = GridFunction::constant(&g, 2.5);
        let scales = ScaleSet::log_uniform(g.h(), 8.0, 16).unwrap();
        let s = build_scale_stack(&f, &KernelSpec::poisson(1), &scales, true).unwrap();
        assert_eq!(s.len(), 16);
        for l in &s.layers {
            assert!(l.values.iter().all(|v| (v - 2.5).abs() < 1e-10));
        }
        let one = ScaleSet::explicit(vec![0.5]).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0].sin()).unwrap();
        let s = build_scale_stack(&f, &KernelSpec::gaussian(1), &one, false).unwrap();
        let c = convolve(&f, &dilate(&KernelSpec::gaussian(1), 0.5, &g).unwrap()).unwrap();
        assert_eq!(s.layers[0], c);
    }

    #[test]
    fn persistence_round_trip_and_tamper_detection() {
        let g = make_grid(1, 2.0, 16, Extension::Zero).unwrap();
        let f = GridFunction::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        let scales = ScaleSet::log_uniform(0.25, 2.0, 3).unwrap();
        let s = build_scale_stack(&f, &KernelSpec::gaussian(1), &scales, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        s.save(dir.path()).unwrap();
        assert_eq!(ScaleStack::load(dir.path()).unwrap(), s);
        let mut other = s.layers[1].clone();
        other.values[3] += 1.0;
        io::write(&other, &dir.path().join("layer_0001.bin")).unwrap();
        assert!(matches!(
            ScaleStack::load(dir.path()),
            Err(Error::Format(_))
        ));
    }
}
