//! Run configuration: a TOML file of named grids, kernels, scale sets, ball
//! families and test-function families, plus evaluations and checks that refer
//! to them by name.
//!
//! Float values may be written as hexadecimal literals (`0x1.8p-1`) anywhere a
//! number is expected. They are rewritten to their exact decimal form before
//! parsing, so line numbers in error messages are unaffected.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;

use hsmax::gridfn::{KernelFamily, KernelSpec, TestFunctionSpec};
use hsmax::maxops::BallWeight;
use hsmax::norms::ExponentConfig;
use hsmax::verify::{Resolution, Tolerances};
use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn default_memory_mb() -> u64 {
    4096
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    /// Largest estimated working set of a single evaluation or check.
    #[serde(default = "default_memory_mb")]
    pub memory_mb: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { memory_mb: default_memory_mb() }
    }
}

/// Scale set over a named grid. Without explicit bounds the sweep runs from `h/2` to `2L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleDef {
    pub grid: String,
    #[serde(default)]
    pub per_decade: Option<f64>,
    #[serde(default)]
    pub t_min: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub explicit: Option<Vec<f64>>,
}

/// Radii log-uniform in `[h, r_max]` on a named grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallDef {
    pub grid: String,
    pub r_max: f64,
    #[serde(default = "default_balls_per_decade")]
    pub per_decade: f64,
}

fn default_balls_per_decade() -> f64 {
    24.0
}

/// `members` copies of `spec`; member `k` is seeded with `seed + config.seed + k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDef {
    pub spec: TestFunctionSpec,
    #[serde(default = "one_member")]
    pub members: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one_member() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    Sample,
    Gradient,
    Maximal,
    TruncatedMaximal,
    Nontangential,
    HlMaximal,
    MiyachiNp,
    LpNorm,
    WeakNorm,
    Hardy,
    LocalHardy,
    HardySobolev,
    LocalHardySobolev,
}

impl Operator {
    pub fn name(self) -> &'static str {
        match self {
            Operator::Sample => "sample",
            Operator::Gradient => "gradient",
            Operator::Maximal => "maximal",
            Operator::TruncatedMaximal => "truncated-maximal",
            Operator::Nontangential => "nontangential",
            Operator::HlMaximal => "hl-maximal",
            Operator::MiyachiNp => "miyachi-np",
            Operator::LpNorm => "lp-norm",
            Operator::WeakNorm => "weak-norm",
            Operator::Hardy => "hardy",
            Operator::LocalHardy => "local-hardy",
            Operator::HardySobolev => "hardy-sobolev",
            Operator::LocalHardySobolev => "local-hardy-sobolev",
        }
    }

    /// True when the result is a scalar rather than a grid function.
    pub fn is_norm(self) -> bool {
        matches!(
            self,
            Operator::LpNorm
                | Operator::WeakNorm
                | Operator::Hardy
                | Operator::LocalHardy
                | Operator::HardySobolev
                | Operator::LocalHardySobolev
        )
    }

    fn needs_kernel(self) -> bool {
        matches!(self, Operator::Maximal | Operator::TruncatedMaximal | Operator::Nontangential)
    }

    fn needs_scales(self) -> bool {
        matches!(
            self,
            Operator::Maximal
                | Operator::TruncatedMaximal
                | Operator::Nontangential
                | Operator::Hardy
                | Operator::LocalHardy
                | Operator::HardySobolev
                | Operator::LocalHardySobolev
        )
    }

    fn needs_balls(self) -> bool {
        matches!(self, Operator::HlMaximal | Operator::MiyachiNp)
    }

    fn needs_p(self) -> bool {
        matches!(
            self,
            Operator::HlMaximal
                | Operator::MiyachiNp
                | Operator::LpNorm
                | Operator::WeakNorm
                | Operator::Hardy
                | Operator::LocalHardy
                | Operator::HardySobolev
                | Operator::LocalHardySobolev
        )
    }
}

/// One operator applied to one family member on one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evaluation {
    pub operator: Operator,
    pub input: String,
    #[serde(default)]
    pub member: usize,
    pub grid: String,
    /// Defaults to the Poisson kernel for the Hardy-type norms.
    #[serde(default)]
    pub kernel: Option<String>,
    #[serde(default)]
    pub scales: Option<String>,
    #[serde(default)]
    pub balls: Option<String>,
    /// Exponent; `r` for `weak-norm`.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default = "one")]
    pub aperture: f64,
    /// Scale cap of truncated operators. Local norms use 1.
    #[serde(default)]
    pub t_cap: Option<f64>,
    #[serde(default)]
    pub weight: BallWeight,
}

fn one() -> f64 {
    1.0
}

/// Seeded sample of balls (or points with scales) in `[-span, span]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub count: usize,
    pub span: f64,
    pub radii: [f64; 2],
}

fn default_oracle_count() -> usize {
    50
}
fn default_weak_count() -> usize {
    100
}
fn default_points() -> usize {
    9
}
fn default_ks() -> Vec<i32> {
    (-3..=3).collect()
}
fn default_inverse_volume() -> BallWeight {
    BallWeight::InverseVolume
}
fn default_k_max() -> u32 {
    16
}

/// Checks, tagged by `kind`. `seed` fields are offsets added to the global seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Check {
    ConvOracle {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_oracle_count")]
        count: usize,
    },
    UnitMass {},
    Kinnunen {
        family: String,
        kernel: String,
        grid: String,
    },
    Theorem1 {
        family: String,
        kernel: String,
        grid: String,
        p: f64,
    },
    LocalTheorem {
        family: String,
        kernel: String,
        grid: String,
        p: f64,
    },
    Corollary1 {
        family: String,
        kernel: String,
        grid: String,
    },
    ModulusComparison {
        family: String,
        grid: String,
        p: f64,
    },
    Sharpness {
        function: String,
        kernel: String,
        grid: String,
        #[serde(default = "default_points")]
        points: usize,
    },
    WeakEmbedding {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_weak_count")]
        count: usize,
    },
    NormEquivalence {
        function: String,
        grid: String,
        #[serde(default = "one")]
        p: f64,
        #[serde(default = "one")]
        aperture: f64,
        #[serde(default = "default_ks")]
        ks: Vec<i32>,
    },
    Miyachi {
        family: String,
        grid: String,
        p: f64,
        r_max: f64,
        #[serde(default = "default_inverse_volume")]
        weight: BallWeight,
    },
    LernerPerez {
        function: String,
        grid: String,
        p: f64,
        q: f64,
        r_max: f64,
        balls: Sampling,
        #[serde(default)]
        seed: u64,
    },
    NpExact {},
    E1E2 {
        function: String,
        kernel: String,
        grid: String,
        p: f64,
        points: Sampling,
        #[serde(default)]
        seed: u64,
    },
    DyadicEnvelope {
        kernel: String,
        dim: usize,
        #[serde(default = "default_k_max")]
        k_max: u32,
    },
}

impl Check {
    pub fn kind(&self) -> &'static str {
        match self {
            Check::ConvOracle { .. } => "conv-oracle",
            Check::UnitMass {} => "unit-mass",
            Check::Kinnunen { .. } => "kinnunen",
            Check::Theorem1 { .. } => "theorem1",
            Check::LocalTheorem { .. } => "local-theorem",
            Check::Corollary1 { .. } => "corollary1",
            Check::ModulusComparison { .. } => "modulus-comparison",
            Check::Sharpness { .. } => "sharpness",
            Check::WeakEmbedding { .. } => "weak-embedding",
            Check::NormEquivalence { .. } => "norm-equivalence",
            Check::Miyachi { .. } => "miyachi",
            Check::LernerPerez { .. } => "lerner-perez",
            Check::NpExact {} => "np-exact",
            Check::E1E2 { .. } => "e1-e2",
            Check::DyadicEnvelope { .. } => "dyadic-envelope",
        }
    }

    pub fn claim(&self) -> &'static str {
        use hsmax::claims::*;
        match self {
            Check::ConvOracle { .. } => CONV_ORACLE,
            Check::UnitMass {} => UNIT_MASS,
            Check::Kinnunen { .. } => KINNUNEN,
            Check::Theorem1 { .. } => THEOREM1,
            Check::LocalTheorem { .. } => LOCAL_THEOREM,
            Check::Corollary1 { .. } => COROLLARY1,
            Check::ModulusComparison { .. } => MODULUS_COMPARISON,
            Check::Sharpness { .. } => SHARPNESS,
            Check::WeakEmbedding { .. } => WEAK_EMBEDDING,
            Check::NormEquivalence { .. } => NORM_EQUIVALENCE,
            Check::Miyachi { .. } => MIYACHI,
            Check::LernerPerez { .. } => LERNER_PEREZ,
            Check::NpExact {} => NP_EXACT,
            Check::E1E2 { .. } => E1_E2,
            Check::DyadicEnvelope { .. } => DYADIC_ENVELOPE,
        }
    }

    /// The grid a check runs on, if it takes one from the config.
    pub fn grid(&self) -> Option<&str> {
        match self {
            Check::Kinnunen { grid, .. }
            | Check::Theorem1 { grid, .. }
            | Check::LocalTheorem { grid, .. }
            | Check::Corollary1 { grid, .. }
            | Check::ModulusComparison { grid, .. }
            | Check::Sharpness { grid, .. }
            | Check::NormEquivalence { grid, .. }
            | Check::Miyachi { grid, .. }
            | Check::LernerPerez { grid, .. }
            | Check::E1E2 { grid, .. } => Some(grid),
            _ => None,
        }
    }

    fn family(&self) -> Option<&str> {
        match self {
            Check::Kinnunen { family, .. }
            | Check::Theorem1 { family, .. }
            | Check::LocalTheorem { family, .. }
            | Check::Corollary1 { family, .. }
            | Check::ModulusComparison { family, .. }
            | Check::Miyachi { family, .. } => Some(family),
            Check::Sharpness { function, .. }
            | Check::NormEquivalence { function, .. }
            | Check::LernerPerez { function, .. }
            | Check::E1E2 { function, .. } => Some(function),
            _ => None,
        }
    }

    fn kernel(&self) -> Option<&str> {
        match self {
            Check::Kinnunen { kernel, .. }
            | Check::Theorem1 { kernel, .. }
            | Check::LocalTheorem { kernel, .. }
            | Check::Corollary1 { kernel, .. }
            | Check::Sharpness { kernel, .. }
            | Check::E1E2 { kernel, .. }
            | Check::DyadicEnvelope { kernel, .. } => Some(kernel),
            _ => None,
        }
    }

    /// Exponent that must satisfy the Hardy-Sobolev range, if any.
    fn hardy_sobolev_p(&self) -> Option<f64> {
        match self {
            Check::Theorem1 { p, .. }
            | Check::LocalTheorem { p, .. }
            | Check::ModulusComparison { p, .. }
            | Check::Miyachi { p, .. }
            | Check::LernerPerez { p, .. }
            | Check::E1E2 { p, .. } => Some(*p),
            _ => None,
        }
    }

    /// Whether the check compares against one refinement of its grid.
    pub fn refines(&self) -> bool {
        !matches!(
            self,
            Check::ConvOracle { .. }
                | Check::UnitMass {}
                | Check::Sharpness { .. }
                | Check::WeakEmbedding { .. }
                | Check::NormEquivalence { .. }
                | Check::NpExact {}
                | Check::DyadicEnvelope { .. }
        )
    }

    /// Number of test functions the check holds at once.
    pub fn members(&self, cfg: &RunConfig) -> usize {
        match self {
            Check::NormEquivalence { ks, .. } => ks.len(),
            _ => self.family().and_then(|f| cfg.families.get(f)).map_or(1, |f| f.members),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grids: BTreeMap<String, Resolution>,
    #[serde(default)]
    pub kernels: BTreeMap<String, KernelFamily>,
    #[serde(default)]
    pub scales: BTreeMap<String, ScaleDef>,
    #[serde(default)]
    pub balls: BTreeMap<String, BallDef>,
    #[serde(default)]
    pub families: BTreeMap<String, FamilyDef>,
    #[serde(default)]
    pub evaluations: BTreeMap<String, Evaluation>,
    #[serde(default)]
    pub checks: BTreeMap<String, Check>,
}

static HEX_FLOAT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(^|[=\[,{]\s*)([+-]?0[xX][0-9a-fA-F]+(?:\.[0-9a-fA-F]*)?[pP][+-]?[0-9]+)")
        .expect("valid pattern")
});

/// Replaces hexadecimal float literals by the shortest decimal that parses back
/// to the same `f64`.
pub fn expand_hex_floats(text: &str) -> Result<String, CliError> {
    let mut bad = None;
    let out = text
        .lines()
        .enumerate()
        .map(|(line, s)| {
            // Leave comments alone.
            let (code, comment) = match s.find('#') {
                Some(i) => s.split_at(i),
                None => (s, ""),
            };
            let code = HEX_FLOAT.replace_all(code, |c: &Captures| {
                let lit = &c[2];
                let (neg, body) = match lit.as_bytes()[0] {
                    b'-' => (true, &lit[1..]),
                    b'+' => (false, &lit[1..]),
                    _ => (false, lit),
                };
                match hexf_parse::parse_hexf64(body, false) {
                    Ok(v) => format!("{}{:?}", &c[1], if neg { -v } else { v }),
                    Err(e) => {
                        bad.get_or_insert(CliError::Config(format!(
                            "line {}: hexadecimal float {lit}: {e}",
                            line + 1
                        )));
                        c[0].to_string()
                    }
                }
            });
            format!("{code}{comment}")
        })
        .collect::<Vec<_>>()
        .join("\n");
    match bad {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let text = expand_hex_floats(text)?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn grid(&self, name: &str) -> &Resolution {
        &self.grids[name]
    }

    pub fn kernel(&self, name: &str, dim: usize) -> Result<KernelSpec, CliError> {
        KernelSpec::new(self.kernels[name].clone(), dim)
            .map_err(|e| CliError::Config(format!("kernels.{name}: {e}")))
    }

    /// Members of a family with their effective seeds.
    pub fn members(&self, name: &str) -> Vec<TestFunctionSpec> {
        let f = &self.families[name];
        (0..f.members)
            .map(|k| {
                let seed = f.seed.wrapping_add(self.seed).wrapping_add(k as u64);
                f.spec.clone().with_seed(seed)
            })
            .collect()
    }

    /// Resolves every name and checks every exponent, without computing anything.
    pub fn validate(&self) -> Result<(), CliError> {
        let need = |field: String, map: &str, name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Config(format!("{field}: no {map} named `{name}`")))
            }
        };
        for (name, g) in &self.grids {
            g.grid().map_err(|e| CliError::Config(format!("grids.{name}: {e}")))?;
            for (kname, _) in &self.kernels {
                self.kernel(kname, g.dim)?;
            }
        }
        for (name, s) in &self.scales {
            need(format!("scales.{name}.grid"), "grid", &s.grid, self.grids.contains_key(&s.grid))?;
        }
        for (name, b) in &self.balls {
            need(format!("balls.{name}.grid"), "grid", &b.grid, self.grids.contains_key(&b.grid))?;
        }
        for (name, f) in &self.families {
            if f.members == 0 {
                return Err(CliError::Config(format!("families.{name}.members must be positive")));
            }
        }
        for (id, e) in &self.evaluations {
            let at = |field: &str| format!("evaluations.{id}.{field}");
            need(at("input"), "family", &e.input, self.families.contains_key(&e.input))?;
            need(at("grid"), "grid", &e.grid, self.grids.contains_key(&e.grid))?;
            if e.member >= self.families[&e.input].members {
                return Err(CliError::Config(format!(
                    "{}: family `{}` has {} members",
                    at("member"),
                    e.input,
                    self.families[&e.input].members
                )));
            }
            match &e.kernel {
                Some(k) => need(at("kernel"), "kernel", k, self.kernels.contains_key(k))?,
                None if e.operator.needs_kernel() => {
                    return Err(CliError::Config(format!("{} is required by {}", at("kernel"), e.operator.name())))
                }
                None => {}
            }
            let optional = |field: &str, value: &Option<String>, map: &str, known: bool, required: bool| {
                match value {
                    Some(v) => need(at(field), map, v, known),
                    None if required => {
                        Err(CliError::Config(format!("{} is required by {}", at(field), e.operator.name())))
                    }
                    None => Ok(()),
                }
            };
            let known_scales = e.scales.as_ref().is_some_and(|s| self.scales.contains_key(s));
            optional("scales", &e.scales, "scale set", known_scales, e.operator.needs_scales())?;
            let known_balls = e.balls.as_ref().is_some_and(|b| self.balls.contains_key(b));
            optional("balls", &e.balls, "ball family", known_balls, e.operator.needs_balls())?;
            let dim = self.grids[&e.grid].dim;
            match (e.p, e.operator.needs_p()) {
                (None, true) => {
                    return Err(CliError::Config(format!("{} is required by {}", at("p"), e.operator.name())))
                }
                (Some(p), _) => {
                    let rule = match e.operator {
                        Operator::HardySobolev | Operator::LocalHardySobolev => ExponentConfig::hardy_sobolev(p, dim),
                        _ => ExponentConfig::new(p, dim),
                    };
                    rule.map_err(|err| CliError::Config(format!("{}: {err}", at("p"))))?;
                }
                (None, false) => {}
            }
            if e.operator == Operator::TruncatedMaximal && e.t_cap.is_none() {
                return Err(CliError::Config(format!("{} is required by truncated-maximal", at("t_cap"))));
            }
        }
        for (id, c) in &self.checks {
            let at = |field: &str| format!("checks.{id}.{field}");
            if let Some(g) = c.grid() {
                need(at("grid"), "grid", g, self.grids.contains_key(g))?;
            }
            if let Some(f) = c.family() {
                need(at("family"), "family", f, self.families.contains_key(f))?;
            }
            if let Some(k) = c.kernel() {
                need(at("kernel"), "kernel", k, self.kernels.contains_key(k))?;
            }
            let dim = match c {
                Check::DyadicEnvelope { dim, .. } => *dim,
                _ => c.grid().map_or(1, |g| self.grids[g].dim),
            };
            if let Some(k) = c.kernel() {
                self.kernel(k, dim)?;
            }
            if let Some(p) = c.hardy_sobolev_p() {
                let e = ExponentConfig::hardy_sobolev(p, dim)
                    .map_err(|err| CliError::Config(format!("{}: {err}", at("p"))))?;
                if let Check::LernerPerez { q, .. } = c {
                    e.with_q(*q).map_err(|err| CliError::Config(format!("{}: {err}", at("q"))))?;
                }
            }
        }
        Ok(())
    }
}
