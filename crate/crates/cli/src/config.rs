//! Flat `key = value` experiment configuration.
//!
//! The format is intentionally minimal so runs diff cleanly: one option per
//! line, `#` comments, no sections, no includes. Parsing is strict — unknown
//! keys, duplicate keys, type errors and a missing `seed` are all rejected
//! with the offending key named.
//!
//! ```text
//! experiment = mixture-2d
//! seed       = 42
//! replicates = 100
//! n_steps    = 850
//! burn_in    = 50
//! ```
//!
//! Recognized keys:
//!
//! | key | type | meaning |
//! |-----|------|---------|
//! | `experiment` | enum | one of `gauss-dim-sweep`, `mixture-2d`, `funnel`, `banana`, `flex2-train`, `theory-report`, `isir-tv-bound` |
//! | `seed` | u64 | mandatory; no wall-clock fallback |
//! | `output_dir` | path | where CSV/SVG/checkpoints go (default `out`) |
//! | `target` | enum | target preset override (`mixture-2d-equal`, `mixture-2d-uneven`, `funnel`, `banana`, `std-gaussian`) |
//! | `dim` | usize | target dimension where applicable |
//! | `dims` | list | comma-separated dimension grid for sweeps |
//! | `extend_dims` | bool | allow the expensive upper end of the sweep grid |
//! | `n_particles` | usize | i-SIR pool size N |
//! | `proposal_variance` | f64 | isotropic global-proposal variance |
//! | `mala_step_size` | f64 | fixed MALA step (otherwise tuned in burn-in) |
//! | `n_mala_steps` | usize | rejuvenation steps per global move |
//! | `n_steps` | usize | total recorded kernel steps per chain |
//! | `burn_in` | usize | discarded prefix (and tuning window) |
//! | `replicates` | usize | independent repetitions |
//! | `n_chains` | usize | parallel chains (adaptive runs) |
//! | `n_iterations` | usize | adaptation iterations (adaptive runs) |
//! | `n_flow_layers` | usize | coupling layers of the flow |
//! | `hidden_size` | usize | width of the two MLP hidden layers |
//! | `gamma0`, `iota`, `alpha` | f64 | adaptation schedule |
//! | `strong_convexity`, `hessian_bound`, `third_derivative_bound`, `convexity_radius` | f64 | theory-report inputs |

use crate::{HarnessError, HarnessResult};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    GaussDimSweep,
    Mixture2d,
    Funnel,
    Banana,
    Flex2Train,
    TheoryReport,
    IsirTvBound,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gauss-dim-sweep" => Self::GaussDimSweep,
            "mixture-2d" => Self::Mixture2d,
            "funnel" => Self::Funnel,
            "banana" => Self::Banana,
            "flex2-train" => Self::Flex2Train,
            "theory-report" => Self::TheoryReport,
            "isir-tv-bound" => Self::IsirTvBound,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussDimSweep => "gauss-dim-sweep",
            Self::Mixture2d => "mixture-2d",
            Self::Funnel => "funnel",
            Self::Banana => "banana",
            Self::Flex2Train => "flex2-train",
            Self::TheoryReport => "theory-report",
            Self::IsirTvBound => "isir-tv-bound",
        }
    }
}

/// Parsed and type-checked experiment options.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub target: Option<String>,
    pub dim: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub extend_dims: bool,
    pub n_particles: Option<usize>,
    pub proposal_variance: Option<f64>,
    pub mala_step_size: Option<f64>,
    pub n_mala_steps: Option<usize>,
    pub n_steps: Option<usize>,
    pub burn_in: Option<usize>,
    pub replicates: Option<usize>,
    pub n_chains: Option<usize>,
    pub n_iterations: Option<usize>,
    pub n_flow_layers: Option<usize>,
    pub hidden_size: Option<usize>,
    pub gamma0: Option<f64>,
    pub iota: Option<f64>,
    pub alpha: Option<f64>,
    pub strong_convexity: Option<f64>,
    pub hessian_bound: Option<f64>,
    pub third_derivative_bound: Option<f64>,
    pub convexity_radius: Option<f64>,
}

impl ExperimentConfig {
    /// Minimal config for tests and programmatic use.
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        Self {
            experiment,
            seed,
            output_dir: PathBuf::from("out"),
            target: None,
            dim: None,
            dims: None,
            extend_dims: false,
            n_particles: None,
            proposal_variance: None,
            mala_step_size: None,
            n_mala_steps: None,
            n_steps: None,
            burn_in: None,
            replicates: None,
            n_chains: None,
            n_iterations: None,
            n_flow_layers: None,
            hidden_size: None,
            gamma0: None,
            iota: None,
            alpha: None,
            strong_convexity: None,
            hessian_bound: None,
            third_derivative_bound: None,
            convexity_radius: None,
        }
    }
}

/// Parse a config file. Strict: unknown or duplicate keys are rejected with
/// their names, `experiment` and `seed` are mandatory.
pub fn parse_config(path: &Path) -> HarnessResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> HarnessResult<ExperimentConfig> {
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::Config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if entries.insert(key.clone(), value).is_some() {
            return Err(HarnessError::Config(format!("duplicate key `{key}`")));
        }
    }

    let mut take = |k: &str| entries.remove(k);
    let experiment = take("experiment")
        .ok_or_else(|| HarnessError::Config("missing mandatory key `experiment`".into()))?;
    let experiment = ExperimentKind::parse(&experiment)
        .ok_or_else(|| HarnessError::Config(format!("unknown experiment `{experiment}`")))?;
    let seed = take("seed")
        .ok_or_else(|| HarnessError::Config("missing mandatory key `seed`".into()))?;
    let seed: u64 = seed
        .parse()
        .map_err(|_| HarnessError::Config(format!("`seed` must be a u64, got `{seed}`")))?;

    let mut cfg = ExperimentConfig::new(experiment, seed);
    if let Some(dir) = take("output_dir") {
        cfg.output_dir = PathBuf::from(dir);
    }
    cfg.target = take("target");
    if let Some(t) = &cfg.target {
        const KNOWN: [&str; 5] = [
            "mixture-2d-equal",
            "mixture-2d-uneven",
            "funnel",
            "banana",
            "std-gaussian",
        ];
        if !KNOWN.contains(&t.as_str()) {
            return Err(HarnessError::Config(format!("unknown target preset `{t}`")));
        }
    }

    fn parse_typed<T: std::str::FromStr>(key: &str, value: String) -> HarnessResult<T> {
        value.parse().map_err(|_| {
            HarnessError::Config(format!(
                "key `{key}`: cannot parse `{value}` as {}",
                std::any::type_name::<T>()
            ))
        })
    }
    fn positive(key: &str, v: usize) -> HarnessResult<usize> {
        if v == 0 {
            Err(HarnessError::Config(format!("key `{key}` must be positive")))
        } else {
            Ok(v)
        }
    }

    macro_rules! grab_usize {
        ($field:ident, $key:literal) => {
            if let Some(v) = take($key) {
                cfg.$field = Some(positive($key, parse_typed($key, v)?)?);
            }
        };
    }
    macro_rules! grab_f64 {
        ($field:ident, $key:literal) => {
            if let Some(v) = take($key) {
                let parsed: f64 = parse_typed($key, v)?;
                if !(parsed > 0.0) {
                    return Err(HarnessError::Config(format!(
                        "key `{}` must be a positive number",
                        $key
                    )));
                }
                cfg.$field = Some(parsed);
            }
        };
    }

    grab_usize!(dim, "dim");
    grab_usize!(n_particles, "n_particles");
    grab_usize!(n_mala_steps, "n_mala_steps");
    grab_usize!(n_steps, "n_steps");
    grab_usize!(replicates, "replicates");
    grab_usize!(n_chains, "n_chains");
    grab_usize!(n_iterations, "n_iterations");
    grab_usize!(n_flow_layers, "n_flow_layers");
    grab_usize!(hidden_size, "hidden_size");
    grab_f64!(proposal_variance, "proposal_variance");
    grab_f64!(mala_step_size, "mala_step_size");
    grab_f64!(gamma0, "gamma0");
    grab_f64!(iota, "iota");
    grab_f64!(strong_convexity, "strong_convexity");
    grab_f64!(hessian_bound, "hessian_bound");
    grab_f64!(third_derivative_bound, "third_derivative_bound");
    grab_f64!(convexity_radius, "convexity_radius");
    if let Some(v) = take("alpha") {
        let parsed: f64 = parse_typed("alpha", v)?;
        if !(0.0..=1.0).contains(&parsed) {
            return Err(HarnessError::Config("key `alpha` must lie in [0, 1]".into()));
        }
        cfg.alpha = Some(parsed);
    }
    if let Some(v) = take("burn_in") {
        cfg.burn_in = Some(parse_typed("burn_in", v)?);
    }
    if let Some(v) = take("extend_dims") {
        cfg.extend_dims = parse_typed("extend_dims", v)?;
    }
    if let Some(v) = take("dims") {
        let dims: HarnessResult<Vec<usize>> = v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| HarnessError::Config(format!("key `dims`: bad entry `{s}`")))
            })
            .collect();
        let dims = dims?;
        if dims.is_empty() || dims.contains(&0) {
            return Err(HarnessError::Config("key `dims` must list positive dimensions".into()));
        }
        cfg.dims = Some(dims);
    }

    if !entries.is_empty() {
        let keys: Vec<&str> = entries.keys().map(String::as_str).collect();
        return Err(HarnessError::Config(format!(
            "unknown keys: {}",
            keys.join(", ")
        )));
    }
    Ok(cfg)
}
