//! Run configuration: one JSON file plus command-line overrides.
//!
//! Relative paths inside the file resolve against the file's own
//! directory, so a config and its inputs can move together.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tforge_core::formfind::{FormFindOptions, SpringLaw};
use tforge_core::model::{load_material, load_topology, MaterialSpec, TopologyMap};
use tforge_core::scaffold::{ScaffoldOptions, DEFAULT_EXHAUSTIVE_BUDGET};

use crate::Overrides;

pub const OUT_ENV: &str = "TFORGE_OUT";
pub const DEFAULT_OUT_DIR: &str = "tforge-out";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    topology: PathBuf,
    material: PathBuf,
    #[serde(default)]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    formfind: RawFormFind,
    /// 1-based vertex labels held fixed for the sag check.
    #[serde(default)]
    supports: Option<Vec<usize>>,
    #[serde(default = "default_threshold")]
    clearance_threshold: f64,
    #[serde(default)]
    scaffold: RawScaffold,
    #[serde(default)]
    modes: RawModes,
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawFormFind {
    restarts: usize,
    max_iters: usize,
    grad_tol: Option<f64>,
    tension_only: bool,
}

impl Default for RawFormFind {
    fn default() -> Self {
        let d = FormFindOptions::default();
        RawFormFind {
            restarts: d.restarts,
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
            tension_only: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawScaffold {
    roll_scan: bool,
    exhaustive_budget: u64,
    margin: f64,
    restarts: usize,
    attach_from_high_end: bool,
}

impl Default for RawScaffold {
    fn default() -> Self {
        let d = ScaffoldOptions::default();
        RawScaffold {
            roll_scan: d.roll_scan,
            exhaustive_budget: DEFAULT_EXHAUSTIVE_BUDGET,
            margin: d.margin,
            restarts: d.restarts,
            attach_from_high_end: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawModes {
    mode: Option<usize>,
    amplitude: f64,
    frames: usize,
}

impl Default for RawModes {
    fn default() -> Self {
        RawModes {
            mode: None,
            amplitude: 0.5,
            frames: 24,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModeSettings {
    /// 1-based; `None` picks the first elastic mode.
    pub mode: Option<usize>,
    pub amplitude: f64,
    pub frames: usize,
}

/// Everything a stage needs, fully resolved.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub topology: TopologyMap,
    pub material: MaterialSpec,
    pub out_dir: PathBuf,
    pub formfind: FormFindOptions,
    pub law: SpringLaw,
    pub supports: Option<Vec<usize>>,
    pub clearance_threshold: f64,
    pub scaffold: ScaffoldOptions,
    pub modes: ModeSettings,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Errors from here are configuration errors (exit status 2).
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let raw: RawConfig = serde_json::from_str(&text)
            .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));

        let topology_path = resolve(base, &raw.topology);
        let topology = load_topology(&topology_path)
            .map_err(|e| format!("topology {}: {e}", topology_path.display()))?;
        let material_path = resolve(base, &raw.material);
        let material = load_material(&material_path)
            .map_err(|e| format!("material {}: {e}", material_path.display()))?;
        material
            .check(&topology)
            .map_err(|e| format!("material {}: {e}", material_path.display()))?;

        let out_dir = match (&ov.out, &raw.out_dir) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => resolve(base, o),
            (None, None) => std::env::var_os(OUT_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        };

        let seed = ov.seed.unwrap_or(raw.seed);
        let law = if ov.tension_only || raw.formfind.tension_only {
            SpringLaw::TensionOnly
        } else {
            SpringLaw::Bilateral
        };
        if raw.formfind.restarts == 0 {
            return Err("formfind.restarts must be at least 1".into());
        }
        if let Some(t) = raw.formfind.grad_tol {
            if !(t > 0.0) {
                return Err(format!("formfind.grad_tol must be positive, got {t}"));
            }
        }
        let formfind = FormFindOptions {
            restarts: raw.formfind.restarts,
            max_iters: raw.formfind.max_iters,
            grad_tol: raw.formfind.grad_tol,
            seed,
            law,
        };

        let supports = ov.supports.clone().or(raw.supports);
        if let Some(s) = &supports {
            let n = topology.n_vertices();
            if let Some(bad) = s.iter().find(|&&v| v == 0 || v > n) {
                return Err(format!("support vertex {bad} is outside 1..{n}"));
            }
            let mut distinct = s.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 3 {
                return Err(format!(
                    "at least 3 distinct support vertices are required, got {s:?}"
                ));
            }
        }

        let clearance_threshold = ov.threshold.unwrap_or(raw.clearance_threshold);
        if !(clearance_threshold >= 0.0 && clearance_threshold.is_finite()) {
            return Err(format!(
                "clearance threshold must be non-negative, got {clearance_threshold}"
            ));
        }

        let margin = raw.scaffold.margin;
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(format!(
                "scaffold.margin must be non-negative, got {margin}"
            ));
        }
        let scaffold = ScaffoldOptions {
            roll_scan: ov.roll_scan || raw.scaffold.roll_scan,
            margin,
            exhaustive_budget: ov
                .exhaustive_budget
                .unwrap_or(raw.scaffold.exhaustive_budget),
            restarts: raw.scaffold.restarts,
            seed,
            reference: if raw.scaffold.attach_from_high_end {
                tforge_core::scaffold::AttachmentReference::HighEnd
            } else {
                tforge_core::scaffold::AttachmentReference::LowEnd
            },
        };

        let modes = ModeSettings {
            mode: ov.mode.or(raw.modes.mode),
            amplitude: ov.amplitude.unwrap_or(raw.modes.amplitude),
            frames: ov.frames.unwrap_or(raw.modes.frames),
        };
        if !(modes.amplitude > 0.0 && modes.amplitude.is_finite()) {
            return Err(format!(
                "mode amplitude must be positive, got {}",
                modes.amplitude
            ));
        }
        if modes.frames == 0 {
            return Err("mode frame count must be at least 1".into());
        }
        if modes.mode == Some(0) {
            return Err("mode numbers start at 1".into());
        }

        Ok(RunConfig {
            topology,
            material,
            out_dir,
            formfind,
            law,
            supports,
            clearance_threshold,
            scaffold,
            modes,
        })
    }
}
