//! Pipeline stages. Each one reads the files written by earlier stages from
//! the output directory and writes its own, so any stage can be rerun alone.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use serde::Serialize;
use tforge_core::clearance::{clearance_csv, clearance_report};
use tforge_core::export::{
    base_dxf, post_cutlist, strut_dxf, write_report, BasePlateSpec, StrutProfileSpec,
    BASE_OUTLINE_MARGIN_IN, POST_HOLE_DIAMETER_IN,
};
use tforge_core::formfind::{find_equilibrium, load_equilibrium, EquilibriumFile};
use tforge_core::model::Configuration;
use tforge_core::scaffold::{build_plan, centroids, longitudinal_axis, reorient, ScaffoldPlan};
use tforge_core::structural::{
    frames_csv, modal_report, mode_frames, ModalResult, StructuralModel, TangentOptions,
};

use crate::config::RunConfig;

pub const EQUILIBRIUM: &str = "equilibrium.json";
pub const SAG: &str = "sag.json";
pub const MODAL: &str = "modal.json";
pub const MODES: &str = "modes.csv";
pub const CLEARANCE: &str = "clearance.csv";
pub const PLAN: &str = "plan.json";
pub const REPORT: &str = "report.txt";
pub const BASE_DXF: &str = "base.dxf";
pub const STRUT_DXF: &str = "strut.dxf";
pub const POSTS: &str = "posts.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    FormFind,
    Analyze,
    Modes,
    Clearance,
    Scaffold,
    Export,
}

impl Stage {
    pub const PIPELINE: [Stage; 6] = [
        Stage::FormFind,
        Stage::Analyze,
        Stage::Modes,
        Stage::Clearance,
        Stage::Scaffold,
        Stage::Export,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::FormFind => "formfind",
            Stage::Analyze => "analyze",
            Stage::Modes => "modes",
            Stage::Clearance => "clearance",
            Stage::Scaffold => "scaffold",
            Stage::Export => "export",
        }
    }

    pub fn run(self, cfg: &RunConfig) -> Result<()> {
        match self {
            Stage::FormFind => formfind(cfg),
            Stage::Analyze => analyze(cfg),
            Stage::Modes => modes(cfg),
            Stage::Clearance => clearance(cfg),
            Stage::Scaffold => scaffold(cfg),
            Stage::Export => export(cfg),
        }
    }
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn write(cfg: &RunConfig, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create output directory {}", cfg.out_dir.display()))?;
    let path = out_path(cfg, name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(cfg: &RunConfig, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(cfg, name, &text)
}

fn read_input(path: &Path, producer: &str) -> Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {} (run `{producer}` first)", path.display()))
}

fn load_config(cfg: &RunConfig) -> Result<Configuration> {
    let path = out_path(cfg, EQUILIBRIUM);
    read_input(&path, "formfind")?;
    let eq: EquilibriumFile = load_equilibrium(&path)?;
    if eq.coords.len() != cfg.topology.n_vertices() {
        bail!(
            "{} has {} vertices but the topology has {}",
            path.display(),
            eq.coords.len(),
            cfg.topology.n_vertices()
        );
    }
    Ok(eq.coords)
}

fn load_plan(cfg: &RunConfig) -> Result<ScaffoldPlan> {
    let path = out_path(cfg, PLAN);
    let text = read_input(&path, "scaffold")?;
    serde_json::from_str(&text).with_context(|| format!("invalid plan {}", path.display()))
}

fn tangent_options(cfg: &RunConfig) -> TangentOptions {
    TangentOptions {
        law: cfg.law,
        ..Default::default()
    }
}

fn formfind(cfg: &RunConfig) -> Result<()> {
    let eq = find_equilibrium(&cfg.topology, &cfg.material, &cfg.formfind)?;
    let converged = eq.restarts.iter().filter(|r| r.converged).count();
    info!("{converged} of {} restarts converged", eq.restarts.len());
    println!(
        "formfind: energy {:.6} lbf·in, gradient norm {:.3e}, best of {} restarts ({converged} converged)",
        eq.energy,
        eq.gradient_norm,
        eq.restarts.len()
    );
    write_json(cfg, EQUILIBRIUM, &EquilibriumFile::from(&eq))
}

/// Displacements refer to the reoriented structure (z up).
#[derive(Serialize)]
struct SagFile {
    supports: Vec<usize>,
    max_sag_in: f64,
    max_sag_vertex: usize,
    displacement_in: Vec<[f64; 3]>,
}

/// The structure as it stands on the build surface.
fn reoriented(cfg: &RunConfig, config: &Configuration) -> Result<Configuration> {
    let axis = longitudinal_axis(&centroids(config, &cfg.topology))?;
    Ok(reorient(
        config,
        &cfg.topology,
        &axis,
        cfg.scaffold.roll_scan,
        cfg.scaffold.margin,
    )?)
}

/// The three lowest vertices; equal heights go to the smaller label.
pub fn lowest_vertices(config: &Configuration, count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=config.len()).collect();
    order.sort_by(|&a, &b| {
        config
            .vertex(a)
            .z
            .total_cmp(&config.vertex(b).z)
            .then(a.cmp(&b))
    });
    order.truncate(count);
    order
}

fn free_modal(cfg: &RunConfig, config: &Configuration) -> Result<ModalResult> {
    let model = StructuralModel::from_equilibrium(
        config,
        &cfg.topology,
        &cfg.material,
        &tangent_options(cfg),
    )?;
    Ok(model.natural_frequencies(&[])?)
}

fn analyze(cfg: &RunConfig) -> Result<()> {
    let config = reoriented(cfg, &load_config(cfg)?)?;
    let supports = cfg
        .supports
        .clone()
        .unwrap_or_else(|| lowest_vertices(&config, 3));
    let model = StructuralModel::from_equilibrium(
        &config,
        &cfg.topology,
        &cfg.material,
        &tangent_options(cfg),
    )?;
    let nodes: Vec<usize> = supports.iter().map(|v| v - 1).collect();
    let sag = model
        .static_sag(&nodes)
        .with_context(|| format!("sag with supports {supports:?}"))?;
    println!(
        "analyze: max sag {:.6} in at vertex {} (supports {supports:?})",
        sag.max_sag, sag.max_sag_vertex
    );
    write_json(
        cfg,
        SAG,
        &SagFile {
            supports,
            max_sag_in: sag.max_sag,
            max_sag_vertex: sag.max_sag_vertex,
            displacement_in: sag.displacement.iter().map(|u| [u.x, u.y, u.z]).collect(),
        },
    )?;

    let modal = model.natural_frequencies(&[])?;
    let rigid = modal.rigid_modes();
    if rigid != 6 {
        log::warn!("free structure has {rigid} zero-frequency modes; 6 are rigid-body motions");
    }
    if let Some(i) = modal.first_elastic_mode() {
        println!(
            "analyze: {rigid} rigid modes, first elastic mode {:.4} Hz",
            modal.frequencies[i]
        );
    }
    write_json(cfg, MODAL, &modal_report(&modal))
}

fn modes(cfg: &RunConfig) -> Result<()> {
    let config = load_config(cfg)?;
    let modal = free_modal(cfg, &config)?;
    let index = match cfg.modes.mode {
        Some(m) => m - 1,
        None => modal
            .first_elastic_mode()
            .context("structure has no elastic mode to animate")?,
    };
    let frames = mode_frames(
        &config,
        &modal,
        index,
        cfg.modes.amplitude,
        cfg.modes.frames,
    )?;
    println!(
        "modes: mode {} at {:.4} Hz, {} frames",
        index + 1,
        modal.frequencies[index],
        frames.len()
    );
    write(cfg, MODES, &frames_csv(&frames))
}

fn clearance(cfg: &RunConfig) -> Result<()> {
    let config = load_config(cfg)?;
    let report = clearance_report(&config, &cfg.topology, cfg.clearance_threshold);
    let closest = report
        .entries
        .iter()
        .map(|e| e.distance)
        .fold(f64::INFINITY, f64::min);
    println!(
        "clearance: closest pair {closest:.4} in, {} pairs under {:.4} in",
        report.violations.len(),
        cfg.clearance_threshold
    );
    for v in &report.violations {
        log::warn!("struts {} and {} are {:.4} in apart", v.i, v.j, v.distance);
    }
    write(cfg, CLEARANCE, &clearance_csv(&report))
}

fn scaffold(cfg: &RunConfig) -> Result<()> {
    let config = load_config(cfg)?;
    let plan = build_plan(&config, &cfg.topology, &cfg.scaffold)?;
    println!(
        "scaffold: axis struts {}-{} ({:.4} in), min post spacing {:.4} in",
        plan.axis.pt1, plan.axis.pt2, plan.axis.maxdis, plan.min_post_spacing
    );
    write_json(cfg, PLAN, &plan)?;
    write(cfg, REPORT, &write_report(&plan))
}

fn export(cfg: &RunConfig) -> Result<()> {
    let plan = load_plan(cfg)?;
    let base = BasePlateSpec::from_plan(&plan, POST_HOLE_DIAMETER_IN, BASE_OUTLINE_MARGIN_IN)?;
    write(cfg, BASE_DXF, &base_dxf(&base)?)?;
    write(
        cfg,
        STRUT_DXF,
        &strut_dxf(&StrutProfileSpec::new(cfg.material.strut_length))?,
    )?;
    write(cfg, POSTS, &post_cutlist(&plan))
}
