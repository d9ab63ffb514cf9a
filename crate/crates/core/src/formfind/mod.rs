//! Static equilibrium shape by minimizing spring strain energy over
//! rigid-strut poses.

mod canonical;
mod energy;
mod lbfgs;

use std::path::Path;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use canonical::{canonicalize, Canonicalized};
pub use energy::{
    chart_direction, config_from_poses, energy_gradient, poses_from_config, spring_energy,
    tangent_basis, SpringLaw, StrutPose, PARAMS_PER_STRUT,
};

use crate::error::{Error, Result};
use crate::model::{read_json, Configuration, MaterialSpec, TopologyMap, Vec3};
use energy::{energy_delta, pose_gradient, recentered_gradient_norm};
use lbfgs::{Control, Exit, Lbfgs, Objective};

/// Chart offsets beyond this trigger a re-centered chart.
const CHART_LIMIT: f64 = 0.3;

/// Energies this close (relative) count as a tie between restarts.
const ENERGY_TIE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormFindOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence threshold on the gradient norm. `None` means
    /// `1e-8 · mean stiffness · strut length`.
    pub grad_tol: Option<f64>,
    pub seed: u64,
    pub law: SpringLaw,
}

impl Default for FormFindOptions {
    fn default() -> Self {
        FormFindOptions {
            restarts: 8,
            max_iters: 10_000,
            grad_tol: None,
            seed: 0,
            law: SpringLaw::Bilateral,
        }
    }
}

impl FormFindOptions {
    pub fn tolerance(&self, topo: &TopologyMap, mat: &MaterialSpec) -> f64 {
        self.grad_tol
            .unwrap_or_else(|| 1e-8 * mat.mean_stiffness(topo.n_springs()) * mat.strut_length)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartOutcome {
    pub restart: usize,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumResult {
    pub config: Configuration,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    /// 1-based spring numbers whose length is below their free length.
    pub slack_springs: Vec<usize>,
    pub grad_tol: f64,
    /// Index of the restart that produced `config`.
    pub best_restart: usize,
    pub restarts: Vec<RestartOutcome>,
}

/// One local minimization from a given starting pose.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub poses: Vec<StrutPose>,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy at the start point and after every accepted step.
    pub energy_trace: Vec<f64>,
}

struct ChartObjective<'a> {
    topo: &'a TopologyMap,
    mat: &'a MaterialSpec,
    law: SpringLaw,
    centers: Vec<Vec3>,
    frames: Vec<(Vec3, Vec3)>,
}

impl<'a> ChartObjective<'a> {
    fn new(
        topo: &'a TopologyMap,
        mat: &'a MaterialSpec,
        law: SpringLaw,
        poses: &[StrutPose],
    ) -> Self {
        let centers: Vec<Vec3> = poses.iter().map(|p| p.direction).collect();
        let frames = centers.iter().map(tangent_basis).collect();
        ChartObjective {
            topo,
            mat,
            law,
            centers,
            frames,
        }
    }

    fn encode(&self, poses: &[StrutPose]) -> Vec<f64> {
        let l = self.mat.strut_length;
        poses
            .iter()
            .flat_map(|p| {
                [
                    p.centroid.x / l,
                    p.centroid.y / l,
                    p.centroid.z / l,
                    0.0,
                    0.0,
                ]
            })
            .collect()
    }

    /// Poses plus the unnormalized chart vectors `w = d0 + a·e1 + b·e2`.
    fn decode(&self, x: &[f64]) -> (Vec<StrutPose>, Vec<Vec3>) {
        let l = self.mat.strut_length;
        let mut poses = Vec::with_capacity(self.centers.len());
        let mut ws = Vec::with_capacity(self.centers.len());
        for (i, (d0, (e1, e2))) in self.centers.iter().zip(&self.frames).enumerate() {
            let v = &x[PARAMS_PER_STRUT * i..PARAMS_PER_STRUT * (i + 1)];
            let w = d0 + v[3] * e1 + v[4] * e2;
            poses.push(StrutPose {
                centroid: Vec3::new(v[0], v[1], v[2]) * l,
                direction: w.normalize(),
            });
            ws.push(w);
        }
        (poses, ws)
    }

    fn max_offset(&self, x: &[f64]) -> f64 {
        x.chunks(PARAMS_PER_STRUT)
            .map(|v| v[3].hypot(v[4]))
            .fold(0.0, f64::max)
    }
}

impl Objective for ChartObjective<'_> {
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (poses, ws) = self.decode(x);
        let (e, per_strut) = pose_gradient(&poses, self.topo, self.mat, self.law);
        let l = self.mat.strut_length;
        for (i, ((gc, gd), (p, w))) in per_strut.iter().zip(poses.iter().zip(&ws)).enumerate() {
            let (e1, e2) = &self.frames[i];
            let d = p.direction;
            let inv = 1.0 / w.norm();
            let g = &mut grad[PARAMS_PER_STRUT * i..PARAMS_PER_STRUT * (i + 1)];
            g[0] = gc.x * l;
            g[1] = gc.y * l;
            g[2] = gc.z * l;
            g[3] = (e1 - d * d.dot(e1)).dot(gd) * inv;
            g[4] = (e2 - d * d.dot(e2)).dot(gd) * inv;
        }
        e
    }

    fn delta(&self, x: &[f64], x_new: &[f64]) -> f64 {
        let (p0, w0) = self.decode(x);
        let (p1, w1) = self.decode(x_new);
        let l = self.mat.strut_length;
        let old = config_from_poses(&p0, self.topo, l).coords;
        let new = config_from_poses(&p1, self.topo, l).coords;
        let mut moved = vec![Vec3::zeros(); old.len()];
        for (i, s) in self.topo.struts.iter().enumerate() {
            let dc = Vec3::new(
                x_new[PARAMS_PER_STRUT * i] - x[PARAMS_PER_STRUT * i],
                x_new[PARAMS_PER_STRUT * i + 1] - x[PARAMS_PER_STRUT * i + 1],
                x_new[PARAMS_PER_STRUT * i + 2] - x[PARAMS_PER_STRUT * i + 2],
            ) * l;
            // normalize(w1) - normalize(w0), written so the result stays
            // accurate relative to the chart increment.
            let (e1, e2) = &self.frames[i];
            let dw = (x_new[PARAMS_PER_STRUT * i + 3] - x[PARAMS_PER_STRUT * i + 3]) * e1
                + (x_new[PARAMS_PER_STRUT * i + 4] - x[PARAMS_PER_STRUT * i + 4]) * e2;
            let (n0, n1) = (w0[i].norm(), w1[i].norm());
            let dsq = 2.0 * w0[i].dot(&dw) + dw.norm_squared();
            let dinv = -dsq / (n0 * n1 * (n0 + n1));
            let dd = 0.5 * l * (dw / n1 + w0[i] * dinv);
            moved[s[0] - 1] = dc - dd;
            moved[s[1] - 1] = dc + dd;
        }
        energy_delta(&old, &new, &moved, self.topo, self.mat, self.law)
    }
}

fn gradient_norm(
    poses: &[StrutPose],
    topo: &TopologyMap,
    mat: &MaterialSpec,
    law: SpringLaw,
) -> (f64, f64) {
    let (e, per_strut) = pose_gradient(poses, topo, mat, law);
    (e, recentered_gradient_norm(poses, &per_strut))
}

/// Runs quasi-Newton descent from `initial` until the gradient norm drops
/// below `grad_tol` or `max_iters` steps have been taken. Direction charts
/// are re-centered whenever an offset exceeds [`CHART_LIMIT`].
pub fn relax(
    initial: &[StrutPose],
    topo: &TopologyMap,
    mat: &MaterialSpec,
    law: SpringLaw,
    grad_tol: f64,
    max_iters: usize,
) -> Relaxation {
    let optimizer = Lbfgs::default();
    let mut poses = initial.to_vec();
    let mut iterations = 0;
    let mut trace = Vec::new();
    let (mut energy, mut gnorm) = gradient_norm(&poses, topo, mat, law);
    trace.push(energy);

    while gnorm >= grad_tol && iterations < max_iters {
        let obj = ChartObjective::new(topo, mat, law, &poses);
        let mut converged = false;
        let mut first = true;
        let out = optimizer.minimize(
            &obj,
            obj.encode(&poses),
            max_iters - iterations,
            |x, f, _| {
                if first {
                    first = false;
                    return Control::Continue;
                }
                trace.push(f);
                let (p, _) = obj.decode(x);
                if gradient_norm(&p, topo, mat, law).1 < grad_tol {
                    converged = true;
                    return Control::Stop;
                }
                if obj.max_offset(x) > CHART_LIMIT {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        iterations += out.iterations;
        poses = obj.decode(&out.x).0;
        (energy, gnorm) = gradient_norm(&poses, topo, mat, law);
        if converged {
            break;
        }
        if out.exit == Exit::LineSearchFailed && out.iterations == 0 {
            debug!("line search stalled at gradient norm {gnorm:.3e}");
            break;
        }
    }
    Relaxation {
        poses,
        energy,
        gradient_norm: gnorm,
        iterations,
        converged: gnorm < grad_tol,
        energy_trace: trace,
    }
}

/// Random start: centroids uniform in a cube of side `1.5 · strut length`,
/// directions uniform on the unit sphere.
pub fn random_poses(n_struts: usize, strut_length: f64, rng: &mut impl Rng) -> Vec<StrutPose> {
    let half = 0.75 * strut_length;
    (0..n_struts)
        .map(|_| {
            let c = Vec3::new(
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
            );
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            StrutPose::new(c, Vec3::new(r * phi.cos(), r * phi.sin(), z))
        })
        .collect()
}

/// Seeded generator for one restart: every restart draws from its own
/// stream of the same seed.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

pub fn slack_springs(config: &Configuration, topo: &TopologyMap, mat: &MaterialSpec) -> Vec<usize> {
    topo.springs
        .iter()
        .enumerate()
        .filter(|(i, s)| (config.vertex(s[0]) - config.vertex(s[1])).norm() < mat.free_length(*i))
        .map(|(i, _)| i + 1)
        .collect()
}

/// Lowest-energy converged equilibrium over `opts.restarts` random starts,
/// canonicalized.
pub fn find_equilibrium(
    topo: &TopologyMap,
    mat: &MaterialSpec,
    opts: &FormFindOptions,
) -> Result<EquilibriumResult> {
    if topo.springs.is_empty() {
        return Err(Error::FormFind("topology has no springs".into()));
    }
    if opts.restarts == 0 {
        return Err(Error::FormFind("at least one restart is required".into()));
    }
    for w in mat.check(topo)? {
        warn!("{w}");
    }
    let tol = opts.tolerance(topo, mat);

    let mut outcomes = Vec::with_capacity(opts.restarts);
    let mut best: Option<(usize, Relaxation)> = None;
    for r in 0..opts.restarts {
        let mut rng = restart_rng(opts.seed, r);
        let start = random_poses(topo.n_struts, mat.strut_length, &mut rng);
        let relaxed = relax(&start, topo, mat, opts.law, tol, opts.max_iters);
        debug!(
            "restart {r}: energy {:.9e}, gradient {:.3e}, {} iterations",
            relaxed.energy, relaxed.gradient_norm, relaxed.iterations
        );
        outcomes.push(RestartOutcome {
            restart: r,
            energy: relaxed.energy,
            gradient_norm: relaxed.gradient_norm,
            iterations: relaxed.iterations,
            converged: relaxed.converged,
        });
        if !relaxed.converged {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, b)) => {
                let scale = b.energy.abs().max(relaxed.energy.abs());
                relaxed.energy < b.energy && b.energy - relaxed.energy > ENERGY_TIE * scale
            }
        };
        if better {
            best = Some((r, relaxed));
        }
    }

    let Some((best_restart, relaxed)) = best else {
        let closest = outcomes
            .iter()
            .map(|o| o.gradient_norm)
            .fold(f64::INFINITY, f64::min);
        return Err(Error::FormFind(format!(
            "no restart converged within {} iterations (best gradient norm {closest:.3e}, tolerance {tol:.3e})",
            opts.max_iters
        )));
    };

    let raw = config_from_poses(&relaxed.poses, topo, mat.strut_length);
    let canon = canonicalize(&raw);
    if canon.rotation_skipped {
        warn!("equilibrium vertex cloud is degenerate; canonical rotation skipped");
    }
    let config = canon.config;
    let poses = poses_from_config(&config, topo);
    let (energy, gnorm) = gradient_norm(&poses, topo, mat, opts.law);
    let slack = slack_springs(&config, topo, mat);
    if !slack.is_empty() {
        warn!(
            "{} springs are slack at equilibrium: {:?}",
            slack.len(),
            slack
        );
    }
    Ok(EquilibriumResult {
        config,
        energy,
        gradient_norm: gnorm,
        iterations: relaxed.iterations,
        restarts_used: opts.restarts,
        slack_springs: slack,
        grad_tol: tol,
        best_restart,
        restarts: outcomes,
    })
}

/// On-disk form of an equilibrium. Only `coords` is needed downstream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumFile {
    pub coords: Configuration,
    pub energy: f64,
    pub gradient_norm: f64,
    pub slack_springs: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<Vec<RestartOutcome>>,
}

impl From<&EquilibriumResult> for EquilibriumFile {
    fn from(r: &EquilibriumResult) -> Self {
        EquilibriumFile {
            coords: r.config.clone(),
            energy: r.energy,
            gradient_norm: r.gradient_norm,
            slack_springs: r.slack_springs.clone(),
            grad_tol: Some(r.grad_tol),
            iterations: Some(r.iterations),
            restarts: Some(r.restarts.clone()),
        }
    }
}

pub fn load_equilibrium(path: impl AsRef<Path>) -> Result<EquilibriumFile> {
    read_json(path.as_ref())
}
