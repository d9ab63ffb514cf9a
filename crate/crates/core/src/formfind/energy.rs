//! Spring strain energy over rigid-strut poses and its analytic gradient.
//!
//! A strut is a centroid plus a unit direction; its first vertex sits at
//! `c - L/2 * d` and its second at `c + L/2 * d`, so strut length is exact for
//! every pose. Directions are differentiated through a tangent-plane chart
//! `d(a, b) = normalize(d0 + a * e1 + b * e2)` centered on the current
//! direction, which gives 5 free parameters per strut.

use serde::{Deserialize, Serialize};

use crate::model::{Configuration, MaterialSpec, TopologyMap, Vec3};

/// Number of free parameters per strut: 3 centroid + 2 direction.
pub const PARAMS_PER_STRUT: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpringLaw {
    /// `½k(ℓ − L0)²` for every length.
    #[default]
    Bilateral,
    /// `½k·max(0, ℓ − L0)²`: slack springs carry nothing.
    TensionOnly,
}

impl SpringLaw {
    #[inline]
    fn stretch(self, length: f64, free_length: f64) -> f64 {
        let s = length - free_length;
        match self {
            SpringLaw::Bilateral => s,
            SpringLaw::TensionOnly => s.max(0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrutPose {
    pub centroid: Vec3,
    pub direction: Vec3,
}

impl StrutPose {
    pub fn new(centroid: Vec3, direction: Vec3) -> Self {
        StrutPose {
            centroid,
            direction: direction.normalize(),
        }
    }

    pub fn endpoints(&self, strut_length: f64) -> (Vec3, Vec3) {
        let h = 0.5 * strut_length * self.direction;
        (self.centroid - h, self.centroid + h)
    }
}

/// Deterministic orthonormal pair spanning the plane normal to `d`.
pub fn tangent_basis(d: &Vec3) -> (Vec3, Vec3) {
    let reference = if d.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let e1 = (reference - reference.dot(d) * d).normalize();
    let e2 = d.cross(&e1);
    (e1, e2)
}

/// Direction reached from chart center `d0` with offsets `(a, b)`.
pub fn chart_direction(d0: &Vec3, a: f64, b: f64) -> Vec3 {
    let (e1, e2) = tangent_basis(d0);
    (d0 + a * e1 + b * e2).normalize()
}

pub fn poses_from_config(config: &Configuration, topo: &TopologyMap) -> Vec<StrutPose> {
    (0..topo.n_struts)
        .map(|i| {
            let (p, q) = config.strut_endpoints(topo, i);
            StrutPose::new(0.5 * (p + q), q - p)
        })
        .collect()
}

pub fn config_from_poses(
    poses: &[StrutPose],
    topo: &TopologyMap,
    strut_length: f64,
) -> Configuration {
    let mut coords = vec![Vec3::zeros(); topo.n_vertices()];
    for (pose, s) in poses.iter().zip(&topo.struts) {
        let (p, q) = pose.endpoints(strut_length);
        coords[s[0] - 1] = p;
        coords[s[1] - 1] = q;
    }
    Configuration::new(coords)
}

fn vertex_positions(poses: &[StrutPose], topo: &TopologyMap, strut_length: f64) -> Vec<Vec3> {
    config_from_poses(poses, topo, strut_length).coords
}

pub fn spring_energy(
    poses: &[StrutPose],
    topo: &TopologyMap,
    mat: &MaterialSpec,
    law: SpringLaw,
) -> f64 {
    let x = vertex_positions(poses, topo, mat.strut_length);
    topo.springs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let l = (x[s[0] - 1] - x[s[1] - 1]).norm();
            let e = law.stretch(l, mat.free_length(i));
            0.5 * mat.stiffness(i) * e * e
        })
        .sum()
}

/// Energy and its gradient with respect to every vertex position.
pub(crate) fn vertex_gradient(
    x: &[Vec3],
    topo: &TopologyMap,
    mat: &MaterialSpec,
    law: SpringLaw,
) -> (f64, Vec<Vec3>) {
    let mut g = vec![Vec3::zeros(); x.len()];
    let mut energy = 0.0;
    for (i, s) in topo.springs.iter().enumerate() {
        let (u, w) = (s[0] - 1, s[1] - 1);
        let v = x[u] - x[w];
        let l = v.norm();
        let e = law.stretch(l, mat.free_length(i));
        let k = mat.stiffness(i);
        energy += 0.5 * k * e * e;
        if l > 0.0 && e != 0.0 {
            let f = (k * e / l) * v;
            g[u] += f;
            g[w] -= f;
        }
    }
    (energy, g)
}

/// Gradient of the energy with respect to each strut's centroid and to the
/// direction vector itself (not yet projected onto a chart).
pub(crate) fn pose_gradient(
    poses: &[StrutPose],
    topo: &TopologyMap,
    mat: &MaterialSpec,
    law: SpringLaw,
) -> (f64, Vec<(Vec3, Vec3)>) {
    let x = vertex_positions(poses, topo, mat.strut_length);
    let (energy, gv) = vertex_gradient(&x, topo, mat, law);
    let half = 0.5 * mat.strut_length;
    let per_strut = topo
        .struts
        .iter()
        .map(|s| {
            let (ga, gb) = (gv[s[0] - 1], gv[s[1] - 1]);
            (ga + gb, half * (gb - ga))
        })
        .collect();
    (energy, per_strut)
}

/// Analytic gradient over the 5 free parameters of each strut, laid out as
/// `[cx, cy, cz, a, b]` per strut, with each direction chart centered on
/// the strut's current direction (`tangent_basis`).
pub fn energy_gradient(
    poses: &[StrutPose],
    topo: &TopologyMap,
    mat: &MaterialSpec,
    law: SpringLaw,
) -> Vec<f64> {
    let (_, per_strut) = pose_gradient(poses, topo, mat, law);
    let mut out = Vec::with_capacity(PARAMS_PER_STRUT * poses.len());
    for (pose, (gc, gd)) in poses.iter().zip(per_strut) {
        let (e1, e2) = tangent_basis(&pose.direction);
        out.extend_from_slice(&[gc.x, gc.y, gc.z, e1.dot(&gd), e2.dot(&gd)]);
    }
    out
}

/// Norm of the gradient in the re-centered chart. Independent of the
/// tangent frame, since it only needs the projection of the direction
/// gradient onto the plane normal to `d`.
pub(crate) fn recentered_gradient_norm(poses: &[StrutPose], per_strut: &[(Vec3, Vec3)]) -> f64 {
    poses
        .iter()
        .zip(per_strut)
        .map(|(p, (gc, gd))| {
            let t = gd - gd.dot(&p.direction) * p.direction;
            gc.norm_squared() + t.norm_squared()
        })
        .sum::<f64>()
        .sqrt()
}

/// `E(new) − E(old)` evaluated from per-spring length differences, which
/// stays accurate when the change is far below the rounding error of `E`.
pub(crate) fn energy_delta(
    old: &[Vec3],
    new: &[Vec3],
    moved: &[Vec3],
    topo: &TopologyMap,
    mat: &MaterialSpec,
    law: SpringLaw,
) -> f64 {
    let mut delta = 0.0;
    for (i, s) in topo.springs.iter().enumerate() {
        let (u, w) = (s[0] - 1, s[1] - 1);
        let v = old[u] - old[w];
        let dv = moved[u] - moved[w];
        let l0 = v.norm();
        let l1 = (new[u] - new[w]).norm();
        let k = mat.stiffness(i);
        let free = mat.free_length(i);
        let sum = l0 + l1;
        let dl = if sum > 0.0 {
            (2.0 * v.dot(&dv) + dv.norm_squared()) / sum
        } else {
            0.0
        };
        delta += match law {
            SpringLaw::Bilateral => 0.5 * k * dl * (l0 + l1 - 2.0 * free),
            SpringLaw::TensionOnly => {
                let (s0, s1) = (l0 - free, l1 - free);
                if s0 > 0.0 && s1 > 0.0 {
                    0.5 * k * dl * (s0 + s1)
                } else {
                    0.5 * k * (s1.max(0.0).powi(2) - s0.max(0.0).powi(2))
                }
            }
        };
    }
    delta
}
