//! Tangent stiffness, static sag and natural frequencies of a form-found
//! structure.
//!
//! Every member (spring or strut) contributes the standard bar tangent
//! `k·d̂d̂ᵀ + (N/ℓ)·(I − d̂d̂ᵀ)`: an axial term plus the geometric (stress)
//! term that stabilizes a pre-tensioned net. Struts enter as stiff axial
//! members whose compression is recovered from the spring forces at their
//! ends. Masses are lumped: half of each strut's mass at each endpoint,
//! springs massless.

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formfind::SpringLaw;
use crate::model::{Configuration, MaterialSpec, TopologyMap, Vec3};

/// Default strut axial stiffness as a multiple of the stiffest spring.
pub const STRUT_STIFFNESS_FACTOR: f64 = 1e4;

/// Eigenvalues below this fraction of `trace / dof` are rigid-body modes.
pub const RIGID_MODE_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    Spring,
    Strut,
}

/// A two-node axial member. Node indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub nodes: [usize; 2],
    pub kind: MemberKind,
    /// Axial stiffness, lbf/in.
    pub axial_stiffness: f64,
    /// Axial force, lbf; tension positive.
    pub force: f64,
}

#[derive(Clone, Debug)]
pub struct TangentOptions {
    /// `None` means [`STRUT_STIFFNESS_FACTOR`] × stiffest spring.
    pub strut_axial_stiffness: Option<f64>,
    pub law: SpringLaw,
    /// Allowed equilibrium residual relative to the summed spring forces.
    pub equilibrium_tol: f64,
}

impl Default for TangentOptions {
    fn default() -> Self {
        TangentOptions {
            strut_axial_stiffness: None,
            law: SpringLaw::Bilateral,
            equilibrium_tol: 1e-6,
        }
    }
}

/// Nodes, members and lumped masses: everything the linear analyses need.
#[derive(Clone, Debug)]
pub struct StructuralModel {
    pub coords: Vec<Vec3>,
    pub members: Vec<Member>,
    /// Lumped mass per node, lbf·s²/in.
    pub masses: Vec<f64>,
    /// in/s².
    pub gravity: f64,
}

impl StructuralModel {
    /// Builds the model of a form-found configuration. Strut forces are the
    /// least-squares axial balance of the spring forces at both ends; the
    /// leftover is the equilibrium residual, which must be small.
    pub fn from_equilibrium(
        config: &Configuration,
        topo: &TopologyMap,
        mat: &MaterialSpec,
        opts: &TangentOptions,
    ) -> Result<Self> {
        config.check_rigid(topo, mat.strut_length, 1e-6)?;
        let x = &config.coords;
        let mut members = Vec::with_capacity(topo.n_springs() + topo.n_struts);
        let mut node_force = vec![Vec3::zeros(); x.len()];
        let mut force_scale = 0.0;
        for (i, s) in topo.springs.iter().enumerate() {
            let (a, b) = (s[0] - 1, s[1] - 1);
            let l = (x[b] - x[a]).norm();
            let mut stretch = l - mat.free_length(i);
            let mut k = mat.stiffness(i);
            if opts.law == SpringLaw::TensionOnly && stretch < 0.0 {
                stretch = 0.0;
                k = 0.0;
            }
            let f = mat.stiffness(i) * stretch;
            let pull = f * (x[b] - x[a]) / l;
            node_force[a] += pull;
            node_force[b] -= pull;
            force_scale += f.abs();
            members.push(Member {
                nodes: [a, b],
                kind: MemberKind::Spring,
                axial_stiffness: k,
                force: f,
            });
        }

        let strut_k = opts
            .strut_axial_stiffness
            .unwrap_or_else(|| STRUT_STIFFNESS_FACTOR * mat.max_stiffness(topo.n_springs()));
        let mut residual_sq = 0.0;
        for s in &topo.struts {
            let (a, b) = (s[0] - 1, s[1] - 1);
            let d = (x[b] - x[a]).normalize();
            let n = 0.5 * (node_force[b] - node_force[a]).dot(&d);
            residual_sq +=
                (node_force[a] + n * d).norm_squared() + (node_force[b] - n * d).norm_squared();
            members.push(Member {
                nodes: [a, b],
                kind: MemberKind::Strut,
                axial_stiffness: strut_k,
                force: n,
            });
        }
        let residual = residual_sq.sqrt();
        let tolerance = opts.equilibrium_tol * force_scale.max(f64::MIN_POSITIVE);
        if residual > tolerance {
            return Err(Error::NotInEquilibrium {
                residual,
                tolerance,
            });
        }

        let m = 0.5 * mat.strut_mass_slinch();
        Ok(StructuralModel {
            coords: x.clone(),
            members,
            masses: vec![m; x.len()],
            gravity: mat.gravity,
        })
    }

    pub fn n_dof(&self) -> usize {
        3 * self.coords.len()
    }

    pub fn tangent_stiffness(&self) -> StiffnessMatrix {
        let mut k = DMatrix::zeros(self.n_dof(), self.n_dof());
        for m in &self.members {
            let [a, b] = m.nodes;
            let ke = member_stiffness(
                &(self.coords[b] - self.coords[a]),
                m.axial_stiffness,
                m.force,
            );
            for (r, c, sign) in [(a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)] {
                let mut block = k.fixed_view_mut::<3, 3>(3 * r, 3 * c);
                block += ke * sign;
            }
        }
        StiffnessMatrix(k)
    }

    /// Nodal gravity loads (−z), lbf, in DOF order.
    pub fn gravity_loads(&self) -> DVector<f64> {
        let mut f = DVector::zeros(self.n_dof());
        for (i, m) in self.masses.iter().enumerate() {
            f[3 * i + 2] = -m * self.gravity;
        }
        f
    }

    /// Unconstrained DOF indices for a set of fully supported nodes (0-based).
    fn free_dofs(&self, supported_nodes: &[usize]) -> Result<Vec<usize>> {
        for &n in supported_nodes {
            if n >= self.coords.len() {
                return Err(Error::Structural(format!(
                    "support vertex {} does not exist",
                    n + 1
                )));
            }
        }
        Ok((0..self.n_dof())
            .filter(|d| !supported_nodes.contains(&(d / 3)))
            .collect())
    }

    /// Solves `K_r·u = f_gravity` with the listed nodes (0-based) held fixed.
    pub fn static_sag(&self, supported_nodes: &[usize]) -> Result<SagResult> {
        let free = self.free_dofs(supported_nodes)?;
        let k = self.tangent_stiffness();
        k.check_symmetric()?;
        let kr = k.0.select_rows(&free).select_columns(&free);
        let f = self.gravity_loads().select_rows(&free);

        let eig = SymmetricEigen::new(kr.clone());
        let scale = eig.eigenvalues.amax();
        let (imin, lmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, &v)| (i, v))
            .unwrap_or((0, 0.0));
        if free.is_empty() || lmin.abs() <= 1e-10 * scale {
            let mode = eig.eigenvectors.column(imin);
            let (j, _) = mode.iter().enumerate().fold((0, 0.0), |best, (j, v)| {
                if v.abs() > best.1 {
                    (j, v.abs())
                } else {
                    best
                }
            });
            let dof = free.get(j).copied().unwrap_or(0);
            return Err(Error::SingularStiffness {
                eigenvalue: lmin,
                vertex: dof / 3 + 1,
                axis: ['x', 'y', 'z'][dof % 3],
            });
        }
        let u_free = kr
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::Structural("sag solve failed".into()))?;

        let mut displacement = vec![Vec3::zeros(); self.coords.len()];
        for (&d, u) in free.iter().zip(u_free.iter()) {
            displacement[d / 3][d % 3] = *u;
        }
        let (max_vertex, max_sag) = displacement
            .iter()
            .enumerate()
            .map(|(i, u)| (i + 1, u.norm()))
            .fold(
                (0, 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        Ok(SagResult {
            displacement,
            max_sag,
            max_sag_vertex: max_vertex,
        })
    }

    /// Generalized eigenproblem `K·φ = λ·M·φ` over the unconstrained DOFs,
    /// with nodes in `supported_nodes` (0-based) held fixed.
    pub fn natural_frequencies(&self, supported_nodes: &[usize]) -> Result<ModalResult> {
        let free = self.free_dofs(supported_nodes)?;
        let k = self.tangent_stiffness();
        k.check_symmetric()?;
        let kr = k.0.select_rows(&free).select_columns(&free);
        let inv_sqrt_m: Vec<f64> = free
            .iter()
            .map(|&d| {
                let m = self.masses[d / 3];
                if m > 0.0 {
                    Ok(1.0 / m.sqrt())
                } else {
                    Err(Error::Structural(format!(
                        "vertex {} has no mass",
                        d / 3 + 1
                    )))
                }
            })
            .collect::<Result<_>>()?;

        // M^{-1/2} K M^{-1/2} is symmetric with the same eigenvalues.
        let nf = free.len();
        let a = DMatrix::from_fn(nf, nf, |i, j| kr[(i, j)] * inv_sqrt_m[i] * inv_sqrt_m[j]);
        let a = (&a + a.transpose()) * 0.5;
        let trace = a.trace();
        let eig = SymmetricEigen::new(a);

        let mut order: Vec<usize> = (0..nf).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let threshold = RIGID_MODE_THRESHOLD * trace.abs() / nf.max(1) as f64;

        let mut eigenvalues = Vec::with_capacity(nf);
        let mut frequencies = Vec::with_capacity(nf);
        let mut shapes = DMatrix::zeros(self.n_dof(), nf);
        for (col, &i) in order.iter().enumerate() {
            let lambda = eig.eigenvalues[i];
            let clamped = if lambda.abs() < threshold {
                0.0
            } else {
                lambda
            };
            eigenvalues.push(clamped);
            frequencies.push(clamped.max(0.0).sqrt() / std::f64::consts::TAU);
            let v = eig.eigenvectors.column(i);
            for (r, &d) in free.iter().enumerate() {
                shapes[(d, col)] = v[r] * inv_sqrt_m[r];
            }
        }
        Ok(ModalResult {
            eigenvalues,
            frequencies,
            mode_shapes: shapes,
            rigid_threshold: threshold,
        })
    }
}

/// Tangent block of one bar: `k·d̂d̂ᵀ + (N/ℓ)(I − d̂d̂ᵀ)`.
pub fn member_stiffness(span: &Vec3, axial_stiffness: f64, force: f64) -> Matrix3<f64> {
    let l = span.norm();
    let d = span / l;
    let ddt = d * d.transpose();
    ddt * axial_stiffness + (Matrix3::identity() - ddt) * (force / l)
}

/// Dense symmetric stiffness over vertex DOFs `(x, y, z)` per vertex, lbf/in.
#[derive(Clone, Debug, PartialEq)]
pub struct StiffnessMatrix(pub DMatrix<f64>);

impl StiffnessMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `max|K − Kᵀ| / max|K|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.0.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.0 - self.0.transpose()).amax() / scale
    }

    fn check_symmetric(&self) -> Result<()> {
        let a = self.asymmetry();
        if a < 1e-10 {
            Ok(())
        } else {
            Err(Error::Structural(format!(
                "stiffness matrix is not symmetric (relative asymmetry {a:.3e})"
            )))
        }
    }

    /// Eigenvalues with magnitude below `1e-6 · trace / dof`.
    pub fn near_zero_eigenvalues(&self) -> usize {
        let n = self.0.nrows().max(1) as f64;
        let threshold = RIGID_MODE_THRESHOLD * self.0.trace().abs() / n;
        SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .filter(|v| v.abs() < threshold)
            .count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SagResult {
    /// Displacement of every vertex in label order; zero at supports.
    pub displacement: Vec<Vec3>,
    pub max_sag: f64,
    /// 1-based label of the vertex with the largest displacement.
    pub max_sag_vertex: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModalResult {
    /// Generalized eigenvalues (rad²/s²), ascending, rigid modes clamped to 0.
    pub eigenvalues: Vec<f64>,
    /// Hz, ascending.
    pub frequencies: Vec<f64>,
    /// Mass-normalized mode shapes as columns over all vertex DOFs,
    /// zero at supported DOFs.
    pub mode_shapes: DMatrix<f64>,
    pub rigid_threshold: f64,
}

impl ModalResult {
    pub fn rigid_modes(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l == 0.0).count()
    }

    /// Index of the first mode with a non-zero frequency.
    pub fn first_elastic_mode(&self) -> Option<usize> {
        self.frequencies.iter().position(|&f| f > 0.0)
    }
}

fn labels_to_nodes(labels: &[usize], n_vertices: usize) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|&v| {
            if v >= 1 && v <= n_vertices {
                Ok(v - 1)
            } else {
                Err(Error::Structural(format!(
                    "support vertex {v} is outside 1..{n_vertices}"
                )))
            }
        })
        .collect()
}

pub fn tangent_stiffness(
    config: &Configuration,
    topo: &TopologyMap,
    mat: &MaterialSpec,
    opts: &TangentOptions,
) -> Result<StiffnessMatrix> {
    Ok(StructuralModel::from_equilibrium(config, topo, mat, opts)?.tangent_stiffness())
}

/// Sag under strut self-weight with the listed vertex labels held fixed.
pub fn static_sag(
    config: &Configuration,
    topo: &TopologyMap,
    mat: &MaterialSpec,
    supports: &[usize],
    opts: &TangentOptions,
) -> Result<SagResult> {
    let model = StructuralModel::from_equilibrium(config, topo, mat, opts)?;
    model.static_sag(&labels_to_nodes(supports, config.len())?)
}

pub fn natural_frequencies(
    config: &Configuration,
    topo: &TopologyMap,
    mat: &MaterialSpec,
    supports: &[usize],
    opts: &TangentOptions,
) -> Result<ModalResult> {
    let model = StructuralModel::from_equilibrium(config, topo, mat, opts)?;
    model.natural_frequencies(&labels_to_nodes(supports, config.len())?)
}

/// Animation frames `x₀ + amplitude·sin(2πj/n)·φ` for `j = 0..n`, with `φ`
/// scaled so its largest vertex displacement is 1 (amplitude is then the
/// peak displacement in inches). Struts are not re-rigidified.
pub fn mode_frames(
    config: &Configuration,
    modal: &ModalResult,
    mode_index: usize,
    amplitude: f64,
    n_frames: usize,
) -> Result<Vec<Configuration>> {
    if mode_index >= modal.mode_shapes.ncols() {
        return Err(Error::Structural(format!(
            "mode {} out of range (1..{})",
            mode_index + 1,
            modal.mode_shapes.ncols()
        )));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::Structural(format!(
            "amplitude must be non-negative, got {amplitude}"
        )));
    }
    if n_frames == 0 {
        return Err(Error::Structural("at least one frame is required".into()));
    }
    let phi = modal.mode_shapes.column(mode_index);
    let peak = (0..config.len())
        .map(|v| Vec3::new(phi[3 * v], phi[3 * v + 1], phi[3 * v + 2]).norm())
        .fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    Ok((0..n_frames)
        .map(|j| {
            let s = amplitude * scale * (std::f64::consts::TAU * j as f64 / n_frames as f64).sin();
            Configuration::new(
                config
                    .coords
                    .iter()
                    .enumerate()
                    .map(|(v, p)| p + s * Vec3::new(phi[3 * v], phi[3 * v + 1], phi[3 * v + 2]))
                    .collect(),
            )
        })
        .collect())
}

/// Formats with 9 significant digits in scientific notation.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// `frame,vertex,x,y,z` rows, one per vertex per frame.
pub fn frames_csv(frames: &[Configuration]) -> String {
    let mut out = String::from("frame,vertex,x,y,z\n");
    for (j, frame) in frames.iter().enumerate() {
        for (v, p) in frame.coords.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                j,
                v + 1,
                sig9(p.x),
                sig9(p.y),
                sig9(p.z)
            ));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub mode: usize,
    pub frequency_hz: f64,
}

pub fn modal_report(modal: &ModalResult) -> Vec<ModeEntry> {
    modal
        .frequencies
        .iter()
        .enumerate()
        .map(|(i, &f)| ModeEntry {
            mode: i + 1,
            frequency_hz: f,
        })
        .collect()
}
