//! Topology maps, material parameters and vertex configurations.
//!
//! Vertex labels are 1-based everywhere a user can see them (files, reports,
//! violation messages). `Configuration` stores coordinates in label order, so
//! label `v` lives at index `v - 1`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Standard gravity in in/s². Also the lbm → lbf·s²/in conversion constant.
pub const STANDARD_GRAVITY_IN_S2: f64 = 386.09;

/// Strut and spring connectivity over vertex labels `1..=2 * n_struts`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyMap {
    pub n_struts: usize,
    pub struts: Vec<[usize; 2]>,
    pub springs: Vec<[usize; 2]>,
}

impl TopologyMap {
    /// Builds a map and rejects it unless every invariant holds.
    pub fn new(n_struts: usize, struts: Vec<[usize; 2]>, springs: Vec<[usize; 2]>) -> Result<Self> {
        let topo = TopologyMap {
            n_struts,
            struts,
            springs,
        };
        let violations = validate(&topo);
        if violations.is_empty() {
            Ok(topo)
        } else {
            Err(Error::Topology(violations))
        }
    }

    pub fn n_vertices(&self) -> usize {
        2 * self.n_struts
    }

    pub fn n_springs(&self) -> usize {
        self.springs.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    TooFewStruts(usize),
    StrutCountMismatch {
        declared: usize,
        listed: usize,
    },
    NoSprings,
    LabelOutOfRange {
        member: &'static str,
        pair: [usize; 2],
    },
    StrutSelfLoop([usize; 2]),
    VertexInTwoStruts(usize),
    VertexNotInStrut(usize),
    SpringSelfLoop([usize; 2]),
    SpringIsStrut([usize; 2]),
    DuplicateSpring([usize; 2]),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            TooFewStruts(n) => write!(f, "at least 2 struts required, got {n}"),
            StrutCountMismatch { declared, listed } => {
                write!(
                    f,
                    "n_struts is {declared} but {listed} strut pairs are listed"
                )
            }
            NoSprings => write!(f, "at least one spring required"),
            LabelOutOfRange { member, pair } => {
                write!(
                    f,
                    "{member} [{},{}] has a label outside 1..2n",
                    pair[0], pair[1]
                )
            }
            StrutSelfLoop(p) => write!(f, "strut [{},{}] is a self-loop", p[0], p[1]),
            VertexInTwoStruts(v) => write!(f, "vertex {v} in two struts"),
            VertexNotInStrut(v) => write!(f, "vertex {v} is not an end of any strut"),
            SpringSelfLoop(p) => write!(f, "spring [{},{}] is a self-loop", p[0], p[1]),
            SpringIsStrut(p) => write!(f, "spring [{},{}] duplicates a strut", p[0], p[1]),
            DuplicateSpring(p) => write!(f, "spring [{},{}] is listed twice", p[0], p[1]),
        }
    }
}

fn unordered(p: [usize; 2]) -> (usize, usize) {
    (p[0].min(p[1]), p[0].max(p[1]))
}

/// Lists every broken invariant. An empty list means the map is valid.
pub fn validate(topo: &TopologyMap) -> Vec<Violation> {
    let mut out = Vec::new();
    let n_vert = topo.n_vertices();
    if topo.n_struts < 2 {
        out.push(Violation::TooFewStruts(topo.n_struts));
    }
    if topo.struts.len() != topo.n_struts {
        out.push(Violation::StrutCountMismatch {
            declared: topo.n_struts,
            listed: topo.struts.len(),
        });
    }
    if topo.springs.is_empty() {
        out.push(Violation::NoSprings);
    }
    let in_range = |p: &[usize; 2]| p.iter().all(|&v| v >= 1 && v <= n_vert);

    let mut owner = vec![0usize; n_vert + 1];
    let mut strut_set = HashSet::new();
    for s in &topo.struts {
        if !in_range(s) {
            out.push(Violation::LabelOutOfRange {
                member: "strut",
                pair: *s,
            });
            continue;
        }
        if s[0] == s[1] {
            out.push(Violation::StrutSelfLoop(*s));
        }
        for &v in s {
            owner[v] += 1;
            if owner[v] == 2 {
                out.push(Violation::VertexInTwoStruts(v));
            }
        }
        strut_set.insert(unordered(*s));
    }
    if topo.struts.len() == topo.n_struts {
        for (v, &count) in owner.iter().enumerate().skip(1) {
            if count == 0 {
                out.push(Violation::VertexNotInStrut(v));
            }
        }
    }

    let mut seen = HashSet::new();
    for s in &topo.springs {
        if !in_range(s) {
            out.push(Violation::LabelOutOfRange {
                member: "spring",
                pair: *s,
            });
            continue;
        }
        if s[0] == s[1] {
            out.push(Violation::SpringSelfLoop(*s));
            continue;
        }
        let key = unordered(*s);
        if strut_set.contains(&key) {
            out.push(Violation::SpringIsStrut(*s));
        }
        if !seen.insert(key) {
            out.push(Violation::DuplicateSpring(*s));
        }
    }
    out
}

/// The classic p-strut prism. Bottom vertices are `1..=p`, top vertices
/// `p+1..=2p`; strut `i` joins bottom `i` to top `i+1` (cyclically), and the
/// vertical tendons join bottom `i` to top `i`.
pub fn prism_topology(p: usize) -> Result<TopologyMap> {
    if p < 3 {
        return Err(Error::Configuration(format!(
            "prism needs at least 3 struts, got {p}"
        )));
    }
    let next = |i: usize| i % p + 1;
    let struts = (1..=p).map(|i| [i, p + next(i)]).collect();
    let mut springs = Vec::with_capacity(3 * p);
    springs.extend((1..=p).map(|i| [i, next(i)]));
    springs.extend((1..=p).map(|i| [p + i, p + next(i)]));
    springs.extend((1..=p).map(|i| [i, p + i]));
    TopologyMap::new(p, struts, springs)
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<TopologyMap> {
    let topo: TopologyMap = read_json(path.as_ref())?;
    let violations = validate(&topo);
    if violations.is_empty() {
        Ok(topo)
    } else {
        Err(Error::Topology(violations))
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// A value given once for every spring, or listed per spring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpringValues {
    Uniform(f64),
    PerSpring(Vec<f64>),
}

impl SpringValues {
    pub fn get(&self, spring: usize) -> f64 {
        match self {
            SpringValues::Uniform(v) => *v,
            SpringValues::PerSpring(v) => v[spring],
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            SpringValues::Uniform(v) => std::slice::from_ref(v),
            SpringValues::PerSpring(v) => v,
        }
    }

    fn scaled(&self, c: f64) -> Self {
        match self {
            SpringValues::Uniform(v) => SpringValues::Uniform(v * c),
            SpringValues::PerSpring(v) => {
                SpringValues::PerSpring(v.iter().map(|x| x * c).collect())
            }
        }
    }
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY_IN_S2
}

/// Design variables: strut length and mass, spring stiffness and free length.
/// Units are inches, pound-mass and pound-force.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    #[serde(rename = "strut_length_in")]
    pub strut_length: f64,
    #[serde(rename = "strut_mass_lbm")]
    pub strut_mass: f64,
    #[serde(rename = "spring_stiffness_lbf_per_in")]
    pub spring_stiffness: SpringValues,
    #[serde(rename = "spring_free_length_in")]
    pub spring_free_length: SpringValues,
    #[serde(rename = "gravity_in_per_s2", default = "default_gravity")]
    pub gravity: f64,
}

impl MaterialSpec {
    pub fn uniform(strut_length: f64, strut_mass: f64, stiffness: f64, free_length: f64) -> Self {
        MaterialSpec {
            strut_length,
            strut_mass,
            spring_stiffness: SpringValues::Uniform(stiffness),
            spring_free_length: SpringValues::Uniform(free_length),
            gravity: STANDARD_GRAVITY_IN_S2,
        }
    }

    pub fn stiffness(&self, spring: usize) -> f64 {
        self.spring_stiffness.get(spring)
    }

    pub fn free_length(&self, spring: usize) -> f64 {
        self.spring_free_length.get(spring)
    }

    /// Strut mass in lbf·s²/in.
    pub fn strut_mass_slinch(&self) -> f64 {
        self.strut_mass / STANDARD_GRAVITY_IN_S2
    }

    pub fn mean_stiffness(&self, n_springs: usize) -> f64 {
        (0..n_springs).map(|i| self.stiffness(i)).sum::<f64>() / n_springs.max(1) as f64
    }

    pub fn max_stiffness(&self, n_springs: usize) -> f64 {
        (0..n_springs)
            .map(|i| self.stiffness(i))
            .fold(0.0, f64::max)
    }

    /// Same material with every spring stiffness multiplied by `c`.
    pub fn with_stiffness_scaled(&self, c: f64) -> Self {
        MaterialSpec {
            spring_stiffness: self.spring_stiffness.scaled(c),
            ..self.clone()
        }
    }

    pub fn with_mass_scaled(&self, c: f64) -> Self {
        MaterialSpec {
            strut_mass: self.strut_mass * c,
            ..self.clone()
        }
    }

    /// Checks the parameters against a topology. Hard errors for
    /// non-positive values or wrong list lengths; the returned strings are
    /// soft warnings (free length not shorter than the strut).
    pub fn check(&self, topo: &TopologyMap) -> Result<Vec<String>> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Material(format!("{name} must be positive, got {v}")))
            }
        };
        positive("strut_length_in", self.strut_length)?;
        positive("strut_mass_lbm", self.strut_mass)?;
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(Error::Material(format!(
                "gravity_in_per_s2 must be non-negative, got {}",
                self.gravity
            )));
        }
        for (name, vals) in [
            ("spring_stiffness_lbf_per_in", &self.spring_stiffness),
            ("spring_free_length_in", &self.spring_free_length),
        ] {
            if let SpringValues::PerSpring(v) = vals {
                if v.len() != topo.n_springs() {
                    return Err(Error::Material(format!(
                        "{name} lists {} values for {} springs",
                        v.len(),
                        topo.n_springs()
                    )));
                }
            }
            for &x in vals.values() {
                positive(name, x)?;
            }
        }
        let mut warnings = Vec::new();
        for i in 0..topo.n_springs() {
            if self.free_length(i) >= self.strut_length {
                warnings.push(format!(
                    "spring {} free length {} is not shorter than the strut length {}",
                    i + 1,
                    self.free_length(i),
                    self.strut_length
                ));
            }
        }
        Ok(warnings)
    }
}

pub fn load_material(path: impl AsRef<Path>) -> Result<MaterialSpec> {
    read_json(path.as_ref())
}

/// Coordinates of all `2n` vertices, in label order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<[f64; 3]>", into = "Vec<[f64; 3]>")]
pub struct Configuration {
    pub coords: Vec<Vec3>,
}

impl From<Vec<[f64; 3]>> for Configuration {
    fn from(rows: Vec<[f64; 3]>) -> Self {
        Configuration {
            coords: rows.into_iter().map(Vec3::from).collect(),
        }
    }
}

impl From<Configuration> for Vec<[f64; 3]> {
    fn from(c: Configuration) -> Self {
        c.coords.iter().map(|p| [p.x, p.y, p.z]).collect()
    }
}

impl Configuration {
    pub fn new(coords: Vec<Vec3>) -> Self {
        Configuration { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Coordinates of a 1-based vertex label.
    pub fn vertex(&self, label: usize) -> Vec3 {
        self.coords[label - 1]
    }

    pub fn strut_endpoints(&self, topo: &TopologyMap, strut: usize) -> (Vec3, Vec3) {
        let [a, b] = topo.struts[strut];
        (self.vertex(a), self.vertex(b))
    }

    pub fn translated(&self, t: &Vec3) -> Self {
        Configuration::new(self.coords.iter().map(|p| p + t).collect())
    }

    pub fn max_strut_length_error(&self, topo: &TopologyMap, strut_length: f64) -> f64 {
        (0..topo.n_struts)
            .map(|i| {
                let (a, b) = self.strut_endpoints(topo, i);
                ((a - b).norm() - strut_length).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Rejects a configuration of the wrong size or one whose struts are not
    /// `strut_length` long within `rel_tol`.
    pub fn check_rigid(&self, topo: &TopologyMap, strut_length: f64, rel_tol: f64) -> Result<()> {
        if self.len() != topo.n_vertices() {
            return Err(Error::Configuration(format!(
                "{} vertices given for a {}-strut topology",
                self.len(),
                topo.n_struts
            )));
        }
        let err = self.max_strut_length_error(topo, strut_length);
        if err > rel_tol * strut_length {
            return Err(Error::Configuration(format!(
                "strut length deviates by {err:.3e} in (allowed {:.3e})",
                rel_tol * strut_length
            )));
        }
        Ok(())
    }
}
