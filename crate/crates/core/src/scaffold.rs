//! Assembly scaffolding: puts the structure on a flat build surface and lays
//! out one vertical post per strut.
//!
//! The pipeline is centroids → longitudinal axis (the two struts whose
//! centroids are farthest apart) → reorientation with that axis along +x and
//! every coordinate non-negative → azimuth/elevation of each strut's high
//! end → choice of the ¼, ½ or ¾ attachment point on every strut so the
//! smallest plan-view distance between posts is as large as possible.

use nalgebra::{Rotation3, Unit};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formfind::restart_rng;
use crate::model::{Configuration, TopologyMap, Vec3};

/// Added to `zpost` for the base-plate thickness and clearance under the
/// lowest strut end.
pub const POST_LENGTH_ALLOWANCE_IN: f64 = 1.0;

/// Attachment fractions selected by `jsave = 1, 2, 3`.
pub const ATTACHMENT_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

/// 3^13: largest number of assignments searched exhaustively by default.
pub const DEFAULT_EXHAUSTIVE_BUDGET: u64 = 1_594_323;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisRecord {
    /// 1-based strut numbers, `pt1 < pt2`.
    pub pt1: usize,
    pub pt2: usize,
    pub maxdis: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrutPlacement {
    /// 1-based strut number.
    pub strut: usize,
    pub xpost: f64,
    pub ypost: f64,
    pub zpost: f64,
    pub theta_az: f64,
    pub theta_el: f64,
    pub jsave: u8,
    pub high_vertex: usize,
    /// `[low end z, high end z]`.
    pub endpoint_z: [f64; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScaffoldPlan {
    #[serde(flatten)]
    pub axis: AxisRecord,
    pub placements: Vec<StrutPlacement>,
    pub post_length: Vec<f64>,
    #[serde(default)]
    pub margin: f64,
    /// Smallest plan-view distance between two posts.
    #[serde(default)]
    pub min_post_spacing: f64,
    #[serde(default, rename = "reoriented_coords")]
    pub reoriented_config: Configuration,
}

impl Default for AxisRecord {
    fn default() -> Self {
        AxisRecord {
            pt1: 1,
            pt2: 2,
            maxdis: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachmentReference {
    /// Fractions measured from the low end of each strut.
    #[default]
    LowEnd,
    HighEnd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaffoldOptions {
    pub roll_scan: bool,
    pub margin: f64,
    pub exhaustive_budget: u64,
    pub restarts: usize,
    pub seed: u64,
    pub reference: AttachmentReference,
}

impl Default for ScaffoldOptions {
    fn default() -> Self {
        ScaffoldOptions {
            roll_scan: false,
            margin: 0.5,
            exhaustive_budget: DEFAULT_EXHAUSTIVE_BUDGET,
            restarts: 32,
            seed: 0,
            reference: AttachmentReference::LowEnd,
        }
    }
}

pub fn centroids(config: &Configuration, topo: &TopologyMap) -> Vec<Vec3> {
    (0..topo.n_struts)
        .map(|i| {
            let (a, b) = config.strut_endpoints(topo, i);
            (a + b) * 0.5
        })
        .collect()
}

/// The two centroids farthest apart. Ties go to the lexicographically
/// smallest `(pt1, pt2)`.
pub fn longitudinal_axis(centroids: &[Vec3]) -> Result<AxisRecord> {
    if centroids.len() < 2 {
        return Err(Error::Scaffold(format!(
            "need at least 2 struts for a longitudinal axis, got {}",
            centroids.len()
        )));
    }
    let mut best = AxisRecord {
        pt1: 1,
        pt2: 2,
        maxdis: f64::NEG_INFINITY,
    };
    for i in 0..centroids.len() {
        for j in i + 1..centroids.len() {
            let d = (centroids[j] - centroids[i]).norm();
            if d > best.maxdis {
                best = AxisRecord {
                    pt1: i + 1,
                    pt2: j + 1,
                    maxdis: d,
                };
            }
        }
    }
    Ok(best)
}

/// Smallest rotation taking unit vector `u` onto +x.
fn rotation_to_x(u: &Vec3) -> Rotation3<f64> {
    let c = u.x;
    let axis = u.cross(&Vec3::x());
    let s = axis.norm();
    if s < 1e-12 {
        if c > 0.0 {
            Rotation3::identity()
        } else {
            Rotation3::from_axis_angle(&Vec3::z_axis(), std::f64::consts::PI)
        }
    } else {
        Rotation3::from_axis_angle(&Unit::new_unchecked(axis / s), s.atan2(c))
    }
}

fn z_extent(points: &[Vec3]) -> f64 {
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.z), hi.max(p.z))
        });
    hi - lo
}

/// Rotates the structure so the longitudinal axis points along +x, then
/// shifts it so `min z = 0` and `min x = min y = margin`. With `roll_scan`
/// the structure is also rolled about x (1° grid) to the lowest height.
pub fn reorient(
    config: &Configuration,
    topo: &TopologyMap,
    axis: &AxisRecord,
    roll_scan: bool,
    margin: f64,
) -> Result<Configuration> {
    let c = centroids(config, topo);
    let span = c[axis.pt2 - 1] - c[axis.pt1 - 1];
    if span.norm() < 1e-9 {
        return Err(Error::Scaffold(format!(
            "longitudinal axis is degenerate (length {:.3e})",
            span.norm()
        )));
    }
    let rot = rotation_to_x(&span.normalize());
    let mut pts: Vec<Vec3> = config.coords.iter().map(|p| rot * p).collect();

    if roll_scan {
        let mut best = (0u32, z_extent(&pts));
        for deg in 1..360u32 {
            let r = Rotation3::from_axis_angle(&Vec3::x_axis(), (deg as f64).to_radians());
            let rolled: Vec<Vec3> = pts.iter().map(|p| r * p).collect();
            let h = z_extent(&rolled);
            if h < best.1 {
                best = (deg, h);
            }
        }
        let r = Rotation3::from_axis_angle(&Vec3::x_axis(), (best.0 as f64).to_radians());
        pts.iter_mut().for_each(|p| *p = r * *p);
    }

    let min = pts
        .iter()
        .fold(Vec3::repeat(f64::INFINITY), |m, p| m.inf(p));
    let shift = Vec3::new(margin - min.x, margin - min.y, -min.z);
    Ok(Configuration::new(pts.iter().map(|p| p + shift).collect()))
}

/// Azimuth and elevation (degrees) of the high end seen from the low end.
/// Azimuth is in `(−180, 180]`, elevation in `[0, 90]`; a vertical strut has
/// azimuth 0.
pub fn strut_angles(low_end: &Vec3, high_end: &Vec3) -> Result<(f64, f64)> {
    let d = high_end - low_end;
    let len = d.norm();
    if len == 0.0 {
        return Err(Error::Scaffold("strut endpoints coincide".into()));
    }
    if d.z < 0.0 {
        return Err(Error::Scaffold("high end is below the low end".into()));
    }
    let el = (d.z / len).clamp(-1.0, 1.0).asin().to_degrees();
    if d.x == 0.0 && d.y == 0.0 {
        return Ok((0.0, 90.0));
    }
    let mut az = d.y.atan2(d.x).to_degrees();
    if az <= -180.0 {
        az += 360.0;
    }
    Ok((az, el.clamp(0.0, 90.0)))
}

/// `(low label, high label)` of a strut. Equal heights put the smaller
/// label low.
pub fn strut_ends(config: &Configuration, topo: &TopologyMap, strut: usize) -> (usize, usize) {
    let [a, b] = topo.struts[strut];
    let (za, zb) = (config.vertex(a).z, config.vertex(b).z);
    if za < zb || (za == zb && a < b) {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostLayout {
    /// Per strut, 1 ↔ ¼, 2 ↔ ½, 3 ↔ ¾ from the reference end.
    pub jsave: Vec<u8>,
    pub posts: Vec<Vec3>,
    /// Smallest plan-view distance between two posts; +∞ for one strut.
    pub objective: f64,
    pub exhaustive: bool,
}

/// Plan-view candidate positions, `cand[strut][choice]`.
fn attachment_points(
    config: &Configuration,
    topo: &TopologyMap,
    reference: AttachmentReference,
) -> Vec<[Vec3; 3]> {
    (0..topo.n_struts)
        .map(|i| {
            let (lo, hi) = strut_ends(config, topo, i);
            let (from, to) = match reference {
                AttachmentReference::LowEnd => (config.vertex(lo), config.vertex(hi)),
                AttachmentReference::HighEnd => (config.vertex(hi), config.vertex(lo)),
            };
            ATTACHMENT_FRACTIONS.map(|f| from + f * (to - from))
        })
        .collect()
}

/// Plan-view distance table: `dist[i][a][j][b]` flattened.
struct Distances {
    n: usize,
    table: Vec<f64>,
}

impl Distances {
    fn new(cand: &[[Vec3; 3]]) -> Self {
        let n = cand.len();
        let mut table = vec![0.0; 9 * n * n];
        for i in 0..n {
            for a in 0..3 {
                for j in 0..n {
                    for b in 0..3 {
                        let (p, q) = (cand[i][a], cand[j][b]);
                        table[((i * 3 + a) * n + j) * 3 + b] = (p.x - q.x).hypot(p.y - q.y);
                    }
                }
            }
        }
        Distances { n, table }
    }

    #[inline]
    fn get(&self, i: usize, a: usize, j: usize, b: usize) -> f64 {
        self.table[((i * 3 + a) * self.n + j) * 3 + b]
    }

    fn min_spacing(&self, choice: &[usize]) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.n {
            for j in i + 1..self.n {
                m = m.min(self.get(i, choice[i], j, choice[j]));
            }
        }
        m
    }

    /// All pairwise distances, ascending: compared lexicographically this
    /// refines the max-min objective and breaks plateaus in local search.
    fn profile(&self, choice: &[usize]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                v.push(self.get(i, choice[i], j, choice[j]));
            }
        }
        v.sort_by(f64::total_cmp);
        v
    }
}

fn profile_better(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return true;
        }
        if x < y {
            return false;
        }
    }
    false
}

/// Depth-first enumeration in lexicographic order with bound pruning: a
/// prefix whose partial minimum is already ≤ the best can only tie, and the
/// earlier (smaller) assignment wins ties.
fn exhaustive_search(dist: &Distances) -> (Vec<usize>, f64) {
    struct State<'a> {
        dist: &'a Distances,
        choice: Vec<usize>,
        best: Vec<usize>,
        best_val: f64,
    }
    fn visit(st: &mut State, depth: usize, partial: f64) {
        if depth == st.dist.n {
            if partial > st.best_val {
                st.best_val = partial;
                st.best.clone_from(&st.choice);
            }
            return;
        }
        for a in 0..3 {
            let mut m = partial;
            for j in 0..depth {
                m = m.min(st.dist.get(j, st.choice[j], depth, a));
                if m <= st.best_val {
                    break;
                }
            }
            if m <= st.best_val {
                continue;
            }
            st.choice[depth] = a;
            visit(st, depth + 1, m);
        }
    }
    let n = dist.n;
    let mut st = State {
        dist,
        choice: vec![0; n],
        best: vec![0; n],
        best_val: f64::NEG_INFINITY,
    };
    visit(&mut st, 0, f64::INFINITY);
    (st.best, st.best_val)
}

/// Steepest ascent over single-strut moves.
fn climb(dist: &Distances, mut choice: Vec<usize>) -> Vec<usize> {
    let mut current = dist.profile(&choice);
    loop {
        let mut best_move: Option<(usize, usize, Vec<f64>)> = None;
        for i in 0..dist.n {
            let keep = choice[i];
            for a in (0..3).filter(|&a| a != keep) {
                choice[i] = a;
                let p = dist.profile(&choice);
                let target = best_move.as_ref().map_or(&current, |m| &m.2);
                if profile_better(&p, target) {
                    best_move = Some((i, a, p));
                }
            }
            choice[i] = keep;
        }
        match best_move {
            Some((i, a, p)) => {
                choice[i] = a;
                current = p;
            }
            None => return choice,
        }
    }
}

fn local_search(dist: &Distances, restarts: usize, seed: u64) -> (Vec<usize>, f64) {
    let n = dist.n;
    let mut best = climb(dist, vec![1; n]);
    let mut best_profile = dist.profile(&best);
    for r in 1..restarts.max(1) {
        let mut rng = restart_rng(seed, r);
        let start: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let found = climb(dist, start);
        let p = dist.profile(&found);
        if profile_better(&p, &best_profile) {
            best = found;
            best_profile = p;
        }
    }
    let val = dist.min_spacing(&best);
    (best, val)
}

/// Chooses one attachment point per strut maximizing the smallest plan-view
/// spacing between posts. Exact when `3^n ≤ exhaustive_budget`, otherwise
/// seeded multi-start steepest ascent (the first start is all-½).
pub fn optimize_posts(
    config: &Configuration,
    topo: &TopologyMap,
    opts: &ScaffoldOptions,
) -> Result<PostLayout> {
    let n = topo.n_struts;
    if n == 0 {
        return Err(Error::Scaffold("no struts to place".into()));
    }
    let cand = attachment_points(config, topo, opts.reference);
    let dist = Distances::new(&cand);
    let exhaustive = 3u128
        .checked_pow(n as u32)
        .is_some_and(|c| c <= opts.exhaustive_budget as u128);
    let (choice, objective) = if exhaustive {
        exhaustive_search(&dist)
    } else {
        local_search(&dist, opts.restarts, opts.seed)
    };
    Ok(PostLayout {
        jsave: choice.iter().map(|&a| a as u8 + 1).collect(),
        posts: choice
            .iter()
            .enumerate()
            .map(|(i, &a)| cand[i][a])
            .collect(),
        objective,
        exhaustive,
    })
}

/// Smallest plan-view post spacing for a given `jsave` vector.
pub fn post_spacing(
    config: &Configuration,
    topo: &TopologyMap,
    jsave: &[u8],
    reference: AttachmentReference,
) -> f64 {
    let cand = attachment_points(config, topo, reference);
    let choice: Vec<usize> = jsave.iter().map(|&j| j as usize - 1).collect();
    Distances::new(&cand).min_spacing(&choice)
}

pub fn build_plan(
    config: &Configuration,
    topo: &TopologyMap,
    opts: &ScaffoldOptions,
) -> Result<ScaffoldPlan> {
    let axis = longitudinal_axis(&centroids(config, topo))?;
    let reoriented = reorient(config, topo, &axis, opts.roll_scan, opts.margin)?;
    let layout = optimize_posts(&reoriented, topo, opts)?;

    let mut placements = Vec::with_capacity(topo.n_struts);
    for i in 0..topo.n_struts {
        let (lo, hi) = strut_ends(&reoriented, topo, i);
        let (low, high) = (reoriented.vertex(lo), reoriented.vertex(hi));
        let (theta_az, theta_el) = strut_angles(&low, &high)?;
        let post = layout.posts[i];
        placements.push(StrutPlacement {
            strut: i + 1,
            xpost: post.x,
            ypost: post.y,
            zpost: post.z,
            theta_az,
            theta_el,
            jsave: layout.jsave[i],
            high_vertex: hi,
            endpoint_z: [low.z, high.z],
        });
    }
    let post_length = placements
        .iter()
        .map(|p| p.zpost + POST_LENGTH_ALLOWANCE_IN)
        .collect();
    Ok(ScaffoldPlan {
        axis,
        placements,
        post_length,
        margin: opts.margin,
        min_post_spacing: layout.objective,
        reoriented_config: reoriented,
    })
}
