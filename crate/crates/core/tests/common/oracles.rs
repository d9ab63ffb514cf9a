//! Independent reference computations shared by the test targets.

use tforge_core::formfind::{chart_direction, SpringLaw, StrutPose, PARAMS_PER_STRUT};
use tforge_core::model::{Configuration, MaterialSpec, TopologyMap, Vec3};

/// Energy straight from vertex positions, sharing no code with the crate.
pub fn oracle_energy(
    poses: &[StrutPose],
    topo: &TopologyMap,
    mat: &MaterialSpec,
    law: SpringLaw,
) -> f64 {
    let mut x = vec![Vec3::zeros(); topo.n_vertices()];
    for (p, s) in poses.iter().zip(&topo.struts) {
        x[s[0] - 1] = p.centroid - 0.5 * mat.strut_length * p.direction;
        x[s[1] - 1] = p.centroid + 0.5 * mat.strut_length * p.direction;
    }
    let mut e = 0.0;
    for (i, s) in topo.springs.iter().enumerate() {
        let mut stretch = (x[s[0] - 1] - x[s[1] - 1]).norm() - mat.free_length(i);
        if law == SpringLaw::TensionOnly {
            stretch = stretch.max(0.0);
        }
        e += 0.5 * mat.stiffness(i) * stretch * stretch;
    }
    e
}

pub fn perturbed(poses: &[StrutPose], strut: usize, param: usize, h: f64) -> Vec<StrutPose> {
    let mut out = poses.to_vec();
    let p = &mut out[strut];
    if param < 3 {
        p.centroid[param] += h;
    } else {
        let (a, b) = if param == 3 { (h, 0.0) } else { (0.0, h) };
        p.direction = chart_direction(&poses[strut].direction, a, b);
    }
    out
}

pub fn fd_gradient(
    poses: &[StrutPose],
    topo: &TopologyMap,
    mat: &MaterialSpec,
    law: SpringLaw,
    h: f64,
) -> Vec<f64> {
    let mut g = Vec::with_capacity(PARAMS_PER_STRUT * poses.len());
    for s in 0..poses.len() {
        for k in 0..PARAMS_PER_STRUT {
            let ep = oracle_energy(&perturbed(poses, s, k, h), topo, mat, law);
            let em = oracle_energy(&perturbed(poses, s, k, -h), topo, mat, law);
            g.push((ep - em) / (2.0 * h));
        }
    }
    g
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Energy of the symmetric 3-prism with both triangles of circumradius `r`,
/// top rotated by `alpha` against the bottom, struts exactly `l` long.
pub fn prism3_energy(r: f64, alpha: f64, l: f64, free: f64) -> Option<f64> {
    use std::f64::consts::PI;
    let strut_planar = 2.0 * r * ((2.0 * PI / 3.0 + alpha) / 2.0).sin().abs();
    if strut_planar > l {
        return None;
    }
    let h2 = l * l - strut_planar * strut_planar;
    let ring = r * 3f64.sqrt();
    let vertical = (4.0 * r * r * (alpha / 2.0).sin().powi(2) + h2).sqrt();
    Some(3.0 * (ring - free).powi(2) + 1.5 * (vertical - free).powi(2))
}

/// Inner minimization over the radius: dense scan then golden section.
pub fn best_over_radius(alpha: f64, l: f64, free: f64) -> f64 {
    let r_max = l;
    let n = 400;
    let mut best = (f64::INFINITY, 0.0);
    for i in 1..n {
        let r = r_max * i as f64 / n as f64;
        if let Some(e) = prism3_energy(r, alpha, l, free) {
            if e < best.0 {
                best = (e, r);
            }
        }
    }
    let step = r_max / n as f64;
    let (mut a, mut b) = ((best.1 - step).max(1e-9), best.1 + step);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |r: f64| prism3_energy(r, alpha, l, free).unwrap_or(f64::INFINITY);
    for _ in 0..80 {
        let (c, d) = (b - phi * (b - a), a + phi * (b - a));
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b)).min(best.0)
}

pub fn measured_twist(cfg: &Configuration) -> f64 {
    let cb = (cfg.vertex(1) + cfg.vertex(2) + cfg.vertex(3)) / 3.0;
    let ct = (cfg.vertex(4) + cfg.vertex(5) + cfg.vertex(6)) / 3.0;
    let n = (ct - cb).normalize();
    let proj = |v: Vec3| v - v.dot(&n) * n;
    let mut sum = 0.0;
    for i in 1..=3 {
        let pb = proj(cfg.vertex(i) - cb);
        let pt = proj(cfg.vertex(i + 3) - ct);
        sum += n.dot(&pb.cross(&pt)).atan2(pb.dot(&pt));
    }
    (sum / 3.0).to_degrees()
}

/// Smallest distance over an `n × n` grid of parameter pairs, both ends
/// included.
pub fn grid_distance(p1: Vec3, p2: Vec3, q1: Vec3, q2: Vec3, n: usize) -> f64 {
    let (d1, d2) = (p2 - p1, q2 - q1);
    let e = d2.norm_squared();
    let step = 1.0 / (n - 1) as f64;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let r = p1 + (i as f64 * step) * d1 - q1;
        let (rr, rd) = (r.norm_squared(), r.dot(&d2));
        for j in 0..n {
            let t = j as f64 * step;
            best = best.min(rr - 2.0 * t * rd + t * t * e);
        }
    }
    best.max(0.0).sqrt()
}

/// Low and high end of strut `i`, recomputed: lower z first, equal z
/// ordered by label.
pub fn ends(cfg: &Configuration, topo: &TopologyMap, i: usize) -> (Vec3, Vec3) {
    let [a, b] = topo.struts[i];
    let (pa, pb) = (cfg.coords[a - 1], cfg.coords[b - 1]);
    if pa.z < pb.z || (pa.z == pb.z && a < b) {
        (pa, pb)
    } else {
        (pb, pa)
    }
}

/// Every one of the 3^n assignments; strict improvement keeps the
/// lexicographically first maximizer.
pub fn exhaustive_oracle(cfg: &Configuration, topo: &TopologyMap) -> (Vec<u8>, f64) {
    let n = topo.n_struts;
    let pts: Vec<[Vec3; 3]> = (0..n)
        .map(|i| {
            let (lo, hi) = ends(cfg, topo, i);
            [0.25, 0.5, 0.75].map(|f| lo + f * (hi - lo))
        })
        .collect();
    let mut choice = vec![0usize; n];
    let mut best = (vec![], f64::NEG_INFINITY);
    loop {
        let mut m = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                let (p, q) = (pts[i][choice[i]], pts[j][choice[j]]);
                m = m.min(((p.x - q.x).powi(2) + (p.y - q.y).powi(2)).sqrt());
            }
        }
        if m > best.1 {
            best = (choice.iter().map(|&c| c as u8 + 1).collect(), m);
        }
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < 3 {
                break;
            }
            choice[k] = 0;
        }
    }
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}
