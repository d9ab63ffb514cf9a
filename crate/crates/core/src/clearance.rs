//! Shortest distance between every pair of struts.

use std::cmp::Ordering;

use crate::model::{Configuration, TopologyMap, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentDistance {
    pub distance: f64,
    /// Parameter along the first segment, in `[0, 1]`.
    pub s: f64,
    /// Parameter along the second segment, in `[0, 1]`.
    pub t: f64,
    pub point_a: Vec3,
    pub point_b: Vec3,
}

fn lex_cmp(a: &[Vec3; 2], b: &[Vec3; 2]) -> Ordering {
    a.iter()
        .flat_map(|p| p.iter())
        .zip(b.iter().flat_map(|p| p.iter()))
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Closest points between segments `p1–p2` and `q1–q2`.
///
/// Degenerate (zero-length) segments are handled as points. For parallel
/// segments `s` is clamped first (to 0) and `t` minimized against it, then
/// `s` is re-solved for the clamped `t`. The two segments are processed in
/// a fixed lexicographic order so swapping the arguments gives bit-identical
/// results.
pub fn segment_distance(p1: Vec3, p2: Vec3, q1: Vec3, q2: Vec3) -> SegmentDistance {
    if lex_cmp(&[p1, p2], &[q1, q2]) == Ordering::Greater {
        let r = closest_points(q1, q2, p1, p2);
        return SegmentDistance {
            distance: r.distance,
            s: r.t,
            t: r.s,
            point_a: r.point_b,
            point_b: r.point_a,
        };
    }
    closest_points(p1, p2, q1, q2)
}

fn closest_points(p1: Vec3, p2: Vec3, q1: Vec3, q2: Vec3) -> SegmentDistance {
    let d1 = p2 - p1;
    let d2 = q2 - q1;
    let r = p1 - q1;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let tiny = f64::MIN_POSITIVE;

    let (s, t) = if a <= tiny && e <= tiny {
        (0.0, 0.0)
    } else if a <= tiny {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= tiny {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let s = if denom > 1e-14 * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let t = (b * s + f) / e;
            if t < 0.0 {
                ((-c / a).clamp(0.0, 1.0), 0.0)
            } else if t > 1.0 {
                (((b - c) / a).clamp(0.0, 1.0), 1.0)
            } else {
                (s, t)
            }
        }
    };
    let point_a = p1 + s * d1;
    let point_b = q1 + t * d2;
    SegmentDistance {
        distance: (point_a - point_b).norm(),
        s,
        t,
        point_a,
        point_b,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClearanceEntry {
    /// 1-based strut numbers, `i < j`.
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub closest_point_i: Vec3,
    pub closest_point_j: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClearanceReport {
    pub threshold: f64,
    /// Every unordered pair, ordered by `(i, j)`.
    pub entries: Vec<ClearanceEntry>,
    /// Pairs closer than the threshold, ascending by distance.
    pub violations: Vec<ClearanceEntry>,
}

pub fn clearance_report(
    config: &Configuration,
    topo: &TopologyMap,
    threshold: f64,
) -> ClearanceReport {
    let n = topo.n_struts;
    let mut entries = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        let (a1, a2) = config.strut_endpoints(topo, i);
        for j in i + 1..n {
            let (b1, b2) = config.strut_endpoints(topo, j);
            let d = segment_distance(a1, a2, b1, b2);
            entries.push(ClearanceEntry {
                i: i + 1,
                j: j + 1,
                distance: d.distance,
                closest_point_i: d.point_a,
                closest_point_j: d.point_b,
            });
        }
    }
    let mut violations: Vec<ClearanceEntry> = entries
        .iter()
        .filter(|e| e.distance < threshold)
        .cloned()
        .collect();
    violations.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then((a.i, a.j).cmp(&(b.i, b.j)))
    });
    ClearanceReport {
        threshold,
        entries,
        violations,
    }
}

/// `strut_i,strut_j,distance_in,violation`, one row per pair.
pub fn clearance_csv(report: &ClearanceReport) -> String {
    let mut out = String::from("strut_i,strut_j,distance_in,violation\n");
    for e in &report.entries {
        out.push_str(&format!(
            "{},{},{:.4},{}\n",
            e.i,
            e.j,
            e.distance,
            e.distance < report.threshold
        ));
    }
    out
}
