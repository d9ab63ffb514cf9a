use nalgebra::{Matrix3, SymmetricEigen};

use crate::model::{Configuration, Vec3};

/// Eigenvalues closer than this (relative to the largest) are treated as one
/// degenerate eigenspace.
const DEGENERATE_GAP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Canonicalized {
    pub config: Configuration,
    /// Set when the vertex cloud is collinear (or a single point) and only
    /// the translation was applied.
    pub rotation_skipped: bool,
}

/// Moves a configuration into a frame that removes rigid-body freedom:
/// vertex mean at the origin, principal axes of the vertex cloud along
/// x (largest variance), y, z.
///
/// Axis signs are fixed so that vertex 1 has non-negative x and y; z is then
/// `x × y`, keeping the map a proper rotation. Inside a degenerate
/// eigenspace (e.g. the plane of a symmetric prism) the axis is taken
/// along the first vertex with a non-negligible projection onto it.
pub fn canonicalize(config: &Configuration) -> Canonicalized {
    let n = config.len().max(1) as f64;
    let mean = config.coords.iter().fold(Vec3::zeros(), |acc, p| acc + p) / n;
    let centered: Vec<Vec3> = config.coords.iter().map(|p| p - mean).collect();

    let mut cov = Matrix3::zeros();
    for p in &centered {
        cov += p * p.transpose();
    }
    cov /= n;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs: Vec<Vec3> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();

    let scale = vals[0].abs();
    if scale == 0.0 || vals[1] <= DEGENERATE_GAP * scale {
        return Canonicalized {
            config: Configuration::new(centered),
            rotation_skipped: true,
        };
    }
    let same = |a: f64, b: f64| (a - b).abs() <= DEGENERATE_GAP * scale;
    let spread = scale.sqrt();

    let x_axis = if same(vals[0], vals[1]) {
        let span: Vec<Vec3> = if same(vals[1], vals[2]) {
            vec![Vec3::x(), Vec3::y(), Vec3::z()]
        } else {
            vec![vecs[0], vecs[1]]
        };
        project_first(&centered, &span, spread).unwrap_or(vecs[0])
    } else {
        vecs[0]
    };
    let x_axis = orient(x_axis, &centered, spread);

    let y_axis = if same(vals[1], vals[2]) {
        // Any unit vector normal to x works; take the first vertex's
        // perpendicular component when it has one.
        let q = Vec3::z().cross(&x_axis);
        let helper = if q.norm() > 0.5 {
            q.normalize()
        } else {
            Vec3::x().cross(&x_axis).normalize()
        };
        let perp: Vec<Vec3> = centered
            .iter()
            .map(|p| p - p.dot(&x_axis) * x_axis)
            .collect();
        perp.iter()
            .find(|p| p.norm() > 1e-9 * spread)
            .map(|p| p.normalize())
            .unwrap_or(helper)
    } else if same(vals[0], vals[1]) {
        vecs[2].cross(&x_axis).normalize()
    } else {
        let v = vecs[1] - vecs[1].dot(&x_axis) * x_axis;
        v.normalize()
    };
    let y_axis = orient(y_axis, &centered, spread);
    let z_axis = x_axis.cross(&y_axis);

    let coords = centered
        .iter()
        .map(|p| Vec3::new(p.dot(&x_axis), p.dot(&y_axis), p.dot(&z_axis)))
        .collect();
    Canonicalized {
        config: Configuration::new(coords),
        rotation_skipped: false,
    }
}

/// Unit projection of the first vertex that has a non-negligible component in
/// the span of the given orthonormal vectors.
fn project_first(points: &[Vec3], span: &[Vec3], spread: f64) -> Option<Vec3> {
    points.iter().find_map(|p| {
        let proj = span.iter().fold(Vec3::zeros(), |acc, e| acc + p.dot(e) * e);
        (proj.norm() > 1e-6 * spread).then(|| proj.normalize())
    })
}

/// Flips `axis` so the first vertex with a non-negligible coordinate along
/// it has a positive one.
fn orient(axis: Vec3, points: &[Vec3], spread: f64) -> Vec3 {
    match points
        .iter()
        .map(|p| p.dot(&axis))
        .find(|c| c.abs() > 1e-9 * spread)
    {
        Some(c) if c < 0.0 => -axis,
        _ => axis,
    }
}
