#![allow(dead_code)]

pub mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tforge_core::formfind::{find_equilibrium, FormFindOptions};
use tforge_core::model::{prism_topology, Configuration, MaterialSpec, TopologyMap, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn prism_material() -> MaterialSpec {
    MaterialSpec::uniform(10.0, 0.1, 1.0, 3.0)
}

pub fn prism_equilibrium(p: usize) -> (TopologyMap, MaterialSpec, Configuration) {
    let topo = prism_topology(p).unwrap();
    let mat = prism_material();
    let eq = find_equilibrium(&topo, &mat, &FormFindOptions::default()).unwrap();
    (topo, mat, eq.config)
}

pub fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

/// `n` struts with random endpoints, labels `[2i+1, 2i+2]`, one spring per
/// consecutive pair so the map validates.
pub fn random_struts(n: usize, rng: &mut impl Rng, scale: f64) -> (TopologyMap, Configuration) {
    let struts = (0..n).map(|i| [2 * i + 1, 2 * i + 2]).collect();
    let springs = if n > 1 {
        (0..n - 1).map(|i| [2 * i + 2, 2 * i + 3]).collect()
    } else {
        vec![]
    };
    let topo = TopologyMap {
        n_struts: n,
        struts,
        springs,
    };
    let coords = (0..2 * n).map(|_| random_vec(rng, scale)).collect();
    (topo, Configuration::new(coords))
}

/// Uniformly random rotation from a unit quaternion.
pub fn random_rotation(rng: &mut impl Rng) -> nalgebra::Rotation3<f64> {
    loop {
        let q = nalgebra::Vector4::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q / n));
            return q.to_rotation_matrix();
        }
    }
}

pub fn pairwise_distances(c: &Configuration) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            out.push((c.coords[i] - c.coords[j]).norm());
        }
    }
    out
}
