mod common;

use rand::Rng;
use tforge_core::model::{Configuration, TopologyMap, Vec3};
use tforge_core::scaffold::{
    build_plan, centroids, longitudinal_axis, optimize_posts, post_spacing, reorient, strut_angles,
    strut_ends, AttachmentReference, ScaffoldOptions, POST_LENGTH_ALLOWANCE_IN,
};

use common::oracles::{ends, exhaustive_oracle};
use common::{pairwise_distances, prism_equilibrium, random_rotation, random_struts, rng};

#[test]
fn exhaustive_matches_oracle() {
    let mut r = rng(31);
    for n in 1..=8 {
        for _ in 0..4 {
            let (topo, cfg) = random_struts(n, &mut r, 4.0);
            let layout = optimize_posts(&cfg, &topo, &ScaffoldOptions::default()).unwrap();
            assert!(layout.exhaustive);
            let (jsave, obj) = exhaustive_oracle(&cfg, &topo);
            if n == 1 {
                assert_eq!(layout.objective, f64::INFINITY);
                assert_eq!(layout.jsave, vec![1]);
                continue;
            }
            assert!((layout.objective - obj).abs() <= 1e-12 * obj, "n = {n}");
            assert_eq!(layout.jsave, jsave, "n = {n}");
        }
    }
}

#[test]
fn local_search_close_to_exhaustive() {
    let mut r = rng(32);
    for n in [9, 10] {
        let (topo, cfg) = random_struts(n, &mut r, 4.0);
        let exact = optimize_posts(&cfg, &topo, &ScaffoldOptions::default()).unwrap();
        let local = optimize_posts(
            &cfg,
            &topo,
            &ScaffoldOptions {
                exhaustive_budget: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(exact.exhaustive && !local.exhaustive);
        let baseline = post_spacing(&cfg, &topo, &vec![2; n], AttachmentReference::LowEnd);
        assert!(local.objective >= baseline);
        assert!(local.objective <= exact.objective);
        assert!(
            local.objective >= 0.95 * exact.objective,
            "{} vs {}",
            local.objective,
            exact.objective
        );
    }
}

#[test]
fn longitudinal_axis_is_brute_force_max() {
    let mut r = rng(33);
    for _ in 0..20 {
        let c: Vec<Vec3> = (0..6).map(|_| common::random_vec(&mut r, 5.0)).collect();
        let axis = longitudinal_axis(&c).unwrap();
        let mut best = (0, 0, -1.0);
        for i in 0..6 {
            for j in i + 1..6 {
                let d = (c[i] - c[j]).norm();
                if d > best.2 {
                    best = (i + 1, j + 1, d);
                }
            }
        }
        assert_eq!((axis.pt1, axis.pt2, axis.maxdis), best);
    }
}

#[test]
fn centroids_are_midpoints() {
    let (topo, _, cfg) = prism_equilibrium(5);
    for (i, c) in centroids(&cfg, &topo).iter().enumerate() {
        let [a, b] = topo.struts[i];
        assert_eq!(*c, (cfg.coords[a - 1] + cfg.coords[b - 1]) * 0.5);
    }
}

fn check_reoriented(cfg: &Configuration, out: &Configuration, topo: &TopologyMap, margin: f64) {
    for (a, b) in pairwise_distances(cfg).iter().zip(pairwise_distances(out)) {
        assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }
    let axis = longitudinal_axis(&centroids(cfg, topo)).unwrap();
    let c = centroids(out, topo);
    let span = c[axis.pt2 - 1] - c[axis.pt1 - 1];
    assert!(span.x > 0.0);
    assert!(span.y.abs() < 1e-9 * axis.maxdis && span.z.abs() < 1e-9 * axis.maxdis);
    let min = out
        .coords
        .iter()
        .fold(Vec3::repeat(f64::INFINITY), |m, p| m.inf(p));
    assert!(
        (min.x - margin).abs() < 1e-12 && (min.y - margin).abs() < 1e-12 && min.z.abs() < 1e-12
    );
}

#[test]
fn reorient_is_isometric_and_rotation_independent() {
    let mut r = rng(34);
    for _ in 0..30 {
        let n = r.gen_range(2..9);
        let (topo, cfg) = random_struts(n, &mut r, 5.0);
        let axis = longitudinal_axis(&centroids(&cfg, &topo)).unwrap();
        let a = reorient(&cfg, &topo, &axis, false, 0.5).unwrap();
        check_reoriented(&cfg, &a, &topo, 0.5);

        let rot = random_rotation(&mut r);
        let moved = Configuration::new(cfg.coords.iter().map(|p| rot * p).collect());
        let b = reorient(&moved, &topo, &axis, false, 0.5).unwrap();
        check_reoriented(&moved, &b, &topo, 0.5);
        // the two results differ at most by a roll about x
        for (p, q) in a.coords.iter().zip(&b.coords) {
            assert!((p.x - q.x).abs() < 1e-9);
        }

        let rolled = reorient(&cfg, &topo, &axis, true, 0.5).unwrap();
        check_reoriented(&cfg, &rolled, &topo, 0.5);
        let height = |c: &Configuration| c.coords.iter().map(|p| p.z).fold(0.0, f64::max);
        assert!(height(&rolled) <= height(&a) + 1e-12);
    }
}

#[test]
fn aligned_axis_only_translates() {
    let topo = TopologyMap::new(2, vec![[1, 2], [3, 4]], vec![[1, 3]]).unwrap();
    let cfg = Configuration::new(vec![
        Vec3::new(1., 1., 2.),
        Vec3::new(1., 2., 3.),
        Vec3::new(6., 1., 2.),
        Vec3::new(6., 2., 3.),
    ]);
    let axis = longitudinal_axis(&centroids(&cfg, &topo)).unwrap();
    let out = reorient(&cfg, &topo, &axis, false, 0.5).unwrap();
    let shift = Vec3::new(-0.5, -0.5, -2.0);
    for (p, q) in cfg.coords.iter().zip(&out.coords) {
        assert!((p + shift - q).amax() < 1e-15);
    }
}

#[test]
fn plan_invariants_on_random_configurations() {
    let mut r = rng(35);
    for _ in 0..50 {
        let n = r.gen_range(2..9);
        let (topo, cfg) = random_struts(n, &mut r, 6.0);
        let plan = build_plan(&cfg, &topo, &ScaffoldOptions::default()).unwrap();
        let re = &plan.reoriented_config;
        assert!(re
            .coords
            .iter()
            .all(|p| p.x >= 0.0 && p.y >= 0.0 && p.z >= 0.0));
        for (i, s) in plan.placements.iter().enumerate() {
            assert!(s.theta_el >= 0.0 && s.theta_el <= 90.0);
            assert!(s.theta_az > -180.0 && s.theta_az <= 180.0);
            assert!([1, 2, 3].contains(&s.jsave));
            let (lo, hi) = ends(re, &topo, i);
            assert_eq!(re.vertex(s.high_vertex), hi);
            assert_eq!(s.endpoint_z, [lo.z, hi.z]);
            let f = [0.25, 0.5, 0.75][s.jsave as usize - 1];
            let post = lo + f * (hi - lo);
            assert_eq!((s.xpost, s.ypost, s.zpost), (post.x, post.y, post.z));
            assert_eq!(plan.post_length[i], s.zpost + POST_LENGTH_ALLOWANCE_IN);
            let (az, el) = strut_angles(&lo, &hi).unwrap();
            assert_eq!((az, el), (s.theta_az, s.theta_el));
            let d = hi - lo;
            assert!((el.to_radians().sin() * d.norm() - d.z).abs() < 1e-9);
        }
    }
}

#[test]
fn planar_struts_are_level() {
    let mut r = rng(36);
    let n = 5;
    let (topo, mut cfg) = random_struts(n, &mut r, 6.0);
    cfg.coords.iter_mut().for_each(|p| p.z = 1.5);
    let plan = build_plan(&cfg, &topo, &ScaffoldOptions::default()).unwrap();
    assert!(plan.placements.iter().all(|s| s.theta_el.abs() < 1e-6));
    for i in 0..n {
        let (lo, hi) = strut_ends(&plan.reoriented_config, &topo, i);
        assert!(plan.reoriented_config.vertex(lo).z <= plan.reoriented_config.vertex(hi).z);
    }
}

#[test]
fn prism_plan() {
    let (topo, _, cfg) = prism_equilibrium(6);
    let plan = build_plan(&cfg, &topo, &ScaffoldOptions::default()).unwrap();
    assert_eq!(plan.placements.len(), 6);
    let (_, obj) = exhaustive_oracle(&plan.reoriented_config, &topo);
    assert!((plan.min_post_spacing - obj).abs() <= 1e-12 * obj);
    let json = serde_json::to_string(&plan).unwrap();
    for key in [
        "\"pt1\"",
        "\"pt2\"",
        "\"maxdis\"",
        "\"placements\"",
        "\"post_length\"",
        "\"endpoint_z\"",
    ] {
        assert!(json.contains(key), "{key} missing");
    }
    let back: tforge_core::scaffold::ScaffoldPlan = serde_json::from_str(&json).unwrap();
    assert_eq!(back, plan);
}
