mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;

use tforge_core::export::{
    base_dxf, post_cutlist, strut_dxf, write_report, BasePlateSpec, Hole, StrutProfileSpec,
    BASE_OUTLINE_MARGIN_IN, POST_HOLE_DIAMETER_IN,
};
use tforge_core::scaffold::{build_plan, ScaffoldOptions, ScaffoldPlan, StrutPlacement};

fn reference_plan() -> ScaffoldPlan {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/reference_plan.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Report sections in order of appearance, each with its value lines.
fn parse_report(text: &str) -> Vec<(String, Vec<String>)> {
    let mut sections: Vec<(String, Vec<String>)> = Vec::new();
    for line in text.lines() {
        if line.is_empty() {
            continue;
        }
        if let Some((key, value)) = line.split_once(" = ") {
            sections.push((key.to_string(), vec![value.to_string()]));
        } else if let Some(key) = line.strip_suffix(" =") {
            sections.push((key.to_string(), vec![]));
        } else {
            sections.last_mut().unwrap().1.push(line.to_string());
        }
    }
    sections
}

#[test]
fn report_reproduces_reference_layout() {
    let plan = reference_plan();
    let text = write_report(&plan);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(&lines[..3], &["pt1 = 1", "pt2 = 15", "maxdis = 12.2436"]);

    let sections = parse_report(&text);
    let names: Vec<&str> = sections.iter().map(|s| s.0.as_str()).collect();
    assert_eq!(
        names,
        [
            "pt1",
            "pt2",
            "maxdis",
            "xpost",
            "ypost",
            "zpost",
            "thetael",
            "thetaaz",
            "jsave",
            "endpoint z"
        ]
    );
    assert_eq!(sections[5].1[0], "1.4161");
    assert_eq!(sections[3].1[14], "14.1256");
    assert_eq!(sections[7].1[12], "-174.4903");
    for s in &sections[3..8] {
        assert_eq!(s.1.len(), 15);
        assert!(s.1.iter().all(|v| v.split_once('.').unwrap().1.len() == 4));
    }
    assert_eq!(sections[8].1.len(), 15);
    assert_eq!(write_report(&plan), text);
}

#[test]
fn report_round_trip() {
    let (topo, _, cfg) = common::prism_equilibrium(4);
    let plan = build_plan(&cfg, &topo, &ScaffoldOptions::default()).unwrap();
    let sections: BTreeMap<String, Vec<String>> =
        parse_report(&write_report(&plan)).into_iter().collect();
    let num = |s: &str| s.parse::<f64>().unwrap();
    assert_eq!(num(&sections["pt1"][0]) as usize, plan.axis.pt1);
    assert_eq!(num(&sections["pt2"][0]) as usize, plan.axis.pt2);
    assert!((num(&sections["maxdis"][0]) - plan.axis.maxdis).abs() <= 5e-5);
    for (i, s) in plan.placements.iter().enumerate() {
        for (key, want) in [
            ("xpost", s.xpost),
            ("ypost", s.ypost),
            ("zpost", s.zpost),
            ("thetael", s.theta_el),
            ("thetaaz", s.theta_az),
        ] {
            assert!(
                (num(&sections[key][i]) - want).abs() <= 5e-5 + 1e-12,
                "{key}[{i}]"
            );
        }
        assert_eq!(sections["jsave"][i], s.jsave.to_string());
        let row: Vec<&str> = sections["endpoint z"][i + 1].split(' ').collect();
        assert_eq!(row[0], s.strut.to_string());
        assert_eq!(row[1], s.high_vertex.to_string());
        assert!((num(row[3]) - s.endpoint_z[1]).abs() <= 5e-5);
    }
}

#[test]
fn single_strut_report() {
    let plan = ScaffoldPlan {
        placements: vec![StrutPlacement {
            strut: 1,
            xpost: 1.0,
            ypost: 2.0,
            zpost: 0.5,
            theta_az: 0.0,
            theta_el: 45.0,
            jsave: 1,
            high_vertex: 2,
            endpoint_z: [0.0, 1.0],
        }],
        post_length: vec![1.5],
        ..Default::default()
    };
    let sections = parse_report(&write_report(&plan));
    assert!(sections[3..9].iter().all(|s| s.1.len() == 1));
}

#[test]
fn cutlist_lengths() {
    let plan = reference_plan();
    let csv = post_cutlist(&plan);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("strut,length_in,drill_from_top_in,azimuth_deg")
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 15);
    assert_eq!(rows[0][1], "2.4161");
    for (row, s) in rows.iter().zip(&plan.placements) {
        assert_eq!(row[1], format!("{:.4}", s.zpost + 1.0));
        assert_eq!(row[2], "0.2500");
        assert_eq!(row[3], format!("{:.4}", s.theta_az));
    }
    let zero = ScaffoldPlan {
        placements: vec![StrutPlacement {
            zpost: 0.0,
            ..plan.placements[0].clone()
        }],
        ..Default::default()
    };
    assert!(post_cutlist(&zero).contains("\n1,1.0000,"));
}

#[derive(Debug, Default)]
struct Scanned {
    circles: Vec<(f64, f64, f64)>,
    polylines: Vec<Vec<(f64, f64)>>,
    closed: Vec<bool>,
    sections: (usize, usize),
    eof: bool,
}

/// Minimal reader of the group-code pairs this crate writes.
fn scan_dxf(text: &str) -> Scanned {
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len() % 2, 0);
    let pairs: Vec<(i32, &str)> = lines
        .chunks(2)
        .map(|c| (c[0].trim().parse().unwrap(), c[1]))
        .collect();
    let mut out = Scanned::default();
    let mut i = 0;
    while i < pairs.len() {
        let (code, value) = pairs[i];
        i += 1;
        if code != 0 {
            continue;
        }
        let mut fields = BTreeMap::new();
        while i < pairs.len() && pairs[i].0 != 0 {
            fields.insert(pairs[i].0, pairs[i].1);
            i += 1;
        }
        let f = |c: i32| fields[&c].parse::<f64>().unwrap();
        match value {
            "SECTION" => out.sections.0 += 1,
            "ENDSEC" => out.sections.1 += 1,
            "EOF" => out.eof = i == pairs.len(),
            "CIRCLE" => out.circles.push((f(10), f(20), f(40))),
            "POLYLINE" => {
                out.polylines.push(vec![]);
                out.closed.push(fields.get(&70) == Some(&"1"));
            }
            "VERTEX" => out.polylines.last_mut().unwrap().push((f(10), f(20))),
            _ => {}
        }
    }
    out
}

#[test]
fn base_plate_scanner_round_trip() {
    let plan = reference_plan();
    let base =
        BasePlateSpec::from_plan(&plan, POST_HOLE_DIAMETER_IN, BASE_OUTLINE_MARGIN_IN).unwrap();
    let s = scan_dxf(&base_dxf(&base).unwrap());
    assert!(s.eof);
    assert_eq!(s.sections, (2, 2));
    assert_eq!(s.circles.len(), 15);
    assert_eq!(s.polylines.len(), 1);
    assert!(s.closed[0]);
    for (c, p) in s.circles.iter().zip(&plan.placements) {
        assert_eq!(format!("{:.4}", c.0), format!("{:.4}", p.xpost));
        assert_eq!(format!("{:.4}", c.1), format!("{:.4}", p.ypost));
        assert_eq!(c.2, 0.125);
    }
    let xs: Vec<f64> = s.polylines[0].iter().map(|v| v.0).collect();
    let ys: Vec<f64> = s.polylines[0].iter().map(|v| v.1).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!((min(&xs) - (0.5302 - 1.0)).abs() < 1e-9 && (max(&xs) - 15.1256).abs() < 1e-9);
    assert!((min(&ys) - (0.6140 - 1.0)).abs() < 1e-9 && (max(&ys) - 4.0474).abs() < 1e-9);

    let two = BasePlateSpec {
        holes: base.holes[..2].to_vec(),
        ..base.clone()
    };
    assert_eq!(scan_dxf(&base_dxf(&two).unwrap()).circles.len(), 2);
}

#[test]
fn strut_profile_scanner_round_trip() {
    for length in [8.0, 10.0, 11.25] {
        let spec = StrutProfileSpec::new(length);
        let s = scan_dxf(&strut_dxf(&spec).unwrap());
        assert!(s.eof);
        assert_eq!(s.sections, (2, 2));
        let centers: Vec<(f64, f64)> = s.circles.iter().map(|c| (c.0, c.1)).collect();
        assert_eq!(
            centers,
            vec![
                (length / 4.0, 0.25),
                (length / 2.0, 0.25),
                (3.0 * length / 4.0, 0.25)
            ]
        );
        assert!(s.circles.iter().all(|c| c.2 == 0.0625));
        let outline = &s.polylines[0];
        assert_eq!(outline.len(), 12);
        assert!(outline.contains(&(0.0, 0.125)) && outline.contains(&(0.0, 0.375)));
        assert!(outline.contains(&(length, 0.125)) && outline.contains(&(length, 0.375)));
        let tab_width = outline
            .iter()
            .filter(|v| v.0 == 0.0)
            .map(|v| v.1)
            .fold(f64::NEG_INFINITY, f64::max)
            - outline
                .iter()
                .filter(|v| v.0 == 0.0)
                .map(|v| v.1)
                .fold(f64::INFINITY, f64::min);
        assert_eq!(tab_width, 0.25);
    }
}

#[test]
fn hole_outside_outline_is_rejected() {
    let plan = reference_plan();
    let mut base =
        BasePlateSpec::from_plan(&plan, POST_HOLE_DIAMETER_IN, BASE_OUTLINE_MARGIN_IN).unwrap();
    base.holes.push(Hole {
        x: 100.0,
        y: 0.0,
        diameter: 0.25,
    });
    assert!(base_dxf(&base).is_err());
}
