//! Fabrication outputs: the assembly report, DXF cut files for the base
//! plate and a strut, and the post cut list.
//!
//! DXF output is a minimal ASCII R12 subset: a HEADER with `$ACADVER`
//! and `$INSUNITS`, then an ENTITIES section holding only POLYLINE / VERTEX /
//! SEQEND and CIRCLE. Coordinates are written with 4 decimals.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaffold::{ScaffoldPlan, POST_LENGTH_ALLOWANCE_IN};

pub const POST_HOLE_DIAMETER_IN: f64 = 0.25;
pub const BASE_OUTLINE_MARGIN_IN: f64 = 1.0;
pub const BASE_THICKNESS_IN: f64 = 0.25;
pub const STRUT_BODY_WIDTH_IN: f64 = 0.5;
pub const STRUT_TAB_IN: f64 = 0.25;
pub const STRUT_HOLE_DIAMETER_IN: f64 = 0.125;
pub const DRILL_FROM_TOP_IN: f64 = 0.25;

/// Assembly report. Sections appear in the order pt1, pt2, maxdis, xpost,
/// ypost, zpost, thetael, thetaaz, jsave, endpoint z, with one value per
/// line. Lengths and angles carry 4 decimals.
pub fn write_report(plan: &ScaffoldPlan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pt1 = {}", plan.axis.pt1);
    let _ = writeln!(out, "pt2 = {}", plan.axis.pt2);
    let _ = writeln!(out, "maxdis = {:.4}", plan.axis.maxdis);

    let p = &plan.placements;
    let columns: [(&str, Vec<f64>); 5] = [
        ("xpost", p.iter().map(|s| s.xpost).collect()),
        ("ypost", p.iter().map(|s| s.ypost).collect()),
        ("zpost", p.iter().map(|s| s.zpost).collect()),
        ("thetael", p.iter().map(|s| s.theta_el).collect()),
        ("thetaaz", p.iter().map(|s| s.theta_az).collect()),
    ];
    for (name, values) in &columns {
        let _ = writeln!(out, "\n{name} =");
        for v in values {
            let _ = writeln!(out, "{v:.4}");
        }
    }
    out.push_str("\njsave =\n");
    for s in p {
        let _ = writeln!(out, "{}", s.jsave);
    }
    out.push_str("\nendpoint z =\nstrut high_vertex z_low z_high\n");
    for s in p {
        let _ = writeln!(
            out,
            "{} {} {:.4} {:.4}",
            s.strut, s.high_vertex, s.endpoint_z[0], s.endpoint_z[1]
        );
    }
    out
}

/// `strut,length_in,drill_from_top_in,azimuth_deg`: post length is
/// `zpost + 1.0`, the cross hole sits 0.25 in below the top, and the
/// azimuth is the arrow direction marked on the base.
pub fn post_cutlist(plan: &ScaffoldPlan) -> String {
    let mut out = String::from("strut,length_in,drill_from_top_in,azimuth_deg\n");
    for s in &plan.placements {
        let _ = writeln!(
            out,
            "{},{:.4},{:.4},{:.4}",
            s.strut,
            s.zpost + POST_LENGTH_ALLOWANCE_IN,
            DRILL_FROM_TOP_IN,
            s.theta_az
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub x: f64,
    pub y: f64,
    pub diameter: f64,
}

/// Axis-aligned rectangle, lower-left corner plus size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    fn strictly_contains(&self, x: f64, y: f64) -> bool {
        x > self.x && x < self.x + self.width && y > self.y && y < self.y + self.height
    }

    fn corners(&self) -> Vec<(f64, f64)> {
        let (x1, y1) = (self.x + self.width, self.y + self.height);
        vec![(self.x, self.y), (x1, self.y), (x1, y1), (self.x, y1)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePlateSpec {
    pub outline: Rect,
    pub holes: Vec<Hole>,
    /// Stock thickness; informational only, DXF output is 2D.
    pub thickness: f64,
}

impl BasePlateSpec {
    /// One hole per post at `(xpost, ypost)`; the outline is the hole
    /// bounding box grown by `margin` on every side.
    pub fn from_plan(plan: &ScaffoldPlan, hole_diameter: f64, margin: f64) -> Result<Self> {
        if plan.placements.is_empty() {
            return Err(Error::Export("plan has no posts".into()));
        }
        let holes: Vec<Hole> = plan
            .placements
            .iter()
            .map(|s| Hole {
                x: s.xpost,
                y: s.ypost,
                diameter: hole_diameter,
            })
            .collect();
        let (mut x0, mut y0, mut x1, mut y1) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for h in &holes {
            x0 = x0.min(h.x);
            y0 = y0.min(h.y);
            x1 = x1.max(h.x);
            y1 = y1.max(h.y);
        }
        Ok(BasePlateSpec {
            outline: Rect {
                x: x0 - margin,
                y: y0 - margin,
                width: x1 - x0 + 2.0 * margin,
                height: y1 - y0 + 2.0 * margin,
            },
            holes,
            thickness: BASE_THICKNESS_IN,
        })
    }

    pub fn check(&self) -> Result<()> {
        for (i, h) in self.holes.iter().enumerate() {
            if !self.outline.strictly_contains(h.x, h.y) {
                return Err(Error::Export(format!(
                    "hole {} at ({:.4}, {:.4}) is outside the base outline",
                    i + 1,
                    h.x,
                    h.y
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrutProfileSpec {
    pub length: f64,
    pub body_width: f64,
    /// Side of the square end tabs.
    pub tab: f64,
    pub hole_diameter: f64,
}

impl StrutProfileSpec {
    pub fn new(length: f64) -> Self {
        StrutProfileSpec {
            length,
            body_width: STRUT_BODY_WIDTH_IN,
            tab: STRUT_TAB_IN,
            hole_diameter: STRUT_HOLE_DIAMETER_IN,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.tab > 0.0 && self.length > 2.0 * self.tab) {
            return Err(Error::Export(format!(
                "strut length {} must exceed two end tabs of {}",
                self.length, self.tab
            )));
        }
        if self.body_width < self.tab {
            return Err(Error::Export(format!(
                "body width {} is narrower than the end tab {}",
                self.body_width, self.tab
            )));
        }
        if !(self.hole_diameter > 0.0 && self.hole_diameter < self.body_width) {
            return Err(Error::Export(format!(
                "hole diameter {} does not fit the body width {}",
                self.hole_diameter, self.body_width
            )));
        }
        Ok(())
    }

    /// Outline traced counter-clockwise from the bottom of the left tab.
    /// The strut runs along x with its centerline at `y = body_width / 2`.
    pub fn outline(&self) -> Vec<(f64, f64)> {
        let (l, w, t) = (self.length, self.body_width, self.tab);
        let (lo, hi) = (w / 2.0 - t / 2.0, w / 2.0 + t / 2.0);
        vec![
            (0.0, lo),
            (t, lo),
            (t, 0.0),
            (l - t, 0.0),
            (l - t, lo),
            (l, lo),
            (l, hi),
            (l - t, hi),
            (l - t, w),
            (t, w),
            (t, hi),
            (0.0, hi),
        ]
    }

    pub fn holes(&self) -> Vec<Hole> {
        [0.25, 0.5, 0.75]
            .map(|f| Hole {
                x: f * self.length,
                y: self.body_width / 2.0,
                diameter: self.hole_diameter,
            })
            .to_vec()
    }
}

struct DxfWriter {
    out: String,
}

impl DxfWriter {
    fn new() -> Self {
        let mut w = DxfWriter { out: String::new() };
        w.pair(0, "SECTION");
        w.pair(2, "HEADER");
        w.pair(9, "$ACADVER");
        w.pair(1, "AC1009");
        w.pair(9, "$INSUNITS");
        w.pair(70, "1");
        w.pair(0, "ENDSEC");
        w.pair(0, "SECTION");
        w.pair(2, "ENTITIES");
        w
    }

    fn pair(&mut self, code: i32, value: &str) {
        let _ = write!(self.out, "{code:>3}\n{value}\n");
    }

    fn num(&mut self, code: i32, v: f64) {
        // avoid "-0.0000"
        let s = format!("{v:.4}");
        let s = if s == "-0.0000" {
            "0.0000".to_string()
        } else {
            s
        };
        self.pair(code, &s);
    }

    fn polyline(&mut self, pts: &[(f64, f64)]) {
        self.pair(0, "POLYLINE");
        self.pair(8, "0");
        self.pair(66, "1");
        self.num(10, 0.0);
        self.num(20, 0.0);
        self.num(30, 0.0);
        self.pair(70, "1");
        for &(x, y) in pts {
            self.pair(0, "VERTEX");
            self.pair(8, "0");
            self.num(10, x);
            self.num(20, y);
            self.num(30, 0.0);
        }
        self.pair(0, "SEQEND");
        self.pair(8, "0");
    }

    fn circle(&mut self, h: &Hole) {
        self.pair(0, "CIRCLE");
        self.pair(8, "0");
        self.num(10, h.x);
        self.num(20, h.y);
        self.num(30, 0.0);
        self.num(40, h.diameter / 2.0);
    }

    fn finish(mut self) -> String {
        self.pair(0, "ENDSEC");
        self.pair(0, "EOF");
        self.out
    }
}

/// Closed outline plus one CIRCLE per post hole.
pub fn base_dxf(base: &BasePlateSpec) -> Result<String> {
    base.check()?;
    let mut w = DxfWriter::new();
    w.polyline(&base.outline.corners());
    for h in &base.holes {
        w.circle(h);
    }
    Ok(w.finish())
}

/// Closed strut outline with square end tabs and three holes on the
/// centerline at ¼, ½ and ¾ of the length.
pub fn strut_dxf(profile: &StrutProfileSpec) -> Result<String> {
    profile.check()?;
    let mut w = DxfWriter::new();
    w.polyline(&profile.outline());
    for h in profile.holes() {
        w.circle(&h);
    }
    Ok(w.finish())
}
