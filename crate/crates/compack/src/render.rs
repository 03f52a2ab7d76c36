//! SVG rendering of coronas and packing patches.
//!
//! Output is deterministic: a fixed palette indexed by symbol, coordinates
//! rounded to six decimals, elements emitted in input order. Corona figures
//! carry a closure marker at the seam where the petal ring comes back
//! around: green when the realizer is tight (gap below 1e-8 radians), red
//! otherwise.

use crate::codes::CoronalCode;
use crate::geometry::{place_corona, Disc, Packing};
use crate::realize::Realizer;

/// Gap threshold, in radians, for drawing the closure marker green.
pub const CLOSURE_TOL: f64 = 1e-8;

/// Fill colors indexed by symbol, cycling past the end.
pub const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2", "#edc948", "#ff9da7",
    "#9c755f", "#bab0ac",
];

/// A circle ready to draw, with its palette class.
#[derive(Debug, Clone)]
pub struct SceneCircle {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub class: usize,
}

/// Circles plus the view box that frames them with a 5% margin.
#[derive(Debug, Clone)]
pub struct Scene {
    pub circles: Vec<SceneCircle>,
    /// `(min_x, min_y, width, height)`.
    pub viewbox: (f64, f64, f64, f64),
}

impl Scene {
    /// Frames the circles with a 5% margin; an empty scene gets the unit
    /// view box.
    pub fn new(circles: Vec<SceneCircle>) -> Self {
        let viewbox = if circles.is_empty() {
            (0.0, 0.0, 1.0, 1.0)
        } else {
            let mut min_x = f64::INFINITY;
            let mut min_y = f64::INFINITY;
            let mut max_x = f64::NEG_INFINITY;
            let mut max_y = f64::NEG_INFINITY;
            for c in &circles {
                min_x = min_x.min(c.x - c.r);
                min_y = min_y.min(c.y - c.r);
                max_x = max_x.max(c.x + c.r);
                max_y = max_y.max(c.y + c.r);
            }
            let margin = 0.05 * (max_x - min_x).max(max_y - min_y).max(1e-9);
            (
                min_x - margin,
                min_y - margin,
                (max_x - min_x) + 2.0 * margin,
                (max_y - min_y) + 2.0 * margin,
            )
        };
        Scene { circles, viewbox }
    }

    fn svg(&self, extra: &str, title: &str) -> String {
        let (x, y, w, h) = self.viewbox;
        let stroke = 0.004 * w.max(h);
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
            fmt6(x),
            fmt6(y),
            fmt6(w),
            fmt6(h)
        ));
        out.push_str(&format!("<title>{title}</title>\n"));
        for c in &self.circles {
            let fill = PALETTE[c.class % PALETTE.len()];
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" fill-opacity=\"0.85\" stroke=\"#333333\" stroke-width=\"{}\"/>\n",
                fmt6(c.x),
                fmt6(c.y),
                fmt6(c.r),
                fill,
                fmt6(stroke)
            ));
        }
        out.push_str(extra);
        out.push_str("</svg>\n");
        out
    }
}

fn fmt6(v: f64) -> String {
    // Six decimals, normalizing the sign of zero for stable output.
    let rounded = (v * 1e6).round() / 1e6;
    format!("{:.6}", if rounded == 0.0 { 0.0 } else { rounded })
}

/// Renders a corona laid out from the code and realizer: center disc at the
/// origin, petals at cumulative tangent-triple angles, plus the closure
/// marker at the seam.
pub fn corona_svg(code: &CoronalCode, rho: &Realizer) -> String {
    let placed = place_corona(code, rho);
    let mut circles = vec![SceneCircle {
        x: placed.center.x,
        y: placed.center.y,
        r: placed.center.r,
        class: code.center().index(),
    }];
    for (disc, symbol) in placed.petals.iter().zip(code.petals()) {
        circles.push(SceneCircle {
            x: disc.x,
            y: disc.y,
            r: disc.r,
            class: symbol.index(),
        });
    }
    let scene = Scene::new(circles);

    // Marker where petal 0 would land after a full trip around the ring.
    let tight = placed.closure_gap.abs() < CLOSURE_TOL;
    let color = if tight { "#2ca02c" } else { "#d62728" };
    let seam_angle = std::f64::consts::TAU + placed.closure_gap;
    let seam_r = placed.center.r + placed.petals[0].r;
    let marker = format!(
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" stroke=\"none\"/>\n",
        fmt6(seam_r * seam_angle.cos()),
        fmt6(seam_r * seam_angle.sin()),
        fmt6(0.08 * placed.center.r.max(placed.petals[0].r)),
        color
    );
    scene.svg(&marker, &format!("corona {code}"))
}

/// Renders a packing patch, one circle per disc, filled by label class.
pub fn packing_svg(packing: &Packing) -> String {
    let circles: Vec<SceneCircle> = packing
        .discs()
        .iter()
        .zip(packing.labels())
        .map(|(d, &label)| SceneCircle {
            x: d.x,
            y: d.y,
            r: d.r,
            class: label,
        })
        .collect();
    Scene::new(circles).svg("", "packing patch")
}

/// Circles of a placed corona as plain discs, for tests and fixtures.
pub fn corona_discs(code: &CoronalCode, rho: &Realizer) -> Vec<Disc> {
    let placed = place_corona(code, rho);
    let mut discs = vec![placed.center];
    discs.extend(placed.petals);
    discs
}
