//! SVG rendering of geography slices. Coordinates are mapped affinely
//! from the slice's bounding box onto an 800x800 viewport; rationals are
//! rendered at fixed precision for display only, the JSON stays exact.

use morifan::exact::arrangement::Point2;
use morifan::geography::GeographySlice;
use morifan::num::Rat;
use num_traits::ToPrimitive;
use std::fmt::Write as _;

const VIEW: f64 = 800.0;
const MARGIN: f64 = 40.0;

fn approx(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(0.0)
}

struct Viewport {
    min_x: f64,
    min_y: f64,
    scale: f64,
}

impl Viewport {
    fn of(points: &[Point2]) -> Viewport {
        let xs: Vec<f64> = points.iter().map(|p| approx(&p[0])).collect();
        let ys: Vec<f64> = points.iter().map(|p| approx(&p[1])).collect();
        let (min_x, max_x) = bounds(&xs);
        let (min_y, max_y) = bounds(&ys);
        let w = (max_x - min_x).max(1e-9);
        let h = (max_y - min_y).max(1e-9);
        let scale = (VIEW - 2.0 * MARGIN) / w.max(h);
        Viewport { min_x, min_y, scale }
    }

    fn map(&self, p: &Point2) -> (f64, f64) {
        let x = MARGIN + (approx(&p[0]) - self.min_x) * self.scale;
        let y = VIEW - MARGIN - (approx(&p[1]) - self.min_y) * self.scale;
        (x, y)
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !lo.is_finite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn color_of_key(key: &str) -> String {
    // stable FNV-1a over the model key, spread over pleasant hues
    let mut h: u64 = 0xcbf29ce484222325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let hue = (h % 360) as f64;
    let light = 55.0 + ((h >> 16) % 25) as f64;
    format!("hsl({hue:.0}, 65%, {light:.0}%)")
}

/// Renders the chamber decomposition; `marks` are labelled vertices (the
/// link points of a factorization walk).
pub fn render_slice(slice: &GeographySlice, marks: &[(Point2, String)]) -> String {
    let mut all_points: Vec<Point2> = slice.arrangement.vertices.clone();
    if all_points.is_empty() {
        all_points.push(vec![Rat::from_integer(0.into()), Rat::from_integer(0.into())]);
        all_points.push(vec![Rat::from_integer(1.into()), Rat::from_integer(1.into())]);
    }
    let vp = Viewport::of(&all_points);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{VIEW}\" height=\"{VIEW}\" viewBox=\"0 0 {VIEW} {VIEW}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{VIEW}\" height=\"{VIEW}\" fill=\"white\"/>");
    // 2-cells filled per model
    for (f, cell) in slice.arrangement.cells.iter().enumerate() {
        let chamber = slice.face_chamber[f];
        let key = slice.chambers[chamber].model.key();
        let pts: Vec<String> = cell
            .verts
            .iter()
            .map(|&v| {
                let (x, y) = vp.map(&slice.arrangement.vertices[v]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg,
            "  <polygon points=\"{}\" fill=\"{}\" stroke=\"#666\" stroke-width=\"0.7\"/>",
            pts.join(" "),
            color_of_key(&key)
        );
    }
    // boundary of E(B) in bold
    for e in slice.boundary_edges() {
        let ends = slice.arrangement.edges[e].ends;
        let (x1, y1) = vp.map(&slice.arrangement.vertices[ends.0]);
        let (x2, y2) = vp.map(&slice.arrangement.vertices[ends.1]);
        let _ = writeln!(
            svg,
            "  <line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"black\" stroke-width=\"3\"/>"
        );
    }
    for (p, label) in marks {
        let (x, y) = vp.map(p);
        let _ = writeln!(
            svg,
            "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"5\" fill=\"crimson\"/>"
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"16\" fill=\"crimson\">{}</text>",
            x + 8.0,
            y - 8.0,
            label
        );
    }
    svg.push_str("</svg>\n");
    svg
}
