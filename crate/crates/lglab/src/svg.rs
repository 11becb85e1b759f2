//! Deterministic SVG snapshots: boundary curves (earlier evolution steps
//! lighter), optional point scatters, and an optional classical-width
//! overlay. Byte-identical output for identical inputs.

use num_complex::Complex64;

use crate::conformal::LaurentMap;
use crate::error::{Error, Result};

pub struct SvgOptions {
    /// Boundary polyline nodes per curve (>= 512 recommended).
    pub nodes: usize,
    /// Pixel size of the square canvas.
    pub size: u32,
    /// Extra points to scatter (eigenvalues, layer samples).
    pub points: Vec<Complex64>,
    /// Optional normal offsets per node of the LAST curve (classical width
    /// overlay, drawn dashed).
    pub width_overlay: Option<Vec<f64>>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self { nodes: 512, size: 800, points: Vec::new(), width_overlay: None }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

/// Render a sequence of boundary curves. Viewport: bounding box of all
/// curves plus a 10% margin. Cusp-flagged maps are rendered with a red
/// warning marker at the point of minimal |z'| rather than rejected.
pub fn render_boundary_svg(maps: &[LaurentMap], options: &SvgOptions) -> Result<String> {
    if maps.is_empty() {
        return Err(Error::Validation("empty document: no maps to render".into()));
    }
    let n = options.nodes.max(8);
    let mut curves: Vec<Vec<Complex64>> = Vec::with_capacity(maps.len());
    for map in maps {
        let pts: Vec<Complex64> = (0..n)
            .map(|j| {
                map.eval_raw(Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64)).0
            })
            .collect();
        curves.push(pts);
    }
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for z in curves.iter().flatten().chain(options.points.iter()) {
        min_x = min_x.min(z.re);
        max_x = max_x.max(z.re);
        min_y = min_y.min(z.im);
        max_y = max_y.max(z.im);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1e-12);
    let margin = 0.1 * span;
    let view = span + 2.0 * margin;
    let x0 = 0.5 * (min_x + max_x) - 0.5 * view;
    let y0 = 0.5 * (min_y + max_y) - 0.5 * view;
    let scale = options.size as f64 / view;
    // SVG y-axis points down; flip.
    let to_px = |z: Complex64| -> (f64, f64) { ((z.re - x0) * scale, (y0 + view - z.im) * scale) };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n",
        s = options.size
    ));
    svg.push_str(&format!(
        "<rect width=\"{s}\" height=\"{s}\" fill=\"white\"/>\n",
        s = options.size
    ));

    let n_curves = curves.len();
    for (ci, pts) in curves.iter().enumerate() {
        // Earlier steps lighter: gray level from 200 down to 0.
        let level = if n_curves == 1 {
            0
        } else {
            200 - (200 * ci) / (n_curves - 1)
        };
        let color = format!("rgb({level},{level},{level})");
        let mut attr = String::new();
        attr.push_str("points=\"");
        for (i, &z) in pts.iter().enumerate() {
            let (x, y) = to_px(z);
            if i > 0 {
                attr.push(' ');
            }
            attr.push_str(&fmt(x));
            attr.push(',');
            attr.push_str(&fmt(y));
        }
        // Close the curve.
        let (x, y) = to_px(pts[0]);
        attr.push_str(&format!(" {},{}", fmt(x), fmt(y)));
        attr.push('"');
        svg.push_str(&format!(
            "<polyline {attr} fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));

        // Cusp warning marker at the node of minimal |z'|.
        let rep = maps[ci].univalence_report();
        if rep.min_abs_dz < 1e-6 * maps[ci].r || !rep.simple {
            let mut worst = Complex64::default();
            let mut worst_dz = f64::INFINITY;
            for j in 0..n {
                let w = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
                let (z, dz) = maps[ci].eval_raw(w);
                if dz.norm() < worst_dz {
                    worst_dz = dz.norm();
                    worst = z;
                }
            }
            let (x, y) = to_px(worst);
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"6\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n",
                fmt(x),
                fmt(y)
            ));
        }
    }

    if let Some(widths) = &options.width_overlay {
        if let Some(last) = maps.last() {
            let m = widths.len();
            let mut attr = String::from("points=\"");
            for (j, &h) in widths.iter().enumerate() {
                let w = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / m as f64);
                let (z, dz) = last.eval_raw(w);
                let normal = w * dz / dz.norm();
                let (x, y) = to_px(z + h * normal);
                if j > 0 {
                    attr.push(' ');
                }
                attr.push_str(&fmt(x));
                attr.push(',');
                attr.push_str(&fmt(y));
            }
            if let Some(&h0) = widths.first() {
                let w = Complex64::new(1.0, 0.0);
                let (z, dz) = last.eval_raw(w);
                let normal = w * dz / dz.norm();
                let (x, y) = to_px(z + h0 * normal);
                attr.push_str(&format!(" {},{}", fmt(x), fmt(y)));
            }
            attr.push('"');
            svg.push_str(&format!(
                "<polyline {attr} fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n"
            ));
        }
    }

    for &z in &options.points {
        let (x, y) = to_px(z);
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"1.5\" fill=\"crimson\"/>\n",
            fmt(x),
            fmt(y)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::c64;

    #[test]
    fn empty_rejected() {
        assert!(matches!(
            render_boundary_svg(&[], &SvgOptions::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn deterministic_and_accurate() {
        let maps = vec![LaurentMap::disk(1.0)];
        let a = render_boundary_svg(&maps, &SvgOptions::default()).unwrap();
        let b = render_boundary_svg(&maps, &SvgOptions::default()).unwrap();
        assert_eq!(a, b);

        // Polyline chord deviation from the ideal circle < viewport/1e4
        // at 512 nodes: max radial sagitta R (1 - cos(pi/512)).
        let sagitta = 1.0 - (std::f64::consts::PI / 512.0).cos();
        let viewport = 2.2; // diameter + 10% margins
        assert!(sagitta < viewport / 1e4);
        assert!(a.matches("<polyline").count() == 1);
    }

    #[test]
    fn evolution_frames_nested() {
        let maps = vec![
            LaurentMap::disk(1.0),
            LaurentMap::disk(1.1),
            LaurentMap::disk(1.2),
        ];
        let svg = render_boundary_svg(&maps, &SvgOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        // Earlier steps lighter.
        assert!(svg.contains("rgb(200,200,200)"));
        assert!(svg.contains("rgb(0,0,0)"));
    }

    #[test]
    fn cusp_marker_rendered() {
        let cusped = LaurentMap::new(1.0, vec![c64(0.0, 0.0), c64(1.0, 0.0)]).unwrap();
        let svg = render_boundary_svg(&[cusped], &SvgOptions::default()).unwrap();
        assert!(svg.contains("stroke=\"red\""));
    }
}
