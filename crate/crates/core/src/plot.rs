//! SVG figures: the n=2 scale panel in log coordinates and the n=3 cone triangle.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::matrix::StandardMatrix;
use crate::rational::{rat, to_f64, Rat};
use crate::scales::ScaleLattice;

const PALETTE: [&str; 11] = [
    "#e6e6e6", "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5", "#bc80bd", "#ccebc5",
];

/// "k=j", "k=2j", "k=(3/2)j".
pub fn slope_label(c: &Rat) -> String {
    if *c == Rat::from_integer(1) {
        "k=j".into()
    } else if c.is_integer() {
        format!("k={}j", c.numer())
    } else {
        format!("k=({}/{})j", c.numer(), c.denom())
    }
}

/// Tubes of every admissible scale up to `bound` in the (j,k) = (log₂|ξ₁|, log₂|ξ₂|) plane, with the
/// dashed boundary rays k = j/e(1,2) and k = e(2,1)j of the principal region.
pub fn scale_panel_svg(e: &StandardMatrix, bound: i64) -> Result<String> {
    if e.n() != 2 {
        return Err(Error::Precondition(format!("the scale panel needs n = 2, got {}", e.n())));
    }
    if bound < 1 {
        return Err(Error::NonPositiveParameter("bound"));
    }
    let lattice = ScaleLattice::from_matrix(e);
    let scales = lattice.enumerate(bound);
    let (size, margin) = (480.0, 40.0);
    let top = bound as f64 + 0.5;
    let unit = size / top;
    let x = |t: f64| margin + t * unit;
    let y = |t: f64| margin + size - t * unit;
    let mut labels: Vec<String> = scales.iter().map(|s| s.partition_label()).collect();
    labels.sort();
    labels.dedup();

    let mut out = String::new();
    let w = size + 2.0 * margin + 160.0;
    let h = size + 2.0 * margin;
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for s in &scales {
        let tube = lattice.tube(s);
        let colour = PALETTE[labels.iter().position(|l| *l == s.partition_label()).unwrap_or(0) % PALETTE.len()];
        let (x0, x1) = (to_f64(&tube.lo[0]), to_f64(&tube.hi[0]).min(top));
        let (y0, y1) = (to_f64(&tube.lo[1]), to_f64(&tube.hi[1]).min(top));
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}" fill-opacity="0.6" stroke="black" stroke-width="0.8"><title>L=({},{}) {}</title></rect>"#,
            x(x0),
            y(y1),
            (x1 - x0) * unit,
            (y1 - y0) * unit,
            s.l[0],
            s.l[1],
            s.partition_label()
        );
    }
    let _ = writeln!(out, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="1.5"/>"#, x(0.0), y(0.0), x(top), y(0.0));
    let _ = writeln!(out, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="1.5"/>"#, x(0.0), y(0.0), x(0.0), y(top));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">j</text>"#, x(top) + 6.0, y(0.0) + 4.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">k</text>"#, x(0.0) - 4.0, y(top) - 6.0);
    for c in [rat(1, 1) / e.e(0, 1), e.e(1, 0)] {
        let cf = to_f64(&c);
        let end = if cf * top <= top { (top, cf * top) } else { (top / cf, top) };
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="5,4"/>"#,
            x(0.0),
            y(0.0),
            x(end.0),
            y(end.1)
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x(end.0) + 4.0, y(end.1) - 4.0, slope_label(&c));
    }
    for (i, l) in labels.iter().enumerate() {
        let yy = margin + 18.0 * i as f64;
        let _ = writeln!(out, r#"<rect x="{:.2}" y="{yy:.2}" width="12" height="12" fill="{}" stroke="black"/>"#, size + margin + 50.0, PALETTE[i % PALETTE.len()]);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, size + margin + 68.0, yy + 10.0, escape(l));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// The section t₁+t₂+t₃ = 1 of the positive orthant, cells coloured by the first cone Γ_S containing
/// their centre.
pub fn cone_triangle_svg(e: &StandardMatrix, resolution: usize) -> Result<String> {
    if e.n() != 3 {
        return Err(Error::Precondition(format!("the cone triangle needs n = 3, got {}", e.n())));
    }
    if resolution < 3 {
        return Err(Error::NonPositiveParameter("resolution"));
    }
    let lattice = ScaleLattice::from_matrix(e);
    let census = &lattice.census;
    let side = 480.0;
    let margin = 40.0;
    let height = side * 3f64.sqrt() / 2.0;
    // vertices: A = t₁, B = t₂, C = t₃
    let corners = [(margin, margin + height), (margin + side, margin + height), (margin + side / 2.0, margin)];
    let at = |t: [f64; 3]| {
        let s = t[0] + t[1] + t[2];
        (
            (t[0] * corners[0].0 + t[1] * corners[1].0 + t[2] * corners[2].0) / s,
            (t[0] * corners[0].1 + t[1] * corners[1].1 + t[2] * corners[2].1) / s,
        )
    };
    let n = resolution as i128;
    let mut out = String::new();
    let w = side + 2.0 * margin + 200.0;
    let h = height + 2.0 * margin;
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h:.2}" viewBox="0 0 {w} {h:.2}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h:.2}" fill="white"/>"#);
    // each small triangle of the subdivision, upward (a,b,c) and downward
    for a in 0..n {
        for b in 0..n - a {
            let c = n - 1 - a - b;
            let mut cells = vec![[[a + 1, b, c], [a, b + 1, c], [a, b, c + 1]]];
            if c >= 1 {
                cells.push([[a + 1, b + 1, c - 1], [a + 1, b, c], [a, b + 1, c]]);
            }
            for tri in cells {
                let centre: Vec<Rat> = (0..3).map(|k| Rat::new(tri.iter().map(|v| v[k]).sum::<i128>(), 3)).collect();
                let owner = census.containing(&centre).into_iter().next();
                let colour = owner.map_or("white", |i| PALETTE[(i + 1) % PALETTE.len()]);
                let pts: Vec<String> = tri
                    .iter()
                    .map(|v| {
                        let p = at([v[0] as f64, v[1] as f64, v[2] as f64]);
                        format!("{:.2},{:.2}", p.0, p.1)
                    })
                    .collect();
                let _ = writeln!(out, r#"<polygon points="{}" fill="{colour}" stroke="{colour}" stroke-width="0.3"/>"#, pts.join(" "));
            }
        }
    }
    let _ = writeln!(
        out,
        r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        corners[0].0, corners[0].1, corners[1].0, corners[1].1, corners[2].0, corners[2].1
    );
    for (k, name) in ["A (t1)", "B (t2)", "C (t3)"].iter().enumerate() {
        let dy = if k == 2 { -8.0 } else { 16.0 };
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{name}</text>"#, corners[k].0, corners[k].1 + dy);
    }
    for (i, s) in census.partitions.iter().enumerate() {
        let yy = margin + 18.0 * i as f64;
        let note = if census.nonempty[i] { "" } else { " (empty)" };
        let _ = writeln!(out, r#"<rect x="{:.2}" y="{yy:.2}" width="12" height="12" fill="{}" stroke="black"/>"#, side + margin + 40.0, PALETTE[(i + 1) % PALETTE.len()]);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}{note}</text>"#, side + margin + 58.0, yy + 10.0, escape(&s.encode()));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// The figure matching the matrix size.
pub fn figure_svg(e: &StandardMatrix, bound: i64) -> Result<String> {
    match e.n() {
        2 => scale_panel_svg(e, bound),
        3 => cone_triangle_svg(e, 60),
        n => Err(Error::Precondition(format!("figures exist for n = 2 and n = 3, got {n}"))),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_has_both_rays() {
        let svg = scale_panel_svg(&StandardMatrix::figure1(), 6).unwrap();
        assert!(svg.contains(">k=j<"));
        assert!(svg.contains(">k=2j<"));
        assert!(svg.contains("L=(2,3)"));
    }

    #[test]
    fn triangle_uses_every_nonempty_cone() {
        let e = StandardMatrix::from_integers(&[&[1, 2, 2], &[2, 1, 2], &[2, 2, 1]]).unwrap();
        let svg = cone_triangle_svg(&e, 40).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(scale_panel_svg(&e, 4).is_err());
        assert!(cone_triangle_svg(&StandardMatrix::figure1(), 40).is_err());
    }

    #[test]
    fn slope_labels() {
        assert_eq!(slope_label(&rat(3, 2)), "k=(3/2)j");
        assert_eq!(slope_label(&rat(2, 1)), "k=2j");
    }
}
