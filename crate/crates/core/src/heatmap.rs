//! Static SVG heat maps of block norms.

use std::fmt::Write;

use crate::numgrad::Matrix;

const CELL: usize = 24;
const MARGIN: usize = 40;

/// Linear gray scale: 0 is white, the largest value is black. An all-zero
/// matrix renders as a uniform white grid.
pub fn render_svg(values: &Matrix, title: &str) -> String {
    let (rows, cols) = values.shape();
    let max = values.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let width = MARGIN + cols * CELL + 10;
    let height = MARGIN + rows * CELL + 10;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="rgb(255,255,255)"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="14" font-family="monospace" font-size="12" text-anchor="middle">{}</text>"#,
        width / 2,
        escape(title)
    );
    for j in 0..cols {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="10" text-anchor="middle">{}</text>"#,
            MARGIN + j * CELL + CELL / 2,
            MARGIN - 6,
            j + 1
        );
    }
    for i in 0..rows {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="10" text-anchor="end">{}</text>"#,
            MARGIN - 6,
            MARGIN + i * CELL + CELL / 2 + 4,
            i + 1
        );
        for j in 0..cols {
            let frac = if max > 0.0 { values.get(i, j).abs() / max } else { 0.0 };
            let g = (255.0 * (1.0 - frac)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{}" y="{}" width="{CELL}" height="{CELL}" fill="rgb({g},{g},{g})" stroke="rgb(200,200,200)" stroke-width="0.5"><title>({}, {}) {}</title></rect>"#,
                MARGIN + j * CELL,
                MARGIN + i * CELL,
                i + 1,
                j + 1,
                values.get(i, j)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
