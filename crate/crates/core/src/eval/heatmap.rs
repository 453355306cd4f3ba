use std::fmt::Write;

use super::ConfusionMatrix;

const CELL: usize = 64;
// Row labels sit left of the grid and column labels below it, so the
// left/bottom margins carry the long names and the figure stays square.
const MARGIN_LEFT: usize = 400;
const MARGIN_RIGHT: usize = 40;
const MARGIN_TOP: usize = 40;
const MARGIN_BOTTOM: usize = 400;
const HUE: u32 = 215;
const SATURATION: u32 = 80;
const DARKEST_LIGHTNESS: f64 = 25.0;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Fill lightness in percent: 100 (white) for zero, falling linearly to
/// the darkest shade at the matrix maximum.
pub(crate) fn cell_lightness(count: u64, max: u64) -> f64 {
    if max == 0 {
        return 100.0;
    }
    100.0 - (100.0 - DARKEST_LIGHTNESS) * count as f64 / max as f64
}

/// Standalone SVG 1.1 heatmap of the matrix, one annotated cell per count.
/// Rows are gold classes, columns predictions. Output depends only on the
/// matrix.
pub fn render_heatmap(cm: &ConfusionMatrix) -> String {
    let k = cm.size();
    let grid = CELL * k;
    let width = MARGIN_LEFT + grid + MARGIN_RIGHT;
    let height = MARGIN_TOP + grid + MARGIN_BOTTOM;
    let max = cm.max_count();
    let names: Vec<String> = cm
        .labels()
        .labels()
        .iter()
        .map(|l| escape(&l.display_name))
        .collect();

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<title>Confusion matrix</title>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>"##
    );
    for (i, row) in cm.counts().iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            let x = MARGIN_LEFT + j * CELL;
            let y = MARGIN_TOP + i * CELL;
            let l = cell_lightness(count, max);
            let ink = if l < 55.0 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                svg,
                r##"<rect class="cell" data-row="{i}" data-col="{j}" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="hsl({HUE},{SATURATION}%,{l:.1}%)" stroke="#cccccc" stroke-width="1"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="14" text-anchor="middle" dominant-baseline="central" fill="{ink}">{count}</text>"#,
                x + CELL / 2,
                y + CELL / 2
            );
        }
    }
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text class="row-label" x="{}" y="{}" font-size="11" text-anchor="end" dominant-baseline="central">{name}</text>"#,
            MARGIN_LEFT - 8,
            MARGIN_TOP + i * CELL + CELL / 2
        );
    }
    let label_y = MARGIN_TOP + grid + 8;
    for (j, name) in names.iter().enumerate() {
        let x = MARGIN_LEFT + j * CELL + CELL / 2;
        let _ = writeln!(
            svg,
            r#"<text class="col-label" x="{x}" y="{label_y}" font-size="11" text-anchor="end" transform="rotate(-60 {x} {label_y})">{name}</text>"#
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">Predicted label</text>"#,
        MARGIN_LEFT + grid / 2,
        height - 12
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {0})">True label</text>"#,
        MARGIN_TOP + grid / 2
    );
    svg.push_str("</svg>\n");
    svg
}
