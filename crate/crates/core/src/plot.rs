//! Static SVG region plots: the copula scatter over the dyadic grid with an
//! interaction's negative cells shaded and the positive/negative counts
//! annotated.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::expansion::{cell_index, CopulaSet};
use crate::interactions::{cell_sign, InteractionIndex};

const SIZE: f64 = 440.0;
const MARGIN: f64 = 40.0;

fn px(u: f64) -> f64 {
    MARGIN + u * SIZE
}

/// v axis points up.
fn py(v: f64) -> f64 {
    MARGIN + (1.0 - v) * SIZE
}

/// Render the plot as an SVG string. Cells where the interaction is -1 are
/// shaded; every interaction splits the grid into two halves of
/// `2^{d1+d2-1}` cells each.
pub fn region_plot_svg(copula: &CopulaSet, idx: &InteractionIndex) -> String {
    let (d1, d2) = idx.depths();
    let m = idx.packed();
    let mut svg = String::new();
    let total = SIZE + 2.0 * MARGIN;
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\" \
         viewBox=\"0 0 {total} {total}\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\" \
         stroke=\"black\"/>\n",
        MARGIN, MARGIN
    ));

    // Shade negative cells.
    let cols = 1u32 << d1;
    let rows = 1u32 << d2;
    let (cw, ch) = (SIZE / cols as f64, SIZE / rows as f64);
    for cu in 0..cols {
        for cv in 0..rows {
            let x = (cu << d2) | cv;
            if cell_sign(m, x) < 0 {
                svg.push_str(&format!(
                    "<rect class=\"negative\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" \
                     height=\"{:.2}\" fill=\"#9dc3e6\"/>\n",
                    MARGIN + cu as f64 * cw,
                    MARGIN + (rows - 1 - cv) as f64 * ch,
                    cw,
                    ch
                ));
            }
        }
    }

    // Grid lines.
    for k in 1..cols {
        let x = MARGIN + k as f64 * cw;
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{MARGIN}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"gray\" stroke-width=\"0.5\"/>\n",
            MARGIN + SIZE
        ));
    }
    for k in 1..rows {
        let y = MARGIN + k as f64 * ch;
        svg.push_str(&format!(
            "<line x1=\"{MARGIN}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"gray\" stroke-width=\"0.5\"/>\n",
            MARGIN + SIZE
        ));
    }

    // Scatter and the positive/negative tally.
    let mut positive = 0u64;
    let mut negative = 0u64;
    for i in 0..copula.len() {
        let (u, v) = (copula.u()[i], copula.v()[i]);
        let cell = (cell_index(u, d1) << d2) | cell_index(v, d2);
        if cell_sign(m, cell) < 0 {
            negative += 1;
        } else {
            positive += 1;
        }
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.2\" fill=\"black\"/>\n",
            px(u),
            py(v)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{MARGIN}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"14\">{} \
         positive: {positive}  negative: {negative}</text>\n",
        MARGIN - 12.0,
        idx.label()
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Write the region plot for one interaction to `path`.
pub fn emit_region_plot(copula: &CopulaSet, idx: &InteractionIndex, path: &Path) -> Result<()> {
    let mut file = File::create(path)?;
    file.write_all(region_plot_svg(copula, idx).as_bytes())?;
    Ok(())
}
