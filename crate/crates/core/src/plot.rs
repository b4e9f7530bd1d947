//! Static SVG plots: a line chart for time series and sweeps, and probability
//! heat maps. Plots are a convenience view over the CSV data, never the
//! source of truth; styling and float formatting are fixed so identical
//! inputs give byte-identical files.

/// Fixed series palette.
pub const PALETTE: [&str; 6] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

/// One named curve.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Pixel coordinate: fixed three decimals.
fn px(v: f64) -> String {
    format!("{v:.3}")
}

/// Tick label: six decimals with trailing zeros trimmed.
fn tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn svg_open(out: &mut String, title: &str) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"Helvetica, Arial, sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" fill=\"#222222\">{}</text>\n",
        px(WIDTH / 2.0),
        esc(title)
    ));
}

/// A line chart of the given series. Non-finite values break the line; a
/// single isolated point renders as a dot. Axis ranges fit the finite data.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let finite: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();

    let (mut x0, mut x1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
    let (mut y0, mut y1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
    if finite.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x0 == x1 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y0 == y1 {
        y0 -= 1.0;
        y1 += 1.0;
    } else {
        let pad = (y1 - y0) * 0.05;
        y0 -= pad;
        y1 += pad;
    }

    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut out = String::new();
    svg_open(&mut out, title);

    // Gridlines and tick labels, five per axis.
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let gx = MARGIN_LEFT + f * plot_w;
        let gy = MARGIN_TOP + f * plot_h;
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            px(gx),
            px(MARGIN_TOP),
            px(gx),
            px(MARGIN_TOP + plot_h)
        ));
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            px(MARGIN_LEFT),
            px(gy),
            px(MARGIN_LEFT + plot_w),
            px(gy)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#444444\">{}</text>\n",
            px(gx),
            px(MARGIN_TOP + plot_h + 18.0),
            tick(x0 + f * (x1 - x0))
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" fill=\"#444444\">{}</text>\n",
            px(MARGIN_LEFT - 8.0),
            px(MARGIN_TOP + plot_h - f * plot_h + 4.0),
            tick(y0 + f * (y1 - y0))
        ));
    }
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#555555\"/>\n",
        px(MARGIN_LEFT),
        px(MARGIN_TOP),
        px(plot_w),
        px(plot_h)
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#222222\">{}</text>\n",
        px(MARGIN_LEFT + plot_w / 2.0),
        px(HEIGHT - 14.0),
        esc(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" fill=\"#222222\" \
         transform=\"rotate(-90 18 {})\">{}</text>\n",
        px(MARGIN_TOP + plot_h / 2.0),
        px(MARGIN_TOP + plot_h / 2.0),
        esc(y_label)
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        // Split at non-finite points so gaps stay visible.
        let mut segment: Vec<(f64, f64)> = Vec::new();
        let flush = |seg: &mut Vec<(f64, f64)>, out: &mut String| {
            match seg.len() {
                0 => {}
                1 => out.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{color}\"/>\n",
                    px(seg[0].0),
                    px(seg[0].1)
                )),
                _ => {
                    let pts: Vec<String> =
                        seg.iter().map(|(x, y)| format!("{},{}", px(*x), px(*y))).collect();
                    out.push_str(&format!(
                        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                        pts.join(" ")
                    ));
                }
            }
            seg.clear();
        };
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                segment.push((sx(x), sy(y)));
            } else {
                flush(&mut segment, &mut out);
            }
        }
        flush(&mut segment, &mut out);

        // Legend row.
        let ly = MARGIN_TOP + 10.0 + 16.0 * i as f64;
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            px(MARGIN_LEFT + plot_w - 150.0),
            px(ly - 9.0)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"#222222\">{}</text>\n",
            px(MARGIN_LEFT + plot_w - 135.0),
            px(ly),
            esc(&s.label)
        ));
    }

    out.push_str("</svg>\n");
    out
}

/// Probability heat maps, one square panel per walk, laid out side by side.
/// Cell opacity is linear in p relative to the panel maximum.
pub fn heatmap_panels(title: &str, panels: &[(String, Vec<(i64, i64, f64)>)]) -> String {
    let panel_side = 360.0;
    let gap = 36.0;
    let total_w = gap + panels.len() as f64 * (panel_side + gap);
    let total_h = 470.0;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {total_w} {total_h}\" \
         font-family=\"Helvetica, Arial, sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{total_w}\" height=\"{total_h}\" fill=\"#ffffff\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" fill=\"#222222\">{}</text>\n",
        px(total_w / 2.0),
        esc(title)
    ));

    for (i, (label, cells)) in panels.iter().enumerate() {
        let ox = gap + i as f64 * (panel_side + gap);
        let oy = 64.0;
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#222222\">{}</text>\n",
            px(ox + panel_side / 2.0),
            px(oy - 10.0),
            esc(label)
        ));
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{panel_side}\" height=\"{panel_side}\" \
             fill=\"none\" stroke=\"#555555\"/>\n",
            px(ox),
            px(oy)
        ));
        if cells.is_empty() {
            continue;
        }
        let m_min = cells.iter().map(|c| c.0).min().unwrap();
        let m_max = cells.iter().map(|c| c.0).max().unwrap();
        let n_min = cells.iter().map(|c| c.1).min().unwrap();
        let n_max = cells.iter().map(|c| c.1).max().unwrap();
        let extent = (m_max - m_min).max(n_max - n_min).max(0) as f64 + 1.0;
        let cell = panel_side / extent;
        let p_max = cells.iter().map(|c| c.2).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
        for &(m, n, p) in cells {
            let x = ox + (m - m_min) as f64 * cell;
            let y = oy + (n_max - n) as f64 * cell;
            let opacity = (p / p_max).clamp(0.0, 1.0);
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#1f77b4\" \
                 fill-opacity=\"{:.6}\"/>\n",
                px(x),
                px(y),
                px(cell),
                px(cell),
                opacity
            ));
        }
        // Corner coordinates for orientation.
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"#444444\">m={m_min}..{m_max}, n={n_min}..{n_max}</text>\n",
            px(ox),
            px(oy + panel_side + 18.0)
        ));
    }

    out.push_str("</svg>\n");
    out
}
