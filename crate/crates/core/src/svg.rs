//! Tiny dependency-free SVG line charts for the plot-data files. The x
//! axis is categorical: budgets and buckets are evenly spaced in the order
//! given, which keeps mixed count/target axes readable.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders one chart; `series` holds per-line y values aligned with
/// `x_labels`, `None` breaking the polyline at that point.
pub(crate) fn line_chart(
    title: &str,
    x_labels: &[String],
    series: &[(String, Vec<Option<f64>>)],
) -> String {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;

    let ys: Vec<f64> = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied().flatten())
        .collect();
    let (mut lo, mut hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let xpos = |i: usize| {
        if x_labels.len() <= 1 {
            MARGIN_L + plot_w / 2.0
        } else {
            MARGIN_L + plot_w * i as f64 / (x_labels.len() - 1) as f64
        }
    };
    let ypos = |v: f64| MARGIN_T + plot_h * (1.0 - (v - lo) / (hi - lo));

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        WIDTH / 2.0,
        esc(title)
    ));
    // frame and horizontal guides with y tick labels
    out.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\"/>\n"
    ));
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = ypos(v);
        if k > 0 && k < 4 {
            out.push_str(&format!(
                "<line x1=\"{MARGIN_L}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
                 stroke=\"#ddd\"/>\n",
                MARGIN_L + plot_w
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.3}</text>\n",
            MARGIN_L - 6.0,
            y + 4.0
        ));
    }
    for (i, label) in x_labels.iter().enumerate() {
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            xpos(i),
            MARGIN_T + plot_h + 16.0,
            esc(label)
        ));
    }

    for (si, (name, values)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        // split into segments at gaps so missing cells do not interpolate
        let mut segment: Vec<(f64, f64)> = Vec::new();
        let flush = |seg: &mut Vec<(f64, f64)>, out: &mut String| {
            if seg.len() > 1 {
                let pts: Vec<String> =
                    seg.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                out.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                     stroke-width=\"1.5\"/>\n",
                    pts.join(" ")
                ));
            }
            for (x, y) in seg.iter() {
                out.push_str(&format!(
                    "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"2.5\" fill=\"{color}\"/>\n"
                ));
            }
            seg.clear();
        };
        for (i, v) in values.iter().enumerate() {
            match v {
                Some(v) => segment.push((xpos(i), ypos(*v))),
                None => flush(&mut segment, &mut out),
            }
        }
        flush(&mut segment, &mut out);
        let ly = MARGIN_T + 14.0 + 14.0 * si as f64;
        let lx = MARGIN_L + plot_w - 110.0;
        out.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
             stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\">{}</text>\n",
            lx + 24.0,
            esc(name)
        ));
    }
    out.push_str("</svg>\n");
    out
}
