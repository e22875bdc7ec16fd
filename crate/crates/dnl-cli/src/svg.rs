//! Minimal SVG line charts: axes, optional log scales, tick labels, and a
//! legend. A chart is a pure function of the series data, so plots can be
//! regenerated offline from the CSVs they accompany.

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn fmt_coord(x: f64) -> String {
    format!("{x:.2}")
}

fn fmt_tick(value: f64) -> String {
    if value != 0.0 && (value.abs() >= 1e4 || value.abs() < 1e-3) {
        format!("{value:.1e}")
    } else {
        let s = format!("{value:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct AxisScale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl AxisScale {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> AxisScale {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            let t = if log { v.max(1e-300).log10() } else { v };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if !lo.is_finite() || !hi.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        AxisScale {
            lo: lo - pad,
            hi: hi + pad,
            log,
        }
    }

    fn unit(&self, v: f64) -> f64 {
        let t = if self.log { v.max(1e-300).log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        let mut out = Vec::new();
        if self.log {
            let first = self.lo.ceil() as i64;
            let last = self.hi.floor() as i64;
            if last >= first && (last - first) <= 12 {
                for e in first..=last {
                    out.push((10f64.powi(e as i32), format!("1e{e}")));
                }
                return out;
            }
        }
        for i in 0..=5 {
            let t = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
            let v = if self.log { 10f64.powf(t) } else { t };
            out.push((v, fmt_tick(v)));
        }
        out
    }
}

pub fn line_chart(chart: &Chart) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let xs = AxisScale::new(
        chart.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        chart.log_x,
    );
    let ys = AxisScale::new(
        chart.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
        chart.log_y,
    );
    let px = |v: f64| MARGIN_LEFT + xs.unit(v) * plot_w;
    let py = |v: f64| MARGIN_TOP + (1.0 - ys.unit(v)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">{}</text>\n",
        WIDTH / 2.0,
        chart.title
    ));

    // Grid and ticks.
    for (v, label) in xs.ticks() {
        let x = px(v);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#dddddd\"/>\n",
            fmt_coord(x),
            fmt_coord(MARGIN_TOP),
            fmt_coord(MARGIN_TOP + plot_h)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            fmt_coord(x),
            fmt_coord(MARGIN_TOP + plot_h + 20.0),
            label
        ));
    }
    for (v, label) in ys.ticks() {
        let y = py(v);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"#dddddd\"/>\n",
            fmt_coord(MARGIN_LEFT),
            fmt_coord(MARGIN_LEFT + plot_w),
            fmt_coord(y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            fmt_coord(MARGIN_LEFT - 8.0),
            fmt_coord(y + 4.0),
            label
        ));
    }

    // Axes frame.
    svg.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        fmt_coord(MARGIN_LEFT),
        fmt_coord(MARGIN_TOP),
        fmt_coord(plot_w),
        fmt_coord(plot_h)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        fmt_coord(MARGIN_LEFT + plot_w / 2.0),
        fmt_coord(HEIGHT - 20.0),
        chart.x_label
    ));
    svg.push_str(&format!(
        "<text x=\"22\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 22 {})\">{}</text>\n",
        fmt_coord(MARGIN_TOP + plot_h / 2.0),
        fmt_coord(MARGIN_TOP + plot_h / 2.0),
        chart.y_label
    ));

    // Series.
    for (i, series) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = series
            .points
            .iter()
            .map(|(x, y)| format!("{},{}", fmt_coord(px(*x)), fmt_coord(py(*y))))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            path.join(" ")
        ));
        for (x, y) in &series.points {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>\n",
                fmt_coord(px(*x)),
                fmt_coord(py(*y))
            ));
        }
    }

    // Legend.
    for (i, series) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_TOP + 16.0 + 20.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            fmt_coord(MARGIN_LEFT + plot_w - 170.0),
            fmt_coord(y),
            fmt_coord(MARGIN_LEFT + plot_w - 140.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            fmt_coord(MARGIN_LEFT + plot_w - 132.0),
            fmt_coord(y + 4.0),
            series.name
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Convenience: one-series chart from raw pairs.
pub fn single_series_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    log_x: bool,
    log_y: bool,
    name: &str,
    points: Vec<(f64, f64)>,
) -> String {
    line_chart(&Chart {
        title: title.to_string(),
        x_label: x_label.to_string(),
        y_label: y_label.to_string(),
        log_x,
        log_y,
        series: vec![Series {
            name: name.to_string(),
            points,
        }],
    })
}
