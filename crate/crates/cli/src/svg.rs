//! Minimal static SVG line chart of `ln mse` against `ln n`, with the
//! target slope overlaid as a dashed reference line anchored at the first
//! data point of each series.

pub struct Series {
    pub label: String,
    /// (ln n, ln mse) points, ascending in the first coordinate.
    pub points: Vec<(f64, f64)>,
    pub target_slope: Option<f64>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub fn slope_chart(series: &[Series], meta_comment: &str) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for (x, y) in &s.points {
            xs.push(*x);
            ys.push(*y);
        }
    }
    if xs.is_empty() {
        return format!("{meta_comment}<svg xmlns=\"http://www.w3.org/2000/svg\"/>\n");
    }
    let (x_min, x_max) = span(&xs);
    let (y_min, y_max) = span(&ys);
    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min).max(1e-12) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min).max(1e-12) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(meta_comment);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" font-size=\"13\">ln n</text>\n",
        x = WIDTH / 2.0 - 15.0,
        y = HEIGHT - MARGIN / 3.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{y}\" font-size=\"13\" transform=\"rotate(-90 14 {y})\">ln mse</text>\n",
        y = HEIGHT / 2.0
    ));

    for (idx, s) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let path: Vec<String> = s
            .points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        for (x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                sx(*x),
                sy(*y)
            ));
        }
        if let (Some(slope), Some((x0, y0))) = (s.target_slope, s.points.first()) {
            let x1 = *xs.last().unwrap_or(x0);
            let x1 = x1.max(*x0);
            let y1 = y0 + slope * (x1 - x0);
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-dasharray=\"6,4\" stroke-width=\"1\"/>\n",
                sx(*x0), sy(*y0), sx(x1), sy(y1)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            xml_escape(&s.label),
            x = MARGIN + 8.0,
            y = MARGIN + 16.0 * (idx as f64 + 1.0),
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn span(values: &[f64]) -> (f64, f64) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        (min - 1.0, max + 1.0)
    } else {
        (min, max)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
