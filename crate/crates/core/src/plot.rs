//! Static SVG figures and their CSV companions.

use std::fmt::Write as _;

use crate::pipeline::ValidationOutput;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

/// Floor applied to p-values shown in figure titles.
pub const PLOT_P_FLOOR: f64 = 0.0001;

/// Title in the form `name: χ²(df)=chi2, p <p` with chi2 rounded to 2 and p to
/// 4 decimals; a p that rounds to zero is shown as 0.0001.
pub fn fit_title(name: &str, chi2: f64, df: usize, p: f64) -> String {
    let chi2 = (chi2 * 100.0).round() / 100.0;
    let mut p = (p * 10_000.0).round() / 10_000.0;
    if p == 0.0 {
        p = PLOT_P_FLOOR;
    }
    let prefix = if name.is_empty() {
        String::new()
    } else {
        format!("{name}: ")
    };
    format!("{prefix}\u{3c7}\u{b2}({df})={chi2}, p <{p}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, svg: &mut String, xlabel: &str, ylabel: &str, title: &str) {
        let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            svg,
            r##"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="#000"/>"##,
            r - l,
            b - t
        );
        for i in 0..=5 {
            let xv = self.x0 + (self.x1 - self.x0) * i as f64 / 5.0;
            let yv = self.y0 + (self.y1 - self.y0) * i as f64 / 5.0;
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.1}" y1="{b}" x2="{px:.1}" y2="{:.1}" stroke="#000"/><text x="{px:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"##,
                b + 5.0,
                b + 18.0,
                trim_num(xv)
            );
            let _ = writeln!(
                svg,
                r##"<line x1="{:.1}" y1="{py:.1}" x2="{l}" y2="{py:.1}" stroke="#000"/><text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">{}</text>"##,
                l - 5.0,
                l - 8.0,
                py + 4.0,
                trim_num(yv)
            );
        }
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"##,
            (l + r) / 2.0,
            HEIGHT - 15.0,
            escape(xlabel)
        );
        let _ = writeln!(
            svg,
            r##"<text x="18" y="{:.1}" font-size="12" font-weight="bold" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"##,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="30" font-size="14" text-anchor="middle">{}</text>"##,
            WIDTH / 2.0,
            escape(title)
        );
    }
}

fn trim_num(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

fn header() -> String {
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">
<rect width="100%" height="100%" fill="#fff"/>
"##
    )
}

fn polyline(svg: &mut String, pts: &[(f64, f64)], stroke: &str, dash: bool) {
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{stroke}"{dash}/>"#,
        coords.join(" ")
    );
}

/// Predicted versus observed mean correlation by group size, with SD bars.
pub fn validation_svg(out: &ValidationOutput, name: &str) -> String {
    let s = &out.series;
    let last = s.last().map_or(1.0, |e| e.group_size as f64);
    let prev = if s.len() >= 2 {
        s[s.len() - 2].group_size as f64
    } else {
        0.0
    };
    let low = s.iter().map(|e| e.r_mean - e.r_sd).fold(f64::INFINITY, f64::min);
    let frame = Frame {
        x0: 0.0,
        x1: (2.0 * last - prev).max(last + 1.0),
        y0: (low * 1.05).min(0.0),
        y1: 1.0,
    };
    let mut svg = header();
    frame.axes(
        &mut svg,
        "Number of participants per group",
        "r",
        &fit_title(name, out.chi2, out.df, out.p_value),
    );
    let pred: Vec<(f64, f64)> = s
        .iter()
        .map(|e| (frame.px(e.group_size as f64), frame.py(e.predicted)))
        .collect();
    let obs: Vec<(f64, f64)> = s
        .iter()
        .map(|e| (frame.px(e.group_size as f64), frame.py(e.r_mean)))
        .collect();
    polyline(&mut svg, &pred, "#000", false);
    polyline(&mut svg, &obs, "#000", true);
    for ((x, y), e) in pred.iter().zip(s) {
        let _ = writeln!(
            svg,
            r##"<path d="M{:.2},{:.2}l8,8m0,-8l-8,8" stroke="#000"/>"##,
            x - 4.0,
            y - 4.0
        );
        let (top, bot) = (frame.py(e.r_mean + e.r_sd), frame.py(e.r_mean - e.r_sd));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{bot:.2}" stroke="#000"/>"##
        );
    }
    for (x, y) in &obs {
        let _ = writeln!(
            svg,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="none" stroke="#000"/>"##
        );
    }
    let lx = WIDTH - RIGHT - 220.0;
    let ly = HEIGHT - BOTTOM - 50.0;
    let _ = writeln!(
        svg,
        r##"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="#000"/><text x="{}" y="{}" font-size="12">predicted r</text>"##,
        lx + 30.0,
        lx + 38.0,
        ly + 4.0
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="#000" stroke-dasharray="6 4"/><text x="{}" y="{}" font-size="12">mean observed r (±SD)</text>"##,
        ly + 20.0,
        lx + 30.0,
        ly + 20.0,
        lx + 38.0,
        ly + 24.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// `group_size,r_mean,r_sd,predicted` rows of a validation run.
pub fn validation_csv(out: &ValidationOutput) -> String {
    let mut csv = String::from("group_size,r_mean,r_sd,predicted\n");
    for e in &out.series {
        let _ = writeln!(csv, "{},{},{},{}", e.group_size, e.r_mean, e.r_sd, e.predicted);
    }
    csv
}

/// A labelled polyline for [`line_chart_svg`].
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Simple multi-line chart with a fixed y-range.
pub fn line_chart_svg(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    y_range: (f64, f64),
    series: &[Series<'_>],
) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    let (x0, x1) = if x0.is_finite() && x1 > x0 {
        (x0, x1)
    } else {
        (0.0, 1.0)
    };
    let frame = Frame {
        x0,
        x1,
        y0: y_range.0,
        y1: y_range.1,
    };
    let mut svg = header();
    frame.axes(&mut svg, xlabel, ylabel, title);
    let palette = ["#000", "#c00", "#06c", "#090", "#a0a", "#c60"];
    for (i, s) in series.iter().enumerate() {
        let color = palette[i % palette.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .map(|&(x, y)| (frame.px(x), frame.py(y)))
            .collect();
        polyline(&mut svg, &pts, color, s.dashed);
        let ly = TOP + 15.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="{ly:.1}" font-size="11" fill="{color}">{}</text>"##,
            LEFT + 10.0,
            escape(s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn title_rounding_and_floor() {
        assert_eq!(
            fit_title("English", 10.3462, 11, 0.49963),
            "English: \u{3c7}\u{b2}(11)=10.35, p <0.4996"
        );
        assert!(fit_title("", 80.0, 12, 1e-9).ends_with("p <0.0001"));
    }
}
