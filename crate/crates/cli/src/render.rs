//! Minimal SVG line plots of trajectory CSVs.

use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const MAX_POINTS: usize = 2000;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
}

/// The x column and every `p1_*` / `p2_*` column of a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub x_label: String,
    pub x: Vec<f64>,
    pub lines: Vec<(String, Vec<f64>)>,
}

pub fn read_series(path: &Path) -> Result<Series, RenderError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let Some(x_label) = header.get(0).map(str::to_string) else {
        return Err(RenderError::Format("empty header".into()));
    };
    let cols: Vec<usize> = (1..header.len())
        .filter(|&c| header[c].starts_with("p1_") || header[c].starts_with("p2_"))
        .collect();
    if cols.is_empty() {
        return Err(RenderError::Format("no p1_*/p2_* columns".into()));
    }
    let mut x = Vec::new();
    let mut lines: Vec<(String, Vec<f64>)> = cols.iter().map(|&c| (header[c].to_string(), Vec::new())).collect();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64, RenderError> {
            rec.get(c)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| RenderError::Format(format!("row {}: column {c} is not a number", row + 1)))
        };
        x.push(num(0)?);
        for (line, &c) in lines.iter_mut().zip(&cols) {
            line.1.push(num(c)?);
        }
    }
    if x.is_empty() {
        return Err(RenderError::Format("no data rows".into()));
    }
    Ok(Series { x_label, x, lines })
}

pub fn to_svg(s: &Series, title: &str) -> String {
    let stride = s.x.len().div_ceil(MAX_POINTS).max(1);
    let mut idx: Vec<usize> = (0..s.x.len()).step_by(stride).collect();
    if idx.last() != Some(&(s.x.len() - 1)) {
        idx.push(s.x.len() - 1);
    }
    let (x0, x1) = (s.x[0], s.x[s.x.len() - 1]);
    let span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let px = |x: f64| MARGIN + (x - x0) / span * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y.clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for tick in 0..=4 {
        let y = tick as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#ddd"/><text x="{2:.1}" y="{3:.1}" text-anchor="end">{y}</text>"##,
            py(y),
            WIDTH - MARGIN,
            MARGIN - 6.0,
            py(y) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{x}</text>"#,
            px(x),
            HEIGHT - MARGIN + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(&s.x_label)
    );
    for (k, (name, ys)) in s.lines.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = idx
            .iter()
            .map(|&i| format!("{:.2},{:.2}", px(s.x[i]), py(ys[i])))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="{color}" stroke-width="2"/><text x="{3:.1}" y="{4:.1}">{5}</text>"#,
            WIDTH - MARGIN - 70.0,
            ly,
            WIDTH - MARGIN - 50.0,
            WIDTH - MARGIN - 44.0,
            ly + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_series_are_thinned_but_keep_endpoints() {
        let n = 10_001;
        let s = Series {
            x_label: "t".into(),
            x: (0..n).map(|i| i as f64).collect(),
            lines: vec![("p1_1".into(), vec![0.5; n])],
        };
        let svg = to_svg(&s, "a < b");
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let count = points.split(' ').count();
        assert!(count <= MAX_POINTS + 1, "{count}");
        assert!(points.ends_with(&format!("{:.2},{:.2}", WIDTH - MARGIN, HEIGHT / 2.0)));
        assert!(svg.contains("a &lt; b"));
    }
}
