//! Static SVG line plots of summary rows: one polyline of means per series
//! with a shaded ±1 std band. Output depends only on the input rows.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::table::{parse_rows, CsvRow, RowKind};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

struct Series {
    name: String,
    /// `(x, mean, std)` sorted by x.
    points: Vec<(f64, f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn axis_label(variable: &str) -> String {
    match variable {
        "p_max_dbm" => "Maximum transmit power (dBm)".into(),
        "num_users" => "Number of users K".into(),
        other => escape(other),
    }
}

fn collect(rows: &[CsvRow]) -> Result<(String, Vec<Series>)> {
    let mut variable: Option<&str> = None;
    let mut series: Vec<Series> = Vec::new();
    for row in rows.iter().filter(|r| r.kind == RowKind::Summary) {
        let Some(mean) = row.sum_secrecy else { continue };
        match variable {
            None => variable = Some(&row.variable),
            Some(v) if v != row.variable => {
                return Err(Error::invalid(format!("summary rows mix sweep variables {v:?} and {:?}", row.variable)))
            }
            Some(_) => {}
        }
        let std = row.std_sum_secrecy.unwrap_or(0.0);
        match series.iter_mut().find(|s| s.name == row.series) {
            Some(s) => s.points.push((row.value, mean, std)),
            None => series.push(Series {
                name: row.series.clone(),
                points: vec![(row.value, mean, std)],
            }),
        }
    }
    let Some(variable) = variable else {
        return Err(Error::invalid("no summary data to plot"));
    };
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok((variable.to_string(), series))
}

/// Round a positive span up to 1, 2 or 5 times a power of ten.
fn nice_ceiling(x: f64) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    let scale = 10f64.powf(x.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * scale).find(|&v| v >= x * (1.0 - 1e-12)).unwrap_or(10.0 * scale)
}

/// Render summary rows as an SVG document.
pub fn render_svg(rows: &[CsvRow]) -> Result<String> {
    let (variable, series) = collect(rows)?;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let (x_lo, x_hi) = if x_max > x_min { (x_min, x_max) } else { (x_min - 1.0, x_max + 1.0) };
    let y_top = series.iter().flat_map(|s| s.points.iter().map(|p| p.1 + p.2)).fold(0.0, f64::max);
    let y_hi = nice_ceiling(y_top);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + plot_h - y.clamp(0.0, y_hi) / y_hi * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    let mut ticks: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in ticks {
        let _ = writeln!(
            w,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"#,
            px(x),
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            x
        );
    }
    for i in 0..=5 {
        let y = y_hi * f64::from(i) / 5.0;
        let _ = writeln!(
            w,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="#dddddd"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5}</text>"##,
            LEFT,
            py(y),
            LEFT + plot_w,
            LEFT - 8.0,
            py(y) + 4.0,
            format_tick(y)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        axis_label(&variable)
    );
    let _ = writeln!(
        w,
        r#"<text transform="translate(20 {:.2}) rotate(-90)" text-anchor="middle">Average sum secrecy rate (bits/s/Hz)</text>"#,
        TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = s.points.iter().map(|&(x, m, sd)| format!("{:.2},{:.2}", px(x), py(m + sd)));
        let lower = s.points.iter().rev().map(|&(x, m, sd)| format!("{:.2},{:.2}", px(x), py(m - sd)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            w,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = s.points.iter().map(|&(x, m, _)| format!("{:.2},{:.2}", px(x), py(m))).collect();
        let _ = writeln!(
            w,
            r#"<polyline class="series" data-series="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(&s.name),
            line.join(" ")
        );
        for &(x, m, _) in &s.points {
            let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(m));
        }
        let ly = TOP + 15.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(y: f64) -> String {
    let s = format!("{y:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Read a results CSV and write its plot to `svg_path`. Nothing is written
/// when the CSV is malformed or has no summary data.
pub fn emit_plot(csv_path: &Path, svg_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)
        .map_err(|e| Error::from(e).context(format!("reading {}", csv_path.display())))?;
    let rows = parse_rows(&text).map_err(|e| e.context(format!("parsing {}", csv_path.display())))?;
    let svg = render_svg(&rows)?;
    std::fs::write(svg_path, svg).map_err(|e| Error::from(e).context(format!("writing {}", svg_path.display())))
}

#[cfg(test)]
mod tests {
    use super::super::table::{to_csv_string, RunStatus};
    use super::*;

    fn summary(series: &str, value: f64, mean: f64) -> CsvRow {
        CsvRow {
            kind: RowKind::Summary,
            variable: "p_max_dbm".into(),
            value,
            series: series.into(),
            realization: None,
            seed: None,
            status: RunStatus::Ok,
            sum_secrecy: Some(mean),
            std_sum_secrecy: Some(0.1 * mean),
            count: Some(10),
            outer_iterations: None,
            per_user_secrecy: vec![],
        }
    }

    fn grid() -> Vec<CsvRow> {
        let mut rows = Vec::new();
        for s in ["proposed", "baseline1", "baseline2"] {
            for (i, v) in [0.0, 10.0, 20.0, 30.0, 40.0].into_iter().enumerate() {
                rows.push(summary(s, v, 0.5 * i as f64));
            }
        }
        rows
    }

    #[test]
    fn one_polyline_per_series() {
        let svg = render_svg(&grid()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("class=\"band\"").count(), 3);
        assert!(svg.contains("data-series=\"baseline2\""));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn rendering_is_deterministic() {
        assert_eq!(render_svg(&grid()).unwrap(), render_svg(&grid()).unwrap());
    }

    #[test]
    fn empty_data_is_an_error_and_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("empty.csv");
        let svg = dir.path().join("empty.svg");
        std::fs::write(&csv, to_csv_string(&[]).unwrap()).unwrap();
        assert!(emit_plot(&csv, &svg).is_err());
        assert!(!svg.exists());
    }

    #[test]
    fn malformed_csv_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("bad.csv");
        let svg = dir.path().join("bad.svg");
        let text = to_csv_string(&grid()).unwrap().replacen("summary", "sumary", 2);
        std::fs::write(&csv, text).unwrap();
        let err = emit_plot(&csv, &svg).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(!svg.exists());
    }

    #[test]
    fn series_names_are_escaped() {
        let rows = vec![summary("a<b>&\"c\"", 1.0, 1.0)];
        let svg = render_svg(&rows).unwrap();
        assert!(svg.contains("a&lt;b&gt;&amp;&quot;c&quot;"));
    }

    #[test]
    fn nice_ceiling_rounds_up() {
        assert_eq!(nice_ceiling(0.0), 1.0);
        assert_eq!(nice_ceiling(3.2), 5.0);
        assert_eq!(nice_ceiling(0.011), 0.02);
        assert_eq!(nice_ceiling(10.0), 10.0);
    }
}
