//! Curve emission: CSV with a `series,x,y` header and a small hand-rolled
//! SVG line chart. CSV files round-trip through [`read_curves_csv`]; lines
//! starting with `#` are reproducibility headers and are skipped on read.

use crate::error::{Error, Result};
use crate::evaluation::CurvePoint;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisScale {
    Linear,
    LogX,
    LogLog,
}

/// Writes curve points as CSV. `header_comments` lines are emitted first,
/// prefixed with `# `.
pub fn write_curves_csv(
    points: &[CurvePoint],
    path: &Path,
    header_comments: &[String],
) -> Result<()> {
    if points.is_empty() {
        return Err(Error::param("points", "no curve points to write"));
    }
    let mut file = std::fs::File::create(path)?;
    for comment in header_comments {
        writeln!(file, "# {comment}")?;
    }
    let mut writer = csv::Writer::from_writer(file);
    writer
        .write_record(["series", "x", "y"])
        .map_err(csv_error)?;
    for p in points {
        writer
            .write_record([p.series.as_str(), &format!("{}", p.x), &format!("{}", p.y)])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::InternalInvariant(format!("csv write failed: {e}"))
}

/// Reads back a curve CSV written by [`write_curves_csv`].
pub fn read_curves_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.display().to_string(),
            location: "open".into(),
            message: e.to_string(),
        })?;
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            location: "record".into(),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| format!("line {}", p.line()))
            .unwrap_or_default();
        if record.len() != 3 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                location: line,
                message: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let parse = |field: &str| -> Result<f64> {
            field.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                location: line.clone(),
                message: format!("bad number `{field}`"),
            })
        };
        points.push(CurvePoint {
            series: record[0].to_string(),
            x: parse(&record[1])?,
            y: parse(&record[2])?,
        });
    }
    Ok(points)
}

const SVG_WIDTH: f64 = 640.0;
const SVG_HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

/// Renders the points as a minimal multi-series line chart.
pub fn curves_svg(
    points: &[CurvePoint],
    scale: AxisScale,
    x_label: &str,
    y_label: &str,
    title: &str,
) -> Result<String> {
    if points.is_empty() {
        return Err(Error::param("points", "no curve points to plot"));
    }
    let log_x = matches!(scale, AxisScale::LogX | AxisScale::LogLog);
    let log_y = matches!(scale, AxisScale::LogLog);

    let tx = |v: f64| if log_x { v.max(1e-300).log10() } else { v };
    let ty = |v: f64| if log_y { v.max(1e-300).log10() } else { v };

    let finite: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.y.is_finite())
        .map(|p| (tx(p.x), ty(p.y)))
        .collect();
    if finite.is_empty() {
        return Err(Error::param("points", "no finite points to plot"));
    }
    let (mut x0, mut x1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let (mut y0, mut y1) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    if x0 == x1 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y0 == y1 {
        y0 -= 0.5;
        y1 += 0.5;
    }

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |v: f64| MARGIN_LEFT + (v - x0) / (x1 - x0) * plot_w;
    let py = |v: f64| MARGIN_TOP + plot_h - (v - y0) / (y1 - y0) * plot_h;

    let mut series: Vec<&str> = Vec::new();
    for p in points {
        if !series.contains(&p.series.as_str()) {
            series.push(&p.series);
        }
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" \
         viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        SVG_WIDTH / 2.0,
        escape(title)
    ));

    // Axes with 5 ticks each.
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h
    ));
    for t in 0..=4 {
        let fx = x0 + (x1 - x0) * t as f64 / 4.0;
        let fy = y0 + (y1 - y0) * t as f64 / 4.0;
        let label_x = if log_x { 10f64.powf(fx) } else { fx };
        let label_y = if log_y { 10f64.powf(fy) } else { fy };
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            px(fx),
            MARGIN_TOP + plot_h + 18.0,
            format_tick(label_x)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            py(fy) + 4.0,
            format_tick(label_y)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 12.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label)
    ));

    for (si, name) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut coords: Vec<(f64, f64, f64)> = points
            .iter()
            .filter(|p| p.series == *name && p.y.is_finite())
            .map(|p| (p.x, tx(p.x), ty(p.y)))
            .collect();
        coords.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = coords
            .iter()
            .map(|&(_, x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if path.len() > 1 {
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
        }
        for &(_, x, y) in &coords {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            ));
        }
        // Legend entry.
        let ly = MARGIN_TOP + 14.0 * si as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            MARGIN_LEFT + plot_w - 110.0,
            ly
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            MARGIN_LEFT + plot_w - 96.0,
            ly + 9.0,
            escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders and writes the chart in one step.
pub fn write_curves_svg(
    points: &[CurvePoint],
    path: &Path,
    scale: AxisScale,
    x_label: &str,
    y_label: &str,
    title: &str,
) -> Result<()> {
    let svg = curves_svg(points, scale, x_label, y_label, title)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e5 || a < 1e-3 {
        format!("{v:.1e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
