//! Minimal SVG line and scatter plots of the CSV files written by the
//! scenario runner.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub log_y: bool,
    /// Lower clamp of the log axis.
    pub log_floor: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            title: String::new(),
            log_y: false,
            log_floor: 1e-4,
            width: 720.0,
            height: 480.0,
        }
    }
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Non-population columns of a trajectory CSV.
const TRAJECTORY_EXTRAS: &[&str] = &["purity", "n_phot", "N_e", "N_t"];

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse_csv(text: &str) -> Result<Table> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "CSV line {} has {} fields, header has {}",
                i + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

fn number(s: &str, line: usize, column: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("CSV line {line}, column `{column}`: not a number: {s:?}")))
}

/// Renders a trajectory, ladder or counting CSV produced by this crate.
pub fn emit_plot(csv: &str, style: &PlotStyle) -> Result<String> {
    let table = parse_csv(csv)?;
    match table.header.first().map(String::as_str) {
        Some("time_fs") => series_plot(&table, style, "time (fs)", "population", TRAJECTORY_EXTRAS),
        Some("c") => series_plot(&table, style, "c = N_x / N", "value", &["n_x"]),
        Some("n_exc") if table.header.get(1).map(String::as_str) == Some("shift_eV") => {
            ladder_plot(&table, style)
        }
        _ => Err(Error::Parse(format!(
            "unrecognised CSV header: {}",
            table.header.join(",")
        ))),
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
    width: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = if self.x1 > self.x0 { self.x1 - self.x0 } else { 1.0 };
        MARGIN_LEFT + (x - self.x0) / span * (self.width - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let (y, y0, y1) = if self.log_y {
            (y.log10(), self.y0.log10(), self.y1.log10())
        } else {
            (y, self.y0, self.y1)
        };
        let span = if y1 > y0 { y1 - y0 } else { 1.0 };
        self.height - MARGIN_BOTTOM - (y - y0) / span * (self.height - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open_svg(out: &mut String, style: &PlotStyle) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = style.width,
        h = style.height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !style.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            style.width / 2.0,
            escape(&style.title)
        );
    }
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (left, right) = (MARGIN_LEFT, f.width - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, f.height - MARGIN_BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for i in 0..=5 {
        let x = f.x0 + (f.x1 - f.x0) * i as f64 / 5.0;
        let px = f.px(x);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.1}" y1="{bottom}" x2="{px:.1}" y2="{}" stroke="black"/><text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            tick(x)
        );
    }
    let y_ticks: Vec<f64> = if f.log_y {
        let lo = f.y0.log10().floor() as i32;
        let hi = f.y1.log10().ceil() as i32;
        (lo..=hi).map(|e| 10f64.powi(e)).filter(|&v| v >= f.y0 && v <= f.y1).collect()
    } else {
        (0..=5).map(|i| f.y0 + (f.y1 - f.y0) * i as f64 / 5.0).collect()
    };
    for y in y_ticks {
        let py = f.py(y);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py:.1}" x2="{left}" y2="{py:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            py + 4.0,
            tick(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        f.height - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(out: &mut String, f: &Frame, entries: &[(String, &str)]) {
    let x = f.width - MARGIN_RIGHT + 12.0;
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x + 18.0,
            x + 24.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// One polyline per numeric column against the first column. Columns in
/// `skip` and columns that are identically zero (or empty) are left out.
fn series_plot(
    table: &Table,
    style: &PlotStyle,
    x_label: &str,
    y_label: &str,
    skip: &[&str],
) -> Result<String> {
    let mut xs = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        xs.push(number(&row[0], i + 2, &table.header[0])?);
    }
    let mut series: Vec<(String, Vec<Option<f64>>)> = Vec::new();
    for (c, name) in table.header.iter().enumerate().skip(1) {
        if skip.contains(&name.as_str()) {
            continue;
        }
        let mut values = Vec::with_capacity(table.rows.len());
        for (i, row) in table.rows.iter().enumerate() {
            values.push(if row[c].is_empty() {
                None
            } else {
                Some(number(&row[c], i + 2, name)?)
            });
        }
        if values.iter().flatten().any(|v| v.abs() > 1e-12) {
            series.push((name.clone(), values));
        }
    }

    let finite = series.iter().flat_map(|(_, v)| v.iter().flatten().copied());
    let (mut y0, mut y1) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if style.log_y {
        y0 = y0.max(style.log_floor);
        y1 = y1.max(y0 * 10.0);
    } else if y0.is_infinite() {
        (y0, y1) = (0.0, 1.0);
    } else {
        y0 = y0.min(0.0);
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
    }
    let frame = Frame {
        x0: xs.first().copied().unwrap_or(0.0),
        x1: xs.last().copied().unwrap_or(1.0),
        y0,
        y1,
        log_y: style.log_y,
        width: style.width,
        height: style.height,
    };

    let mut out = String::new();
    open_svg(&mut out, style);
    axes(&mut out, &frame, x_label, y_label);
    let mut entries = Vec::new();
    for (k, (name, values)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(values)
            .filter_map(|(&x, v)| v.map(|v| (x, v)))
            .map(|(x, v)| {
                let v = if style.log_y { v.max(style.log_floor) } else { v };
                format!("{:.2},{:.2}", frame.px(x), frame.py(v))
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        entries.push((name.clone(), color));
    }
    legend(&mut out, &frame, &entries);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Excitation number against relative shift, one marker per ladder entry
/// labelled with its multiplicity and coloured by group.
fn ladder_plot(table: &Table, style: &PlotStyle) -> Result<String> {
    let col = |name: &str| {
        table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("ladder CSV lacks column `{name}`")))
    };
    let (c_n, c_shift, c_mult, c_group) = (col("n_exc")?, col("shift_eV")?, col("multiplicity")?, col("group")?);
    let mut points = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        points.push((
            number(&row[c_n], i + 2, "n_exc")?,
            number(&row[c_shift], i + 2, "shift_eV")?,
            row[c_mult].clone(),
            row[c_group].clone(),
        ));
    }
    let (mut x0, mut x1) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if !x0.is_finite() {
        (x0, x1) = (-1.0, 1.0);
    }
    let pad = ((x1 - x0) * 0.1).max(0.1);
    let y1 = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let frame = Frame {
        x0: x0 - pad,
        x1: x1 + pad,
        y0: -0.5,
        y1: y1 + 0.5,
        log_y: false,
        width: style.width,
        height: style.height,
    };
    let mut groups: Vec<String> = points.iter().map(|p| p.3.clone()).collect();
    groups.sort();
    groups.dedup();

    let mut out = String::new();
    open_svg(&mut out, style);
    axes(&mut out, &frame, "relative shift (eV)", "N_exc");
    for (n, shift, mult, group) in &points {
        let k = groups.iter().position(|g| g == group).unwrap_or(0);
        let color = PALETTE[k % PALETTE.len()];
        let (x, y) = (frame.px(*shift), frame.py(*n));
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="3"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
            x - 8.0,
            x + 8.0,
            y - 5.0,
            escape(mult)
        );
    }
    let entries: Vec<(String, &str)> = groups
        .iter()
        .enumerate()
        .map(|(k, g)| (g.clone(), PALETTE[k % PALETTE.len()]))
        .collect();
    legend(&mut out, &frame, &entries);
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_polylines() {
        let csv = "time_fs,N0_dark,N1_bright,N2_dark,purity,n_phot,N_e,N_t\n0,0,1,0,1,0,1,0\n5,0.5,0.5,0,0.6,0.1,0.4,0\n";
        let svg = emit_plot(csv, &PlotStyle::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("N1_bright"));
        assert!(!svg.contains("N2_dark"));
        assert!(!svg.contains("purity"));
    }

    #[test]
    fn log_axis_clamps() {
        let csv = "time_fs,a\n0,1\n1,0\n";
        let style = PlotStyle {
            log_y: true,
            ..Default::default()
        };
        let svg = emit_plot(csv, &style).unwrap();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn ladder_markers() {
        let csv = "n_exc,shift_eV,multiplicity,group,S,photon_frac,t_frac\n0,0,1,ground,4,0,0\n1,-0.5,1,multi_polariton,4,0.5,0\n1,0,7,dark,3,0,0\n1,0.5,1,multi_polariton,4,0.5,0\n";
        let svg = emit_plot(csv, &PlotStyle::default()).unwrap();
        assert!(svg.contains(">7</text>"));
        assert!(svg.contains(">dark</text>"));
    }

    #[test]
    fn malformed_input() {
        assert!(emit_plot("", &PlotStyle::default()).is_err());
        assert!(emit_plot("time_fs,a\n0,x\n", &PlotStyle::default()).is_err());
        assert!(emit_plot("time_fs,a\n0\n", &PlotStyle::default()).is_err());
        assert!(emit_plot("foo,bar\n1,2\n", &PlotStyle::default()).is_err());
    }
}
