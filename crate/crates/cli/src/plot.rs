//! Static SVG plots of small numeric tables.

use std::fmt::Write as _;

use anyhow::{bail, Result};

use crate::table::Table;

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub column: String,
    pub log: bool,
}

impl Axis {
    pub fn linear(column: &str) -> Self {
        Axis {
            column: column.into(),
            log: false,
        }
    }

    pub fn log(column: &str) -> Self {
        Axis {
            column: column.into(),
            log: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlotKind {
    /// One polyline per `y` column, or per distinct value of `group`.
    Line {
        x: Axis,
        y: Axis,
        group: Option<String>,
    },
    /// Points colored by a third column.
    Scatter { x: Axis, y: Axis, color: String },
    /// Long-format table; one cell per `(x, y)` pair, distinct values of
    /// each placed on an even grid.
    Heatmap { x: String, y: String, value: Axis },
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Perceptually ordered dark-blue to yellow ramp, `t` in `[0, 1]`.
pub fn colormap(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let s = t * (STOPS.len() - 1) as f64;
    let i = (s.floor() as usize).min(STOPS.len() - 2);
    let f = s - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |x: f64, y: f64| (x + f * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    from: f64,
    to: f64,
}

impl Scale {
    fn new(values: &[f64], log: bool, from: f64, to: f64) -> Scale {
        let t: Vec<f64> = values.iter().map(|&v| if log { v.log10() } else { v }).collect();
        let mut lo = t.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Scale { lo, hi, log, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        self.from + (t - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            let stride = ((b - a) / 8 + 1).max(1);
            (a..=b)
                .step_by(stride as usize)
                .map(|k| (10f64.powi(k), format!("1e{k}")))
                .collect()
        } else {
            let span = self.hi - self.lo;
            let raw = span / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
            let mut out = Vec::new();
            let mut v = (self.lo / step).ceil() * step;
            while v <= self.hi + 1e-9 * step {
                out.push((v, format_tick(v)));
                v += step;
            }
            out
        }
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn checked(table: &Table, axis: &Axis) -> Result<Vec<f64>> {
    let col = table.column(&axis.column)?;
    for (i, v) in col.iter().enumerate() {
        if !v.is_finite() {
            bail!("row {}: column {} is not finite ({v})", i + 1, axis.column);
        }
        if axis.log && *v <= 0.0 {
            bail!(
                "row {}: column {} has value {v}, which cannot be placed on a logarithmic axis",
                i + 1,
                axis.column
            );
        }
    }
    Ok(col)
}

fn frame(svg: &mut String, xs: &Scale, ys: &Scale, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        svg,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for (v, label) in xs.ticks() {
        let px = xs.map(v);
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            y0 + 20.0,
            escape(&label)
        );
    }
    for (v, label) in ys.ticks() {
        let py = ys.map(v);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
        0.5 * (x0 + x1),
        HEIGHT - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1),
        escape(ylabel)
    );
}

fn color_bar(svg: &mut String, lo: f64, hi: f64, label: &str) {
    let x = WIDTH - RIGHT + 20.0;
    let (top, bottom) = (TOP, HEIGHT - BOTTOM);
    let steps = 32;
    let h = (bottom - top) / steps as f64;
    for k in 0..steps {
        let t = 1.0 - (k as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{x}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            top + k as f64 * h,
            h + 0.5,
            colormap(t)
        );
    }
    for (v, y) in [(hi, top + 4.0), (lo, bottom)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y:.2}" font-size="11">{}</text>"#,
            x + 20.0,
            escape(&format_tick(v))
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        x + 8.0,
        top - 10.0,
        escape(label)
    );
}

/// Renders `table` as a self-contained SVG document. `provenance` is
/// embedded verbatim in a leading comment.
pub fn emit_svg(table: &Table, kind: &PlotKind, provenance: &str) -> Result<String> {
    if table.rows.is_empty() {
        bail!("cannot plot an empty table");
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, "<!--\n{}\n-->", provenance.replace("--", "- -"));
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    match kind {
        PlotKind::Line { x, y, group } => {
            let (xv, yv) = (checked(table, x)?, checked(table, y)?);
            let groups: Vec<f64> = match group {
                Some(g) => table.column(g)?,
                None => vec![0.0; xv.len()],
            };
            let xs = Scale::new(&xv, x.log, LEFT, WIDTH - RIGHT);
            let ys = Scale::new(&yv, y.log, HEIGHT - BOTTOM, TOP);
            frame(&mut svg, &xs, &ys, &x.column, &y.column);
            let mut keys: Vec<f64> = groups.clone();
            keys.sort_by(f64::total_cmp);
            keys.dedup();
            for (k, key) in keys.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                let mut pts: Vec<(f64, f64)> = (0..xv.len()).filter(|&i| groups[i] == *key).map(|i| (xv[i], yv[i])).collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let path: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.2},{:.2}", xs.map(a), ys.map(b))).collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                    path.join(" ")
                );
                for &(a, b) in &pts {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                        xs.map(a),
                        ys.map(b)
                    );
                }
                if let Some(g) = group {
                    let _ = writeln!(
                        svg,
                        r#"<text x="{}" y="{}" font-size="12" fill="{color}">{} = {}</text>"#,
                        WIDTH - RIGHT + 10.0,
                        TOP + 16.0 * (k + 1) as f64,
                        escape(g),
                        escape(&format_tick(*key))
                    );
                }
            }
        }
        PlotKind::Scatter { x, y, color } => {
            let (xv, yv) = (checked(table, x)?, checked(table, y)?);
            let cv = checked(table, &Axis::linear(color))?;
            let xs = Scale::new(&xv, x.log, LEFT, WIDTH - RIGHT);
            let ys = Scale::new(&yv, y.log, HEIGHT - BOTTOM, TOP);
            frame(&mut svg, &xs, &ys, &x.column, &y.column);
            let lo = cv.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = cv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            for i in 0..xv.len() {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                    xs.map(xv[i]),
                    ys.map(yv[i]),
                    colormap((cv[i] - lo) / span)
                );
            }
            color_bar(&mut svg, lo, hi, color);
        }
        PlotKind::Heatmap { x, y, value } => {
            let xv = table.column(x)?;
            let yv = table.column(y)?;
            let vv = checked(table, value)?;
            let distinct = |v: &[f64]| {
                let mut d = v.to_vec();
                d.sort_by(f64::total_cmp);
                d.dedup();
                d
            };
            let (xk, yk) = (distinct(&xv), distinct(&yv));
            let t: Vec<f64> = vv.iter().map(|&v| if value.log { v.log10() } else { v }).collect();
            let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            let cw = (WIDTH - RIGHT - LEFT) / xk.len() as f64;
            let ch = (HEIGHT - BOTTOM - TOP) / yk.len() as f64;
            for i in 0..xv.len() {
                let cx = xk.iter().position(|&v| v == xv[i]).expect("distinct value") as f64;
                let cy = yk.iter().position(|&v| v == yv[i]).expect("distinct value") as f64;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    LEFT + cx * cw,
                    HEIGHT - BOTTOM - (cy + 1.0) * ch,
                    cw + 0.5,
                    ch + 0.5,
                    colormap((t[i] - lo) / span)
                );
            }
            let stride_x = xk.len().div_ceil(12).max(1);
            for (k, v) in xk.iter().enumerate().step_by(stride_x) {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
                    LEFT + (k as f64 + 0.5) * cw,
                    HEIGHT - BOTTOM + 16.0,
                    escape(&format_tick(*v))
                );
            }
            let stride_y = yk.len().div_ceil(14).max(1);
            for (k, v) in yk.iter().enumerate().step_by(stride_y) {
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                    LEFT - 6.0,
                    HEIGHT - BOTTOM - (k as f64 + 0.5) * ch + 4.0,
                    escape(&format_tick(*v))
                );
            }
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
                0.5 * (LEFT + WIDTH - RIGHT),
                HEIGHT - 15.0,
                escape(x)
            );
            let _ = writeln!(
                svg,
                r#"<text x="20" y="{0}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
                0.5 * (TOP + HEIGHT - BOTTOM),
                escape(y)
            );
            let label = if value.log {
                format!("log10 {}", value.column)
            } else {
                value.column.clone()
            };
            color_bar(&mut svg, lo, hi, &label);
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Parses `x:log` / `x` axis specifications used on the command line.
pub fn parse_axis(spec: &str) -> Result<Axis> {
    let (name, scale) = spec.split_once(':').unwrap_or((spec, "linear"));
    let log = match scale {
        "log" => true,
        "linear" | "lin" => false,
        other => bail!("unknown axis scale {other:?} (use linear or log)"),
    };
    if name.is_empty() {
        bail!("axis needs a column name");
    }
    Ok(Axis {
        column: name.into(),
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(cols: &[&str], rows: Vec<Vec<f64>>) -> Table {
        Table::new(cols.iter().map(|s| s.to_string()).collect(), rows).unwrap()
    }

    #[test]
    fn two_point_line_is_well_formed() {
        let t = table(&["N_L", "loss"], vec![vec![0.0, 1e-2], vec![1.0, 1e-6]]);
        let kind = PlotKind::Line {
            x: Axis::linear("N_L"),
            y: Axis::log("loss"),
            group: None,
        };
        let svg = emit_svg(&t, &kind, "seed = 1").unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("1e-6") && svg.contains("seed = 1"));
    }

    #[test]
    fn zero_on_log_axis_names_the_row() {
        let t = table(&["N_L", "loss"], vec![vec![0.0, 1e-2], vec![1.0, 0.0]]);
        let kind = PlotKind::Line {
            x: Axis::linear("N_L"),
            y: Axis::log("loss"),
            group: None,
        };
        let err = emit_svg(&t, &kind, "").unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
    }

    #[test]
    fn empty_table_is_rejected() {
        let t = table(&["a", "b"], vec![]);
        let kind = PlotKind::Line {
            x: Axis::linear("a"),
            y: Axis::linear("b"),
            group: None,
        };
        assert!(emit_svg(&t, &kind, "").is_err());
    }

    #[test]
    fn scatter_spans_the_colormap() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, (i * i) as f64, i as f64 / 7.0]).collect();
        let t = table(&["x", "y", "c"], rows);
        let kind = PlotKind::Scatter {
            x: Axis::linear("x"),
            y: Axis::linear("y"),
            color: "c".into(),
        };
        let svg = emit_svg(&t, &kind, "").unwrap();
        assert_eq!(svg.matches("<circle").count(), 100);
        assert!(svg.contains(&format!(r#"fill="{}""#, colormap(0.0))));
        assert!(svg.contains(&format!(r#"fill="{}""#, colormap(1.0))));
    }

    #[test]
    fn heatmap_has_one_cell_per_row() {
        let mut rows = Vec::new();
        for t in [0.0, 10.0, 100.0] {
            for nl in 0..4 {
                rows.push(vec![nl as f64, t, 10f64.powi(-nl - 1)]);
            }
        }
        let t = table(&["N_L", "time", "loss"], rows);
        let kind = PlotKind::Heatmap {
            x: "N_L".into(),
            y: "time".into(),
            value: Axis::log("loss"),
        };
        let svg = emit_svg(&t, &kind, "").unwrap();
        assert_eq!(svg.matches(r#"width="113.00""#).count(), 12);
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), "#440154");
        assert_eq!(colormap(1.0), "#fde725");
        assert_eq!(colormap(f64::NAN), colormap(0.0));
    }
}
