//! Self-contained SVG line charts from CSV tables.
//!
//! A plot spec is a list of `key = value` pairs, one per line or separated
//! by `;`. Keys: `x`, `y` (required), `series`, `ci`, `filter`
//! (`column=value`), `logx`, `logy`, `title`, `xlabel`, `ylabel`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    pub series: Option<String>,
    pub ci: Option<String>,
    pub filter: Option<(String, String)>,
    pub log_x: bool,
    pub log_y: bool,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

fn flag(v: &str) -> Result<bool> {
    match v {
        "" | "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("expected a boolean, got `{v}`"))),
    }
}

impl PlotSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for item in text.split(['\n', ';']) {
            let item = item.split('#').next().unwrap_or("").trim();
            if item.is_empty() {
                continue;
            }
            let (k, v) = item.split_once('=').unwrap_or((item, ""));
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut spec = PlotSpec::default();
        for (k, v) in &kv {
            match k.as_str() {
                "x" => spec.x = v.clone(),
                "y" => spec.y = v.clone(),
                "series" => spec.series = Some(v.clone()),
                "ci" => spec.ci = Some(v.clone()),
                "filter" => {
                    let (c, val) = v
                        .split_once('=')
                        .ok_or_else(|| CliError::Config("filter must read `column=value`".into()))?;
                    spec.filter = Some((c.trim().to_string(), val.trim().to_string()));
                }
                "logx" => spec.log_x = flag(v)?,
                "logy" => spec.log_y = flag(v)?,
                "title" => spec.title = v.clone(),
                "xlabel" => spec.x_label = v.clone(),
                "ylabel" => spec.y_label = v.clone(),
                other => return Err(CliError::Config(format!("unknown plot key `{other}`"))),
            }
        }
        if spec.x.is_empty() || spec.y.is_empty() {
            return Err(CliError::Config("plot spec needs both `x` and `y`".into()));
        }
        if spec.x_label.is_empty() {
            spec.x_label = spec.x.clone();
        }
        if spec.y_label.is_empty() {
            spec.y_label = spec.y.clone();
        }
        Ok(spec)
    }

    /// Inline text, or the contents of a file of that name.
    pub fn load(arg: &str) -> Result<Self> {
        let path = Path::new(arg);
        if !arg.contains('=') && path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            return Self::parse(&text);
        }
        Self::parse(arg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// `(x, y, ci)` sorted by `x`.
    pub points: Vec<(f64, f64, f64)>,
}

/// Series from a CSV file, in order of first appearance.
pub fn read_series(path: &Path, spec: &PlotSpec) -> Result<Vec<Series>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: no column `{name}`", path.display())))
    };
    let xi = col(&spec.x)?;
    let yi = col(&spec.y)?;
    let si = spec.series.as_deref().map(col).transpose()?;
    let ci = spec.ci.as_deref().map(col).transpose()?;
    let fi = spec
        .filter
        .as_ref()
        .map(|(c, v)| col(c).map(|i| (i, v.clone())))
        .transpose()?;

    let mut series: Vec<Series> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        if let Some((i, v)) = &fi {
            if rec.get(*i) != Some(v.as_str()) {
                continue;
            }
        }
        let num = |i: usize| rec.get(i).and_then(|s| s.trim().parse::<f64>().ok());
        let (Some(x), Some(y)) = (num(xi), num(yi)) else {
            continue;
        };
        let e = ci.and_then(num).unwrap_or(0.0);
        let name = si.and_then(|i| rec.get(i)).unwrap_or(&spec.y).to_string();
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((x, y, e)),
            None => series.push(Series {
                name,
                points: vec![(x, y, e)],
            }),
        }
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(series)
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        if hi - lo < 1e-12 {
            let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            lo -= pad;
            hi += pad;
        } else if !log {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, log }
    }

    /// Position in `[0, 1]`, `None` for values a log axis cannot show.
    fn frac(&self, v: f64) -> Option<f64> {
        let t = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        Some((t - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            return (self.lo as i32..=self.hi as i32).map(|k| 10f64.powi(k)).collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-9 * step {
            out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
            t += step;
        }
        out
    }
}

fn label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render(series: &[Series], spec: &PlotSpec) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let xa = Axis::new(all().map(|p| p.0), spec.log_x);
    let ya = Axis::new(all().flat_map(|p| [p.1 - p.2, p.1 + p.2, p.1]), spec.log_y);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| xa.frac(x).map(|f| LEFT + f * pw);
    let py = |y: f64| ya.frac(y).map(|f| TOP + (1.0 - f) * ph);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !spec.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&spec.title)
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );
    for t in xa.ticks() {
        if let Some(x) = px(t) {
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 18.0,
                label(t)
            );
        }
    }
    for t in ya.ticks() {
        if let Some(y) = py(t) {
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                label(t)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y_label)
    );

    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<(f64, f64, &(f64, f64, f64))> = ser
            .points
            .iter()
            .filter_map(|p| Some((px(p.0)?, py(p.1)?, p)))
            .collect();
        if pts.len() >= 2 {
            let path: Vec<String> = pts.iter().map(|(x, y, _)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
                path.join(" ")
            );
        }
        for (x, y, p) in &pts {
            if p.2 > 0.0 {
                let lo = py(p.1 - p.2).unwrap_or(TOP + ph).min(TOP + ph);
                let hi = py(p.1 + p.2).unwrap_or(TOP).max(TOP);
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="{color}"/><line x1="{:.2}" y1="{lo:.2}" x2="{:.2}" y2="{lo:.2}" stroke="{color}"/><line x1="{:.2}" y1="{hi:.2}" x2="{:.2}" y2="{hi:.2}" stroke="{color}"/>"#,
                    x - 4.0,
                    x + 4.0,
                    x - 4.0,
                    x + 4.0
                );
            }
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#);
        }
        let ly = TOP + 14.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><circle cx="{}" cy="{ly}" r="3.5" fill="{color}"/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            lx + 12.0,
            lx + 30.0,
            ly + 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
