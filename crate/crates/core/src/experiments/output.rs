//! Trajectory CSV files and SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::diagnostics::ObservableRow;
use crate::error::{Error, Result};

pub const OBSERVABLE_COLUMNS: [&str; 9] = [
    "moreau_gap",
    "function_gap",
    "grad_norm",
    "prox_dist",
    "velocity_combo",
    "dist_to_xstar",
    "tikhonov_gap",
    "energy_q",
    "psi",
];

/// One CSV row: a sample, its observables and the energy columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
    pub obs: ObservableRow,
    pub energy_q: f64,
    pub psi: f64,
}

impl CsvRow {
    pub fn observable(&self, name: &str) -> Option<f64> {
        let o = &self.obs;
        Some(match name {
            "moreau_gap" => o.moreau_gap,
            "function_gap" => o.function_gap,
            "grad_norm" => o.grad_norm,
            "prox_dist" => o.prox_dist,
            "velocity_combo" => o.velocity_combo,
            "dist_to_xstar" => o.dist_to_xstar,
            "tikhonov_gap" => o.tikhonov_gap,
            "energy_q" => self.energy_q,
            "psi" => self.psi,
            _ => return None,
        })
    }
}

pub fn csv_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..dim).map(|i| format!("x_{i}")));
    h.extend((0..dim).map(|i| format!("xdot_{i}")));
    h.extend(OBSERVABLE_COLUMNS.iter().map(|s| s.to_string()));
    h
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn record(r: &CsvRow) -> Vec<String> {
    let mut v = vec![fmt_f64(r.t)];
    v.extend(r.x.iter().chain(&r.xdot).map(|&a| fmt_f64(a)));
    v.extend(OBSERVABLE_COLUMNS.iter().map(|c| fmt_f64(r.observable(c).unwrap_or(f64::NAN))));
    v
}

pub fn write_csv<W: std::io::Write>(w: W, rows: &[CsvRow]) -> Result<()> {
    let dim = rows.first().map_or(1, |r| r.x.len());
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(csv_header(dim))?;
    for r in rows {
        wr.write_record(record(r))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, rows: &[CsvRow]) -> Result<()> {
    write_csv(std::fs::File::create(path)?, rows)
}

pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let dim = header.iter().filter(|h| h.starts_with("x_")).count();
    if header.len() != 1 + 2 * dim + OBSERVABLE_COLUMNS.len() {
        return Err(Error::Io(format!("unexpected CSV header with {} columns", header.len())));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Io(format!("bad number `{s}` in CSV"))))
            .collect::<Result<_>>()?;
        let o = &v[1 + 2 * dim..];
        rows.push(CsvRow {
            t: v[0],
            x: v[1..1 + dim].to_vec(),
            xdot: v[1 + dim..1 + 2 * dim].to_vec(),
            obs: ObservableRow {
                t: v[0],
                moreau_gap: o[0],
                function_gap: o[1],
                grad_norm: o[2],
                prox_dist: o[3],
                velocity_combo: o[4],
                dist_to_xstar: o[5],
                tikhonov_gap: o[6],
            },
            energy_q: o[7],
            psi: o[8],
        });
    }
    Ok(rows)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<CsvRow>> {
    read_csv(std::fs::File::open(path)?)
}

/// Keeps at most `max_rows` rows, evenly strided, always including the last.
pub fn thin_rows(rows: Vec<CsvRow>, max_rows: usize) -> Vec<CsvRow> {
    if max_rows == 0 || rows.len() <= max_rows {
        return rows;
    }
    let stride = rows.len().div_ceil(max_rows.max(2) - 1);
    let last = rows.len() - 1;
    rows.into_iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == last)
        .map(|(_, r)| r)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axes {
    Linear,
    LogLog,
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

/// A self-contained SVG chart. Log axes drop nonpositive points.
pub fn svg_chart(title: &str, axes: Axes, series: &[Series]) -> String {
    let tf = |v: f64| if axes == Axes::LogLog { v.log10() } else { v };
    let keep = |&(x, y): &(f64, f64)| {
        x.is_finite() && y.is_finite() && (axes == Axes::Linear || (x > 0.0 && y > 0.0))
    };
    let mapped: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().filter(|p| keep(p)).map(|&(x, y)| (tf(x), tf(y))).collect())
        .collect();
    let all = mapped.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let lab = |v: f64| if axes == Axes::LogLog { format!("1e{v:.1}") } else { format!("{v:.3}") };

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    if x0.is_finite() {
        let _ = writeln!(s, r#"<text x="{PAD}" y="{}">{}</text>"#, H - PAD + 16.0, lab(x0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, W - PAD, H - PAD + 16.0, lab(x1));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, H - PAD, lab(y0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 10.0, lab(y1));
    }
    for (k, (ser, pts)) in series.iter().zip(&mapped).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let ly = PAD + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
            W - PAD - 6.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> CsvRow {
        let v = 1.0 / (3.0 * t);
        CsvRow {
            t,
            x: vec![v, -v],
            xdot: vec![std::f64::consts::PI * v, 0.1 + v],
            obs: ObservableRow {
                t,
                moreau_gap: v * v,
                function_gap: 1e-300 * v,
                grad_norm: v.sqrt(),
                prox_dist: 0.0,
                velocity_combo: v.exp(),
                dist_to_xstar: v.ln(),
                tikhonov_gap: 7.0,
            },
            energy_q: f64::NAN,
            psi: -v,
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let rows: Vec<CsvRow> = (1..50).map(|i| row(1.0 + 0.37 * i as f64)).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.x, b.x);
            assert_eq!(a.xdot, b.xdot);
            assert_eq!(a.obs, b.obs);
            assert!(b.energy_q.is_nan());
            assert_eq!(a.psi.to_bits(), b.psi.to_bits());
        }
        let header = String::from_utf8(buf).unwrap();
        assert!(header.starts_with("t,x_0,x_1,xdot_0,xdot_1,moreau_gap,"));
    }

    #[test]
    fn thinning_keeps_endpoints() {
        let rows: Vec<CsvRow> = (1..=1000).map(|i| row(i as f64)).collect();
        let thin = thin_rows(rows, 100);
        assert!(thin.len() <= 101);
        assert_eq!(thin[0].t, 1.0);
        assert_eq!(thin.last().unwrap().t, 1000.0);
    }

    #[test]
    fn svg_skips_nonpositive_points_on_log_axes() {
        let s = Series {
            label: "a<b".into(),
            points: vec![(1.0, 1.0), (10.0, 0.0), (100.0, 1e-4)],
        };
        let svg = svg_chart("gap", Axes::LogLog, &[s]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a&lt;b"));
        let poly = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(poly.matches(',').count(), 2);
    }
}
