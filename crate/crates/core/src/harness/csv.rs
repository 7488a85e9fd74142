//! Controller-rate time-series log and its CSV form.
//!
//! Column order: `t, u_1..u_m, uv_1..uv_q, Fy_raw, Fy_filt, Mx_raw, Mx_filt,
//! Fy_ref, Mx_ref, alpha_g, eps_ca_norm, iters, sat_flags`. Floats are
//! written in shortest round-trip decimal, so parsing an emitted file gives
//! back the same values bit for bit.

use std::io::{BufRead, Write};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub u: Vec<f64>,
    pub uv: Vec<f64>,
    pub fy_raw: f64,
    pub fy_filt: f64,
    pub mx_raw: f64,
    pub mx_filt: f64,
    pub fy_ref: f64,
    pub mx_ref: f64,
    pub alpha_g: f64,
    pub eps_ca_norm: f64,
    pub iters: u32,
    /// Bit `i` set when servo `i` sits on a position limit.
    pub sat_flags: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub m: usize,
    pub q: usize,
    pub rows: Vec<LogRow>,
}

impl RunLog {
    pub fn new(m: usize, q: usize) -> Self {
        Self { m, q, rows: Vec::new() }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=self.m).map(|i| format!("u_{i}")));
        h.extend((1..=self.q).map(|i| format!("uv_{i}")));
        for name in ["Fy_raw", "Fy_filt", "Mx_raw", "Mx_filt", "Fy_ref", "Mx_ref", "alpha_g", "eps_ca_norm", "iters", "sat_flags"] {
            h.push(name.to_string());
        }
        h
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header().join(","))?;
        let mut line = String::new();
        for r in &self.rows {
            use std::fmt::Write as _;
            line.clear();
            let _ = write!(line, "{}", r.t);
            for v in r.u.iter().chain(&r.uv) {
                let _ = write!(line, ",{v}");
            }
            for v in [r.fy_raw, r.fy_filt, r.mx_raw, r.mx_filt, r.fy_ref, r.mx_ref, r.alpha_g, r.eps_ca_norm] {
                let _ = write!(line, ",{v}");
            }
            let _ = write!(line, ",{},{}", r.iters, r.sat_flags);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn emit_csv(&self, path: &std::path::Path) -> Result<(), HarnessError> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn parse_csv<R: BufRead>(reader: R) -> Result<Self, HarnessError> {
        let bad = |line: usize, msg: String| HarnessError::Csv(format!("line {line}: {msg}"));
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header".into()))??;
        let cols: Vec<&str> = header.split(',').collect();
        let m = cols.iter().filter(|c| c.starts_with("u_")).count();
        let q = cols.iter().filter(|c| c.starts_with("uv_")).count();
        let mut log = RunLog::new(m, q);
        if cols != log.header() {
            return Err(bad(1, "unexpected header".into()));
        }
        for (i, line) in lines.enumerate() {
            let line = line?;
            let n = i + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(bad(n, format!("{} fields, expected {}", fields.len(), cols.len())));
            }
            let f = |k: usize| fields[k].parse::<f64>().map_err(|e| bad(n, format!("column {}: {e}", cols[k])));
            let g = |k: usize| fields[k].parse::<u32>().map_err(|e| bad(n, format!("column {}: {e}", cols[k])));
            let base = 1 + m + q;
            log.rows.push(LogRow {
                t: f(0)?,
                u: (1..=m).map(f).collect::<Result<_, _>>()?,
                uv: (1 + m..base).map(f).collect::<Result<_, _>>()?,
                fy_raw: f(base)?,
                fy_filt: f(base + 1)?,
                mx_raw: f(base + 2)?,
                mx_filt: f(base + 3)?,
                fy_ref: f(base + 4)?,
                mx_ref: f(base + 5)?,
                alpha_g: f(base + 6)?,
                eps_ca_norm: f(base + 7)?,
                iters: g(base + 8)?,
                sat_flags: g(base + 9)?,
            });
        }
        Ok(log)
    }

    pub fn load_csv(path: &std::path::Path) -> Result<Self, HarnessError> {
        let file = std::fs::File::open(path)?;
        Self::parse_csv(std::io::BufReader::new(file))
    }
}
