//! CSV tables of equilibria and mixed solutions.
//!
//! Equilibrium tables have the columns `param` (sweeps only), `cluster`,
//! `basin_count`, then `J_i`, `Jhat_i` for every user `i`, then `f_i_l` for
//! every user `i` and link id `l`. Numbers carry 12 significant digits, so
//! parsing a table and emitting it again reproduces the text exactly.

use cooproute_core::experiments::{MixedSweepRow, SweepTable};
use cooproute_core::mixed::{MixedScenario, MixedSolution, Origin};
use cooproute_core::{EquilibriumSet, LinkId};

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header: {0}")]
    Header(String),
    #[error("row {row}, column {column}: {message}")]
    Field { row: usize, column: String, message: String },
}

/// Renders `x` with 12 significant digits, trailing zeros removed.
/// Non-finite values print as `inf`, `-inf` and `NaN`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub param: Option<f64>,
    pub cluster: usize,
    pub basin: usize,
    /// `J_i` per user.
    pub raw: Vec<f64>,
    /// `Jhat_i` per user.
    pub operating: Vec<f64>,
    /// `f_i_l` per user and link.
    pub flows: Vec<Vec<f64>>,
}

/// Equilibria of one scenario or of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    /// The table has a leading `param` column.
    pub swept: bool,
    pub users: usize,
    pub links: Vec<u32>,
    pub rows: Vec<CsvRow>,
}

impl CsvTable {
    /// Rows in grid order, then cluster order. Failed grid points have no
    /// rows.
    pub fn from_sweep(table: &SweepTable) -> Self {
        let rows = table
            .flat()
            .into_iter()
            .map(|r| CsvRow {
                param: Some(r.param),
                cluster: r.cluster,
                basin: r.basin,
                raw: r.raw,
                operating: r.operating,
                flows: r.flows,
            })
            .collect();
        Self { swept: true, users: table.users, links: table.links.iter().map(|l| l.0).collect(), rows }
    }

    pub fn from_set(set: &EquilibriumSet, users: usize, links: &[LinkId]) -> Self {
        let rows = set
            .equilibria
            .iter()
            .enumerate()
            .map(|(k, e)| CsvRow {
                param: None,
                cluster: k,
                basin: e.basin,
                raw: e.costs.raw.clone(),
                operating: e.costs.operating.clone(),
                flows: e.profile.user_link_flows().to_vec(),
            })
            .collect();
        Self { swept: false, users, links: links.iter().map(|l| l.0).collect(), rows }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = Vec::new();
        if self.swept {
            h.push("param".into());
        }
        h.push("cluster".into());
        h.push("basin_count".into());
        for i in 1..=self.users {
            h.push(format!("J_{i}"));
            h.push(format!("Jhat_{i}"));
        }
        for i in 1..=self.users {
            for l in &self.links {
                h.push(format!("f_{i}_{l}"));
            }
        }
        h
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("CSV output is ASCII")
}

pub fn emit_csv(table: &CsvTable) -> String {
    let mut w = writer();
    w.write_record(table.header()).expect("in-memory write");
    for r in &table.rows {
        let mut rec: Vec<String> = Vec::new();
        if let Some(p) = r.param {
            rec.push(format_number(p));
        }
        rec.push(r.cluster.to_string());
        rec.push(r.basin.to_string());
        for (j, jh) in r.raw.iter().zip(&r.operating) {
            rec.push(format_number(*j));
            rec.push(format_number(*jh));
        }
        rec.extend(r.flows.iter().flatten().map(|f| format_number(*f)));
        w.write_record(&rec).expect("in-memory write");
    }
    finish(w)
}

pub fn parse_csv(text: &str) -> Result<CsvTable, CsvError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let swept = header.first().is_some_and(|h| h == "param");
    let users = header.iter().filter(|h| h.starts_with("Jhat_")).count();
    let mut links = Vec::new();
    for h in header.iter().filter(|h| h.starts_with("f_1_")) {
        let id = h["f_1_".len()..].parse().map_err(|_| CsvError::Header(h.clone()))?;
        links.push(id);
    }
    let mut table = CsvTable { swept, users, links, rows: Vec::new() };
    if table.header() != header {
        return Err(CsvError::Header(header.join(",")));
    }

    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let mut fields = rec.iter().zip(&header);
        let mut next = |parse_int: bool| -> Result<f64, CsvError> {
            let (text, column) = fields.next().expect("record length matches the header");
            let err = |message: String| CsvError::Field { row: n + 1, column: column.clone(), message };
            if parse_int {
                text.parse::<usize>().map(|v| v as f64).map_err(|e| err(e.to_string()))
            } else {
                text.parse::<f64>().map_err(|e| err(e.to_string()))
            }
        };
        let param = if swept { Some(next(false)?) } else { None };
        let cluster = next(true)? as usize;
        let basin = next(true)? as usize;
        let (mut raw, mut operating) = (Vec::new(), Vec::new());
        for _ in 0..users {
            raw.push(next(false)?);
            operating.push(next(false)?);
        }
        let mut flows = Vec::new();
        for _ in 0..users {
            flows.push((0..table.links.len()).map(|_| next(false)).collect::<Result<Vec<_>, _>>()?);
        }
        table.rows.push(CsvRow { param, cluster, basin, raw, operating, flows });
    }
    Ok(table)
}

pub const MIXED_HEADER: [&str; 13] = [
    "alpha",
    "origin",
    "case",
    "subcase",
    "x",
    "y",
    "f1",
    "f2",
    "group_cost",
    "verified",
    "wardrop_gap",
    "stationarity",
    "deviation_gain",
];

fn origin_label(o: Origin) -> &'static str {
    match o {
        Origin::Numeric => "numeric",
        Origin::ClosedForm(v) => v.label(),
    }
}

/// One row per numerical solution and per closed-form candidate. Rejected
/// candidates are included only when `audit` is set.
pub fn emit_mixed_csv(base: &MixedScenario, rows: &[MixedSweepRow], audit: bool) -> String {
    let mut w = writer();
    w.write_record(MIXED_HEADER).expect("in-memory write");
    for row in rows {
        let s = base.with_alpha(row.alpha);
        let numeric = row.numeric.iter().flat_map(|n| n.solutions.iter());
        let closed = row.closed.iter().flat_map(|c| c.candidates.iter()).filter(|c| audit || !c.rejected());
        for sol in numeric.chain(closed) {
            w.write_record(mixed_record(&s, sol)).expect("in-memory write");
        }
    }
    finish(w)
}

fn mixed_record(s: &MixedScenario, sol: &MixedSolution) -> Vec<String> {
    let (f1, f2) = s.loads(sol.x, sol.y);
    let v = &sol.verification;
    vec![
        format_number(s.alpha),
        origin_label(sol.origin).into(),
        sol.case.label().into(),
        sol.subcase.label().into(),
        format_number(sol.x),
        format_number(sol.y),
        format_number(f1),
        format_number(f2),
        format_number(s.group_cost(sol.x, sol.y)),
        v.passed.to_string(),
        format_number(v.wardrop_gap),
        format_number(v.stationarity),
        format_number(v.deviation_gain),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(2.0), "2");
        assert_eq!(format_number(-1234.5), "-1234.5");
        assert_eq!(format_number(1e-7), "1e-7");
        assert_eq!(format_number(6.02214076e23), "6.02214076e23");
        assert_eq!(format_number(123456789012345.0), "1.23456789012e14");
        assert_eq!(format_number(f64::INFINITY), "inf");
        assert_eq!(format_number(-0.0), "0");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = CsvTable { swept: true, users: 2, links: vec![1, 2], rows: Vec::new() };
        assert_eq!(emit_csv(&t), "param,cluster,basin_count,J_1,Jhat_1,J_2,Jhat_2,f_1_1,f_1_2,f_2_1,f_2_2\n");
        assert_eq!(parse_csv(&emit_csv(&t)).unwrap(), t);
    }
}
