//! Record schema, CSV persistence, batch generation, ingestion of external
//! columns and merge validation.
//!
//! CSV files are RFC-4180 style with a header row, UTF-8, comma separators
//! and no quoting (every field is numeric or a bare token). Reals are
//! written in Rust's shortest round-trip formatting (at most 17 significant
//! digits), so save → load reproduces every value bit-exactly. Missing
//! values are empty fields in CSV and `Option` in memory; the external
//! `-1` sentinel convention for unknown ranks is translated at the
//! ingestion boundary only.

use crate::arith::{factor, squarefree_flags, ArithError, PrimeTable};
use crate::descent::{
    certify_status, selmer_rank_oracle_with, CongruenceStatus, DescentError, SelmerGroup,
    SelmerMethod, DEFAULT_SUPPORT_BOUND,
};
use crate::lfunction::{normalized_bsd, LfunctionError};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {failed} of {rows} rows failed to parse (threshold {threshold}); first: {first}")]
    TooManyRowErrors { path: String, failed: usize, rows: usize, threshold: f64, first: String },
    #[error("required column {0} is missing")]
    MissingColumn(String),
    #[error("schema file: {0}")]
    Schema(String),
    #[error("join produced zero overlapping D values")]
    ZeroOverlap,
    #[error("CSV line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Descent(#[from] DescentError),
    #[error(transparent)]
    Lfunction(#[from] LfunctionError),
}

/// Congruence status summary carried by a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatusCode {
    Noncongruent,
    Congruent,
    Unknown,
}

impl StatusCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            StatusCode::Noncongruent => "noncongruent",
            StatusCode::Congruent => "congruent",
            StatusCode::Unknown => "unknown",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "noncongruent" => Some(StatusCode::Noncongruent),
            "congruent" => Some(StatusCode::Congruent),
            "unknown" => Some(StatusCode::Unknown),
            _ => None,
        }
    }
}

/// One row per square-free D: computed descent columns, optional ingested
/// columns and optional L-function columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub d: u64,
    pub residue8: u8,
    pub residue16: u8,
    pub residue32: u8,
    pub omega: u32,
    pub s2: u32,
    pub s2_method: SelmerMethod,
    pub status: StatusCode,
    // ingested
    pub mw_rank: Option<i64>,
    pub sel3_dim: Option<i64>,
    pub analytic_rank: Option<i64>,
    pub regulator: Option<f64>,
    pub analytic_sha: Option<f64>,
    pub modular_degree_val2: Option<i64>,
    pub root_number: Option<i64>,
    // L-function pipeline
    pub omega_period: Option<f64>,
    pub l1: Option<f64>,
    pub tamagawa: Option<u64>,
    pub normalized_bsd: Option<f64>,
    pub l_bsd_odd: Option<bool>,
}

impl CurveRecord {
    /// Binary congruence label: ingested MW rank wins, certification second,
    /// `None` when neither decides.
    pub fn congruence_label(&self) -> Option<u8> {
        if let Some(r) = self.mw_rank {
            return Some((r > 0) as u8);
        }
        match self.status {
            StatusCode::Congruent => Some(1),
            StatusCode::Noncongruent => Some(0),
            StatusCode::Unknown => None,
        }
    }

    /// s(D) parity forced by the residue class.
    pub fn parity_ok(&self) -> bool {
        let even = matches!(self.residue8, 1 | 2 | 3);
        (self.s2 % 2 == 0) == even
    }
}

/// Generation options for the batch pipeline.
#[derive(Debug, Clone)]
pub struct GenOptions {
    /// certify congruence status (point search up to this height; 0 skips)
    pub height: u64,
    /// extra 2-adic search depth for descent stability runs
    pub depth_bump: u32,
    /// oracle support bound
    pub support_bound: u32,
    /// fill omega_period/l1/tamagawa/normalized_bsd columns
    pub with_bsd: bool,
    pub bsd_tol: f64,
    /// resume after this D (exclusive); records ≤ this value are skipped
    pub start_after: u64,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            height: 0,
            depth_bump: 0,
            support_bound: DEFAULT_SUPPORT_BOUND,
            with_bsd: false,
            bsd_tol: 1e-8,
            start_after: 0,
        }
    }
}

/// s(D) dispatch honoring the depth bump: Monsky matrix for odd D, oracle
/// for even D.
fn selmer_for(d: u64, table: &PrimeTable, opts: &GenOptions) -> Result<SelmerGroup, DescentError> {
    if d % 2 == 1 && opts.depth_bump == 0 {
        let s = crate::descent::monsky_rank(d, table)?;
        Ok(SelmerGroup { d, elements: Vec::new(), dim: s + 2, s, method: SelmerMethod::Matrix })
    } else {
        selmer_rank_oracle_with(d, opts.support_bound, opts.depth_bump)
    }
}

/// One record per square-free D ≤ X in increasing order, computed in
/// parallel with a deterministic ordered merge.
pub fn generate_records(
    x: u64,
    opts: &GenOptions,
    table: &PrimeTable,
) -> Result<Vec<CurveRecord>, DataError> {
    if x > table.limit() {
        return Err(DataError::Arith(ArithError::OutOfRange(x, table.limit())));
    }
    let flags = squarefree_flags(x);
    let ds: Vec<u64> = (1..=x).filter(|&d| flags[d as usize] && d > opts.start_after).collect();
    ds.into_par_iter()
        .map(|d| build_record(d, opts, table))
        .collect()
}

fn build_record(d: u64, opts: &GenOptions, table: &PrimeTable) -> Result<CurveRecord, DataError> {
    let f = factor(d, table)?;
    let selmer = selmer_for(d, table, opts)?;
    let status = if opts.height > 0 {
        match certify_status(d, &selmer, opts.height) {
            CongruenceStatus::NoncongruentCertified => StatusCode::Noncongruent,
            CongruenceStatus::CongruentCertified(_) => StatusCode::Congruent,
            CongruenceStatus::Unknown => StatusCode::Unknown,
        }
    } else if selmer.s == 0 {
        StatusCode::Noncongruent
    } else {
        StatusCode::Unknown
    };
    let mut rec = CurveRecord {
        d,
        residue8: (d % 8) as u8,
        residue16: (d % 16) as u8,
        residue32: (d % 32) as u8,
        omega: f.omega(),
        s2: selmer.s,
        s2_method: selmer.method,
        status,
        mw_rank: None,
        sel3_dim: None,
        analytic_rank: None,
        regulator: None,
        analytic_sha: None,
        modular_degree_val2: None,
        root_number: None,
        omega_period: None,
        l1: None,
        tamagawa: None,
        normalized_bsd: None,
        l_bsd_odd: None,
    };
    if opts.with_bsd {
        let b = normalized_bsd(d, opts.bsd_tol)?;
        rec.omega_period = Some(b.omega);
        rec.l1 = Some(b.l1);
        rec.tamagawa = Some(b.tamagawa);
        rec.normalized_bsd = Some(b.normalized);
        rec.l_bsd_odd = b.l_bsd_odd;
    }
    Ok(rec)
}

// ---------------------------------------------------------------------------
// CSV persistence

pub const FULL_HEADER: &str = "d,residue8,residue16,residue32,omega,s2,s2_method,status,\
mw_rank,sel3_dim,analytic_rank,regulator,analytic_sha,modular_degree_val2,root_number,\
omega_period,l1,tamagawa,normalized_bsd,l_bsd_odd";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn record_line(r: &CurveRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.d,
        r.residue8,
        r.residue16,
        r.residue32,
        r.omega,
        r.s2,
        r.s2_method.as_str(),
        r.status.as_str(),
        opt(&r.mw_rank),
        opt(&r.sel3_dim),
        opt(&r.analytic_rank),
        opt(&r.regulator),
        opt(&r.analytic_sha),
        opt(&r.modular_degree_val2),
        opt(&r.root_number),
        opt(&r.omega_period),
        opt(&r.l1),
        opt(&r.tamagawa),
        opt(&r.normalized_bsd),
        opt(&r.l_bsd_odd),
    )
}

/// Writes records in the full-schema CSV with an optional timestamp header
/// comment (suppressible for byte-identical reruns).
pub fn write_records_csv(
    path: &Path,
    records: &[CurveRecord],
    timestamp: Option<u64>,
) -> Result<(), DataError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    if let Some(ts) = timestamp {
        writeln!(w, "# generated-unix: {ts}")?;
    }
    writeln!(w, "{FULL_HEADER}")?;
    for r in records {
        writeln!(w, "{}", record_line(r))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<T>().map(Some).map_err(|_| format!("bad value {s:?}"))
}

/// Reads a full-schema CSV back into records.
pub fn read_records_csv(path: &Path) -> Result<Vec<CurveRecord>, DataError> {
    let f = std::fs::File::open(path)?;
    let mut records = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != FULL_HEADER {
                return Err(DataError::Malformed {
                    line: lineno + 1,
                    msg: "unexpected header".into(),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 20 {
            return Err(DataError::Malformed {
                line: lineno + 1,
                msg: format!("expected 20 fields, got {}", fields.len()),
            });
        }
        let mk = |msg: String| DataError::Malformed { line: lineno + 1, msg };
        let rec = CurveRecord {
            d: fields[0].parse().map_err(|_| mk("bad d".into()))?,
            residue8: fields[1].parse().map_err(|_| mk("bad residue8".into()))?,
            residue16: fields[2].parse().map_err(|_| mk("bad residue16".into()))?,
            residue32: fields[3].parse().map_err(|_| mk("bad residue32".into()))?,
            omega: fields[4].parse().map_err(|_| mk("bad omega".into()))?,
            s2: fields[5].parse().map_err(|_| mk("bad s2".into()))?,
            s2_method: match fields[6] {
                "oracle" => SelmerMethod::Oracle,
                "matrix" => SelmerMethod::Matrix,
                other => return Err(mk(format!("bad s2_method {other:?}"))),
            },
            status: StatusCode::parse(fields[7]).ok_or_else(|| mk("bad status".into()))?,
            mw_rank: parse_opt(fields[8]).map_err(mk)?,
            sel3_dim: parse_opt(fields[9]).map_err(mk)?,
            analytic_rank: parse_opt(fields[10]).map_err(mk)?,
            regulator: parse_opt(fields[11]).map_err(mk)?,
            analytic_sha: parse_opt(fields[12]).map_err(mk)?,
            modular_degree_val2: parse_opt(fields[13]).map_err(mk)?,
            root_number: parse_opt(fields[14]).map_err(mk)?,
            omega_period: parse_opt(fields[15]).map_err(mk)?,
            l1: parse_opt(fields[16]).map_err(mk)?,
            tamagawa: parse_opt(fields[17]).map_err(mk)?,
            normalized_bsd: parse_opt(fields[18]).map_err(mk)?,
            l_bsd_odd: parse_opt(fields[19]).map_err(mk)?,
        };
        records.push(rec);
    }
    if !header_seen {
        return Err(DataError::Malformed { line: 0, msg: "missing header".into() });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// ingestion of external columns

/// Destination fields an external CSV column can map onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetField {
    MwRank,
    Sel3Dim,
    AnalyticRank,
    Regulator,
    AnalyticSha,
    ModularDegreeVal2,
    RootNumber,
}

impl TargetField {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "mw_rank" => Some(TargetField::MwRank),
            "sel3_dim" => Some(TargetField::Sel3Dim),
            "analytic_rank" => Some(TargetField::AnalyticRank),
            "regulator" => Some(TargetField::Regulator),
            "analytic_sha" => Some(TargetField::AnalyticSha),
            "modular_degree_val2" => Some(TargetField::ModularDegreeVal2),
            "root_number" => Some(TargetField::RootNumber),
            _ => None,
        }
    }

    /// Integer rank-like fields use the external −1 sentinel for "unknown".
    fn sentinel_minus_one(&self) -> bool {
        matches!(
            self,
            TargetField::MwRank | TargetField::Sel3Dim | TargetField::AnalyticRank
        )
    }
}

/// Column-name map for one external file.
#[derive(Debug, Clone)]
pub struct IngestSchema {
    pub d_column: String,
    pub columns: Vec<(String, TargetField)>,
    /// maximum tolerated fraction of malformed rows
    pub error_rate_threshold: f64,
}

impl IngestSchema {
    /// Parses a plain-text mapping file: one `csv_column = field` per line,
    /// a mandatory `d_column = <name>` line, `#` comments.
    pub fn from_file(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)?;
        let mut d_column = None;
        let mut columns = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((lhs, rhs)) = line.split_once('=') else {
                return Err(DataError::Schema(format!("line {}: expected `col = field`", i + 1)));
            };
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            if lhs == "d_column" {
                d_column = Some(rhs.to_string());
            } else {
                let field = TargetField::parse(rhs)
                    .ok_or_else(|| DataError::Schema(format!("line {}: unknown field {rhs:?}", i + 1)))?;
                columns.push((lhs.to_string(), field));
            }
        }
        Ok(IngestSchema {
            d_column: d_column.ok_or_else(|| DataError::Schema("missing d_column".into()))?,
            columns,
            error_rate_threshold: 0.001,
        })
    }
}

/// One ingested row (all optional fields).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestedRow {
    pub mw_rank: Option<i64>,
    pub sel3_dim: Option<i64>,
    pub analytic_rank: Option<i64>,
    pub regulator: Option<f64>,
    pub analytic_sha: Option<f64>,
    pub modular_degree_val2: Option<i64>,
    pub root_number: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct IngestResult {
    pub rows: BTreeMap<u64, IngestedRow>,
    /// duplicate-D occurrences resolved last-wins
    pub duplicate_warnings: usize,
    /// malformed rows skipped (below the threshold)
    pub skipped_rows: Vec<String>,
}

/// Reads an external CSV through a schema: typed columns keyed by D,
/// −1 sentinels mapped to missing, duplicates last-wins with a warning
/// count, malformed rows skipped up to the error-rate threshold.
pub fn ingest_csv(path: &Path, schema: &IngestSchema) -> Result<IngestResult, DataError> {
    let f = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(f).lines();
    let header = loop {
        match lines.next() {
            Some(l) => {
                let l = l?;
                if !l.starts_with('#') && !l.is_empty() {
                    break l;
                }
            }
            None => return Err(DataError::Malformed { line: 0, msg: "empty file".into() }),
        }
    };
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let d_idx = names
        .iter()
        .position(|&n| n == schema.d_column)
        .ok_or_else(|| DataError::MissingColumn(schema.d_column.clone()))?;
    let mut col_idx = Vec::new();
    for (name, field) in &schema.columns {
        let idx = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| DataError::MissingColumn(name.clone()))?;
        col_idx.push((idx, *field));
    }

    let mut rows: BTreeMap<u64, IngestedRow> = BTreeMap::new();
    let mut duplicates = 0usize;
    let mut skipped = Vec::new();
    let mut total = 0usize;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        total += 1;
        match parse_ingest_row(&line, d_idx, &col_idx) {
            Ok((d, row)) => {
                if rows.insert(d, row).is_some() {
                    duplicates += 1;
                }
            }
            Err(msg) => skipped.push(format!("line {}: {msg}", lineno + 2)),
        }
    }
    if total > 0 && skipped.len() as f64 / total as f64 > schema.error_rate_threshold {
        return Err(DataError::TooManyRowErrors {
            path: path.display().to_string(),
            failed: skipped.len(),
            rows: total,
            threshold: schema.error_rate_threshold,
            first: skipped.first().cloned().unwrap_or_default(),
        });
    }
    Ok(IngestResult { rows, duplicate_warnings: duplicates, skipped_rows: skipped })
}

fn parse_ingest_row(
    line: &str,
    d_idx: usize,
    cols: &[(usize, TargetField)],
) -> Result<(u64, IngestedRow), String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let d: u64 = fields
        .get(d_idx)
        .ok_or("short row")?
        .parse()
        .map_err(|_| format!("bad D {:?}", fields.get(d_idx)))?;
    let mut row = IngestedRow::default();
    for &(idx, field) in cols {
        let raw = *fields.get(idx).ok_or("short row")?;
        if raw.is_empty() {
            continue;
        }
        match field {
            TargetField::Regulator | TargetField::AnalyticSha => {
                let v: f64 = raw.parse().map_err(|_| format!("bad float {raw:?}"))?;
                match field {
                    TargetField::Regulator => row.regulator = Some(v),
                    _ => row.analytic_sha = Some(v),
                }
            }
            _ => {
                let v: i64 = raw.parse().map_err(|_| format!("bad integer {raw:?}"))?;
                let v = if field.sentinel_minus_one() && v == -1 { None } else { Some(v) };
                match field {
                    TargetField::MwRank => row.mw_rank = v,
                    TargetField::Sel3Dim => row.sel3_dim = v,
                    TargetField::AnalyticRank => row.analytic_rank = v,
                    TargetField::ModularDegreeVal2 => row.modular_degree_val2 = v,
                    TargetField::RootNumber => row.root_number = v,
                    _ => unreachable!(),
                }
            }
        }
    }
    Ok((d, row))
}

// ---------------------------------------------------------------------------
// merge and validation

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub enum Violation {
    /// s(D) parity contradicts the residue class
    Parity { d: u64, s2: u32, residue8: u8 },
    /// ingested MW rank exceeds the Selmer bound
    RankBound { d: u64, mw_rank: i64, s2: u32 },
    /// Sha dimension from the exact sequence came out odd
    ShaParity { d: u64, p: u64, dim: i64 },
    /// 2-valuation of the modular degree fell below the MW rank
    ModularDegreeBound { d: u64, val2: i64, mw_rank: i64 },
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ValidationReport {
    pub joined: usize,
    pub violations: Vec<Violation>,
}

/// Joins ingested columns onto records by D and validates the combined
/// dataset. Violations are counted and listed, never silently fixed.
pub fn merge_and_validate(
    records: &mut [CurveRecord],
    ingested: &BTreeMap<u64, IngestedRow>,
) -> Result<ValidationReport, DataError> {
    let mut joined = 0usize;
    for rec in records.iter_mut() {
        if let Some(row) = ingested.get(&rec.d) {
            joined += 1;
            rec.mw_rank = row.mw_rank.or(rec.mw_rank);
            rec.sel3_dim = row.sel3_dim.or(rec.sel3_dim);
            rec.analytic_rank = row.analytic_rank.or(rec.analytic_rank);
            rec.regulator = row.regulator.or(rec.regulator);
            rec.analytic_sha = row.analytic_sha.or(rec.analytic_sha);
            rec.modular_degree_val2 = row.modular_degree_val2.or(rec.modular_degree_val2);
            rec.root_number = row.root_number.or(rec.root_number);
        }
    }
    if !ingested.is_empty() && joined == 0 {
        return Err(DataError::ZeroOverlap);
    }
    Ok(validate(records, joined))
}

/// Validation alone (parity, rank bound, Sha evenness).
pub fn validate(records: &[CurveRecord], joined: usize) -> ValidationReport {
    let mut violations = Vec::new();
    for rec in records {
        if !rec.parity_ok() {
            violations.push(Violation::Parity { d: rec.d, s2: rec.s2, residue8: rec.residue8 });
        }
        if let Some(mw) = rec.mw_rank {
            if mw > rec.s2 as i64 {
                violations.push(Violation::RankBound { d: rec.d, mw_rank: mw, s2: rec.s2 });
            }
            let (dim2, bad2) = crate::stats::sha_dim(rec.s2 as i64 + 2, mw, 2);
            if bad2 {
                violations.push(Violation::ShaParity { d: rec.d, p: 2, dim: dim2 });
            }
            if let Some(s3) = rec.sel3_dim {
                let (dim3, bad3) = crate::stats::sha_dim(s3, mw, 3);
                if bad3 {
                    violations.push(Violation::ShaParity { d: rec.d, p: 3, dim: dim3 });
                }
            }
            if let Some(val2) = rec.modular_degree_val2 {
                if val2 < mw {
                    violations.push(Violation::ModularDegreeBound { d: rec.d, val2, mw_rank: mw });
                }
            }
        }
    }
    ValidationReport { joined, violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PrimeTable {
        PrimeTable::new(200).unwrap()
    }

    #[test]
    fn generate_small() {
        let recs = generate_records(10, &GenOptions::default(), &table()).unwrap();
        let ds: Vec<u64> = recs.iter().map(|r| r.d).collect();
        assert_eq!(ds, vec![1, 2, 3, 5, 6, 7, 10]);
        for r in &recs {
            assert!(r.parity_ok(), "D={}", r.d);
        }
        // matrix path for odd D, oracle for even
        assert_eq!(recs[0].s2_method, SelmerMethod::Matrix);
        assert_eq!(recs[1].s2_method, SelmerMethod::Oracle);
    }

    #[test]
    fn resume_matches_single_run() {
        let t = table();
        let full = generate_records(30, &GenOptions::default(), &t).unwrap();
        let first = generate_records(
            30,
            &GenOptions { start_after: 0, ..GenOptions::default() },
            &t,
        )
        .unwrap()
        .into_iter()
        .filter(|r| r.d <= 15)
        .collect::<Vec<_>>();
        let rest = generate_records(
            30,
            &GenOptions { start_after: 15, ..GenOptions::default() },
            &t,
        )
        .unwrap();
        let stitched: Vec<CurveRecord> = first.into_iter().chain(rest).collect();
        assert_eq!(full, stitched);
    }

    #[test]
    fn csv_roundtrip_bit_exact() {
        let t = table();
        let mut recs = generate_records(
            20,
            &GenOptions { with_bsd: true, height: 40, ..GenOptions::default() },
            &t,
        )
        .unwrap();
        recs[0].regulator = Some(1.2345678901234567e-3);
        recs[1].mw_rank = Some(1);
        let dir = std::env::temp_dir().join(format!("cncurves-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p1 = dir.join("a.csv");
        let p2 = dir.join("b.csv");
        write_records_csv(&p1, &recs, None).unwrap();
        let back = read_records_csv(&p1).unwrap();
        assert_eq!(recs, back);
        write_records_csv(&p2, &back, None).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn ingest_with_sentinels_and_dups() {
        let dir = std::env::temp_dir().join(format!("cncurves-ingest-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("ext.csv");
        std::fs::write(
            &csv,
            "n,rank,reg\n5,1,1.5\n34,-1,0.25\n6,1,\n6,2,0.5\nbroken,x,y\n",
        )
        .unwrap();
        let schema = IngestSchema {
            d_column: "n".into(),
            columns: vec![("rank".into(), TargetField::MwRank), ("reg".into(), TargetField::Regulator)],
            error_rate_threshold: 0.25,
        };
        let res = ingest_csv(&csv, &schema).unwrap();
        assert_eq!(res.rows[&5].mw_rank, Some(1));
        assert_eq!(res.rows[&34].mw_rank, None); // -1 sentinel
        assert_eq!(res.rows[&34].regulator, Some(0.25));
        assert_eq!(res.rows[&6].mw_rank, Some(2)); // last wins
        assert_eq!(res.duplicate_warnings, 1);
        assert_eq!(res.skipped_rows.len(), 1);
        // tight threshold rejects the same file
        let strict = IngestSchema { error_rate_threshold: 0.001, ..schema };
        assert!(matches!(
            ingest_csv(&csv, &strict),
            Err(DataError::TooManyRowErrors { .. })
        ));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn merge_validation_flags() {
        let t = table();
        let mut recs = generate_records(10, &GenOptions::default(), &t).unwrap();
        let mut ingested = BTreeMap::new();
        // D=5 has s2 = 1: an ingested rank of 2 violates the bound and the
        // Sha dimension 3 − 2 − 2 = −1 is parity-anomalous
        ingested.insert(5, IngestedRow { mw_rank: Some(2), ..Default::default() });
        ingested.insert(6, IngestedRow { mw_rank: Some(1), ..Default::default() });
        let report = merge_and_validate(&mut recs, &ingested).unwrap();
        assert_eq!(report.joined, 2);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RankBound { d: 5, .. })));
        // a clean join on D=6 produces no violation for that record
        assert!(!report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RankBound { d: 6, .. })));

        let empty: BTreeMap<u64, IngestedRow> = BTreeMap::new();
        assert!(merge_and_validate(&mut recs, &empty).is_ok());
        let mut disjoint = BTreeMap::new();
        disjoint.insert(9999u64, IngestedRow::default());
        assert!(matches!(
            merge_and_validate(&mut recs, &disjoint),
            Err(DataError::ZeroOverlap)
        ));
    }

    #[test]
    fn schema_file_parse() {
        let dir = std::env::temp_dir().join(format!("cncurves-schema-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("map.txt");
        std::fs::write(&p, "# mapping\nd_column = n\nrank = mw_rank\nreg = regulator\n").unwrap();
        let s = IngestSchema::from_file(&p).unwrap();
        assert_eq!(s.d_column, "n");
        assert_eq!(s.columns.len(), 2);
        std::fs::write(&p, "rank = mw_rank\n").unwrap();
        assert!(IngestSchema::from_file(&p).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
