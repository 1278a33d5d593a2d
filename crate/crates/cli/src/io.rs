//! CSV reading and writing for p-value matrices and procedure results.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses
//! back to the identical f64. Booleans are written as 1/0.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use screenmin::{PValueMatrix, PValueRow, ProcedureResult, RowOutcome};

pub const INPUT_HEADER: [&str; 3] = ["id", "p1", "p2"];
pub const RESULTS_HEADER: [&str; 8] = [
    "id",
    "p1",
    "p2",
    "pmin",
    "pmax",
    "selected",
    "adjusted_p",
    "rejected",
];

/// Marker written for undefined quantities.
pub const NA: &str = "NA";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| NA.to_string(), fmt_f64)
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().context("reading header")?;
    if header.iter().ne(expected.iter().copied()) {
        bail!(
            "line 1: header is `{}`, expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        );
    }
    Ok(())
}

fn parse_prob(raw: &str, column: &str, line: u64) -> Result<f64> {
    let p: f64 = raw
        .parse()
        .map_err(|_| anyhow::anyhow!("line {line}: `{column}` value `{raw}` is not a number"))?;
    if !(0.0..=1.0).contains(&p) {
        bail!("line {line}: `{column}` = {p} is outside [0, 1]");
    }
    Ok(p)
}

/// Parse an `id,p1,p2` table.
pub fn read_pvalues_from<R: Read>(source: R) -> Result<PValueMatrix> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &INPUT_HEADER)?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.context("malformed CSV")?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            bail!(
                "line {line}: expected 3 fields (id,p1,p2), found {}",
                record.len()
            );
        }
        let id = record[0].to_string();
        if id.is_empty() {
            bail!("line {line}: empty id");
        }
        if !seen.insert(id.clone()) {
            bail!("line {line}: duplicate id `{id}`");
        }
        rows.push(PValueRow {
            p1: parse_prob(&record[1], "p1", line)?,
            p2: parse_prob(&record[2], "p2", line)?,
            id,
        });
    }
    if rows.is_empty() {
        bail!("input has a header but no data rows");
    }
    Ok(PValueMatrix::new(rows)?)
}

pub fn read_pvalues(path: &Path) -> Result<PValueMatrix> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_pvalues_from(file).with_context(|| format!("reading {}", path.display()))
}

pub fn write_results_to<W: Write>(sink: W, result: &ProcedureResult) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(sink);
    wtr.write_record(RESULTS_HEADER)?;
    let flag = |b: bool| if b { "1" } else { "0" };
    for r in &result.rows {
        wtr.write_record([
            r.id.clone(),
            fmt_f64(r.p1),
            fmt_f64(r.p2),
            fmt_f64(r.pmin),
            fmt_f64(r.pmax),
            flag(r.selected).to_string(),
            fmt_f64(r.adjusted_p),
            flag(r.rejected).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_results(path: &Path, result: &ProcedureResult) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_results_to(file, result)
}

fn parse_flag(raw: &str, column: &str, line: u64) -> Result<bool> {
    match raw {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => bail!("line {line}: `{column}` must be 0 or 1, found `{raw}`"),
    }
}

/// Parse a results table written by [`write_results`].
pub fn read_results_from<R: Read>(source: R) -> Result<Vec<RowOutcome>> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &RESULTS_HEADER)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.context("malformed CSV")?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != RESULTS_HEADER.len() {
            bail!(
                "line {line}: expected {} fields, found {}",
                RESULTS_HEADER.len(),
                record.len()
            );
        }
        let num = |i: usize| parse_prob(&record[i], RESULTS_HEADER[i], line);
        rows.push(RowOutcome {
            id: record[0].to_string(),
            p1: num(1)?,
            p2: num(2)?,
            pmin: num(3)?,
            pmax: num(4)?,
            selected: parse_flag(&record[5], "selected", line)?,
            adjusted_p: num(6)?,
            rejected: parse_flag(&record[7], "rejected", line)?,
        });
    }
    Ok(rows)
}

pub fn read_results(path: &Path) -> Result<Vec<RowOutcome>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_results_from(file).with_context(|| format!("reading {}", path.display()))
}
