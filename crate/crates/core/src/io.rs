//! CSV and JSON artifacts.
//!
//! Every table is UTF-8, comma separated, LF terminated, with a header row.
//! Floats are written in Rust's shortest round-trip form so that a re-read
//! table reproduces the in-memory values bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{AtomProfile, DiscontinuityReport};
use crate::error::{Error, Result};
use crate::estimators::CoverageReport;
use crate::rkhs::RepresentationReport;
use crate::simulate::EmpiricalLaw;

pub const ATOM_COLUMNS: &[&str] = &["coordinate", "location", "ppu", "h", "mass", "stderr", "replications"];
pub const DISCONTINUITY_COLUMNS: &[&str] = &["quantity", "estimate", "stderr"];
pub const KS_COLUMNS: &[&str] = &["n", "ks", "replications"];
pub const RKHS_COLUMNS: &[&str] = &["s", "t", "lhs", "rhs", "error", "error_estimate"];
pub const COVERAGE_COLUMNS: &[&str] = &["rep", "point", "lo", "hi", "covered", "failures"];

/// `rep, s1..sd, value, on_boundary`.
pub fn draw_columns(dim: usize) -> Vec<String> {
    let mut cols = vec!["rep".to_string()];
    cols.extend((1..=dim).map(|l| format!("s{l}")));
    cols.push("value".into());
    cols.push("on_boundary".into());
    cols
}

/// `n` followed by the draw columns.
pub fn sampling_law_columns(dim: usize) -> Vec<String> {
    let mut cols = vec!["n".to_string()];
    cols.extend(draw_columns(dim));
    cols
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_path(path)?)
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Vector cell: coordinates joined by `;`.
fn vec_cell(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";")
}

fn draw_row(rep: usize, law: &EmpiricalLaw) -> Vec<String> {
    let mut row = vec![rep.to_string()];
    row.extend(law.draw(rep).iter().map(|v| num(*v)));
    row.push(num(law.values()[rep]));
    row.push(law.on_boundary()[rep].to_string());
    row
}

/// Any other table: a header and rows of preformatted cells.
pub fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(path)?;
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Dimension { expected: header.len(), got: row.len() });
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip formatting used in every table.
pub fn fmt_f64(v: f64) -> String {
    num(v)
}

pub fn write_law(path: &Path, law: &EmpiricalLaw) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(draw_columns(law.dim()))?;
    for rep in 0..law.replications() {
        w.write_record(draw_row(rep, law))?;
    }
    w.flush()?;
    Ok(())
}

/// Stacks laws by sample size.
pub fn write_sampling_laws(path: &Path, laws: &[(usize, &EmpiricalLaw)]) -> Result<()> {
    let dim = laws.first().map(|(_, l)| l.dim()).ok_or(Error::Empty("sampling laws"))?;
    let mut w = writer(path)?;
    w.write_record(sampling_law_columns(dim))?;
    for (n, law) in laws {
        if law.dim() != dim {
            return Err(Error::Dimension { expected: dim, got: law.dim() });
        }
        for rep in 0..law.replications() {
            let mut row = vec![n.to_string()];
            row.extend(draw_row(rep, law));
            w.write_record(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Opens a table and checks that its header holds `expected` in order.
/// Returns the remaining records.
pub fn read_table(path: &Path, expected: &[&str]) -> Result<Vec<StringRecord>> {
    let mut r = ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = r.headers()?.clone();
    check_header(&header, expected)?;
    Ok(r.records().collect::<std::result::Result<Vec<_>, _>>()?)
}

fn check_header(header: &StringRecord, expected: &[&str]) -> Result<()> {
    for (i, col) in expected.iter().enumerate() {
        match header.get(i) {
            Some(h) if h == *col => {}
            _ => return Err(Error::InvalidSpec(format!("missing column `{col}`"))),
        }
    }
    if header.len() != expected.len() {
        return Err(Error::InvalidSpec(format!("expected {} columns, found {}", expected.len(), header.len())));
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(rec: &StringRecord, i: usize, col: &str) -> Result<T> {
    rec.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| {
        Error::InvalidSpec(format!("bad value in column `{col}` at line {}", rec.position().map_or(0, |p| p.line())))
    })
}

/// Reads a draw table; the dimension comes from the header and the seed
/// from the caller (usually the sidecar).
pub fn read_law(path: &Path, master_seed: u64) -> Result<EmpiricalLaw> {
    let mut r = ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 4 {
        return Err(Error::InvalidSpec("draw table needs rep, s1, value, on_boundary".into()));
    }
    let dim = header.len() - 3;
    let cols = draw_columns(dim);
    check_header(&header, &cols.iter().map(String::as_str).collect::<Vec<_>>())?;
    let (mut draws, mut values, mut bnd) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let rep: usize = parse(&rec, 0, "rep")?;
        if rep != i {
            return Err(Error::InvalidSpec(format!("rep column out of order at row {i}")));
        }
        for l in 0..dim {
            draws.push(parse(&rec, 1 + l, &cols[1 + l])?);
        }
        values.push(parse(&rec, dim + 1, "value")?);
        bnd.push(parse(&rec, dim + 2, "on_boundary")?);
    }
    EmpiricalLaw::new(dim, draws, values, bnd, master_seed)
}

/// Provenance stored next to a draw table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawSidecar {
    pub config_hash: String,
    pub master_seed: u64,
    pub dim: usize,
    pub replications: usize,
    pub boundary_fraction: f64,
    /// Free-form lattice or sample-size description.
    pub lattice: serde_json::Value,
}

impl LawSidecar {
    pub fn for_law(law: &EmpiricalLaw, config_hash: &str, lattice: serde_json::Value) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            master_seed: law.master_seed,
            dim: law.dim(),
            replications: law.replications(),
            boundary_fraction: law.boundary_fraction,
            lattice,
        }
    }
}

/// `draws.csv` → `draws.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_law_with_sidecar(path: &Path, law: &EmpiricalLaw, meta: &LawSidecar) -> Result<()> {
    write_law(path, law)?;
    write_json(&sidecar_path(path), meta)
}

pub fn read_law_with_sidecar(path: &Path) -> Result<(EmpiricalLaw, LawSidecar)> {
    let meta: LawSidecar = read_json(&sidecar_path(path))?;
    let law = read_law(path, meta.master_seed)?;
    Ok((law, meta))
}

pub fn write_atom_profiles(path: &Path, profiles: &[AtomProfile]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(ATOM_COLUMNS)?;
    for p in profiles {
        for lv in &p.levels {
            w.write_record([
                p.coordinate.to_string(),
                num(p.location),
                lv.ppu.to_string(),
                num(lv.h),
                num(lv.mass),
                num(lv.stderr),
                lv.replications.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_discontinuity(path: &Path, rep: &DiscontinuityReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(DISCONTINUITY_COLUMNS)?;
    for (q, e, s) in [
        ("p_neg", rep.p_neg, rep.se_neg),
        ("p_zero", rep.p_zero, rep.se_zero),
        ("p_pos", rep.p_pos, rep.se_pos),
        ("sup_quantile_check", rep.sup_quantile_check, rep.sup_quantile_se),
    ] {
        w.write_record([q.to_string(), num(e), num(s)])?;
    }
    w.flush()?;
    Ok(())
}

/// One KS distance per sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    pub n: usize,
    pub ks: f64,
    pub replications: usize,
}

pub fn write_ks(path: &Path, rows: &[KsRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(KS_COLUMNS)?;
    for r in rows {
        w.write_record([r.n.to_string(), num(r.ks), r.replications.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ks(path: &Path) -> Result<Vec<KsRow>> {
    read_table(path, KS_COLUMNS)?
        .iter()
        .map(|r| Ok(KsRow { n: parse(r, 0, "n")?, ks: parse(r, 1, "ks")?, replications: parse(r, 2, "replications")? }))
        .collect()
}

pub fn write_representation(path: &Path, report: &RepresentationReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RKHS_COLUMNS)?;
    for r in &report.rows {
        w.write_record([vec_cell(&r.s), vec_cell(&r.t), num(r.lhs), num(r.rhs), num(r.error), num(r.error_estimate)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coverage(path: &Path, report: &CoverageReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(COVERAGE_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.rep.to_string(),
            num(r.point),
            num(r.lo),
            num(r.hi),
            r.covered.to_string(),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn law_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("draws.csv");
        let law =
            EmpiricalLaw::new(2, vec![0.1, -0.25, 1.0 / 3.0, 2.0], vec![-1e-300, 7.5], vec![false, true], 9).unwrap();
        write_law(&path, &law).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("rep,s1,s2,value,on_boundary\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_law(&path, 9).unwrap(), law);
    }

    #[test]
    fn header_mismatch_names_the_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ks.csv");
        std::fs::write(&path, "n,distance,replications\n1,0.1,5\n").unwrap();
        let err = read_ks(&path).unwrap_err().to_string();
        assert!(err.contains("`ks`"), "{err}");
    }
}
