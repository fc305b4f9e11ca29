//! CSV emission and parsing for simulation traces.
//!
//! Fixed 20-column schema, one row per decimated step, strictly increasing
//! time. Values are written in Rust's shortest round-trippable decimal form,
//! so parsing an emitted file recovers every value bit-exactly.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::sim::SimRecord;

pub const CSV_HEADER: &str = "t,q1,q2,qd1,qd2,dq1,dq2,e1,e2,u1,u2,tau1,tau2,Psi1,Psi2,zeta,N_zeta,kappa_delta,psi_hat_norm,v_track";
pub const CSV_COLUMNS: usize = 20;

/// Writes the header and one row per record.
pub fn write_records<W: Write>(mut w: W, records: &[SimRecord]) -> io::Result<()> {
    let mut line = String::with_capacity(512);
    writeln!(w, "{CSV_HEADER}")?;
    for record in records {
        line.clear();
        for (i, value) in record.csv_fields().iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{value}");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Writes a trace to `path`, replacing any existing file.
pub fn write_csv_file(path: &Path, records: &[SimRecord]) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buffered = io::BufWriter::new(file);
    write_records(&mut buffered, records)?;
    buffered.flush()
}

/// Parses an emitted trace back into raw rows. Rejects a wrong header or a
/// wrong column count.
pub fn parse_csv(text: &str) -> Result<Vec<[f64; CSV_COLUMNS]>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        Some(header) => return Err(format!("unexpected header: {header}")),
        None => return Err("empty file".into()),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != CSV_COLUMNS {
            return Err(format!(
                "row {}: expected {CSV_COLUMNS} columns, got {}",
                idx + 2,
                fields.len()
            ));
        }
        let mut row = [0.0; CSV_COLUMNS];
        for (slot, field) in row.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .map_err(|e| format!("row {}: bad field {field:?}: {e}", idx + 2))?;
        }
        rows.push(row);
    }
    Ok(rows)
}
