//! BER tables as CSV.
//!
//! Rows are sorted by modulation (in [`Modulation::ALL`] order) and then by
//! SNR. Numbers are printed with fixed formats so identical results always
//! produce identical bytes.

use std::io::{self, Write};

use crate::link::BerRecord;
use crate::modem::Modulation;

pub const CSV_HEADER: &str = "modulation,snr_db,eb_n0_db,bits,errors,ber,trials";

/// Formats one record without the trailing newline.
pub fn format_row(r: &BerRecord) -> String {
    format!(
        "{},{},{:.4},{},{},{:.5e},{}",
        r.modulation.name(),
        r.snr_db,
        r.eb_n0_db,
        r.bits,
        r.errors,
        r.ber(),
        r.trials
    )
}

pub fn write_csv<W: Write>(mut out: W, records: &[BerRecord]) -> io::Result<()> {
    let mut sorted: Vec<&BerRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.modulation.cmp(&b.modulation).then(a.snr_db.total_cmp(&b.snr_db)));
    writeln!(out, "{CSV_HEADER}")?;
    for r in sorted {
        writeln!(out, "{}", format_row(r))?;
    }
    Ok(())
}

pub fn to_csv_string(records: &[BerRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// One parsed CSV row. `ber` is kept as printed, since it is rounded.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub modulation: Modulation,
    pub snr_db: f64,
    pub eb_n0_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub trials: u64,
}

/// Reads back a file produced by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        other => return Err(format!("bad header: {:?}", other.map(|(_, h)| h))),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(format!("line {}: expected 7 fields, got {}", idx + 1, f.len()));
        }
        let bad = |what: &str| format!("line {}: bad {what}", idx + 1);
        rows.push(CsvRow {
            modulation: f[0].parse().map_err(|_| bad("modulation"))?,
            snr_db: f[1].parse().map_err(|_| bad("snr_db"))?,
            eb_n0_db: f[2].parse().map_err(|_| bad("eb_n0_db"))?,
            bits: f[3].parse().map_err(|_| bad("bits"))?,
            errors: f[4].parse().map_err(|_| bad("errors"))?,
            ber: f[5].parse().map_err(|_| bad("ber"))?,
            trials: f[6].parse().map_err(|_| bad("trials"))?,
        });
    }
    Ok(rows)
}
