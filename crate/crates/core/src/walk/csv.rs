//! CSV export of walk traces.
//!
//! `log_max_height` and `log_sum_height` are `ln m_n` and `ln s_n`, so the running
//! `2m_n − s_n` is recoverable without overflow.

use std::io::Write;

use super::exact::WalkTrace;
use super::ledger::LedgerTrace;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "step",
    "core_kind",
    "core_param",
    "shear",
    "log_height_upper",
    "log_max_height",
    "log_sum_height",
    "neg_log_delta",
    "certificate",
    "certificate_log",
];

fn io(e: impl std::fmt::Display) -> Error {
    Error::invalid(format!("csv: {e}"))
}

fn rows<W: Write>(
    out: W,
    ledger: &LedgerTrace,
    shear: impl Fn(usize) -> String,
    neg_log: impl Fn(usize) -> String,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for k in 0..ledger.len() {
        let (kind, param) = ledger.cores[k].label();
        let (cert, cert_log) = match &ledger.certificates[k] {
            Some(c) => (
                c.value.to_string(),
                c.log_value.map(|l| l.to_string()).unwrap_or_default(),
            ),
            None => (String::new(), String::new()),
        };
        w.write_record([
            (k + 1).to_string(),
            kind.to_string(),
            param,
            shear(k),
            ledger.heights_upper[k].to_string(),
            ledger.running_max[k].to_string(),
            ledger.running_sum[k].to_string(),
            neg_log(k),
            cert,
            cert_log,
        ])
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Ledger trace rows; the shear and `neg_log_delta` columns stay empty.
pub fn write_ledger_csv<W: Write>(out: W, trace: &LedgerTrace) -> Result<()> {
    rows(out, trace, |_| String::new(), |_| String::new())
}

/// Exact trace rows with the left-order `−log δ`.
pub fn write_walk_csv<W: Write>(out: W, trace: &WalkTrace) -> Result<()> {
    rows(
        out,
        &trace.ledger,
        |k| trace.steps[k].shear_string(),
        |k| trace.systoles[k].neg_log_delta.mid_f64().to_string(),
    )
}
