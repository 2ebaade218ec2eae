//! CSV and run-log output.
//!
//! Every table has a header row. Currency columns are integer micro-units,
//! rates integer bps, bandwidth integer Hz and times integer microseconds,
//! so identical inputs always produce byte-identical files.

use std::io::Write;

use crate::allocator::Allocation;
use crate::protocol::LsaMessage;
use crate::sim::RunOutput;
use crate::sweep::{CostRatioRow, IncumbentRow};

pub const RUN_HEADER: [&str; 11] = [
    "time_us",
    "event",
    "active_incumbents",
    "available_hz",
    "served_dynamic",
    "revenue_dynamic_micros",
    "served_static",
    "revenue_static_micros",
    "churn",
    "evacuation_displaced",
    "evacuation_compliant",
];

pub const ALLOCATION_HEADER: [&str; 7] = ["time_us", "system", "mvno", "served", "antennas", "channels", "rate_bps"];

pub const INCUMBENT_SWEEP_HEADER: [&str; 5] = [
    "active_incumbents",
    "served_dynamic",
    "served_static",
    "revenue_dynamic_micros",
    "revenue_static_micros",
];

pub const COST_SWEEP_HEADER: [&str; 7] = [
    "ratio",
    "cost_per_hz_micros",
    "cost_per_antenna_micros",
    "served_dynamic",
    "served_static",
    "revenue_dynamic_micros",
    "revenue_static_micros",
];

/// One row per simulation record.
pub fn write_run_csv<W: Write>(out: W, run: &RunOutput) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_HEADER)?;
    for r in &run.records {
        let (served_static, revenue_static) = match &r.baseline {
            Some(b) => (b.served_count().to_string(), b.revenue.0.to_string()),
            None => (String::new(), String::new()),
        };
        let (displaced, compliant) = match &r.evacuation {
            Some(e) => (
                e.displaced.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(";"),
                e.compliant().to_string(),
            ),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.time.0.to_string(),
            r.event.as_ref().map_or_else(|| "init".to_owned(), ToString::to_string),
            r.active_incumbents.to_string(),
            r.available.0.to_string(),
            r.dynamic.served_count().to_string(),
            r.dynamic.revenue.0.to_string(),
            served_static,
            revenue_static,
            r.churn.to_string(),
            displaced,
            compliant,
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_allocation<W: Write>(w: &mut csv::Writer<W>, time: u64, system: &str, a: &Allocation) -> csv::Result<()> {
    for e in &a.entries {
        let channels: Vec<String> = e.channels.iter().map(usize::to_string).collect();
        w.write_record([
            time.to_string(),
            system.to_owned(),
            e.id.to_string(),
            e.served.to_string(),
            e.antennas.to_string(),
            channels.join(";"),
            e.rate.0.to_string(),
        ])?;
    }
    Ok(())
}

/// Per-licensee detail: one row per (record, system, licensee).
pub fn write_allocations_csv<W: Write>(out: W, run: &RunOutput) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ALLOCATION_HEADER)?;
    for r in &run.records {
        write_allocation(&mut w, r.time.0, "dynamic", &r.dynamic)?;
        if let Some(b) = &r.baseline {
            write_allocation(&mut w, r.time.0, "static", b)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_incumbent_sweep_csv<W: Write>(out: W, rows: &[IncumbentRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(INCUMBENT_SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.active_incumbents.to_string(),
            r.dynamic.served_count().to_string(),
            r.baseline.served_count().to_string(),
            r.dynamic.revenue.0.to_string(),
            r.baseline.revenue.0.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cost_sweep_csv<W: Write>(out: W, rows: &[CostRatioRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COST_SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.ratio.to_string(),
            r.cost.per_hz.0.to_string(),
            r.cost.per_antenna.0.to_string(),
            r.dynamic.served_count().to_string(),
            r.baseline.served_count().to_string(),
            r.dynamic.revenue.0.to_string(),
            r.baseline.revenue.0.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Protocol trace, one tab-separated line per message:
/// `time_us kind sender receiver channels`.
pub fn write_log<W: Write>(mut out: W, log: &[LsaMessage]) -> std::io::Result<()> {
    for m in log {
        writeln!(out, "{}", m.log_line())?;
    }
    out.flush()
}
