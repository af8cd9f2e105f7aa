//! CSV writers for every file the experiments emit.
//!
//! Floats use Rust's shortest round-trip formatting, so identical runs
//! produce identical bytes. Cell, user and subcarrier indices are 0-based;
//! iteration counters are 1-based.

use std::io::Write;

use crate::coordinator::{InitMode, RunState, SolverTraceRow};
use crate::error::Result;
use crate::ia::LeakageTraceRow;
use crate::rate::RateReport;
use crate::Assignment;

pub const RATE_HEADER: &str = "m,k,n,R_bits";
pub const TRAJECTORY_HEADER: &str = "iteration,cell,wsr_cell,wsr_global,delta";
pub const LEAKAGE_HEADER: &str = "restart,sweep,total_leakage,sum_capacity";
pub const SOLVER_HEADER: &str = "cell,outer_iter,inner_iter,objective,step";
pub const SUMMARY_HEADER: &str = "seed,mode,converged,iterations,final_wsr,messages_exchanged";
pub const SWEEP_HEADER: &str = "power_dbw,mode,mean_sumrate,stderr";

/// One row per link, then `m,all,all,<cell wsr>` per cell and a final
/// `wsr,all,all,<total>`.
pub fn write_rate_report<W: Write>(mut out: W, report: &RateReport, assignment: &Assignment) -> Result<()> {
    writeln!(out, "{RATE_HEADER}")?;
    for (m, row) in report.link_rates.iter().enumerate() {
        for (n, r) in row.iter().enumerate() {
            writeln!(out, "{m},{},{n},{r}", assignment.user(m, n))?;
        }
    }
    for (m, w) in report.cell_wsr.iter().enumerate() {
        writeln!(out, "{m},all,all,{w}")?;
    }
    writeln!(out, "wsr,all,all,{}", report.wsr)?;
    Ok(())
}

/// One row per `(iteration, cell)`; `delta` is the change of that cell's
/// weighted rate since the previous iteration, empty on the first.
pub fn write_trajectory<W: Write>(mut out: W, state: &RunState) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    let mut prev: Option<&[f64]> = None;
    for p in &state.trajectory {
        for (cell, w) in p.cell_wsr.iter().enumerate() {
            match prev {
                Some(before) => writeln!(out, "{},{cell},{w},{},{}", p.iteration, p.wsr, w - before[cell])?,
                None => writeln!(out, "{},{cell},{w},{},", p.iteration, p.wsr)?,
            }
        }
        prev = Some(&p.cell_wsr);
    }
    Ok(())
}

pub fn write_leakage_trace<W: Write>(mut out: W, rows: &[LeakageTraceRow]) -> Result<()> {
    writeln!(out, "{LEAKAGE_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.restart, r.sweep, r.total_leakage, r.sum_capacity)?;
    }
    Ok(())
}

pub fn write_solver_trace<W: Write>(mut out: W, rows: &[SolverTraceRow]) -> Result<()> {
    writeln!(out, "{SOLVER_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.cell, r.outer_iter, r.inner_iter, r.objective, r.step)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: u64,
    pub mode: InitMode,
    pub converged: bool,
    pub iterations: usize,
    pub final_wsr: f64,
    pub messages_exchanged: u64,
}

pub fn write_summary<W: Write>(mut out: W, rows: &[RunSummary]) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.seed, r.mode, r.converged, r.iterations, r.final_wsr, r.messages_exchanged
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub power_dbw: f64,
    pub mode: InitMode,
    pub mean_sumrate: f64,
    pub stderr: f64,
    pub per_seed: Vec<f64>,
}

pub fn write_sweep<W: Write>(mut out: W, points: &[SweepPoint]) -> Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.power_dbw, p.mode, p.mean_sumrate, p.stderr)?;
    }
    Ok(())
}
