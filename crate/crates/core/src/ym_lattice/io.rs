use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::diagnostics::{ConvergenceCertificate, EigenSummary, MaxPrinVerdict};
use super::{FlowTrace, TraceRecord};
use crate::{Error, Result};

pub const TRACE_HEADER: [&str; 7] = ["step", "time", "energy", "grad_norm", "min_lambda12", "eig_variance", "degree"];

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace_csv<W: Write>(trace: &FlowTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.step.to_string(),
            sci(r.time),
            sci(r.energy),
            sci(r.grad_norm),
            sci(r.min_lambda12),
            sci(r.eig_variance),
            r.degree.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_HEADER {
        return Err(Error::Domain(format!("unexpected trace header {header:?}")));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i].trim().parse::<f64>().map_err(|e| Error::Domain(format!("column {}: {e}", TRACE_HEADER[i])))
        };
        let int = |i: usize| -> Result<i64> {
            row[i].trim().parse::<i64>().map_err(|e| Error::Domain(format!("column {}: {e}", TRACE_HEADER[i])))
        };
        out.push(TraceRecord {
            step: int(0)? as usize,
            time: num(1)?,
            energy: num(2)?,
            grad_norm: num(3)?,
            min_lambda12: num(4)?,
            eig_variance: num(5)?,
            degree: int(6)?,
        });
    }
    Ok(out)
}

/// Final-state summary of a flow run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowReport {
    pub rank: usize,
    pub level: usize,
    pub final_eigenvalues_per_face_summary: EigenSummary,
    pub splitting_type: Vec<i64>,
    pub integrality_residual: f64,
    pub converged: bool,
    pub maxprin_verdicts: Option<MaxPrinVerdict>,
    pub degree: i64,
    pub degree_constant: bool,
    pub energy_monotone: bool,
    pub final_energy: f64,
    pub final_grad_norm: f64,
    pub steps_taken: usize,
    pub final_time: f64,
    pub mesh_h: f64,
    pub step_size: f64,
    pub cross_face_std: f64,
    pub cross_face_std_bound: f64,
}

impl FlowReport {
    pub fn new(trace: &FlowTrace, cert: &ConvergenceCertificate, maxprin: Option<MaxPrinVerdict>) -> Result<Self> {
        let last = trace.last().ok_or(Error::EmptyInput("flow trace"))?;
        Ok(Self {
            rank: trace.rank,
            level: trace.level,
            final_eigenvalues_per_face_summary: cert.eigenvalues.clone(),
            splitting_type: cert.splitting.clone(),
            integrality_residual: cert.integrality_residual,
            converged: trace.converged,
            maxprin_verdicts: maxprin,
            degree: cert.degree,
            degree_constant: trace.degree_constant(),
            energy_monotone: trace.energy_monotone(),
            final_energy: last.energy,
            final_grad_norm: last.grad_norm,
            steps_taken: trace.steps_taken,
            final_time: trace.final_time,
            mesh_h: trace.mesh_h,
            step_size: trace.step_size,
            cross_face_std: cert.max_std,
            cross_face_std_bound: cert.std_bound,
        })
    }
}
