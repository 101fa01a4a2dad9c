//! CSV and summary emission for run outputs.

use std::io::{Read, Write};

use crate::analysis::{fit_exponential, fit_polynomial, monotonicity_defect, DecayFit, EnergySeries};
use crate::error::{Error, Result};
use crate::kernels::{decay_rate_predictor, kappa, vartheta};
use crate::stepper::{Model, RunOutput, SimConfig, Snapshot, TraceRow};

pub const ENERGY_HEADER: [&str; 2] = ["t", "E"];
pub const SNAPSHOT_HEADER: [&str; 3] = ["t", "x", "y"];
pub const TRACE_HEADER: [&str; 4] = ["t", "trace", "y1_node", "yM1_node"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(io_err)?;
    Ok(out)
}

fn records<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let found: Vec<String> = rdr.headers().map_err(io_err)?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Parse(format!("expected header {}, found {}", header.join(","), found.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(io_err)?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch { expected: header.len(), got: row.len() });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `t,E` with 17 significant digits, so values read back bit-identically.
pub fn write_energy_csv<W: Write>(w: W, series: &EnergySeries) -> Result<()> {
    let mut out = writer(w, &ENERGY_HEADER)?;
    for (t, e) in series.times().iter().zip(series.energies()) {
        out.write_record([num(*t), num(*e)]).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_energy_csv<R: Read>(r: R) -> Result<EnergySeries> {
    let rows = records(r, &ENERGY_HEADER)?;
    EnergySeries::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
}

/// Rows `(t, x, y)` for every node of every snapshot, in time then space order.
pub fn write_snapshots_csv<W: Write>(w: W, snapshots: &[Snapshot], dx: f64) -> Result<()> {
    let mut out = writer(w, &SNAPSHOT_HEADER)?;
    for s in snapshots {
        for (i, y) in s.nodes.iter().enumerate() {
            out.write_record([num(s.t), num(i as f64 * dx), num(*y)]).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

pub fn read_snapshots_csv<R: Read>(r: R) -> Result<Vec<Snapshot>> {
    let mut snaps: Vec<Snapshot> = Vec::new();
    for row in records(r, &SNAPSHOT_HEADER)? {
        match snaps.last_mut() {
            Some(s) if s.t == row[0] => s.nodes.push(row[2]),
            _ => snaps.push(Snapshot { t: row[0], nodes: vec![row[2]] }),
        }
    }
    Ok(snaps)
}

pub fn write_trace_csv<W: Write>(w: W, rows: &[TraceRow]) -> Result<()> {
    let mut out = writer(w, &TRACE_HEADER)?;
    for r in rows {
        out.write_record([num(r.t), num(r.trace), num(r.y1), num(r.y_m1)]).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn read_trace_csv<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    Ok(records(r, &TRACE_HEADER)?
        .into_iter()
        .map(|r| TraceRow { t: r[0], trace: r[1], y1: r[2], y_m1: r[3] })
        .collect())
}

fn push_fit(out: &mut Vec<(String, String)>, prefix: &str, fit: Result<DecayFit>) {
    match fit {
        Ok(f) => {
            out.push((format!("{prefix}_rate"), format!("{:.10e}", f.rate)));
            out.push((format!("{prefix}_r2"), format!("{:.10}", f.r2)));
            out.push((format!("{prefix}_amplitude"), format!("{:.10e}", f.amplitude)));
            out.push((format!("{prefix}_degenerate"), f.degenerate.to_string()));
        }
        Err(e) => out.push((format!("{prefix}_rate"), format!("unavailable ({e})"))),
    }
}

/// Key-value summary of a finished run.
pub fn summary(cfg: &SimConfig, out: &RunOutput) -> Vec<(String, String)> {
    let mut s: Vec<(String, String)> = Vec::new();
    let mut kv = |k: &str, v: String| s.push((k.to_string(), v));
    kv("model", cfg.model.name().to_string());
    kv("kernel", cfg.kernel.to_string());
    kv("M", cfg.m.to_string());
    kv("dt", format!("{:?}", cfg.dt));
    kv("T", format!("{:?}", cfg.t_final));
    kv("L", cfg.l.to_string());
    kv("s_f", format!("{:?}", cfg.s_f));
    kv("steps", out.steps.len().to_string());
    kv("hypotheses", if out.hypothesis.passed { "PASS".into() } else { "FAIL".into() });
    kv("alpha0", format!("{:.15e}", out.hypothesis.alpha0));
    kv("alpha0_bound", format!("{:.15e}", out.hypothesis.bound()));
    match &cfg.model {
        Model::Kdvb(p) => {
            match kappa(&cfg.kernel, p) {
                Ok(m) => {
                    kv("kappa", format!("{:.10e}", m.value));
                    kv("kappa_eps", format!("{:.10e}", m.eps));
                }
                Err(e) => kv("kappa", format!("unavailable ({e})")),
            }
            if let Some(c) = decay_rate_predictor(&cfg.kernel, p) {
                kv("predicted_rate", format!("{c:.10e}"));
            }
        }
        Model::Ks(p) => match vartheta(&cfg.kernel, p) {
            Ok(m) => {
                kv("vartheta", format!("{:.10e}", m.value));
                kv("vartheta_eps", format!("{:.10e}", m.eps));
            }
            Err(e) => kv("vartheta", format!("unavailable ({e})")),
        },
    }
    let e = &out.energy;
    if let (Some(first), Some(last)) = (e.energies().first(), e.energies().last()) {
        kv("energy_initial", format!("{first:.16e}"));
        kv("energy_final", format!("{last:.16e}"));
    }
    kv("monotonicity_defect", format!("{:.6e}", monotonicity_defect(e)));
    let window = e.default_window();
    kv("fit_window", format!("{:?}, {:?}", window.0, window.1));
    push_fit(&mut s, "exp_fit", fit_exponential(e, window));
    push_fit(&mut s, "poly_fit", fit_polynomial(e, window));
    s.push(("max_picard_iterations".into(), out.max_picard_iterations().to_string()));
    if matches!(cfg.model, Model::Ks(_)) {
        s.push(("max_closure_residual".into(), format!("{:.6e}", out.max_closure_residual())));
    }
    s
}

pub fn write_summary<W: Write>(mut w: W, entries: &[(String, String)]) -> Result<()> {
    for (k, v) in entries {
        writeln!(w, "{k} = {v}").map_err(io_err)?;
    }
    Ok(())
}
