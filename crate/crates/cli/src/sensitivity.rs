use std::path::Path;

use qniff::{qoi_derivative, sensitivity_sweep, simulate_ideal, Curve, ModelSpec, NoiseParams, SweepParam};
use serde::{Deserialize, Serialize};

use crate::config::{gates_per_qubit, Resolved};
use crate::error::{CliError, CliResult};
use crate::rundir;

/// Finite-difference step for the derivative table.
pub const DERIVATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub parameter: String,
    /// `None` when the parameter sits at 0 and a central difference would
    /// leave the valid range.
    pub dq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub param: String,
    pub target: String,
    pub m: u32,
    pub at: NoiseParams,
    pub derivatives: Vec<Derivative>,
    /// `|dQ/d eps_g| / max_i |dQ/d eps_m0_i|`.
    pub gate_to_readout_ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SweepRow<'a> {
    parameter: &'a str,
    value: f64,
    qoi: f64,
}

fn derivative(spec: &ModelSpec, which: SweepParam, at: &NoiseParams) -> CliResult<Option<f64>> {
    let x = at.to_vec()[which.index(spec.n_qubits)?];
    if x <= 0.0 {
        return Ok(None);
    }
    let h = DERIVATIVE_STEP.min(x / 2.0);
    Ok(Some(qoi_derivative(spec, which, at, h)?))
}

pub fn cmd_sensitivity(r: &Resolved, out: &Path) -> CliResult<(Curve, SensitivityReport)> {
    rundir::ensure_dir(out)?;
    let cfg = &r.config.sensitivity;
    let n = r.n_qubits();
    let m = r.config.inference.m.unwrap_or_else(|| gates_per_qubit(&r.circuit));
    let spec = ModelSpec::new(simulate_ideal(&r.circuit), m, r.qoi_target()?)?;
    let which = SweepParam::parse(&cfg.param)?;
    let curve = sensitivity_sweep(&spec, which, cfg.range, cfg.steps, &r.truth)?;

    let mut params = vec![SweepParam::EpsG];
    params.extend((0..n).map(SweepParam::EpsM0));
    params.extend((0..n).map(SweepParam::EpsM1));
    let derivatives = params
        .iter()
        .map(|&p| Ok(Derivative { parameter: p.name(), dq: derivative(&spec, p, &r.truth)? }))
        .collect::<CliResult<Vec<_>>>()?;
    let gate = derivatives[0].dq;
    let readout = derivatives[1..=n].iter().filter_map(|d| d.dq).map(f64::abs).fold(None, |a: Option<f64>, v| {
        Some(a.map_or(v, |a| a.max(v)))
    });
    let ratio = match (gate, readout) {
        (Some(g), Some(m)) if m > 0.0 => Some(g.abs() / m),
        _ => None,
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    for (x, y) in curve.xs.iter().zip(&curve.ys) {
        w.serialize(SweepRow { parameter: &curve.label, value: *x, qoi: *y }).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    rundir::write_bytes(&out.join(rundir::SENSITIVITY_CSV), &bytes)?;

    let report = SensitivityReport {
        param: cfg.param.clone(),
        target: spec.qoi_target.clone(),
        m,
        at: r.truth.clone(),
        derivatives,
        gate_to_readout_ratio: ratio,
    };
    rundir::write_json(&out.join(rundir::SENSITIVITY_JSON), &report)?;
    Ok((curve, report))
}
