use std::path::Path;

use qniff::linalg::basis_string;
use qniff::{
    build_g, calibration_filter, gate_filter, meas_matrix, simulate_ideal, CombinedFilter, MeasFilter, ModelSpec,
    NoiseParams, PosteriorSet, ProbVector, ShotEnsemble,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{gates_per_qubit, FilterMode, Resolved};
use crate::error::{CliError, CliResult};
use crate::rundir::{self, calibration_file, slot_file};

/// One filtered series: target probability per ensemble, per time slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSeries {
    pub method: String,
    /// Parameters the filter was built from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<NoiseParams>,
    pub slot_means: Vec<f64>,
    pub per_ensemble: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub mode: FilterMode,
    pub target: String,
    pub time_slots: usize,
    pub series: Vec<FilterSeries>,
}

impl FilterSummary {
    pub fn series(&self, method: &str) -> Option<&FilterSeries> {
        self.series.iter().find(|s| s.method == method)
    }
}

#[derive(Debug, Serialize)]
struct FilteredRow<'a> {
    method: &'a str,
    time_slot: usize,
    ensemble_id: usize,
    basis_string: String,
    probability: f64,
}

enum Filter {
    Raw,
    Meas(MeasFilter),
    Gate(qniff::GateFilterMatrix),
    Combined(CombinedFilter),
    Calibration(qniff::CalibrationFilter),
}

impl Filter {
    fn apply(&self, r: &ProbVector) -> qniff::Result<ProbVector> {
        match self {
            Filter::Raw => Ok(r.clone()),
            Filter::Meas(f) => f.apply(r),
            Filter::Gate(g) => gate_filter(g, r),
            Filter::Combined(f) => f.apply(r),
            Filter::Calibration(f) => f.apply(r),
        }
    }
}

fn build(mode: FilterMode, lambda: &NoiseParams, spec: &ModelSpec) -> CliResult<Filter> {
    lambda.validate_for_filter()?;
    Ok(match mode {
        FilterMode::Meas => Filter::Meas(MeasFilter::new(&meas_matrix(lambda, spec.n_qubits)?)?),
        FilterMode::Gate => Filter::Gate(build_g(lambda.eps_g, spec.m, spec.n_qubits)?),
        FilterMode::Combined => Filter::Combined(CombinedFilter::new(lambda, spec)?),
        FilterMode::Calibration => unreachable!("calibration filters are built from data"),
    })
}

/// Mean or MAP tuple of the stored posterior for `method`. Per-qubit runs
/// contribute their own readout rates; `eps_g` comes from qubit 0.
pub fn posterior_params(out: &Path, method: &str, tuple: &str, n: usize) -> CliResult<NoiseParams> {
    let pick = |p: &PosteriorSet| if tuple == "map" { p.map_tuple.clone() } else { p.mean_tuple.clone() };
    let joint = out.join(rundir::posterior_file(method));
    if joint.exists() {
        let p: PosteriorSet = rundir::read_json(&joint)?;
        let lambda = pick(&p);
        if lambda.n_qubits() != n {
            return Err(CliError::Validation(format!(
                "{} describes {} qubits, data has {n}",
                joint.display(),
                lambda.n_qubits()
            )));
        }
        return Ok(lambda);
    }
    let mut eps_g = None;
    let (mut e0, mut e1) = (Vec::new(), Vec::new());
    for q in 0..n {
        let path = out.join(rundir::posterior_file(&format!("{method}_q{q}")));
        let p: PosteriorSet = rundir::read_json(&path)?;
        let lambda = pick(&p);
        if lambda.n_qubits() != 1 {
            return Err(CliError::Validation(format!("{} is not a single-qubit posterior", path.display())));
        }
        eps_g.get_or_insert(lambda.eps_g);
        e0.push(lambda.eps_m0[0]);
        e1.push(lambda.eps_m1[0]);
    }
    Ok(NoiseParams::new(eps_g.unwrap_or(0.0), e0, e1)?)
}

fn filter_spec(r: &Resolved) -> CliResult<ModelSpec> {
    let m = r.config.inference.m.unwrap_or_else(|| gates_per_qubit(&r.circuit));
    Ok(ModelSpec::new(simulate_ideal(&r.circuit), m, r.qoi_target()?)?)
}

pub fn cmd_filter(r: &Resolved, out: &Path) -> CliResult<FilterSummary> {
    let cfg = &r.config;
    let n = r.n_qubits();
    let mode = cfg.filter.mode;
    let spec = filter_spec(r)?;
    let target = spec.target_index();

    let mut filters: Vec<(String, Option<NoiseParams>, Filter)> = vec![("raw".into(), None, Filter::Raw)];
    let cal_paths: Vec<_> = (0..1usize << n).map(|j| out.join(calibration_file(&basis_string(j, n)))).collect();
    if mode == FilterMode::Calibration || cal_paths.iter().all(|p| p.exists()) {
        let cal = cal_paths
            .iter()
            .map(|p| rundir::read_ensemble(p, cfg.seed))
            .collect::<CliResult<Vec<ShotEnsemble>>>()?;
        filters.push(("calibration_filter".into(), None, Filter::Calibration(calibration_filter(&cal)?)));
    }
    if mode != FilterMode::Calibration {
        for method in cfg.method.methods() {
            for tuple in ["mean", "map"] {
                let lambda = posterior_params(out, method.name(), tuple, n)?;
                let f = build(mode, &lambda, &spec)?;
                filters.push((format!("{}_{tuple}", method.name()), Some(lambda), f));
            }
        }
        if cfg.filter.include_truth {
            filters.push(("truth".into(), Some(r.truth.clone()), build(mode, &r.truth, &spec)?));
        }
    }

    let slots = (0..cfg.filter.time_slots)
        .map(|t| rundir::read_ensemble(&out.join(slot_file(t)), cfg.seed))
        .collect::<CliResult<Vec<_>>>()?;
    for (t, e) in slots.iter().enumerate() {
        if e.n_qubits() != n {
            return Err(CliError::Validation(format!("{} has {} qubits, expected {n}", slot_file(t), e.n_qubits())));
        }
    }

    let mut csv_out = csv::Writer::from_writer(Vec::new());
    let mut series = Vec::new();
    for (name, params, f) in &filters {
        let mut per_ensemble = Vec::with_capacity(slots.len());
        for (t, e) in slots.iter().enumerate() {
            let filtered = (0..e.n_ensembles())
                .into_par_iter()
                .map(|k| f.apply(&e.frequencies(k)))
                .collect::<qniff::Result<Vec<_>>>()?;
            for (k, p) in filtered.iter().enumerate() {
                for (x, v) in p.values().iter().enumerate() {
                    csv_out
                        .serialize(FilteredRow {
                            method: name,
                            time_slot: t,
                            ensemble_id: k,
                            basis_string: basis_string(x, n),
                            probability: *v,
                        })
                        .map_err(|e| CliError::Io(e.to_string()))?;
                }
            }
            per_ensemble.push(filtered.iter().map(|p| p.get(target)).collect::<Vec<f64>>());
        }
        let slot_means = per_ensemble.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
        series.push(FilterSeries { method: name.clone(), params: params.clone(), slot_means, per_ensemble });
    }
    let bytes = csv_out.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    rundir::write_bytes(&out.join(rundir::filtered_file(mode.name())), &bytes)?;

    let summary = FilterSummary { mode, target: spec.qoi_target.clone(), time_slots: slots.len(), series };
    rundir::write_json(&out.join(rundir::filter_summary_file(mode.name())), &summary)?;
    Ok(summary)
}
