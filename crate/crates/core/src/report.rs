//! Plot-ready CSV artifacts and the JSON run summary.
//!
//! | file | columns |
//! |------|---------|
//! | `kde_curves.csv` | `label,x,density` |
//! | `filter_comparison.csv` | `method,time_slot,value` |
//! | `boxplot_data.csv` | `group,sample` |
//! | `posterior_samples.csv` | `label,sample_id,parameter,value` |
//!
//! `run_summary.json` holds one row per (label, method) inference result
//! and one row per filtering method, each with per-time-slot values.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::inference::PosteriorSet;
use crate::metrics::Curve;

pub const KDE_CURVES: &str = "kde_curves.csv";
pub const FILTER_COMPARISON: &str = "filter_comparison.csv";
pub const BOXPLOT_DATA: &str = "boxplot_data.csv";
pub const POSTERIOR_SAMPLES: &str = "posterior_samples.csv";
pub const RUN_SUMMARY: &str = "run_summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KdeRow {
    label: String,
    x: f64,
    density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRow {
    pub method: String,
    pub time_slot: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub group: String,
    pub sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorRow {
    pub label: String,
    pub sample_id: usize,
    pub parameter: String,
    pub value: f64,
}

/// One inference result, shaped like a column of a posterior table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRow {
    pub label: String,
    pub method: String,
    pub param_names: Vec<String>,
    pub acceptance_rate: f64,
    pub posterior_mean: Vec<f64>,
    pub posterior_map: Vec<f64>,
    pub kl_div: Option<f64>,
    pub prior_kl_div: Option<f64>,
}

impl InferenceRow {
    pub fn from_posterior(label: impl Into<String>, ps: &PosteriorSet) -> Self {
        Self {
            label: label.into(),
            method: ps.method.name().into(),
            param_names: ps.param_names.clone(),
            acceptance_rate: ps.acceptance_rate,
            posterior_mean: ps.mean_tuple.to_vec(),
            posterior_map: ps.map_tuple.to_vec(),
            kl_div: ps.pushforward_kl,
            prior_kl_div: ps.prior_pushforward_kl,
        }
    }
}

/// Filtered target probability per time slot for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSummaryRow {
    pub method: String,
    pub per_slot: Vec<f64>,
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub inference: Vec<InferenceRow>,
    pub filtering: Vec<FilterSummaryRow>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Everything `emit_report` writes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunArtifacts {
    pub kde_curves: Vec<Curve>,
    pub filter_comparison: Vec<FilterRow>,
    pub boxplot: Vec<BoxRow>,
    pub posterior_samples: Vec<PosteriorRow>,
    pub summary: RunSummary,
}

impl RunArtifacts {
    /// Long-format rows for every sample in `ps`.
    pub fn add_posterior(&mut self, label: &str, ps: &PosteriorSet) {
        for (id, s) in ps.accepted.iter().enumerate() {
            for (name, v) in ps.param_names.iter().zip(s) {
                self.posterior_samples.push(PosteriorRow {
                    label: label.to_string(),
                    sample_id: id,
                    parameter: name.clone(),
                    value: *v,
                });
            }
        }
        self.summary.inference.push(InferenceRow::from_posterior(label, ps));
    }

    /// Filter rows plus the summary row derived from them.
    pub fn add_filter_series(&mut self, method: &str, per_slot: &[f64]) {
        for (t, v) in per_slot.iter().enumerate() {
            self.filter_comparison.push(FilterRow { method: method.to_string(), time_slot: t, value: *v });
        }
        let mean = (!per_slot.is_empty()).then(|| per_slot.iter().sum::<f64>() / per_slot.len() as f64);
        self.summary.filtering.push(FilterSummaryRow { method: method.to_string(), per_slot: per_slot.to_vec(), mean });
    }

    pub fn add_box_group(&mut self, group: &str, samples: &[f64]) {
        self.boxplot.extend(samples.iter().map(|s| BoxRow { group: group.to_string(), sample: *s }));
    }
}

fn write_rows<W: Write, T: Serialize>(w: W, header: &[&str], rows: &[T]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: DeserializeOwned>(r: R) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn write_kde_curves<W: Write>(w: W, curves: &[Curve]) -> Result<()> {
    let rows: Vec<KdeRow> = curves
        .iter()
        .flat_map(|c| c.xs.iter().zip(&c.ys).map(|(x, y)| KdeRow { label: c.label.clone(), x: *x, density: *y }))
        .collect();
    write_rows(w, &["label", "x", "density"], &rows)
}

/// Curves in first-appearance order of their labels.
pub fn read_kde_curves<R: Read>(r: R) -> Result<Vec<Curve>> {
    let rows: Vec<KdeRow> = read_rows(r)?;
    let mut curves: Vec<Curve> = Vec::new();
    for row in rows {
        match curves.iter_mut().find(|c| c.label == row.label) {
            Some(c) => {
                c.xs.push(row.x);
                c.ys.push(row.density);
            }
            None => curves.push(Curve { label: row.label, xs: vec![row.x], ys: vec![row.density] }),
        }
    }
    Ok(curves)
}

pub fn write_filter_comparison<W: Write>(w: W, rows: &[FilterRow]) -> Result<()> {
    write_rows(w, &["method", "time_slot", "value"], rows)
}

pub fn read_filter_comparison<R: Read>(r: R) -> Result<Vec<FilterRow>> {
    read_rows(r)
}

pub fn write_boxplot<W: Write>(w: W, rows: &[BoxRow]) -> Result<()> {
    write_rows(w, &["group", "sample"], rows)
}

pub fn read_boxplot<R: Read>(r: R) -> Result<Vec<BoxRow>> {
    read_rows(r)
}

pub fn write_posterior_samples<W: Write>(w: W, rows: &[PosteriorRow]) -> Result<()> {
    write_rows(w, &["label", "sample_id", "parameter", "value"], rows)
}

pub fn read_posterior_samples<R: Read>(r: R) -> Result<Vec<PosteriorRow>> {
    read_rows(r)
}

/// Write the four CSVs and `run_summary.json` into `dir`, creating it if
/// needed. Output depends only on `artifacts`.
pub fn emit_report(dir: &Path, artifacts: &RunArtifacts) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    write_kde_curves(open(KDE_CURVES)?, &artifacts.kde_curves)?;
    write_filter_comparison(open(FILTER_COMPARISON)?, &artifacts.filter_comparison)?;
    write_boxplot(open(BOXPLOT_DATA)?, &artifacts.boxplot)?;
    write_posterior_samples(open(POSTERIOR_SAMPLES)?, &artifacts.posterior_samples)?;
    let mut w = open(RUN_SUMMARY)?;
    serde_json::to_writer_pretty(&mut w, &artifacts.summary)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Read back everything [`emit_report`] wrote.
pub fn load_report(dir: &Path) -> Result<RunArtifacts> {
    let open = |name: &str| File::open(dir.join(name));
    Ok(RunArtifacts {
        kde_curves: read_kde_curves(open(KDE_CURVES)?)?,
        filter_comparison: read_filter_comparison(open(FILTER_COMPARISON)?)?,
        boxplot: read_boxplot(open(BOXPLOT_DATA)?)?,
        posterior_samples: read_posterior_samples(open(POSTERIOR_SAMPLES)?)?,
        summary: serde_json::from_reader(open(RUN_SUMMARY)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awkward_floats() -> Vec<f64> {
        vec![0.1, 1.0 / 3.0, 1e-300, 5e-324, 0.567_098_372_293_405_6, -0.0, 123_456_789.123_456_79]
    }

    #[test]
    fn empty_run_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(dir.path(), &RunArtifacts::default()).unwrap();
        let read = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(read(KDE_CURVES), "label,x,density\n");
        assert_eq!(read(FILTER_COMPARISON), "method,time_slot,value\n");
        assert_eq!(read(BOXPLOT_DATA), "group,sample\n");
        assert_eq!(read(POSTERIOR_SAMPLES), "label,sample_id,parameter,value\n");
        assert_eq!(load_report(dir.path()).unwrap(), RunArtifacts::default());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let xs: Vec<f64> = (0..7).map(|i| i as f64 * 0.1 + 1e-17).collect();
        let mut a = RunArtifacts {
            kde_curves: vec![
                Curve::new("obs", xs.clone(), awkward_floats()).unwrap(),
                Curve::new("post, \"quoted\"", xs, awkward_floats().into_iter().rev().collect()).unwrap(),
            ],
            ..Default::default()
        };
        a.add_filter_series("raw", &awkward_floats());
        a.add_filter_series("bjw_mean", &[0.9128, 0.91]);
        a.add_box_group("calibration_filter", &awkward_floats());
        a.posterior_samples.push(PosteriorRow {
            label: "q0".into(),
            sample_id: 0,
            parameter: "eps_m0_0".into(),
            value: 0.049_999_999_999_999_996,
        });
        a.summary.notes.push("synthetic".into());
        let dir = tempfile::tempdir().unwrap();
        emit_report(dir.path(), &a).unwrap();
        let b = load_report(dir.path()).unwrap();
        assert_eq!(a.kde_curves.len(), b.kde_curves.len());
        for (x, y) in a.kde_curves.iter().zip(&b.kde_curves) {
            assert_eq!(x.label, y.label);
            assert_eq!(x.xs.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), y.xs.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            assert_eq!(x.ys.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), y.ys.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
        assert_eq!(a.filter_comparison, b.filter_comparison);
        assert_eq!(a.boxplot, b.boxplot);
        assert_eq!(a.posterior_samples, b.posterior_samples);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn emission_is_idempotent() {
        let mut a = RunArtifacts::default();
        a.add_filter_series("raw", &[0.67, 0.66]);
        let dir = tempfile::tempdir().unwrap();
        emit_report(dir.path(), &a).unwrap();
        let first = std::fs::read(dir.path().join(RUN_SUMMARY)).unwrap();
        emit_report(dir.path(), &a).unwrap();
        assert_eq!(first, std::fs::read(dir.path().join(RUN_SUMMARY)).unwrap());
    }
}
