use std::fs;
use std::io::BufReader;
use std::path::Path;

use qniff::report::read_kde_curves;
use qniff::{emit_report, PosteriorSet, RunArtifacts};

use crate::error::{CliError, CliResult};
use crate::filter::FilterSummary;
use crate::rundir;

/// Collect posteriors, KDE curves and filter summaries found in `out`.
pub fn gather(out: &Path) -> CliResult<RunArtifacts> {
    let mut art = RunArtifacts::default();
    for path in rundir::list(out, "posterior_", ".json")? {
        let label = rundir::stem_between(&path, "posterior_", ".json");
        let p: PosteriorSet = rundir::read_json(&path)?;
        art.add_posterior(&label, &p);
        art.summary.notes.extend(p.diagnostics.warnings.iter().map(|w| format!("{label}: {w}")));
    }
    for path in rundir::list(out, "kde_", ".csv")? {
        let f = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
        art.kde_curves.extend(read_kde_curves(BufReader::new(f))?);
    }
    let summaries = rundir::list(out, "filter_summary_", ".json")?;
    let prefixed = summaries.len() > 1;
    for path in &summaries {
        let s: FilterSummary = rundir::read_json(path)?;
        for series in &s.series {
            let label =
                if prefixed { format!("{}:{}", s.mode.name(), series.method) } else { series.method.clone() };
            art.add_filter_series(&label, &series.slot_means);
            if let Some(first) = series.per_ensemble.first() {
                art.add_box_group(&label, first);
            }
        }
    }
    Ok(art)
}

pub fn cmd_report(out: &Path) -> CliResult<RunArtifacts> {
    if !out.is_dir() {
        return Err(CliError::Io(format!("{}: run directory does not exist", out.display())));
    }
    let art = gather(out)?;
    emit_report(out, &art)?;
    Ok(art)
}
