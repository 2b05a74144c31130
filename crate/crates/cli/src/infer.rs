use std::path::Path;

use qniff::inference::standard_infer_with;
use qniff::linalg::basis_string;
use qniff::metrics::Curve;
use qniff::report::write_kde_curves;
use qniff::rng::derive_seed;
use qniff::{
    bjw_infer, ensemble_qoi, gaussian_kde, simulate_ideal, Method, ModelSpec, NoiseParams,
    PosteriorSet, ProbVector, QoiModel, ShotEnsemble, Target,
};

use crate::config::{argmax, gates_per_qubit, Resolved};
use crate::error::{CliError, CliResult};
use crate::rundir;
use crate::seeds;

/// Points per KDE curve written next to each posterior.
pub const CURVE_POINTS: usize = 512;

/// One inference problem: the whole register, or one qubit's marginal.
pub struct Unit {
    /// `None` for joint inference.
    pub qubit: Option<usize>,
    pub spec: ModelSpec,
    pub truth: NoiseParams,
    pub data: ShotEnsemble,
}

impl Unit {
    pub fn label(&self, method: Method) -> String {
        match self.qubit {
            None => method.name().to_string(),
            Some(q) => format!("{}_q{q}", method.name()),
        }
    }

    fn index(&self) -> u64 {
        self.qubit.map_or(0, |q| q as u64 + 1)
    }
}

fn marginal_ideal(p: &ProbVector, qubit: usize) -> CliResult<ProbVector> {
    let zero: f64 = p.values().iter().enumerate().filter(|(x, _)| (x >> qubit) & 1 == 0).map(|(_, v)| v).sum();
    Ok(ProbVector::new(vec![zero, (1.0 - zero).max(0.0)])?)
}

/// Build the inference problems described by the config from data in `out`.
pub fn units(r: &Resolved, out: &Path) -> CliResult<Vec<Unit>> {
    let cfg = &r.config;
    let circuit = r.inference_circuit();
    let file = if r.test_circuit.is_some() { rundir::TEST_ENSEMBLES } else { rundir::ENSEMBLES };
    let data = rundir::read_ensemble(&out.join(file), cfg.seed)?;
    if data.n_qubits() != r.n_qubits() {
        return Err(CliError::Validation(format!(
            "{file} has {} qubits, config describes {}",
            data.n_qubits(),
            r.n_qubits()
        )));
    }
    let ideal = simulate_ideal(circuit);
    let target_for = |p: &ProbVector| match &cfg.inference.target {
        Some(t) => t.clone(),
        None => basis_string(argmax(p.values()), p.n_qubits()),
    };
    if !cfg.inference.per_qubit {
        let m = cfg.inference.m.unwrap_or_else(|| gates_per_qubit(circuit));
        let target = target_for(&ideal);
        let spec = ModelSpec::new(ideal, m, target)?;
        return Ok(vec![Unit { qubit: None, spec, truth: r.truth.clone(), data }]);
    }
    (0..r.n_qubits())
        .map(|q| {
            let p = marginal_ideal(&ideal, q)?;
            let m = cfg.inference.m.unwrap_or(circuit.gates_on(q) as u32);
            let target = target_for(&p);
            let spec = ModelSpec::new(p, m, target)?;
            let truth = NoiseParams::single(r.truth.eps_g, r.truth.eps_m0[q], r.truth.eps_m1[q])?;
            Ok(Unit { qubit: Some(q), spec, truth, data: data.marginal(q)? })
        })
        .collect()
}

/// Run one method on one unit. The prior and the sampler seed depend only
/// on the config seed and the unit, so both methods share them.
pub fn infer_unit(r: &Resolved, unit: &Unit, method: Method) -> CliResult<(PosteriorSet, Vec<Curve>)> {
    let cfg = &r.config;
    let prior = cfg.prior.resolve(&unit.truth, derive_seed(cfg.seed, seeds::PRIOR + unit.index()))?;
    let seed = derive_seed(cfg.seed, seeds::INFER + unit.index());
    let target = Target::Basis(unit.spec.qoi_target.clone());
    let obs = ensemble_qoi(&unit.data, &target)?;
    let post = match method {
        Method::Bjw => bjw_infer(&prior, &unit.spec, &obs, seed)?,
        Method::Standard => {
            let counts = unit.data.target_counts(&target)?;
            standard_infer_with(&prior, &unit.spec, &counts, seed, &cfg.inference.mcmc)?
        }
    };

    let label = unit.label(method);
    let model = QoiModel::new(&unit.spec);
    let prior_q = prior
        .sample(seed)
        .iter()
        .map(|d| model.evaluate(&NoiseParams::from_slice(d)?))
        .collect::<qniff::Result<Vec<f64>>>()?;
    let post_q = post.pushforward(&unit.spec)?;
    let mut curves = Vec::new();
    for (name, values) in [("observed", &obs), ("prior", &prior_q), ("posterior", &post_q)] {
        // point masses have no density curve
        if let Ok(kde) = gaussian_kde(values) {
            curves.push(Curve::from_kde(format!("{label}:{name}"), &kde, CURVE_POINTS)?);
        }
    }
    Ok((post, curves))
}

pub fn cmd_infer(r: &Resolved, out: &Path) -> CliResult<()> {
    let units = units(r, out)?;
    for unit in &units {
        for method in r.config.method.methods() {
            let (post, curves) = infer_unit(r, unit, method)?;
            let label = unit.label(method);
            let mut buf = Vec::new();
            post.write_json(&mut buf)?;
            buf.push(b'\n');
            rundir::write_bytes(&out.join(rundir::posterior_file(&label)), &buf)?;
            let mut buf = Vec::new();
            write_kde_curves(&mut buf, &curves)?;
            rundir::write_bytes(&out.join(rundir::kde_file(&label)), &buf)?;
        }
    }
    Ok(())
}
