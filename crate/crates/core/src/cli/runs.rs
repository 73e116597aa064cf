use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{
    config_error, ChainCase, ClassifyCase, KappaCase, LatticeCase, LoccCase, Metric, RunConfig,
};
use super::record::{to_fields, ExperimentRecord, Fields, Table, SCHEMA_VERSION};
use crate::chains::{entropy_scaling_fit, FitModel, IntervalSpectrumRequest};
use crate::embezzlement::{kappa_series, TargetGrid, DEFICIT_BOUND};
use crate::error::{Error, Result};
use crate::factor_types::{classify_itpfi, kappa_max_formula, RationalityCriterion, GCD_TOL};
use crate::lattice::exact::{exact_commuting_check, exact_hamiltonian_spectrum};
use crate::lattice::{
    boundary_spectrum, build_model, classify_region, commuting_check, cut_spectrum, ed_boundary_spectrum,
    ed_site_reduced_state, hamiltonian_spectrum_small, interior_site, site_reduced_state, stack, LatticeModel,
    Region, DENSE_CAP, ED_CAP,
};
use crate::locc::{conversion_report, distillable_bells, finite_size_distillation_check, MAX_BELL_PAIRS};
use crate::spectra::{entropy, LogBase, Prune, Spectrum, DEFAULT_LEVEL_CAP, DEFAULT_PRUNE_THRESHOLD};
use crate::verify::{self, max_diff, tol};

/// Settings shared by every run.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunContext {
    pub seed: u64,
    pub exact: bool,
    pub timings: bool,
}

/// Records for `results.jsonl`, one plot table, and whether any
/// acceptance check inside the run failed.
#[derive(Debug)]
pub struct RunOutput {
    pub experiment: String,
    pub records: Vec<ExperimentRecord>,
    pub table: Table,
    pub failed: bool,
    pub summary: Vec<String>,
}

struct CaseResult {
    record: ExperimentRecord,
    table: Table,
    passed: Option<bool>,
    summary: String,
}

fn base_tolerances() -> Fields {
    let c = RationalityCriterion::default();
    to_fields(json!({
        "prune_threshold": DEFAULT_PRUNE_THRESHOLD,
        "level_cap": DEFAULT_LEVEL_CAP,
        "gcd_tol": GCD_TOL,
        "rationality_depth": c.depth,
        "rationality_tol": c.tol,
        "rationality_max_denominator": c.max_denominator,
    }))
}

fn case_name(name: &Option<String>, i: usize) -> String {
    name.clone().unwrap_or_else(|| format!("case{i}"))
}

fn levels_json(s: &Spectrum) -> Value {
    json!(s.levels().iter().map(|l| [l.weight, l.multiplicity]).collect::<Vec<_>>())
}

fn verdict(passed: Option<bool>) -> &'static str {
    match passed {
        Some(true) => " [pass]",
        Some(false) => " [FAIL]",
        None => "",
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    ctx: &RunContext,
    experiment: &str,
    case: impl Serialize,
    index: usize,
    mut outputs: Fields,
    tolerances: Fields,
    start: Instant,
    passed: Option<bool>,
) -> ExperimentRecord {
    let mut params = to_fields(case);
    params.insert("index".into(), json!(index));
    if let Some(p) = passed {
        outputs.insert("passed".into(), json!(p));
    }
    ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        experiment: experiment.to_string(),
        seed: ctx.seed,
        params,
        outputs,
        tolerances,
        runtime_ms: if ctx.timings { start.elapsed().as_millis() as u64 } else { 0 },
    }
}

fn collect(experiment: String, headers: &[&'static str], results: Vec<CaseResult>) -> RunOutput {
    let mut table = Table::new(headers);
    let mut failed = false;
    let mut records = Vec::with_capacity(results.len());
    let mut summary = Vec::with_capacity(results.len());
    for r in results {
        failed |= r.passed == Some(false);
        records.push(r.record);
        table.extend(r.table);
        summary.push(format!("{}{}", r.summary, verdict(r.passed)));
    }
    RunOutput {
        experiment,
        records,
        table,
        failed,
        summary,
    }
}

fn run_cases<C: Sync>(
    cfg: &RunConfig<C>,
    f: impl Fn(usize, &C) -> Result<CaseResult> + Sync,
) -> Result<Vec<CaseResult>> {
    cfg.cases.par_iter().enumerate().map(|(i, c)| f(i, c)).collect()
}

const CLASSIFY_COLUMNS: [&str; 6] = ["case", "factor_type", "type_family", "lambda", "structure", "step"];

pub fn run_classify(cfg: &RunConfig<ClassifyCase>, ctx: &RunContext) -> Result<RunOutput> {
    let experiment = cfg.experiment.clone().unwrap_or_else(|| "classify".into());
    let results = run_cases(cfg, |i, case| {
        let start = Instant::now();
        let name = case_name(&case.name, i);
        let s = case.spectrum.build()?;
        let c = classify_itpfi(&s, case.ambient).map_err(config_error)?;
        let label = c.factor_type.to_string();
        let lambda = match c.factor_type {
            crate::FactorType::IIILambda { lambda } => Some(lambda),
            _ => None,
        };
        let step = match c.group.structure {
            crate::factor_types::GroupStructure::Cyclic { step } => Some(step),
            _ => None,
        };
        let structure = to_fields(c.group.structure).remove("structure").unwrap_or(Value::Null);
        let passed = case.expect.as_ref().map(|e| *e == label);
        let outputs = to_fields(json!({
            "factor_type": label,
            "type_family": c.factor_type.family(),
            "factor": c.factor_type,
            "structure": structure,
            "step": step,
            "generators": c.group.generators,
            "rationality_criterion": c.criterion,
            "spectrum_levels": levels_json(&s),
        }));
        let mut table = Table::new(&CLASSIFY_COLUMNS);
        table.push(vec![
            name.clone(),
            label.clone(),
            c.factor_type.family().into(),
            lambda.map(|l| l.to_string()).unwrap_or_default(),
            structure.as_str().unwrap_or_default().into(),
            step.map(|l| l.to_string()).unwrap_or_default(),
        ]);
        Ok(CaseResult {
            record: finish(ctx, &experiment, case, i, outputs, base_tolerances(), start, passed),
            table,
            passed,
            summary: format!("{name}: {label}"),
        })
    })?;
    Ok(collect(experiment, &CLASSIFY_COLUMNS, results))
}

const KAPPA_COLUMNS: [&str; 8] = [
    "case", "copies", "kappa", "kappa_norm", "fidelity", "levels", "deficit", "reliable",
];

pub fn run_kappa(cfg: &RunConfig<KappaCase>, ctx: &RunContext) -> Result<RunOutput> {
    let experiment = cfg.experiment.clone().unwrap_or_else(|| "kappa".into());
    let results = run_cases(cfg, |i, case| {
        let start = Instant::now();
        let name = case_name(&case.name, i);
        let s = case.resource.build()?;
        let grid = TargetGrid {
            points: case.grid_points,
            ..TargetGrid::default()
        };
        let series = kappa_series(&s, &case.schedule, case.n, &grid).map_err(config_error)?;
        let last = series.last();
        let value = match case.metric {
            Metric::Trace => last.kappa_norm,
            Metric::Vector => last.kappa,
        };
        let target = case.target.or_else(|| match (case.resource.powers, case.resource.copies) {
            (Some(l), None | Some(1)) => Some(kappa_max_formula(l)),
            _ => None,
        });
        let deviation = target.map(|t| (value - t).abs());
        let passed = match (case.tolerance, deviation) {
            (Some(tol), Some(d)) => Some(d <= tol && series.reliable()),
            (Some(_), None) => return Err(Error::Config("tolerance given without a target".into())),
            _ => None,
        };
        let mut table = Table::new(&KAPPA_COLUMNS);
        for e in &series.estimates {
            table.push(vec![
                name.clone(),
                e.copies.to_string(),
                e.kappa.to_string(),
                e.kappa_norm.to_string(),
                e.fidelity.to_string(),
                e.resource_levels.to_string(),
                e.resource_deficit.to_string(),
                e.reliable.to_string(),
            ]);
        }
        let outputs = to_fields(json!({
            "series": series.estimates,
            "successive_diffs": series.successive_diffs,
            "converged": value,
            "target": target,
            "deviation": deviation,
            "truncated": !series.reliable(),
        }));
        let mut tolerances = base_tolerances();
        tolerances.insert("deficit_bound".into(), json!(DEFICIT_BOUND));
        tolerances.insert("refine_tol".into(), json!(grid.refine_tol));
        tolerances.insert("kappa".into(), json!(case.tolerance));
        let summary = match target {
            Some(t) => format!("{name}: κ = {value:.5} (target {t:.5})"),
            None => format!("{name}: κ = {value:.5}"),
        };
        Ok(CaseResult {
            record: finish(ctx, &experiment, case, i, outputs, tolerances, start, passed),
            table,
            passed,
            summary,
        })
    })?;
    Ok(collect(experiment, &KAPPA_COLUMNS, results))
}

/// Turns a size-cap error into `None` so large lattices fall back to the
/// analytic pathway.
fn within_cap<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

const LATTICE_COLUMNS: [&str; 4] = ["case", "arithmetic", "energy", "multiplicity"];

struct LatticeOutcome {
    outputs: Fields,
    table: Table,
    checks: Vec<bool>,
}

fn lattice_outcome(name: &str, case: &LatticeCase, model: &LatticeModel, ctx: &RunContext) -> Result<LatticeOutcome> {
    let mut out = Fields::new();
    let mut table = Table::new(&LATTICE_COLUMNS);
    let mut checks = Vec::new();
    let h = case.region.unwrap_or(super::config::HalfSpace {
        axis: 0,
        cut: (model.extent()[0] / 2).max(1),
    });
    let region = Region::half_space(model, h.axis, h.cut).map_err(config_error)?;
    let site = interior_site(model).unwrap_or(0);
    let site_state = site_reduced_state(model, site)?;
    let (rho, n_boundary) = boundary_spectrum(model, &region).map_err(config_error)?;
    let cut = cut_spectrum(model, &region, Prune::default())?;
    let region_type = classify_region(model, true)?.factor_type;

    out.insert("sites".into(), json!(model.num_sites()));
    out.insert("edges".into(), json!(model.edges().len()));
    out.insert("virtual_spins".into(), json!(model.num_virtual_spins()));
    out.insert("total_dim".into(), json!(model.total_dim().map(|d| d.to_string())));
    out.insert("site".into(), json!(site));
    out.insert("site_spectrum".into(), levels_json(&site_state));
    out.insert("region_sites".into(), json!(region.sites().len()));
    out.insert("boundary_edges".into(), json!(n_boundary));
    out.insert("boundary_edge_spectrum".into(), levels_json(&rho));
    out.insert("cut_entropy_nats".into(), json!(entropy(&cut, LogBase::Nats)));
    out.insert("cut_levels".into(), json!(cut.num_levels()));
    out.insert("region_type".into(), json!(region_type.to_string()));
    out.insert("region_type_family".into(), json!(region_type.family()));

    let commuting = within_cap(commuting_check(model))?;
    out.insert("commuting".into(), json!(commuting));
    checks.extend(commuting);

    if let Some(spec) = within_cap(hamiltonian_spectrum_small(model))? {
        for l in &spec.levels {
            table.push(vec![name.into(), "float".into(), l.energy.to_string(), l.multiplicity.to_string()]);
        }
        checks.push(spec.integer_deviation <= tol::EXACT_ENERGY);
        checks.push(spec.ground_degeneracy == 1);
        checks.push(spec.gap.is_some_and(|g| (g - 1.0).abs() <= tol::EXACT_ENERGY));
        out.insert("ed".into(), serde_json::to_value(&spec)?);
    } else {
        out.insert("ed".into(), Value::Null);
    }
    let site_err = within_cap(ed_site_reduced_state(model, site))?
        .map(|ed| max_diff(&ed, &site_state))
        .transpose()?;
    let cut_err = within_cap(ed_boundary_spectrum(model, &region))?
        .map(|ed| max_diff(&ed, &cut_spectrum(model, &region, Prune::EXACT)?))
        .transpose()?;
    checks.extend(site_err.map(|e| e <= tol::ED));
    checks.extend(cut_err.map(|e| e <= tol::ED));
    out.insert("ed_site_error".into(), json!(site_err));
    out.insert("ed_cut_error".into(), json!(cut_err));

    let amps = if ctx.exact { case.rational_amplitudes()? } else { None };
    if ctx.exact && amps.is_none() {
        out.insert("exact".into(), json!({"skipped": "no rational amplitudes in this case"}));
    }
    if let Some(amps) = amps {
        let exact_commuting = exact_commuting_check(model, &amps).map_err(config_error)?;
        let ex = exact_hamiltonian_spectrum(model, &amps).map_err(config_error)?;
        for (e, n) in &ex.levels {
            table.push(vec![name.into(), "exact".into(), e.to_string(), n.to_string()]);
        }
        checks.push(exact_commuting);
        checks.push(ex.integer_spectrum && ex.ground_degeneracy == 1 && ex.gap == Some(1));
        out.insert("exact_commuting".into(), json!(exact_commuting));
        out.insert(
            "exact".into(),
            json!({
                "levels": ex.levels.iter().map(|(e, n)| json!([e, n.to_string()])).collect::<Vec<_>>(),
                "integer_spectrum": ex.integer_spectrum,
                "ground_energy": ex.ground_energy,
                "ground_degeneracy": ex.ground_degeneracy.to_string(),
                "gap": ex.gap,
            }),
        );
    }

    if let Some(st) = &case.stack {
        let other = build_model(
            model.dimension(),
            model.extent(),
            model.boundary(),
            st.m,
            &Spectrum::new(&st.rho).map_err(config_error)?,
        )
        .map_err(config_error)?;
        let stacked = stack(model, &other).map_err(config_error)?;
        let t = classify_region(&stacked, true)?.factor_type;
        out.insert(
            "stacked".into(),
            json!({
                "m": stacked.m(),
                "rho": levels_json(stacked.rho()),
                "region_type": t.to_string(),
                "region_type_family": t.family(),
            }),
        );
    }
    Ok(LatticeOutcome {
        outputs: out,
        table,
        checks,
    })
}

pub fn run_lattice(cfg: &RunConfig<LatticeCase>, ctx: &RunContext) -> Result<RunOutput> {
    let experiment = cfg.experiment.clone().unwrap_or_else(|| "lattice".into());
    let results = run_cases(cfg, |i, case| {
        let start = Instant::now();
        let name = case_name(&case.name, i);
        let model = case.model.build().map_err(config_error)?;
        let o = lattice_outcome(&name, case, &model, ctx)?;
        let passed = Some(o.checks.iter().all(|c| *c));
        let mut tolerances = base_tolerances();
        tolerances.insert("ed".into(), json!(tol::ED));
        tolerances.insert("energy".into(), json!(tol::EXACT_ENERGY));
        tolerances.insert("ed_cap".into(), json!(ED_CAP.to_string()));
        tolerances.insert("dense_cap".into(), json!(DENSE_CAP));
        tolerances.insert("exact".into(), json!(ctx.exact));
        let summary = format!(
            "{name}: {} sites, {} edges, {} checks",
            model.num_sites(),
            model.edges().len(),
            o.checks.len()
        );
        Ok(CaseResult {
            record: finish(ctx, &experiment, case, i, o.outputs, tolerances, start, passed),
            table: o.table,
            passed,
            summary,
        })
    })?;
    Ok(collect(experiment, &LATTICE_COLUMNS, results))
}

const CHAIN_COLUMNS: [&str; 3] = ["case", "length", "entropy_nats"];

pub fn run_chain(cfg: &RunConfig<ChainCase>, ctx: &RunContext) -> Result<RunOutput> {
    let experiment = cfg.experiment.clone().unwrap_or_else(|| "chain".into());
    let results = run_cases(cfg, |i, case| {
        let start = Instant::now();
        let name = case_name(&case.name, i);
        let entropies = case
            .lengths
            .par_iter()
            .map(|&l| {
                IntervalSpectrumRequest {
                    chain: case.chain,
                    length: l,
                }
                .entropy()
                .map_err(config_error)
            })
            .collect::<Result<Vec<_>>>()?;
        let samples: Vec<(f64, f64)> = case.lengths.iter().map(|&l| l as f64).zip(entropies.iter().copied()).collect();
        let fits = case
            .fits
            .iter()
            .map(|&m| entropy_scaling_fit(&samples, m).map_err(config_error))
            .collect::<Result<Vec<_>>>()?;
        let passed = match case.prefer {
            None => None,
            Some(FitModel::Power) => {
                return Err(Error::Config(
                    "`prefer` compares residuals of log and sqrt fits; power residuals live on a log scale".into(),
                ))
            }
            Some(p) => {
                let other = if p == FitModel::Log { FitModel::Sqrt } else { FitModel::Log };
                let a = entropy_scaling_fit(&samples, p).map_err(config_error)?;
                let b = entropy_scaling_fit(&samples, other).map_err(config_error)?;
                Some(a.residual < b.residual)
            }
        };
        let mut table = Table::new(&CHAIN_COLUMNS);
        for (l, s) in &samples {
            table.push(vec![name.clone(), l.to_string(), s.to_string()]);
        }
        let outputs = to_fields(json!({
            "lengths": case.lengths,
            "entropies": entropies,
            "fits": fits,
        }));
        Ok(CaseResult {
            record: finish(ctx, &experiment, case, i, outputs, base_tolerances(), start, passed),
            table,
            passed,
            summary: format!("{name}: {} lengths", case.lengths.len()),
        })
    })?;
    Ok(collect(experiment, &CHAIN_COLUMNS, results))
}

const LOCC_COLUMNS: [&str; 4] = ["case", "copies", "fidelity", "bells"];

pub fn run_locc(cfg: &RunConfig<LoccCase>, ctx: &RunContext) -> Result<RunOutput> {
    let experiment = cfg.experiment.clone().unwrap_or_else(|| "locc".into());
    let results = run_cases(cfg, |i, case| {
        let start = Instant::now();
        let name = case_name(&case.name, i);
        let target = case.target.build()?;
        let mut table = Table::new(&LOCC_COLUMNS);
        let (outputs, feasible, summary) = match (&case.source, &case.family, case.max_copies) {
            (Some(src), None, None) => {
                let s = src.build()?;
                let r = conversion_report(&s, &target, case.eps).map_err(config_error)?;
                table.push(vec![
                    name.clone(),
                    "1".into(),
                    r.max_fidelity.to_string(),
                    r.bell_count.to_string(),
                ]);
                let summary = format!("{name}: convertible {}, F = {:.6}", r.feasible_exact, r.max_fidelity);
                (to_fields(&r), r.feasible_exact, summary)
            }
            (None, Some(base), Some(max)) if max >= 1 => {
                let b = base.build()?;
                let family: Vec<Spectrum> = (1..=max).map(|l| b.tensor_power(l, Prune::EXACT)).collect();
                let check = finite_size_distillation_check(&family, &target, case.eps).map_err(config_error)?;
                let bells = family
                    .par_iter()
                    .map(|s| distillable_bells(s, case.eps).map_err(config_error))
                    .collect::<Result<Vec<_>>>()?;
                for (l, (f, k)) in check.fidelities.iter().zip(&bells).enumerate() {
                    table.push(vec![name.clone(), (l + 1).to_string(), f.to_string(), k.to_string()]);
                }
                let l0 = check.l0.map(|i| i + 1);
                let outputs = to_fields(json!({
                    "fidelities": check.fidelities,
                    "l0": l0,
                    "bells": bells,
                    "bells_monotone": bells.windows(2).all(|w| w[1] >= w[0]),
                }));
                let summary = match l0 {
                    Some(l) => format!("{name}: L_0 = {l}, bells(L = {max}) = {}", bells[max - 1]),
                    None => format!("{name}: no L_0 up to {max}"),
                };
                (outputs, l0.is_some(), summary)
            }
            _ => {
                return Err(Error::Config(
                    "locc case needs either `source`, or `family` with `max_copies >= 1`".into(),
                ))
            }
        };
        let passed = case.expect.map(|e| e == feasible);
        let mut tolerances = base_tolerances();
        tolerances.insert("max_bell_pairs".into(), json!(MAX_BELL_PAIRS));
        tolerances.insert("eps".into(), json!(case.eps));
        Ok(CaseResult {
            record: finish(ctx, &experiment, case, i, outputs, tolerances, start, passed),
            table,
            passed,
            summary,
        })
    })?;
    Ok(collect(experiment, &LOCC_COLUMNS, results))
}

const VERIFY_COLUMNS: [&str; 5] = ["criterion", "name", "passed", "runtime_ms", "limit_ms"];

fn verify_records(outcomes: &[verify::CriterionOutcome], ctx: &RunContext) -> Vec<ExperimentRecord> {
    outcomes
        .iter()
        .map(|o| {
            let mut outputs = o.values.clone();
            outputs.insert("passed".into(), json!(o.passed));
            outputs.insert("failures".into(), json!(o.failures));
            ExperimentRecord {
                schema_version: SCHEMA_VERSION,
                experiment: "verify".into(),
                seed: ctx.seed,
                params: to_fields(json!({"criterion": o.id, "name": o.name, "limit_ms": o.limit_ms})),
                outputs,
                tolerances: verify::tolerances(),
                runtime_ms: if ctx.timings { o.elapsed.as_millis() as u64 } else { 0 },
            }
        })
        .collect()
}

fn serialized(records: &[ExperimentRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

/// Runs criteria 1 to 10, then reruns them and compares the serialized
/// records byte for byte (criterion 11).
pub fn run_verify(ctx: &RunContext) -> Result<RunOutput> {
    let first = verify::run_all(ctx.seed);
    let start = Instant::now();
    let second = verify::run_all(ctx.seed);
    let untimed = RunContext { timings: false, ..*ctx };
    let identical = serialized(&verify_records(&first, &untimed))? == serialized(&verify_records(&second, &untimed))?;
    let mut records = verify_records(&first, ctx);
    records.push(ExperimentRecord {
        schema_version: SCHEMA_VERSION,
        experiment: "verify".into(),
        seed: ctx.seed,
        params: to_fields(json!({"criterion": 11, "name": "determinism"})),
        outputs: to_fields(json!({"passed": identical, "identical_records": identical})),
        tolerances: verify::tolerances(),
        runtime_ms: if ctx.timings { start.elapsed().as_millis() as u64 } else { 0 },
    });
    let mut table = Table::new(&VERIFY_COLUMNS);
    let mut summary = Vec::new();
    for (o, r) in first.iter().zip(&records) {
        table.push(vec![
            o.id.to_string(),
            o.name.clone(),
            o.passed.to_string(),
            r.runtime_ms.to_string(),
            o.limit_ms.to_string(),
        ]);
        summary.push(o.line());
    }
    table.push(vec![
        "11".into(),
        "determinism".into(),
        identical.to_string(),
        records[10].runtime_ms.to_string(),
        String::new(),
    ]);
    summary.push(format!(
        "[{}] criterion 11: determinism",
        if identical { "PASS" } else { "FAIL" }
    ));
    Ok(RunOutput {
        experiment: "verify".into(),
        failed: !identical || first.iter().any(|o| !o.passed),
        records,
        table,
        summary,
    })
}
