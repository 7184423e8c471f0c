use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use dbs_core::analytics::{
    calibrate_tau, dbs_components, eve_budget, ipbe_components, pairing_combinations, preference,
    CalibrationTarget, ErrorBudget, Preference, Protocol, Scientific,
};
use dbs_core::channel_sim::{Channel, OscarTally, TallyRecord};
use dbs_core::speckle::{
    delocalized_distribution, generate_fiber, measure_intensity, optimize_focus, sample_pd_pd2, write_fiber,
    OptimizerConfig,
};
use dbs_core::{Basis, ChannelParams, Execution, RandomSource};
use serde::Serialize;

use crate::args::{
    AnalyticArgs, CalibrateArgs, ChannelArgs, CombinatoricsArgs, ProtocolChoice, SimulateArgs, SpeckleArgs,
};
use crate::manifest::{manifest_path, RunManifest, TauChoice};
use crate::sweep::SweepPlan;
use crate::CliError;

fn usage(e: dbs_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn output(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("creating {}", p.display()))?,
            ))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Validated parameters, with τ replaced by the calibrated value on request.
pub fn resolve_params(args: &ChannelArgs) -> Result<(ChannelParams, TauChoice), CliError> {
    let params = args.raw().validate().map_err(usage)?;
    if !args.calibrated_tau {
        return Ok((
            params,
            TauChoice {
                gate_time: params.gate_time(),
                calibrated: false,
                calibration_dimension: None,
                calibration_target_loss: None,
                calibration_dark_rate: None,
                calibration_mean_photon_number: None,
            },
        ));
    }
    let target = CalibrationTarget::default();
    let tau = calibrate_tau(&target).map_err(|e| CliError::Internal(e.into()))?;
    let params = params.with_gate_time(tau).map_err(usage)?;
    Ok((
        params,
        TauChoice {
            gate_time: tau,
            calibrated: true,
            calibration_dimension: Some(target.dimension),
            calibration_target_loss: Some(target.target_loss),
            calibration_dark_rate: Some(target.dark_rate),
            calibration_mean_photon_number: Some(target.mean_photon_number),
        },
    ))
}

#[derive(Debug, Serialize)]
pub struct AnalyticRow {
    pub axis: &'static str,
    pub value: Option<f64>,
    pub dimension: usize,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub gate_time: f64,
    pub mean_photon_number: f64,
    pub dbs_p_corr: f64,
    pub dbs_p_be: f64,
    pub dbs_p_ee: f64,
    pub dbs_ratio: f64,
    pub ipbe_p_corr: f64,
    pub ipbe_p_be: f64,
    pub ipbe_p_ee: f64,
    pub ipbe_ratio: f64,
    pub preferred: &'static str,
    pub dbs_p_b: Option<f64>,
    pub dbs_p_o: Option<f64>,
    pub dbs_eve_ratio: Option<f64>,
    pub ipbe_p_b: Option<f64>,
    pub ipbe_p_o: Option<f64>,
    pub ipbe_eve_ratio: Option<f64>,
}

pub fn analytic_row(
    axis: &'static str,
    value: Option<f64>,
    p: &ChannelParams,
) -> Result<AnalyticRow, CliError> {
    let dbs: ErrorBudget = dbs_components(p).map_err(usage)?;
    let ipbe: ErrorBudget = ipbe_components(p).map_err(usage)?;
    let preferred = match preference(p).map_err(usage)? {
        Preference::Dbs => "dbs",
        Preference::Ipbe => "ipbe",
    };
    // Undefined without multi-photon pulses (λ = 0): left blank.
    let eve_d = eve_budget(p, Protocol::Dbs).ok();
    let eve_i = eve_budget(p, Protocol::Ipbe).ok();
    Ok(AnalyticRow {
        axis,
        value,
        dimension: p.dimension(),
        efficiency: p.efficiency(),
        dark_rate: p.dark_rate(),
        gate_time: p.gate_time(),
        mean_photon_number: p.mean_photon_number(),
        dbs_p_corr: dbs.p_corr,
        dbs_p_be: dbs.p_be,
        dbs_p_ee: dbs.p_ee,
        dbs_ratio: dbs.ratio,
        ipbe_p_corr: ipbe.p_corr,
        ipbe_p_be: ipbe.p_be,
        ipbe_p_ee: ipbe.p_ee,
        ipbe_ratio: ipbe.ratio,
        preferred,
        dbs_p_b: eve_d.map(|e| e.p_b),
        dbs_p_o: eve_d.map(|e| e.p_o),
        dbs_eve_ratio: eve_d.map(|e| e.ratio),
        ipbe_p_b: eve_i.map(|e| e.p_b),
        ipbe_p_o: eve_i.map(|e| e.p_o),
        ipbe_eve_ratio: eve_i.map(|e| e.ratio),
    })
}

fn axis_name(plan: &SweepPlan) -> &'static str {
    plan.axis.map_or("none", |a| a.name())
}

/// Writes the rows as CSV. An empty sweep still writes the header.
fn write_rows<T: Serialize>(out: Box<dyn Write>, rows: &[T], header: &[&str]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(!rows.is_empty())
        .from_writer(out);
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const ANALYTIC_HEADER: [&str; 22] = [
    "axis",
    "value",
    "dimension",
    "efficiency",
    "dark_rate",
    "gate_time",
    "mean_photon_number",
    "dbs_p_corr",
    "dbs_p_be",
    "dbs_p_ee",
    "dbs_ratio",
    "ipbe_p_corr",
    "ipbe_p_be",
    "ipbe_p_ee",
    "ipbe_ratio",
    "preferred",
    "dbs_p_b",
    "dbs_p_o",
    "dbs_eve_ratio",
    "ipbe_p_b",
    "ipbe_p_o",
    "ipbe_eve_ratio",
];

pub fn analytic(args: &AnalyticArgs, argv: &[String]) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("analytic", argv);
    let (base, tau) = resolve_params(&args.channel)?;
    let plan = SweepPlan::from_args(&args.sweep)?;
    let rows = plan
        .points(base)?
        .iter()
        .map(|pt| analytic_row(axis_name(&plan), pt.value, &pt.params))
        .collect::<Result<Vec<_>, _>>()?;
    write_rows(output(args.out.as_deref())?, &rows, &ANALYTIC_HEADER)?;
    if let Some(out) = &args.out {
        manifest.params = Some(base.raw());
        manifest.tau = Some(tau);
        manifest.outputs = vec![out.display().to_string()];
        manifest.write(&manifest_path(out))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct OscarRow {
    pub protocol: Protocol,
    pub dimension: usize,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub gate_time: f64,
    pub mean_photon_number: f64,
    pub seed: u64,
    pub stream: u64,
    pub trials: u64,
    pub loaded: u64,
    pub intercepted_multi: u64,
    pub extracted: u64,
    pub bob_successes: u64,
    pub p_b: f64,
    pub p_b_se: f64,
    pub p_o: f64,
    pub p_o_se: f64,
    pub analytic_p_b: Option<f64>,
    pub analytic_p_o: Option<f64>,
}

impl OscarRow {
    fn new(protocol: Protocol, p: &ChannelParams, source: RandomSource, trials: u64, t: &OscarTally) -> Self {
        let budget = eve_budget(p, protocol).ok();
        OscarRow {
            protocol,
            dimension: p.dimension(),
            efficiency: p.efficiency(),
            dark_rate: p.dark_rate(),
            gate_time: p.gate_time(),
            mean_photon_number: p.mean_photon_number(),
            seed: source.seed,
            stream: source.stream_id,
            trials,
            loaded: t.loaded,
            intercepted_multi: t.intercepted_multi,
            extracted: t.extracted_pairs,
            bob_successes: t.bob_successes,
            p_b: t.p_b_hat().value(),
            p_b_se: t.p_b_hat().std_error(),
            p_o: t.p_o_hat().value(),
            p_o_se: t.p_o_hat().std_error(),
            analytic_p_b: budget.map(|b| b.p_b),
            analytic_p_o: budget.map(|b| b.p_o),
        }
    }
}

pub const SIMULATE_HEADER: [&str; 26] = [
    "protocol",
    "dimension",
    "efficiency",
    "dark_rate",
    "gate_time",
    "mean_photon_number",
    "seed",
    "stream",
    "trials",
    "correct",
    "basis_error",
    "empty_error",
    "lost",
    "discarded",
    "p_corr",
    "p_corr_se",
    "p_be",
    "p_be_se",
    "p_ee",
    "p_ee_se",
    "ratio",
    "ratio_se",
    "analytic_p_corr",
    "analytic_p_be",
    "analytic_p_ee",
    "analytic_ratio",
];

pub const PNS_HEADER: [&str; 19] = [
    "protocol",
    "dimension",
    "efficiency",
    "dark_rate",
    "gate_time",
    "mean_photon_number",
    "seed",
    "stream",
    "trials",
    "loaded",
    "intercepted_multi",
    "extracted",
    "bob_successes",
    "p_b",
    "p_b_se",
    "p_o",
    "p_o_se",
    "analytic_p_b",
    "analytic_p_o",
];

pub fn simulate(args: &SimulateArgs, argv: &[String]) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("trials: must be at least 1".into()));
    }
    let mut manifest = RunManifest::new("simulate", argv);
    let (base, tau) = resolve_params(&args.channel)?;
    let plan = SweepPlan::from_args(&args.sweep)?;
    let points = plan.points(base)?;
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let protocols: &[Protocol] = match args.protocol {
        ProtocolChoice::Dbs => &[Protocol::Dbs],
        ProtocolChoice::Ipbe => &[Protocol::Ipbe],
        ProtocolChoice::Both => &[Protocol::Dbs, Protocol::Ipbe],
    };
    // Stream id = point index × protocol count + protocol index.
    let source = |point: usize, k: usize| RandomSource::new(args.seed, (point * protocols.len() + k) as u64);
    let out = output(args.out.as_deref())?;

    if args.pns {
        let mut rows = Vec::new();
        for (i, pt) in points.iter().enumerate() {
            let ch = Channel::ideal_model(pt.params).map_err(usage)?;
            for (k, &protocol) in protocols.iter().enumerate() {
                let src = source(i, k);
                let t = ch.run_oscar_pns(args.trials, protocol, src, exec);
                rows.push(OscarRow::new(protocol, &pt.params, src, args.trials, &t));
            }
        }
        write_rows(out, &rows, &PNS_HEADER)?;
    } else {
        let mut rows = Vec::new();
        for (i, pt) in points.iter().enumerate() {
            let ch = Channel::ideal_model(pt.params).map_err(usage)?;
            for (k, &protocol) in protocols.iter().enumerate() {
                let src = source(i, k);
                let tally = match protocol {
                    Protocol::Dbs => ch.run_dbs_session(args.trials, src, exec),
                    Protocol::Ipbe => ch.run_ipbe_session(args.trials, src, exec),
                }
                .map_err(|e| CliError::Internal(e.into()))?;
                rows.push(TallyRecord::new(protocol, &pt.params, src, &tally));
            }
        }
        write_rows(out, &rows, &SIMULATE_HEADER)?;
    }

    if let Some(out) = &args.out {
        manifest.seed = Some(args.seed);
        manifest.params = Some(base.raw());
        manifest.tau = Some(tau);
        manifest.outputs = vec![out.display().to_string()];
        manifest.write(&manifest_path(out))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct SpeckleSummary {
    pub segments: usize,
    pub modes: usize,
    pub rows: usize,
    pub cols: usize,
    pub target: usize,
    pub seed: u64,
    pub pairs: u64,
    pub enhancement: f64,
    pub matched_peak_pd2: f64,
    pub mismatched_peak_pd2: f64,
    pub matched_same_pixel: f64,
    pub mismatched_same_pixel: f64,
}

pub const SPECKLE_FILES: [&str; 4] = [
    "pd_matched.csv",
    "pd2_matched.csv",
    "pd_mismatched.csv",
    "pd2_mismatched.csv",
];

pub fn speckle(args: &SpeckleArgs, argv: &[String]) -> Result<(), CliError> {
    if args.pairs == 0 {
        return Err(CliError::Usage("pairs: must be at least 1".into()));
    }
    let target = args.target.unwrap_or(args.modes / 2);
    let mut manifest = RunManifest::new("speckle", argv);
    let tm = generate_fiber(args.segments, args.modes, RandomSource::new(args.seed, 0)).map_err(usage)?;
    let focus =
        optimize_focus(&tm, target, Basis::Computational, OptimizerConfig::default()).map_err(usage)?;
    let matched = measure_intensity(&tm, &focus.mask, Basis::Computational).map_err(usage)?;
    let mismatched = delocalized_distribution(&tm, &focus.mask, Basis::Computational).map_err(usage)?;
    let pm =
        sample_pd_pd2(&matched, args.pairs, &mut RandomSource::new(args.seed, 1).rng()).map_err(usage)?;
    let pu = sample_pd_pd2(
        &mismatched,
        args.pairs,
        &mut RandomSource::new(args.seed, 2).rng(),
    )
    .map_err(usage)?;

    let dir = &args.out;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = Vec::new();
    let mut file = |name: &str| -> anyhow::Result<Box<dyn Write>> {
        let p = dir.join(name);
        outputs.push(p.display().to_string());
        output(Some(&p))
    };
    pm.write_pd_csv(file(SPECKLE_FILES[0])?)?;
    pm.write_pd2_csv(file(SPECKLE_FILES[1])?)?;
    pu.write_pd_csv(file(SPECKLE_FILES[2])?)?;
    pu.write_pd2_csv(file(SPECKLE_FILES[3])?)?;
    write_fiber(file("fiber.txt")?, &tm)?;

    let peak = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let (rows, cols) = matched.shape();
    let summary = SpeckleSummary {
        segments: args.segments,
        modes: args.modes,
        rows,
        cols,
        target,
        seed: args.seed,
        pairs: args.pairs,
        enhancement: focus.enhancement,
        matched_peak_pd2: peak(&pm.pd2),
        mismatched_peak_pd2: peak(&pu.pd2),
        matched_same_pixel: pm.same_pixel_fraction(),
        mismatched_same_pixel: pu.same_pixel_fraction(),
    };
    let mut w = file("summary.json")?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(anyhow::Error::from)?;
    writeln!(w).map_err(anyhow::Error::from)?;
    w.flush().map_err(anyhow::Error::from)?;
    drop(w);

    manifest.seed = Some(args.seed);
    manifest.outputs = outputs;
    manifest.write(&dir.join("manifest.json"))?;
    println!("enhancement {:.3}", focus.enhancement);
    Ok(())
}

pub fn combinatorics_report(n: u64) -> Result<String, CliError> {
    let c = pairing_combinations(n).map_err(usage)?;
    let inv = Scientific::of(&c).reciprocal();
    let two = Scientific::from_log10(-(n as f64) * 2f64.log10());
    Ok(format!(
        "n = {n}\nC = {c}\n1/C = {}\n2^-n = {}\n",
        inv.to_string_with(3),
        two.to_string_with(3)
    ))
}

pub fn combinatorics(args: &CombinatoricsArgs, argv: &[String]) -> Result<(), CliError> {
    let manifest = RunManifest::new("combinatorics", argv);
    let report = combinatorics_report(args.n)?;
    let mut out = output(args.out.as_deref())?;
    out.write_all(report.as_bytes()).map_err(anyhow::Error::from)?;
    out.flush().map_err(anyhow::Error::from)?;
    if let Some(path) = &args.out {
        let mut manifest = manifest;
        manifest.outputs = vec![path.display().to_string()];
        manifest.write(&manifest_path(path))?;
    }
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let target = CalibrationTarget {
        dimension: args.dimension,
        target_loss: args.target_loss,
        dark_rate: args.dark_rate,
        mean_photon_number: args.mean_photon_number,
        ..CalibrationTarget::default()
    };
    let tau = calibrate_tau(&target).map_err(usage)?;
    println!("gate_time = {tau:.7e} s");
    println!("dark_rate * gate_time = {:.7e}", tau * args.dark_rate);
    Ok(())
}
