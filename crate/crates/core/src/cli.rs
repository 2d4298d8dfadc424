//! Command-line front end: design, analyze, simulate and the missile case study.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::document::{Eigenvalue, SystemDocument};
use crate::error::Error;
use crate::linalg::{self, Mat, C64};
use crate::matpoly::{Side, SolventForm, Tolerances};
use crate::missile::{self, CaseStudyOptions, CaseStudyReport, GainSource, ModelSource};
use crate::robustness::{self, FrequencySearch, NormReport};
use crate::simulate::{self, fmt_sig, SpecOptions, TimeSpecs};
use crate::statespace::StateSpace;
use crate::synthesis::{self, ControlLaw, TwoDofGains};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "blockpole", version, about = "Block pole placement for square MIMO systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize K_FB and K_FF for a system document with a desired spectrum.
    Design {
        input: PathBuf,
        #[arg(long, value_enum)]
        form: Option<FormArg>,
        #[arg(long, value_enum)]
        side: Option<SideArg>,
        /// Cells of eigenvalue indices, e.g. "0,1,2;3,4,5".
        #[arg(long)]
        partition: Option<String>,
        /// Gains file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Norms, eigenvalue sensitivities, stability measures and perturbation effects.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        gains: PathBuf,
        /// ΔA as a matrix document; falls back to the system document's perturbation.
        #[arg(long)]
        perturbation: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        reference: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-loop step response as CSV plus a time-specification table.
    Simulate {
        input: PathBuf,
        #[arg(long)]
        gains: PathBuf,
        #[arg(long, value_delimiter = ',')]
        reference: Option<Vec<f64>>,
        #[arg(long, default_value_t = simulate::DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long, default_value_t = simulate::DEFAULT_DT)]
        dt: f64,
        /// Trajectory CSV.
        #[arg(long)]
        out: PathBuf,
        /// Time-specification CSV; stdout when absent.
        #[arg(long)]
        specs: Option<PathBuf>,
    },
    /// The missile comparison study; writes tables and trajectories into a directory.
    CaseStudy {
        #[arg(long, value_enum, default_value_t = CaseForm::All)]
        form: CaseForm,
        /// Use the published gains instead of synthesizing.
        #[arg(long)]
        replay: bool,
        #[arg(long, value_enum, default_value_t = ModelArg::Builtin)]
        model: ModelArg,
        #[arg(long, value_enum, default_value_t = SideArg::Right)]
        side: SideArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Diagonal,
    Controller,
    Observer,
}

impl From<FormArg> for SolventForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Diagonal => SolventForm::Diagonal,
            FormArg::Controller => SolventForm::Controller,
            FormArg::Observer => SolventForm::Observer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseForm {
    Diagonal,
    Controller,
    Observer,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Right,
    Left,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Right => Side::Right,
            SideArg::Left => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Builtin,
    Linearized,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => EXIT_INPUT,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension(_) | Error::InvalidInput(_) => CliError::Input(e.to_string()),
            e => CliError::Numeric(e),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// On-disk gains: `K_FB`, `K_FF` and how they were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainsDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<String>,
    #[serde(rename = "K_FB")]
    pub feedback: Vec<Vec<f64>>,
    #[serde(rename = "K_FF", default, skip_serializing_if = "Option::is_none")]
    pub feedforward: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<PlacementReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub requested: Vec<Eigenvalue>,
    pub achieved: Vec<Eigenvalue>,
    pub max_error: f64,
    pub tolerance: f64,
    #[serde(default)]
    pub vandermonde_condition: Option<f64>,
    pub exact_tracking: bool,
}

impl GainsDocument {
    pub fn from_gains(g: &TwoDofGains) -> Self {
        let p = &g.provenance;
        Self {
            convention: Some(ControlLaw.to_string()),
            feedback: linalg::to_rows(&g.feedback),
            feedforward: Some(linalg::to_rows(&g.feedforward)),
            form: Some(p.form.to_string()),
            side: Some(p.side.to_string()),
            partition: Some(p.partition.clone()),
            placement: Some(PlacementReport {
                requested: eigen_list(&p.spectrum),
                achieved: eigen_list(&g.achieved),
                max_error: linalg::spectral_distance(&g.achieved, &p.spectrum),
                tolerance: synthesis::PLACEMENT_TOL,
                vandermonde_condition: p.vandermonde_condition.is_finite().then_some(p.vandermonde_condition),
                exact_tracking: g.exact_tracking,
            }),
        }
    }

    pub fn to_gains(&self, sys: &StateSpace) -> CliResult<TwoDofGains> {
        let feedback = linalg::try_from_rows(&self.feedback)?;
        let feedforward = self.feedforward.as_ref().map(|f| linalg::try_from_rows(f)).transpose()?;
        Ok(TwoDofGains::from_matrices(sys, feedback, feedforward)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MatrixDocument {
    Bare(Vec<Vec<f64>>),
    Named {
        #[serde(alias = "delta_a", alias = "dA")]
        perturbation: Vec<Vec<f64>>,
    },
}

fn eigen_list(values: &[C64]) -> Vec<Eigenvalue> {
    values.iter().map(|&z| z.into()).collect()
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_document(path: &Path) -> CliResult<SystemDocument> {
    SystemDocument::from_json(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_gains(path: &Path) -> CliResult<GainsDocument> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Input(format!("{}: malformed gains file: {e}", path.display())))
}

fn load_matrix(path: &Path) -> CliResult<Mat> {
    let doc: MatrixDocument = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Input(format!("{}: malformed matrix file: {e}", path.display())))?;
    let rows = match doc {
        MatrixDocument::Bare(rows) => rows,
        MatrixDocument::Named { perturbation } => perturbation,
    };
    Ok(linalg::try_from_rows(&rows)?)
}

/// Parses `"0,1,2;3,4,5"`.
pub fn parse_partition(text: &str) -> CliResult<Vec<Vec<usize>>> {
    text.split(';')
        .map(|cell| {
            cell.split(',')
                .map(|i| {
                    i.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::Input(format!("bad partition index {i:?} in {text:?}")))
                })
                .collect()
        })
        .collect()
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn reference_or_ones(reference: Option<Vec<f64>>, sys: &StateSpace) -> CliResult<Vec<f64>> {
    let r = reference.unwrap_or_else(|| vec![1.0; sys.p()]);
    if r.len() != sys.p() {
        return Err(CliError::Input(format!("reference has {} entries, system has {} outputs", r.len(), sys.p())));
    }
    Ok(r)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Design { input, form, side, partition, out } => cmd_design(&input, form, side, partition, out.as_deref()),
        Command::Analyze { input, gains, perturbation, reference, out } => {
            cmd_analyze(&input, &gains, perturbation.as_deref(), reference, out.as_deref())
        }
        Command::Simulate { input, gains, reference, horizon, dt, out, specs } => {
            cmd_simulate(&input, &gains, reference, horizon, dt, &out, specs.as_deref())
        }
        Command::CaseStudy { form, replay, model, side, out } => cmd_case_study(form, replay, model, side, &out),
    }
}

/// Parses arguments, runs, reports errors on stderr and maps them to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn cmd_design(
    input: &Path,
    form: Option<FormArg>,
    side: Option<SideArg>,
    partition: Option<String>,
    out: Option<&Path>,
) -> CliResult<()> {
    let doc = load_document(input)?;
    let sys = doc.system()?;
    let spectrum = doc
        .spectrum()
        .ok_or_else(|| CliError::Input(format!("{}: missing field `spectrum`", input.display())))?;
    let form = match form {
        Some(f) => f.into(),
        None => doc.form()?.unwrap_or(SolventForm::Diagonal),
    };
    let side = match side {
        Some(s) => s.into(),
        None => doc.side()?.unwrap_or(Side::Right),
    };
    let partition = match partition {
        Some(text) => parse_partition(&text)?,
        None => doc.partition.clone().unwrap_or_else(|| synthesis::default_partition(sys.n(), sys.m())),
    };
    let gains = synthesis::design_2dof(&sys, &spectrum, &partition, form, side, &Tolerances::default())?;
    emit(out, &to_json(&GainsDocument::from_gains(&gains)))
}

fn norms_json(n: &NormReport) -> Value {
    json!({ "one": n.one_norm, "two": n.two_norm, "inf": n.inf_norm, "frobenius": n.frobenius })
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Robustness report for a closed loop; sections that need stability are null when it is unstable.
fn robustness_json(sys: &StateSpace, gains: &TwoDofGains, delta_a: Option<&Mat>, reference: &[f64]) -> CliResult<Value> {
    let a_cl = sys.a() - sys.b() * &gains.feedback;
    let eigenvalues = linalg::eigenvalues(&a_cl);
    let sens = robustness::eigen_sensitivities(&a_cl)?;
    let measures = match robustness::stability_measures(&a_cl, &FrequencySearch::default()) {
        Ok(m) => json!({ "m1": m.m1, "m1_argmin_omega": m.m1_argmin_omega, "m2": m.m2, "m3": m.m3 }),
        Err(Error::Unstable(z)) => json!({ "unstable_eigenvalue": complex_json(z) }),
        Err(e) => return Err(e.into()),
    };
    let perturbation = match delta_a {
        None => Value::Null,
        Some(da) => {
            let shift = robustness::perturbed_spectrum(&a_cl, da)?;
            let tracking = match robustness::tracking_error(sys, gains, da, reference) {
                Ok(t) => json!({
                    "exact": t.exact,
                    "first_order": t.first_order,
                    "pseudo_inverse": t.pseudo_inverse,
                    "bound": t.bound,
                }),
                Err(Error::Destabilized(z)) => json!({ "destabilized": complex_json(z) }),
                Err(e) => return Err(e.into()),
            };
            json!({
                "delta_norm_2": linalg::norm2(da),
                "eigenvalues": shift.nominal.iter().zip(&shift.perturbed).zip(&shift.relative_changes)
                    .map(|((a, b), r)| json!({ "nominal": complex_json(*a), "perturbed": complex_json(*b), "relative_change": r }))
                    .collect::<Vec<_>>(),
                "tracking_error": tracking,
            })
        }
    };
    Ok(json!({
        "convention": ControlLaw.to_string(),
        "norms": { "K_FB": norms_json(&robustness::matrix_norms(&gains.feedback)), "K_FF": norms_json(&robustness::matrix_norms(&gains.feedforward)) },
        "closed_loop_eigenvalues": eigenvalues.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
        "sensitivities": {
            "per_eigenvalue": sens.per_eigenvalue.iter().map(|(l, s)| json!({ "eigenvalue": complex_json(*l), "sensitivity": s })).collect::<Vec<_>>(),
            "global": sens.global,
            "right_norm": sens.right_norm,
            "left_norm": sens.left_norm,
        },
        "stability_measures": measures,
        "perturbation": perturbation,
    }))
}

pub fn cmd_analyze(
    input: &Path,
    gains: &Path,
    perturbation: Option<&Path>,
    reference: Option<Vec<f64>>,
    out: Option<&Path>,
) -> CliResult<()> {
    let doc = load_document(input)?;
    let sys = doc.system()?;
    let gains = load_gains(gains)?.to_gains(&sys)?;
    let delta_a = match perturbation {
        Some(path) => Some(load_matrix(path)?),
        None => doc.perturbation()?,
    };
    let reference = reference_or_ones(reference, &sys)?;
    let report = robustness_json(&sys, &gains, delta_a.as_ref(), &reference)?;
    emit(out, &to_json(&report))
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

/// Time specifications as CSV, one row per output channel.
pub fn specs_csv(specs: &[TimeSpecs], labels: Option<&[String]>) -> String {
    let mut s = String::from("output,percent_overshoot,percent_undershoot,settling_time,rise_time,final_value\n");
    for (i, t) in specs.iter().enumerate() {
        let name = labels.and_then(|l| l.get(i).cloned()).unwrap_or_else(|| format!("y{}", i + 1));
        let _ = writeln!(
            s,
            "{name},{},{},{},{},{}",
            opt_cell(t.percent_overshoot),
            opt_cell(t.percent_undershoot),
            fmt_sig(t.settling_time),
            opt_cell(t.rise_time),
            fmt_sig(t.final_value)
        );
    }
    s
}

pub fn cmd_simulate(
    input: &Path,
    gains: &Path,
    reference: Option<Vec<f64>>,
    horizon: f64,
    dt: f64,
    out: &Path,
    specs: Option<&Path>,
) -> CliResult<()> {
    let doc = load_document(input)?;
    let sys = doc.system()?;
    let gains = load_gains(gains)?.to_gains(&sys)?;
    let reference = reference_or_ones(reference, &sys)?;
    let traj = simulate::step_response(&sys, &gains, &reference, horizon, dt)?;
    write(out, &traj.to_csv())?;
    let table = (0..sys.p())
        .map(|ch| simulate::time_specs(&traj, ch, &SpecOptions::default()))
        .collect::<crate::error::Result<Vec<_>>>()?;
    emit(specs, &specs_csv(&table, doc.outputs.as_deref()))
}

fn table_norms(r: &CaseStudyReport) -> String {
    let mut s = String::from("gain,one,two,inf,frobenius\n");
    for (name, n) in [("K_FB", &r.feedback_norms), ("K_FF", &r.feedforward_norms)] {
        let v = n.as_array().map(fmt_sig);
        let _ = writeln!(s, "{name},{}", v.join(","));
    }
    s
}

fn table_sensitivities(r: &CaseStudyReport) -> String {
    let mut s = String::from("eigenvalue_re,eigenvalue_im,sensitivity\n");
    for (l, v) in &r.sensitivities.per_eigenvalue {
        let _ = writeln!(s, "{},{},{}", fmt_sig(l.re), fmt_sig(l.im), fmt_sig(*v));
    }
    let _ = writeln!(s, "global,,{}", fmt_sig(r.sensitivities.global));
    s
}

fn table_measures(r: &CaseStudyReport) -> String {
    let m = &r.measures;
    format!("m1,m1_argmin_omega,m2,m3\n{},{},{},{}\n", fmt_sig(m.m1), fmt_sig(m.m1_argmin_omega), fmt_sig(m.m2), fmt_sig(m.m3))
}

fn table_perturbation(r: &CaseStudyReport) -> Option<String> {
    let p = r.perturbation.as_ref()?;
    let mut s = String::from("nominal_re,nominal_im,perturbed_re,perturbed_im,relative_change\n");
    for ((a, b), c) in p.shift.nominal.iter().zip(&p.shift.perturbed).zip(&p.shift.relative_changes) {
        let _ = writeln!(s, "{},{},{},{},{}", fmt_sig(a.re), fmt_sig(a.im), fmt_sig(b.re), fmt_sig(b.im), fmt_sig(*c));
    }
    let _ = writeln!(s, "\nquantity,value");
    let _ = writeln!(s, "delta_norm_2,{}", fmt_sig(p.delta_norm));
    match (&p.tracking, p.destabilized) {
        (Some(t), _) => {
            for (name, v) in [("exact", &t.exact), ("first_order", &t.first_order), ("pseudo_inverse", &t.pseudo_inverse)] {
                let cells: Vec<String> = v.iter().map(|&x| fmt_sig(x)).collect();
                let _ = writeln!(s, "tracking_{name},{}", cells.join(","));
            }
            let _ = writeln!(s, "tracking_bound,{}", fmt_sig(t.bound));
        }
        (None, Some(z)) => {
            let _ = writeln!(s, "destabilized,{},{}", fmt_sig(z.re), fmt_sig(z.im));
        }
        (None, None) => {}
    }
    Some(s)
}

fn report_json(r: &CaseStudyReport) -> Value {
    let gain_source = match r.gain_source {
        GainSource::Synthesized => "synthesized",
        GainSource::Replay => "replay",
    };
    let vcond = r.gains.provenance.vandermonde_condition;
    json!({
        "form": r.form.to_string(),
        "side": r.gains.provenance.side.to_string(),
        "gain_source": gain_source,
        "convention": ControlLaw.to_string(),
        "K_FB": linalg::to_rows(&r.gains.feedback),
        "K_FF": linalg::to_rows(&r.gains.feedforward),
        "vandermonde_condition": if vcond.is_finite() { json!(vcond) } else { Value::Null },
        "norms": { "K_FB": norms_json(&r.feedback_norms), "K_FF": norms_json(&r.feedforward_norms) },
        "closed_loop_eigenvalues": r.closed_loop_eigenvalues.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
        "sensitivities": r.sensitivities.per_eigenvalue.iter().map(|(l, s)| json!({ "eigenvalue": complex_json(*l), "sensitivity": s })).collect::<Vec<_>>(),
        "eigenvector_condition": r.sensitivities.global,
        "stability_measures": { "m1": r.measures.m1, "m1_argmin_omega": r.measures.m1_argmin_omega, "m2": r.measures.m2, "m3": r.measures.m3 },
        "time_specs": r.time_specs.iter().map(|t| json!({
            "percent_overshoot": t.percent_overshoot,
            "percent_undershoot": t.percent_undershoot,
            "settling_time": t.settling_time,
            "rise_time": t.rise_time,
            "final_value": t.final_value,
        })).collect::<Vec<_>>(),
        "peak_outputs": r.peak_outputs,
        "perturbation": r.perturbation.as_ref().map(|p| json!({
            "delta_norm_2": p.delta_norm,
            "relative_changes": p.shift.relative_changes,
            "tracking_error": p.tracking.as_ref().map(|t| t.exact.clone()),
            "destabilized": p.destabilized.map(complex_json),
        })),
    })
}

fn write_bundle(dir: &Path, r: &CaseStudyReport) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let labels = r.system.output_labels.clone();
    write(&dir.join("report.json"), &to_json(&report_json(r)))?;
    write(&dir.join("gains.json"), &to_json(&GainsDocument::from_gains(&r.gains)))?;
    write(&dir.join("norms.csv"), &table_norms(r))?;
    write(&dir.join("time_specs.csv"), &specs_csv(&r.time_specs, labels.as_deref()))?;
    write(&dir.join("sensitivities.csv"), &table_sensitivities(r))?;
    write(&dir.join("stability_measures.csv"), &table_measures(r))?;
    if let Some(t) = table_perturbation(r) {
        write(&dir.join("perturbation.csv"), &t)?;
    }
    write(&dir.join("trajectory.csv"), &r.trajectory.to_csv())
}

fn summary_csv(reports: &[CaseStudyReport]) -> String {
    let mut s = String::from("form,k_fb_two_norm,k_ff_two_norm,eigenvector_condition,m1,m2,m3,max_peak_output\n");
    for r in reports {
        let peak = r.peak_outputs.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.form,
            fmt_sig(r.feedback_norms.two_norm),
            fmt_sig(r.feedforward_norms.two_norm),
            fmt_sig(r.sensitivities.global),
            fmt_sig(r.measures.m1),
            fmt_sig(r.measures.m2),
            fmt_sig(r.measures.m3),
            fmt_sig(peak)
        );
    }
    let mut ranked: Vec<&CaseStudyReport> = reports.iter().collect();
    ranked.sort_by(|a, b| a.feedback_norms.two_norm.total_cmp(&b.feedback_norms.two_norm));
    let order: Vec<String> = ranked.iter().map(|r| r.form.to_string()).collect();
    let _ = writeln!(s, "\nranking_by_k_fb_two_norm,{}", order.join(" < "));
    s
}

pub fn cmd_case_study(form: CaseForm, replay: bool, model: ModelArg, side: SideArg, out: &Path) -> CliResult<()> {
    let forms: Vec<SolventForm> = match form {
        CaseForm::Diagonal => vec![SolventForm::Diagonal],
        CaseForm::Controller => vec![SolventForm::Controller],
        CaseForm::Observer => vec![SolventForm::Observer],
        CaseForm::All => vec![SolventForm::Diagonal, SolventForm::Controller, SolventForm::Observer],
    };
    let mut reports = Vec::with_capacity(forms.len());
    for f in forms {
        let mut opts = CaseStudyOptions::new(f);
        opts.side = side.into();
        opts.gains = if replay { GainSource::Replay } else { GainSource::Synthesized };
        opts.model = match model {
            ModelArg::Builtin => ModelSource::Builtin,
            ModelArg::Linearized => ModelSource::Linearized,
        };
        let report = missile::case_study(&opts)?;
        write_bundle(&out.join(f.to_string()), &report)?;
        reports.push(report);
    }
    if reports.len() > 1 {
        write(&out.join("summary.csv"), &summary_csv(&reports))?;
    }
    Ok(())
}
