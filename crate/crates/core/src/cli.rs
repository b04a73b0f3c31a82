//! Command-line front end.
//!
//! Every command is a pure function of its input files and flags; `--workers`
//! only sizes the thread pool.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::battery::{self, BatteryError, BatteryParams};
use crate::dispatch::{self, DispatchError, DispatchScenario, NamedModel};
use crate::fleet::Fleet;
use crate::grid::NetworkModel;
use crate::oracle::{self, OracleError, OracleInstance, SlackAggregation};
use crate::report::{self, ParamsReport};
use crate::search::{self, SearchError, SearchMode};
use crate::InputError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BASELINE_INFEASIBLE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_DISPATCH_INFEASIBLE: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{0}")]
    BaselineInfeasible(String),
    #[error("horizon {horizon} exceeds the vertex enumeration budget of {max}; reduce --horizon or pass --allow-sampling")]
    Budget { horizon: usize, max: usize },
    #[error("{0}")]
    DispatchInfeasible(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::BaselineInfeasible(_) => EXIT_BASELINE_INFEASIBLE,
            CliError::Budget { .. } => EXIT_BUDGET,
            CliError::DispatchInfeasible(_) => EXIT_DISPATCH_INFEASIBLE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BaselineInfeasible(m) => CliError::BaselineInfeasible(m),
            OracleError::Battery(BatteryError::BudgetExceeded { horizon, max }) => {
                CliError::Budget { horizon, max }
            }
            OracleError::Battery(b) => CliError::Input(b.into()),
            OracleError::Grid(g) => CliError::Input(g.into()),
            OracleError::Fleet(f) => CliError::Input(f.into()),
            OracleError::InvalidInstance(m) => CliError::Input(InputError::Invalid(m)),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::BaselineInfeasible(_) => CliError::BaselineInfeasible(e.to_string()),
            SearchError::Oracle(o) => o.into(),
            SearchError::Battery(b) => OracleError::Battery(b).into(),
            SearchError::InvalidInterval(_) => CliError::Input(InputError::Invalid(e.to_string())),
            SearchError::NonMonotone { .. } => CliError::Internal(e.to_string()),
        }
    }
}

impl From<BatteryError> for CliError {
    fn from(e: BatteryError) -> Self {
        OracleError::Battery(e).into()
    }
}

impl From<DispatchError> for CliError {
    fn from(e: DispatchError) -> Self {
        match e {
            DispatchError::Infeasible { .. } => CliError::DispatchInfeasible(e.to_string()),
            DispatchError::InvalidScenario(_) | DispatchError::Battery(_) => {
                CliError::Input(e.into())
            }
            DispatchError::Lp(_) => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tclflex",
    version,
    about = "Virtual-battery models for thermostatically controlled load fleets"
)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Grid,
    Lazy,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Grid => SearchMode::Grid,
            ModeArg::Lazy => SearchMode::Lazy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Total,
    PerStepMax,
}

impl From<AggregationArg> for SlackAggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Total => SlackAggregation::Total,
            AggregationArg::PerStepMax => SlackAggregation::PerStepMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Text,
    Csv,
}

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    /// Network (line limits) file; omitted means no coupling.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Steps of the oracle horizon.
    #[arg(long, default_value_t = oracle::DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Shared dissipation rate (1/h); defaults to the baseline-weighted mean.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// How per-step slacks are combined into the mismatch.
    #[arg(long, value_enum, default_value_t = AggregationArg::Total)]
    pub aggregation: AggregationArg,
    /// Sample vertices instead of failing when the horizon exceeds the
    /// enumeration budget (results are then not certified).
    #[arg(long)]
    pub allow_sampling: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sufficient and necessary battery parameters of a fleet.
    Params {
        fleet: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Calibrate the enhanced sufficient model by binary search over mu.
    Esbm {
        fleet: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long, default_value_t = 0.01)]
        interval: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Lazy)]
        mode: ModeArg,
        /// Write per-vertex mismatches of the calibrated model as CSV.
        #[arg(long)]
        dump_vertices: Option<PathBuf>,
    },
    /// Track one instruction series and report the disaggregation.
    Check {
        fleet: PathBuf,
        /// CSV with a `p_sys_kw` column, one row per step.
        instruction: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Rolling-horizon dispatch with a flexibility model.
    Dispatch {
        scenario: PathBuf,
        /// `sbm`, `nbm`, `esbm` or a battery parameter file.
        #[arg(long, default_value = "sbm")]
        model: String,
        /// Fleet used to build sbm/nbm/esbm; defaults to the synthetic fleet.
        #[arg(long)]
        fleet: Option<PathBuf>,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long, default_value_t = 0.01)]
        interval: f64,
        #[arg(long, default_value_t = dispatch::DEFAULT_LOOKAHEAD)]
        lookahead: usize,
        /// Compare SBM, ESBM and NBM instead of running a single model.
        #[arg(long)]
        compare: bool,
        #[arg(long, value_enum, default_value_t = TableFormat::Text)]
        format: TableFormat,
        /// Write the committed time series as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write the synthetic fleet and dispatch scenario as JSON.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), InputError> {
    std::fs::write(path, text).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn with_path<T>(path: &Path, r: Result<T, InputError>) -> Result<T, InputError> {
    r.map_err(|e| match e {
        InputError::Io { .. } => e,
        other => InputError::Invalid(format!("{}: {other}", path.display())),
    })
}

fn load_fleet(path: &Path) -> Result<Fleet, InputError> {
    with_path(path, read(path).and_then(|t| Fleet::from_json(&t)))
}

fn load_network(path: Option<&Path>, fleet: &Fleet) -> Result<NetworkModel, InputError> {
    match path {
        None => Ok(NetworkModel::unconstrained(fleet.len())),
        Some(p) => {
            let net = with_path(p, read(p).and_then(|t| NetworkModel::from_json(&t)))?;
            net.validate_against(fleet)
                .map_err(|e| InputError::Invalid(format!("{}: {e}", p.display())))?;
            Ok(net)
        }
    }
}

fn parse_instruction(text: &str) -> Result<Vec<f64>, InputError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let col = reader
        .headers()?
        .iter()
        .position(|h| h.trim() == "p_sys_kw")
        .ok_or_else(|| InputError::Invalid("instruction CSV needs a `p_sys_kw` column".into()))?;
    let mut out = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(col).unwrap_or("").trim();
        let v: f64 = cell.parse().map_err(|_| {
            InputError::Invalid(format!("row {}: `{cell}` is not a number", line + 2))
        })?;
        if !v.is_finite() {
            return Err(InputError::Invalid(format!(
                "row {}: value must be finite",
                line + 2
            )));
        }
        out.push(v);
    }
    Ok(out)
}

fn instance(fleet: Fleet, args: &OracleArgs) -> Result<OracleInstance, CliError> {
    let network = load_network(args.network.as_deref(), &fleet)?;
    let inst = OracleInstance::new(fleet, network, args.horizon)?
        .with_aggregation(args.aggregation.into());
    if inst.horizon > inst.max_vertex_horizon && !args.allow_sampling {
        return Err(CliError::Budget {
            horizon: inst.horizon,
            max: inst.max_vertex_horizon,
        });
    }
    Ok(inst)
}

fn alpha_for(fleet: &Fleet, alpha: Option<f64>) -> Result<f64, InputError> {
    let a = alpha.unwrap_or_else(|| fleet.baseline_weighted_alpha());
    if !(a.is_finite() && a > 0.0) {
        return Err(InputError::Invalid(format!(
            "alpha must be positive, got {a}"
        )));
    }
    Ok(a)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct ParamsOutput {
    alpha_per_h: f64,
    dt_hours: f64,
    sbm: ParamsReport,
    nbm: ParamsReport,
}

#[derive(Serialize)]
struct EsbmOutput<'a> {
    #[serde(flatten)]
    result: &'a search::EsbmResult,
    mode: SearchMode,
    interval: f64,
    horizon: usize,
    sbm: BatteryParams,
    nbm: BatteryParams,
    certified: bool,
    mw: ParamsReport,
}

#[derive(Serialize)]
struct CheckOutput {
    mismatch_kw: f64,
    tracked: bool,
    slacks: Vec<(f64, f64)>,
    binding: Vec<String>,
}

fn cmd_params(fleet: &Path, alpha: Option<f64>) -> Result<String, CliError> {
    let fleet = load_fleet(fleet)?;
    let alpha = alpha_for(&fleet, alpha)?;
    let sbm = battery::sbm_params(&fleet, alpha)?;
    let nbm = battery::nbm_params(&fleet, alpha)?;
    to_json(&ParamsOutput {
        alpha_per_h: alpha,
        dt_hours: fleet.dt,
        sbm: (&sbm).into(),
        nbm: (&nbm).into(),
    })
}

fn esbm_for(
    fleet: Fleet,
    args: &OracleArgs,
    interval: f64,
    mode: SearchMode,
) -> Result<(OracleInstance, f64, search::EsbmResult), CliError> {
    let alpha = alpha_for(&fleet, args.alpha)?;
    let inst = instance(fleet, args)?;
    let q0 = oracle::baseline_mismatch(&inst)?;
    if q0 > oracle::Q_ZERO_TOL {
        return Err(CliError::BaselineInfeasible(format!(
            "the zero instruction has mismatch {q0} kW: a line limit excludes the baseline consumption"
        )));
    }
    let result = search::calibrate(&inst, alpha, interval, mode)?;
    Ok((inst, alpha, result))
}

fn cmd_esbm(
    fleet: &Path,
    args: &OracleArgs,
    interval: f64,
    mode: ModeArg,
    dump: Option<&Path>,
) -> Result<String, CliError> {
    let fleet = load_fleet(fleet)?;
    let mode = SearchMode::from(mode);
    let (inst, alpha, result) = esbm_for(fleet, args, interval, mode)?;
    let sbm = battery::sbm_params(&inst.fleet, alpha)?;
    let nbm = battery::nbm_params(&inst.fleet, alpha)?;
    let at_star = oracle::worst_case(&inst, &result.params, result.mu_star)?;
    if let Some(path) = dump {
        write(path, &oracle::vertex_csv(&at_star))?;
    }
    to_json(&EsbmOutput {
        result: &result,
        mode,
        interval: search::MuGrid::new(interval)?.interval(),
        horizon: inst.horizon,
        sbm,
        nbm,
        certified: at_star.certified,
        mw: (&result.params).into(),
    })
}

fn cmd_check(fleet: &Path, instruction: &Path, args: &OracleArgs) -> Result<String, CliError> {
    let fleet = load_fleet(fleet)?;
    let p_sys = with_path(
        instruction,
        read(instruction).and_then(|t| parse_instruction(&t)),
    )?;
    if p_sys.len() != args.horizon {
        return Err(InputError::Invalid(format!(
            "{}: instruction has {} steps but the horizon is {}",
            instruction.display(),
            p_sys.len(),
            args.horizon
        ))
        .into());
    }
    let inst = instance(fleet, args)?;
    let r = oracle::least_effort_disaggregation(&inst, &p_sys)?;
    if r.is_tracked() {
        let mut out = String::from("step");
        for t in &inst.fleet.tcls {
            out.push_str(&format!(",{}", t.id));
        }
        out.push('\n');
        for step in 0..inst.horizon {
            out.push_str(&step.to_string());
            for u in &r.u {
                out.push_str(&format!(",{:.9}", u[step]));
            }
            out.push('\n');
        }
        return Ok(out);
    }
    let binding = binding_constraints(&inst, &r);
    to_json(&CheckOutput {
        mismatch_kw: r.value,
        tracked: false,
        slacks: r
            .l_plus
            .iter()
            .copied()
            .zip(r.l_minus.iter().copied())
            .collect(),
        binding,
    })
}

/// Limits that are active at the returned schedule.
fn binding_constraints(inst: &OracleInstance, r: &oracle::InnerResult) -> Vec<String> {
    const TOL: f64 = 1e-6;
    let mut out = Vec::new();
    for (i, (tcl, d)) in inst.fleet.tcls.iter().zip(inst.derived()).enumerate() {
        let x = crate::fleet::simulate_tcl(d, inst.x0[i], &r.u[i]);
        for t in 0..inst.horizon {
            let scale = TOL * (1.0 + tcl.p_m);
            if (r.u[i][t] - tcl.u_max()).abs() <= scale {
                out.push(format!("tcl {} step {t}: power at upper limit", tcl.id));
            } else if (r.u[i][t] - tcl.u_min()).abs() <= scale {
                out.push(format!("tcl {} step {t}: power at lower limit", tcl.id));
            }
            if (x[t].abs() - d.x_max).abs() <= TOL * (1.0 + d.x_max) {
                out.push(format!("tcl {} step {t}: storage at limit", tcl.id));
            }
        }
    }
    for t in 0..inst.horizon {
        let ut: Vec<f64> = r.u.iter().map(|u| u[t]).collect();
        if let Ok(flows) = crate::grid::line_flows(&inst.network, &inst.fleet, &ut) {
            for (line, flow) in inst.network.lines.iter().zip(flows) {
                let tol = TOL * (1.0 + flow.abs());
                if (flow - line.f_max).abs() <= tol || (flow - line.f_min).abs() <= tol {
                    out.push(format!(
                        "line {} step {t}: flow {flow:.6} at limit",
                        line.line_id
                    ));
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn cmd_dispatch(
    scenario: &Path,
    model: &str,
    fleet: Option<&Path>,
    args: &OracleArgs,
    interval: f64,
    lookahead: usize,
    compare: bool,
    format: TableFormat,
    csv_out: Option<&Path>,
) -> Result<String, CliError> {
    let scenario: DispatchScenario = with_path(
        scenario,
        read(scenario).and_then(|t| DispatchScenario::from_json(&t)),
    )?;
    let fleet = match fleet {
        Some(p) => load_fleet(p)?,
        None => dispatch::synthetic_fleet(),
    };
    if (fleet.dt - scenario.dt_hours).abs() > 1e-12 {
        return Err(InputError::Invalid(format!(
            "fleet dt_hours {} differs from scenario dt_hours {}",
            fleet.dt, scenario.dt_hours
        ))
        .into());
    }
    let builtin = |name: &str| -> Result<NamedModel, CliError> {
        let alpha = alpha_for(&fleet, args.alpha)?;
        Ok(match name {
            "sbm" => NamedModel {
                name: "SBM".into(),
                mu: None,
                params: battery::sbm_params(&fleet, alpha)?,
            },
            "nbm" => NamedModel {
                name: "NBM".into(),
                mu: None,
                params: battery::nbm_params(&fleet, alpha)?,
            },
            _ => {
                let (_, _, r) = esbm_for(fleet.clone(), args, interval, SearchMode::Lazy)?;
                NamedModel {
                    name: "ESBM".into(),
                    mu: Some(r.mu_star),
                    params: r.params,
                }
            }
        })
    };
    if compare {
        let models = [builtin("sbm")?, builtin("esbm")?, builtin("nbm")?];
        let rows = dispatch::compare_models(&scenario, &models, lookahead)?;
        return Ok(match format {
            TableFormat::Text => report::comparison_text(&rows),
            TableFormat::Csv => report::comparison_csv(&rows),
        });
    }
    let params = match model {
        "sbm" | "nbm" | "esbm" => builtin(model)?.params,
        path => {
            let p = Path::new(path);
            let params: BatteryParams = with_path(
                p,
                read(p).and_then(|t| {
                    serde_json::from_str::<BatteryParams>(&t).map_err(InputError::from)
                }),
            )?;
            params.validate().map_err(InputError::from)?;
            params
        }
    };
    let r = dispatch::rolling_dispatch(&scenario, &params, lookahead)?;
    if let Some(path) = csv_out {
        write(path, &r.to_csv(&scenario))?;
    }
    to_json(&r)
}

fn cmd_synth(out_dir: &Path, seed: u64) -> Result<String, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|source| InputError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let fleet = out_dir.join("synthetic_fleet.json");
    let scenario = out_dir.join("synthetic_scenario.json");
    write(&fleet, &to_json(&dispatch::synthetic_fleet())?)?;
    write(&scenario, &to_json(&dispatch::synthetic_scenario(seed))?)?;
    Ok(format!("{}\n{}\n", fleet.display(), scenario.display()))
}

/// Executes a parsed command and returns what should go to stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let go = || match &cli.command {
        Command::Params { fleet, alpha } => cmd_params(fleet, *alpha),
        Command::Esbm {
            fleet,
            oracle,
            interval,
            mode,
            dump_vertices,
        } => cmd_esbm(fleet, oracle, *interval, *mode, dump_vertices.as_deref()),
        Command::Check {
            fleet,
            instruction,
            oracle,
        } => cmd_check(fleet, instruction, oracle),
        Command::Dispatch {
            scenario,
            model,
            fleet,
            oracle,
            interval,
            lookahead,
            compare,
            format,
            csv,
        } => cmd_dispatch(
            scenario,
            model,
            fleet.as_deref(),
            oracle,
            *interval,
            *lookahead,
            *compare,
            *format,
            csv.as_deref(),
        ),
        Command::Synth { out_dir, seed } => cmd_synth(out_dir, *seed),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(InputError::Invalid("--workers must be at least 1".into()).into());
        }
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(go)
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
