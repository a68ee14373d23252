//! Command-line front end. Settings come from a flat `key = value` config
//! file and flags, flags winning; everything is validated before any
//! computation and files are written only once every output is ready.

use crate::classification::{classify, conjugate_check, maxwell_check, metric_line_condition, ClassifyOptions};
use crate::costmaps::{delta_cost_arc, delta_cost_time, period_theta, radial_period, CostReport, RadialPair, Val};
use crate::error::Error;
use crate::integrator::Trajectory;
use crate::models::{build_model, GroupSpec, ModelKind};
use crate::oracles::{elastica_check, sequence_experiment, SequenceOptions};
use crate::reconstruction::{project_magnetic, reconstruct, MagneticGeodesic};
use crate::reduced::{equilibria, integrate_homoclinic, parse_list, reduced_system, Equilibrium, Momentum, Pencil, RadialSystem, ReducedSystem};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Parser)]
#[command(name = "carnot-lab", version, about = "Geodesic experiments on metabelian Carnot groups")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

/// Every flag is also a config key of the same name.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// eng, n631 or g357.
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub n: Option<String>,
    /// Momentum coefficients `a_0,...`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Pencil `a,b` with `G = a + bF`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub pencil: Option<String>,
    /// Initial reduced state `p_1,...,p_n,x_1,...,x_n` on the unit energy shell.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ic: Option<String>,
    /// Time window `t0,t1`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tspan: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Swept values, comma-separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub values: Option<String>,
    /// Fixed `beta` in `F = 1 - beta r^2` for sweeps.
    #[arg(long, global = true)]
    pub beta: Option<String>,
    /// Fixed angular momentum for sweeps.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ell: Option<String>,
    /// Metric-line windows, comma-separated.
    #[arg(long, global = true)]
    pub windows: Option<String>,
    /// Sequence indices, comma-separated.
    #[arg(long, global = true)]
    pub ns: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate, lift and project one geodesic.
    Geodesic,
    /// Cost increments over the time window by every applicable method.
    Costmap,
    /// Label the geodesic.
    Classify,
    /// Period map and radial period over a range of `beta` or `ell`.
    Sweep {
        #[arg(value_enum)]
        param: SweepParam,
    },
    /// Run one of the verification checks.
    Verify {
        #[arg(value_enum)]
        which: Check,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Beta,
    Ell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Maxwell,
    Conjugate,
    Elastica,
    Metline,
    Sequence,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Maxwell => "maxwell",
            Check::Conjugate => "conjugate",
            Check::Elastica => "elastica",
            Check::Metline => "metline",
            Check::Sequence => "sequence",
        }
    }
}

/// Failure with its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Input(String),
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Solver(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Solver(m) => write!(f, "solver error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Solver(e.to_string())
        }
    }
}

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

const KEYS: [&str; 14] = ["model", "n", "mu", "pencil", "ic", "tspan", "tol", "seed", "out", "values", "beta", "ell", "windows", "ns"];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| input(format!("config line {}: expected `key = value`", k + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(input(format!("config line {}: unknown key `{key}`", k + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

impl Flags {
    /// Config file entries overlaid with the flags that were given.
    pub fn merged(&self) -> Result<BTreeMap<String, String>, Failure> {
        let mut map = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| input(format!("cannot read {}: {e}", p.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        let out = self.out.as_ref().map(|p| p.to_string_lossy().into_owned());
        let pairs = [
            ("model", &self.model),
            ("n", &self.n),
            ("mu", &self.mu),
            ("pencil", &self.pencil),
            ("ic", &self.ic),
            ("tspan", &self.tspan),
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("out", &out),
            ("values", &self.values),
            ("beta", &self.beta),
            ("ell", &self.ell),
            ("windows", &self.windows),
            ("ns", &self.ns),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        Ok(map)
    }
}

/// Validated experiment settings.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub spec: GroupSpec,
    pub mu: Momentum,
    pub pencil: Pencil,
    /// Initial reduced state, when given or implied by a homoclinic orbit.
    pub ic: Option<Vec<f64>>,
    pub tspan: (f64, f64),
    pub tol: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub values: Option<Vec<f64>>,
    pub beta: f64,
    pub ell: f64,
    pub windows: Option<Vec<f64>>,
    pub ns: Vec<usize>,
}

fn number<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, Failure> {
    match map.get(key) {
        Some(s) => s.trim().parse().map_err(|_| input(format!("`{key}`: cannot parse `{s}`"))),
        None => Ok(default),
    }
}

fn list(map: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<f64>>, Failure> {
    map.get(key).map(|s| parse_list(s).map_err(|e| input(format!("`{key}`: {e}")))).transpose()
}

impl ExperimentConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, Failure> {
        let kind: ModelKind = map.get("model").map_or("eng", String::as_str).parse()?;
        let n = match map.get("n") {
            Some(s) => Some(s.trim().parse::<usize>().map_err(|_| input(format!("`n`: cannot parse `{s}`")))?),
            None if kind == ModelKind::Eng => Some(2),
            None => None,
        };
        let spec = build_model(kind, n)?;
        let mu = Momentum::new(match list(map, "mu")? {
            Some(v) => v,
            None if kind == ModelKind::Eng => {
                let mut a = vec![0.0; spec.dim_a];
                a[0] = 1.0;
                a[spec.dim_a - 1] = -4.0;
                a
            }
            None => return Err(input("`mu` is required for this model")),
        });
        mu.check(&spec)?;
        let pencil = match list(map, "pencil")? {
            Some(v) if v.len() == 2 => Pencil { a: v[0], b: v[1] },
            Some(v) => return Err(input(format!("`pencil` needs 2 values, got {}", v.len()))),
            None => Pencil::default(),
        };
        let tspan = match list(map, "tspan")? {
            Some(v) if v.len() == 2 && v[0] < v[1] => (v[0], v[1]),
            Some(_) => return Err(input("`tspan` needs two increasing values")),
            None => (-10.0, 10.0),
        };
        let tol: f64 = number(map, "tol", 1e-10)?;
        if !(1e-13..=1e-3).contains(&tol) {
            return Err(input(format!("`tol` {tol} outside [1e-13, 1e-3]")));
        }
        let ns = match map.get("ns") {
            Some(s) => s
                .split(',')
                .map(|t| t.trim().parse::<usize>().ok().filter(|&k| k > 0).ok_or_else(|| input(format!("`ns`: bad entry `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![3, 4, 5],
        };
        let windows = list(map, "windows")?;
        if windows.as_ref().is_some_and(|w| w.iter().any(|&t| t <= 0.0)) {
            return Err(input("`windows` must be positive"));
        }
        let beta: f64 = number(map, "beta", 2.0)?;
        if !(beta > 0.0) {
            return Err(input("`beta` must be positive"));
        }
        let ic = list(map, "ic")?;
        let cfg = ExperimentConfig {
            ic,
            mu,
            pencil,
            tspan,
            tol,
            seed: number(map, "seed", 7)?,
            out: PathBuf::from(map.get("out").map_or("out", String::as_str)),
            values: list(map, "values")?,
            beta,
            ell: number(map, "ell", 0.0)?,
            windows,
            ns,
            spec,
        };
        let sys = cfg.system()?;
        if let Some(s) = &cfg.ic {
            sys.check_on_shell(s, 1e-9)?;
        }
        Ok(cfg)
    }

    pub fn system(&self) -> Result<ReducedSystem, Failure> {
        Ok(reduced_system(&self.spec, &self.mu, self.pencil)?)
    }
}

/// A computed geodesic with the equilibrium it is homoclinic to, if any.
struct Run {
    sys: ReducedSystem,
    state0: Vec<f64>,
    traj: Arc<Trajectory>,
    homoclinic: Option<Equilibrium>,
}

fn homoclinic_match(sys: &ReducedSystem, state0: &[f64]) -> Option<Equilibrium> {
    equilibria(sys).into_iter().find(|eq| eq.homoclinic_ics.iter().any(|ic| ic.iter().zip(state0).all(|(a, b)| (a - b).abs() < 1e-12)))
}

fn prepare(cfg: &ExperimentConfig) -> Result<Run, Failure> {
    let sys = cfg.system()?;
    let state0 = match &cfg.ic {
        Some(s) => s.clone(),
        None => equilibria(&sys)
            .into_iter()
            .flat_map(|e| e.homoclinic_ics)
            .next()
            .ok_or_else(|| input("no homoclinic orbit to start from; pass `ic`"))?,
    };
    let homoclinic = homoclinic_match(&sys, &state0);
    let (a, b) = cfg.tspan;
    let traj = match &homoclinic {
        Some(eq) => integrate_homoclinic(&sys, eq, &state0, a.abs().max(b.abs()), cfg.tol)?,
        None => sys.integrate(&state0, cfg.tspan, cfg.tol)?,
    };
    Ok(Run { sys, state0, traj: Arc::new(traj), homoclinic })
}

fn magnetic(run: &Run) -> MagneticGeodesic {
    MagneticGeodesic::from_reduced(&run.sys, run.traj.clone(), 0.0, [0.0, 0.0])
}

/// Radial data of `F` and `G` when the system reduces to one radial degree.
fn radial_pair(sys: &ReducedSystem, state0: &[f64]) -> Option<(RadialPair, f64)> {
    let (rs, [_, r]) = RadialSystem::from_reduced(sys, state0).ok()?;
    let Pencil { a, b } = sys.pencil;
    (b != 0.0).then(|| (RadialPair::new((rs.alpha - a) / b, rs.beta / b, rs.ell, a, b), r))
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_vec_pretty(v).map_err(|e| Failure::Solver(e.to_string()))?;
    s.push(b'\n');
    Ok(s)
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Solver(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Failure::Solver(e.to_string()))
}

fn val(v: Val) -> String {
    match v {
        Val::Finite(x) => x.to_string(),
        Val::Infinite => "inf".into(),
    }
}

/// Files and the report printed on stdout.
pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: Vec<u8>,
}

/// Writes every file through a temporary name so a failure leaves no
/// partial outputs behind.
pub fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Solver(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut staged = Vec::new();
    for (name, bytes) in files {
        let tmp = dir.join(format!(".{name}.partial"));
        if let Err(e) = std::fs::write(&tmp, bytes) {
            for t in &staged {
                let _ = std::fs::remove_file(t);
            }
            let _ = std::fs::remove_file(&tmp);
            return Err(io(e));
        }
        staged.push(tmp);
    }
    for ((name, _), tmp) in files.iter().zip(&staged) {
        std::fs::rename(tmp, dir.join(name)).map_err(io)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GeodesicReport<'a> {
    model: String,
    mu: &'a [f64],
    pencil: Pencil,
    initial_state: &'a [f64],
    span: (f64, f64),
    homoclinic: bool,
    class: crate::classification::GeodesicClass,
    energy_drift: f64,
    drift_warning: bool,
    unit_speed_defect: f64,
    horizontality: f64,
    magnetic: crate::reconstruction::MagneticResiduals,
}

fn interior_grid(span: (f64, f64), margin: f64, k: usize) -> Vec<f64> {
    let (a, b) = (span.0 + margin, span.1 - margin);
    (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect()
}

fn cmd_geodesic(cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let run = prepare(cfg)?;
    let gamma = reconstruct(&run.sys, run.traj.clone(), None)?;
    let c = project_magnetic(&gamma);
    let grid = interior_grid(run.traj.span(), 0.01, 400);
    let class = classify(&run.sys, &run.state0, &ClassifyOptions::default())?;
    let report = GeodesicReport {
        model: cfg.spec.model_id.to_string(),
        mu: &cfg.mu.a,
        pencil: cfg.pencil,
        initial_state: &run.state0,
        span: run.traj.span(),
        homoclinic: run.homoclinic.is_some(),
        class,
        energy_drift: run.traj.energy_drift,
        drift_warning: run.traj.drift_warning,
        unit_speed_defect: gamma.unit_speed_defect(),
        horizontality: gamma.horizontality_residual(&grid, 1e-3),
        magnetic: c.residuals(&grid, 1e-3),
    };
    let mut magnetic_csv = Vec::new();
    c.write_csv(&mut magnetic_csv, Some(&run.sys)).map_err(|e| Failure::Solver(e.to_string()))?;
    let mut group_csv = Vec::new();
    gamma.write_csv(&mut group_csv).map_err(|e| Failure::Solver(e.to_string()))?;
    let report = json(&report)?;
    Ok(Output {
        files: vec![("geodesic.csv".into(), magnetic_csv), ("group.csv".into(), group_csv), ("report.json".into(), report.clone())],
        report,
    })
}

#[derive(Serialize)]
struct CostmapReport {
    window: (f64, f64),
    time_domain: CostReport,
    arc: Option<CostReport>,
    period_theta: Option<crate::costmaps::PeriodTheta>,
    radial_period: Option<crate::costmaps::RadialPeriod>,
}

fn cmd_costmap(cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let run = prepare(cfg)?;
    let c = magnetic(&run);
    let window = cfg.tspan;
    let time_domain = delta_cost_time(&c, window)?;
    let arc = delta_cost_arc(&run.sys, &run.traj, window).ok();
    let radial = radial_pair(&run.sys, &run.state0);
    let report = CostmapReport {
        window,
        time_domain,
        arc,
        period_theta: radial.and_then(|(p, _)| period_theta(&p, 1e-12).ok()),
        radial_period: radial.and_then(|(p, r)| radial_period(&p.g, Some(r), 1e-12).ok()),
    };
    // Nested windows shrinking towards the launch time.
    let t0 = if window.0 <= 0.0 && 0.0 <= window.1 { 0.0 } else { window.0 };
    let mut rows = Vec::new();
    for k in 1..=20 {
        let s = k as f64 / 20.0;
        let w = (t0 + s * (window.0 - t0), t0 + s * (window.1 - t0));
        let r = delta_cost_time(&c, w)?;
        let mut row = vec![w.0.to_string(), w.1.to_string()];
        row.extend(r.delta.iter().chain(&r.cost).map(f64::to_string));
        rows.push(row);
    }
    let table = csv_bytes(&["t0", "t1", "dt", "dy", "dz", "cost_t", "cost_y"], &rows)?;
    let report = json(&report)?;
    Ok(Output { files: vec![("costmap.csv".into(), table), ("costmap.json".into(), report.clone())], report })
}

fn cmd_classify(cfg: &ExperimentConfig) -> Result<Output, Failure> {
    let sys = cfg.system()?;
    let state0 = match &cfg.ic {
        Some(s) => s.clone(),
        None => prepare(cfg)?.state0,
    };
    let class = classify(&sys, &state0, &ClassifyOptions { tol: cfg.tol.min(1e-12), ..ClassifyOptions::default() })?;
    let report = json(&class)?;
    Ok(Output { files: vec![("classify.json".into(), report.clone())], report })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub theta1: Option<Val>,
    pub theta2: Option<Val>,
    pub period: Val,
    pub dtheta: Val,
}

/// One row of the sweep over `F = 1 - beta r^2` with angular momentum `ell`.
pub fn sweep_row(beta: f64, ell: f64, pencil: Pencil, tol: f64) -> Result<(Option<Val>, Option<Val>, Val, Val), Error> {
    let pair = RadialPair::new(1.0, -beta, ell, pencil.a, pencil.b);
    let theta = if ell == 0.0 { Some(period_theta(&pair, tol)?) } else { None };
    let rp = radial_period(&pair.g, None, tol)?;
    Ok((theta.map(|t| t.theta1), theta.map(|t| t.theta2), rp.period, rp.dtheta))
}

fn cmd_sweep(cfg: &ExperimentConfig, param: SweepParam) -> Result<Output, Failure> {
    let values = cfg.values.clone().ok_or_else(|| input("`values` is required for a sweep"))?;
    if param == SweepParam::Beta && values.iter().any(|&b| !(b > 0.0)) {
        return Err(input("swept `beta` values must be positive"));
    }
    let tol = cfg.tol.clamp(1e-13, 1e-10);
    let rows: Vec<Result<SweepRow, Failure>> = values
        .par_iter()
        .map(|&v| {
            let (beta, ell) = match param {
                SweepParam::Beta => (v, cfg.ell),
                SweepParam::Ell => (cfg.beta, v),
            };
            sweep_row(beta, ell, cfg.pencil, tol)
                .map(|(theta1, theta2, period, dtheta)| SweepRow { param: v, theta1, theta2, period, dtheta })
                .map_err(|e| {
                    let tag = format!("row {}={v}", if param == SweepParam::Beta { "beta" } else { "ell" });
                    match Failure::from(e) {
                        Failure::Input(m) => Failure::Input(format!("{tag}: {m}")),
                        Failure::Solver(m) => Failure::Solver(format!("{tag}: {m}")),
                    }
                })
        })
        .collect();
    let rows: Vec<SweepRow> = rows.into_iter().collect::<Result<_, _>>()?;
    let opt = |v: Option<Val>| v.map(val).unwrap_or_default();
    let table: Vec<Vec<String>> =
        rows.iter().map(|r| vec![r.param.to_string(), opt(r.theta1), opt(r.theta2), val(r.period), val(r.dtheta)]).collect();
    let csv = csv_bytes(&["param", "theta1", "theta2", "L", "dtheta"], &table)?;
    let report = json(&rows)?;
    Ok(Output { files: vec![("sweep.csv".into(), csv)], report })
}

fn cmd_verify(cfg: &ExperimentConfig, which: Check) -> Result<Output, Failure> {
    let report = match which {
        Check::Maxwell => {
            let sys = cfg.system()?;
            let state0 = cfg.ic.clone().ok_or_else(|| input("`ic` is required for the Maxwell check"))?;
            json(&maxwell_check(&sys, &state0, cfg.tol)?)?
        }
        Check::Conjugate => {
            let run = prepare(cfg)?;
            json(&conjugate_check(&run.sys, &magnetic(&run))?)?
        }
        Check::Elastica => {
            let run = prepare(cfg)?;
            let grid = interior_grid(cfg.tspan, 0.01, 400);
            json(&elastica_check(&run.sys, &magnetic(&run), &grid)?)?
        }
        Check::Metline => {
            let run = prepare(cfg)?;
            let (lo, hi) = run.traj.span();
            let t = (-lo).min(hi);
            let windows = cfg.windows.clone().unwrap_or_else(|| vec![t / 4.0, t / 2.0, t]);
            let gamma = reconstruct(&run.sys, run.traj.clone(), None)?;
            json(&metric_line_condition(&gamma, &windows, 5e-2)?)?
        }
        Check::Sequence => {
            let run = prepare(cfg)?;
            let eq = run.homoclinic.as_ref().ok_or_else(|| input("the sequence experiment needs a homoclinic initial state"))?;
            let (pair, _) = radial_pair(&run.sys, &run.state0).ok_or_else(|| input("the sequence experiment needs a radial system"))?;
            let theta2 = period_theta(&pair, 1e-12)?
                .theta2
                .finite()
                .ok_or_else(|| Failure::Solver("period map diverges".into()))?;
            let mut opts = SequenceOptions::default();
            opts.shoot.seed = cfg.seed;
            opts.brute.seed = cfg.seed;
            json(&sequence_experiment(&run.sys, eq, &run.state0, theta2, &cfg.ns, &opts)?)?
        }
    };
    Ok(Output { files: vec![(format!("verify-{}.json", which.name()), report.clone())], report })
}

/// Runs one command and writes its files; returns the stdout report.
pub fn run(cli: &Cli) -> Result<Vec<u8>, Failure> {
    let cfg = ExperimentConfig::from_map(&cli.flags.merged()?)?;
    let out = match &cli.command {
        Command::Geodesic => cmd_geodesic(&cfg)?,
        Command::Costmap => cmd_costmap(&cfg)?,
        Command::Classify => cmd_classify(&cfg)?,
        Command::Sweep { param } => cmd_sweep(&cfg, *param)?,
        Command::Verify { which } => cmd_verify(&cfg, *which)?,
    };
    write_outputs(&cfg.out, &out.files)?;
    Ok(out.report)
}
