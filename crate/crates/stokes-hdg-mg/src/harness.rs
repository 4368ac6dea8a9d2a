//! Experiment harness: configuration, the five commands behind the
//! `stokes-mg` binary, and table/CSV emission.
//!
//! Each reference study corresponds to one canned config under `configs/`.
//! Config files are flat `key = value` text with `#` comments; command-line
//! flags override file values. CSV output uses the long schema
//! `table,level,dt,p,quantity,value` with deterministic row order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::al::{al_solve, ALConfig, ALRun, InnerSolver, SolveReport};
use crate::assembly::{
    assemble_condensed_with_stabilization, estimate_condition_number, PressureField, TraceSpace,
};
use crate::error::Error;
use crate::local::{MethodKind, Stabilization};
use crate::mesh::MeshHierarchy;
use crate::multigrid::{GsOrder, MgHierarchy, SmootherConfig, SmootherKind, DEFAULT_JACOBI_DAMPING};
use crate::problem::{self, ProblemData};
use crate::Result;

/// Initial pressure policy across levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMode {
    /// p0 = 0 on every level.
    Zero,
    /// p0 = 0 on level 1, converged coarse pressure embedded above.
    Nested,
    /// Run both policies.
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Manufactured,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmootherChoice {
    Jacobi,
    GsForward,
    GsBackward,
    GsSymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodName {
    Sfh,
    Rth,
    Bdmh,
}

/// One experiment's configuration. Defaults reproduce the reference experiment setup:
/// tau* = 1, stopping tolerances 1e-8/1e-10 for degrees 1 and 2 and
/// 1e-10/1e-12 for degree 3, four smoothing steps.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Table label used in CSV rows and output file names.
    pub label: String,
    pub degrees: Vec<usize>,
    /// Maximum level; per-degree desk-scale default when absent
    /// (6 for degrees 1-2, 5 for degree 3).
    pub levels: Option<usize>,
    pub dts: Vec<f64>,
    pub smoother: SmootherChoice,
    /// Smoothing steps per half-cycle; tables sweep over this list.
    pub steps: Vec<usize>,
    pub eps_tol: Option<f64>,
    pub rho: Option<f64>,
    pub tau_star: f64,
    pub method: MethodName,
    pub init: InitMode,
    pub problem: ProblemKind,
    pub negative_control: bool,
    pub out_dir: Option<PathBuf>,
    pub verbose: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            label: "experiment".to_string(),
            degrees: vec![1],
            levels: None,
            dts: vec![2.0, 4.0, 8.0],
            smoother: SmootherChoice::GsSymmetric,
            steps: vec![4],
            eps_tol: None,
            rho: None,
            tau_star: 1.0,
            method: MethodName::Sfh,
            init: InitMode::Nested,
            problem: ProblemKind::Manufactured,
            negative_control: false,
            out_dir: None,
            verbose: false,
        }
    }
}

/// Desk-scale level caps: 98k unknowns at degree 1 on level 6; degree 3 is
/// kept to level 5.
pub fn default_levels(p: usize) -> usize {
    if p >= 3 {
        5
    } else {
        6
    }
}

pub fn default_eps_tol(p: usize) -> f64 {
    if p >= 3 {
        1e-10
    } else {
        1e-8
    }
}

pub fn default_rho(p: usize) -> f64 {
    if p >= 3 {
        1e-12
    } else {
        1e-10
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidConfig(format!(
                    "{}:{}: expected `key = value`",
                    path.display(),
                    lineno + 1
                )));
            };
            cfg.apply_kv(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidConfig(format!("bad {what}: {value}"));
        match key {
            "table" | "label" => self.label = value.to_string(),
            "p" | "degree" => {
                self.degrees = parse_list(value).map_err(|_| bad("degree list"))?;
                if self.degrees.iter().any(|&p| p == 0 || p > 4) {
                    return Err(bad("degree list (supported 1..=4)"));
                }
            }
            "levels" | "level" => self.levels = Some(value.parse().map_err(|_| bad("level"))?),
            "dt" => self.dts = parse_list(value).map_err(|_| bad("dt list"))?,
            "smoother" => {
                self.smoother = match value {
                    "jacobi" => SmootherChoice::Jacobi,
                    "gs" | "gs-forward" => SmootherChoice::GsForward,
                    "gs-backward" => SmootherChoice::GsBackward,
                    "sgs" | "gs-symmetric" => SmootherChoice::GsSymmetric,
                    _ => return Err(bad("smoother (jacobi|gs|gs-backward|sgs)")),
                }
            }
            "steps" => self.steps = parse_list(value).map_err(|_| bad("steps list"))?,
            "eps_tol" => self.eps_tol = Some(value.parse().map_err(|_| bad("eps_tol"))?),
            "rho" => self.rho = Some(value.parse().map_err(|_| bad("rho"))?),
            "tau" | "tau_star" => self.tau_star = value.parse().map_err(|_| bad("tau"))?,
            "method" => {
                self.method = match value {
                    "sfh" => MethodName::Sfh,
                    "rth" => MethodName::Rth,
                    "bdmh" => MethodName::Bdmh,
                    _ => return Err(bad("method (sfh|rth|bdmh)")),
                }
            }
            "init" => {
                self.init = match value {
                    "zero" => InitMode::Zero,
                    "nested" => InitMode::Nested,
                    "both" => InitMode::Both,
                    _ => return Err(bad("init (zero|nested|both)")),
                }
            }
            "problem" => {
                self.problem = match value {
                    "manufactured" => ProblemKind::Manufactured,
                    "zero" => ProblemKind::Zero,
                    _ => return Err(bad("problem (manufactured|zero)")),
                }
            }
            "negative_control" => {
                self.negative_control = value.parse().map_err(|_| bad("negative_control"))?
            }
            "out" => self.out_dir = Some(PathBuf::from(value)),
            "verbose" => self.verbose = value.parse().map_err(|_| bad("verbose"))?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn method_kind(&self) -> MethodKind {
        match self.method {
            MethodName::Sfh => MethodKind::Sfh {
                tau_star: self.tau_star,
            },
            MethodName::Rth => MethodKind::Rth,
            MethodName::Bdmh => MethodKind::Bdmh,
        }
    }

    pub fn smoother_config(&self, steps: usize) -> SmootherConfig {
        let kind = match self.smoother {
            SmootherChoice::Jacobi => SmootherKind::BlockJacobi {
                omega: DEFAULT_JACOBI_DAMPING,
            },
            SmootherChoice::GsForward => SmootherKind::BlockGaussSeidel {
                order: GsOrder::Forward,
            },
            SmootherChoice::GsBackward => SmootherKind::BlockGaussSeidel {
                order: GsOrder::Backward,
            },
            SmootherChoice::GsSymmetric => SmootherKind::BlockGaussSeidel {
                order: GsOrder::Symmetric,
            },
        };
        SmootherConfig { kind, steps }
    }

    pub fn smoother_name(&self) -> &'static str {
        match self.smoother {
            SmootherChoice::Jacobi => "jacobi",
            SmootherChoice::GsForward => "gs-forward",
            SmootherChoice::GsBackward => "gs-backward",
            SmootherChoice::GsSymmetric => "sgs",
        }
    }

    pub fn problem_data(&self) -> ProblemData {
        match self.problem {
            ProblemKind::Manufactured => problem::manufactured(),
            ProblemKind::Zero => problem::zero(),
        }
    }

    pub fn max_level_for(&self, p: usize) -> usize {
        self.levels.unwrap_or_else(|| default_levels(p))
    }

    pub fn al_config(&self, p: usize, dt: f64) -> ALConfig {
        ALConfig::new(
            dt,
            self.eps_tol.unwrap_or_else(|| default_eps_tol(p)),
            self.rho.unwrap_or_else(|| default_rho(p)),
        )
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, ()> {
    let items: std::result::Result<Vec<T>, _> =
        value.split(',').map(|s| s.trim().parse::<T>()).collect();
    match items {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(()),
    }
}

// ---------------------------------------------------------------------------
// Result tables
// ---------------------------------------------------------------------------

/// A single table cell; `Missing` renders as the `--` convention for cells
/// whose iteration exceeded its cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CellValue {
    Count(usize),
    Value(f64),
    Missing,
}

impl std::fmt::Display for CellValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CellValue::Count(n) => write!(f, "{n}"),
            CellValue::Value(v) => write!(f, "{v}"),
            CellValue::Missing => write!(f, "--"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TableRow {
    pub table: String,
    pub level: usize,
    pub dt: f64,
    pub degree: usize,
    pub quantity: String,
    pub value: CellValue,
}

/// Long-format result rows with deterministic order.
#[derive(Clone, Debug, Default)]
pub struct ResultTable {
    pub rows: Vec<TableRow>,
}

impl ResultTable {
    pub fn push(
        &mut self,
        table: &str,
        level: usize,
        dt: f64,
        degree: usize,
        quantity: &str,
        value: CellValue,
    ) {
        self.rows.push(TableRow {
            table: table.to_string(),
            level,
            dt,
            degree,
            quantity: quantity.to_string(),
            value,
        });
    }

    pub fn get(&self, level: usize, dt: f64, degree: usize, quantity: &str) -> Option<CellValue> {
        self.rows
            .iter()
            .find(|r| {
                r.level == level && r.dt == dt && r.degree == degree && r.quantity == quantity
            })
            .map(|r| r.value)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,level,dt,p,quantity,value\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.table, r.level, r.dt, r.degree, r.quantity, r.value
            )
            .unwrap();
        }
        out
    }
}

/// A command's result: the long table plus any failures that should flag the
/// run as non-converged.
#[derive(Debug, Default)]
pub struct CmdOutcome {
    pub table: ResultTable,
    pub failures: Vec<String>,
}

impl CmdOutcome {
    fn write_csv(&self, cfg: &ExperimentConfig) -> Result<()> {
        if let Some(dir) = &cfg.out_dir {
            fs::create_dir_all(dir)?;
            let path = dir.join(format!("{}.csv", cfg.label));
            fs::write(path, self.table.to_csv())?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Shared level sweeps
// ---------------------------------------------------------------------------

struct LevelResult {
    level: usize,
    dofs: usize,
    run: std::result::Result<ALRun, Error>,
}

/// Runs the outer solver on levels 1..=max_level of one assembled hierarchy,
/// optionally chaining the converged coarse pressure as the fine initial
/// guess. Divergence of one level stops the sweep (nothing meaningful can
/// seed the next level).
fn sweep_levels(
    hier: &MeshHierarchy,
    mg: &MgHierarchy,
    cfg: &ExperimentConfig,
    p: usize,
    dt: f64,
    nested: bool,
    max_level: usize,
    results: &mut Vec<LevelResult>,
) {
    let prob = cfg.problem_data();
    let mut p0 = PressureField::zeros(hier.level(1), p);
    for level in 1..=max_level {
        let mesh = hier.level(level);
        let lvl = &mg.levels[level - 1];
        let al_cfg = cfg.al_config(p, dt);
        let inner = InnerSolver::Multigrid {
            mg,
            level_idx: level - 1,
        };
        let run = al_solve(&lvl.system, &lvl.space, mesh, &prob, p0.clone(), &al_cfg, &inner);
        let ok = match &run {
            Ok(r) if r.converged => {
                if level < max_level {
                    p0 = if nested {
                        r.state
                            .pressure
                            .embed_from_coarse(mesh, hier.level(level + 1))
                            .expect("embedding cannot fail on nested levels")
                    } else {
                        PressureField::zeros(hier.level(level + 1), p)
                    };
                }
                true
            }
            _ => false,
        };
        results.push(LevelResult {
            level,
            dofs: lvl.space.n_dofs,
            run,
        });
        if !ok {
            break;
        }
    }
}

fn run_cell(r: &LevelResult) -> Option<&ALRun> {
    match &r.run {
        Ok(run) if run.converged => Some(run),
        _ => None,
    }
}

fn max_inner(run: &ALRun) -> usize {
    run.state
        .history
        .iter()
        .map(|s| s.mg_iterations)
        .max()
        .unwrap_or(0)
}

/// Inner counts above this threshold are rendered `--`, matching the
/// reference tables' convention for iteration counts past one hundred.
const INNER_DASH_THRESHOLD: usize = 100;

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Convergence-order study: solves the manufactured problem on a nested
/// chain of levels and reports L2 errors and estimated orders for p, u, L.
pub fn cmd_eoc(cfg: &ExperimentConfig) -> Result<CmdOutcome> {
    let mut out = CmdOutcome::default();
    let dt = cfg.dts[0];
    for &p in &cfg.degrees {
        let max_level = cfg.max_level_for(p);
        let hier = MeshHierarchy::build(max_level);
        let prob = cfg.problem_data();
        let mg = MgHierarchy::assemble(
            &hier,
            max_level,
            p,
            cfg.method_kind(),
            dt,
            prob.dirichlet,
            cfg.smoother_config(cfg.steps[0]),
        )?;
        let mut results = Vec::new();
        sweep_levels(&hier, &mg, cfg, p, dt, true, max_level, &mut results);
        let mut prev: Option<(f64, f64, f64)> = None;
        for r in &results {
            match run_cell(r) {
                Some(run) => {
                    let e = run
                        .errors
                        .as_ref()
                        .expect("manufactured problem has exact data");
                    out.table
                        .push(&cfg.label, r.level, dt, p, "dofs", CellValue::Count(r.dofs));
                    out.table
                        .push(&cfg.label, r.level, dt, p, "err_u", CellValue::Value(e.u));
                    out.table
                        .push(&cfg.label, r.level, dt, p, "err_p", CellValue::Value(e.p));
                    out.table
                        .push(&cfg.label, r.level, dt, p, "err_l", CellValue::Value(e.l));
                    if let Some((pu, pp, pl)) = prev {
                        out.table.push(
                            &cfg.label,
                            r.level,
                            dt,
                            p,
                            "eoc_u",
                            CellValue::Value((pu / e.u).log2()),
                        );
                        out.table.push(
                            &cfg.label,
                            r.level,
                            dt,
                            p,
                            "eoc_p",
                            CellValue::Value((pp / e.p).log2()),
                        );
                        out.table.push(
                            &cfg.label,
                            r.level,
                            dt,
                            p,
                            "eoc_l",
                            CellValue::Value((pl / e.l).log2()),
                        );
                    }
                    prev = Some((e.u, e.p, e.l));
                }
                None => {
                    out.failures
                        .push(format!("p = {p}, level {}: solver did not converge", r.level));
                    out.table
                        .push(&cfg.label, r.level, dt, p, "err_u", CellValue::Missing);
                }
            }
        }
        print_eoc_block(&out.table, p, dt, max_level);
    }
    out.write_csv(cfg)?;
    Ok(out)
}

/// Iteration-count study: outer (augmented-Lagrangian) counts and the
/// largest inner (multigrid) count per level, time step, and smoothing
/// steps, for the configured initialization policy.
pub fn cmd_iters(cfg: &ExperimentConfig) -> Result<CmdOutcome> {
    let mut out = CmdOutcome::default();
    let modes: &[(InitMode, &str)] = match cfg.init {
        InitMode::Zero => &[(InitMode::Zero, "zero")],
        InitMode::Nested => &[(InitMode::Nested, "nested")],
        InitMode::Both => &[(InitMode::Zero, "zero"), (InitMode::Nested, "nested")],
    };
    for &p in &cfg.degrees {
        let max_level = cfg.max_level_for(p);
        let hier = MeshHierarchy::build(max_level);
        let prob = cfg.problem_data();
        for &m in &cfg.steps {
            for &dt in &cfg.dts {
                let mg = MgHierarchy::assemble(
                    &hier,
                    max_level,
                    p,
                    cfg.method_kind(),
                    dt,
                    prob.dirichlet,
                    cfg.smoother_config(m),
                )?;
                for (mode, suffix) in modes {
                    let nested = *mode == InitMode::Nested;
                    let mut results = Vec::new();
                    sweep_levels(&hier, &mg, cfg, p, dt, nested, max_level, &mut results);
                    for r in &results {
                        let outer_q = format!("n_outer_{suffix}_m{m}");
                        let inner_q = format!("mg_max_{suffix}_m{m}");
                        out.table
                            .push(&cfg.label, r.level, dt, p, "dofs", CellValue::Count(r.dofs));
                        match run_cell(r) {
                            Some(run) => {
                                let inner = max_inner(run);
                                out.table.push(
                                    &cfg.label,
                                    r.level,
                                    dt,
                                    p,
                                    &outer_q,
                                    CellValue::Count(run.state.n),
                                );
                                let cell = if inner > INNER_DASH_THRESHOLD {
                                    CellValue::Missing
                                } else {
                                    CellValue::Count(inner)
                                };
                                out.table.push(&cfg.label, r.level, dt, p, &inner_q, cell);
                            }
                            None => {
                                out.table.push(
                                    &cfg.label,
                                    r.level,
                                    dt,
                                    p,
                                    &outer_q,
                                    CellValue::Missing,
                                );
                                out.table.push(
                                    &cfg.label,
                                    r.level,
                                    dt,
                                    p,
                                    &inner_q,
                                    CellValue::Missing,
                                );
                            }
                        }
                    }
                }
                print_iters_block(&out.table, p, m, dt, max_level, modes);
            }
        }
    }
    out.write_csv(cfg)?;
    Ok(out)
}

/// Condition-number sweep: extreme eigenvalue estimates per level and time
/// step plus the level-to-level growth ratio of the condition number.
pub fn cmd_cond(cfg: &ExperimentConfig) -> Result<CmdOutcome> {
    let mut out = CmdOutcome::default();
    let p = cfg.degrees[0];
    // Eigen-estimation relies on dense factorizations; stay at desk scale.
    let max_level = cfg.levels.unwrap_or(4).min(4);
    let hier = MeshHierarchy::build(max_level);
    let prob = cfg.problem_data();
    for &dt in &cfg.dts {
        let mut prev_kappa: Option<f64> = None;
        for level in 2..=max_level {
            let mesh = hier.level(level);
            let space = TraceSpace::new(mesh, p, prob.dirichlet)?;
            let sys = crate::assembly::assemble_condensed(mesh, &space, cfg.method_kind(), dt)?;
            let est = estimate_condition_number(&sys.matrix);
            if !est.converged {
                out.failures
                    .push(format!("dt = {dt}, level {level}: eigen-estimation hit its cap"));
                out.table
                    .push(&cfg.label, level, dt, p, "kappa", CellValue::Missing);
                prev_kappa = None;
                continue;
            }
            out.table.push(
                &cfg.label,
                level,
                dt,
                p,
                "lambda_min",
                CellValue::Value(est.lambda_min),
            );
            out.table.push(
                &cfg.label,
                level,
                dt,
                p,
                "lambda_max",
                CellValue::Value(est.lambda_max),
            );
            out.table
                .push(&cfg.label, level, dt, p, "kappa", CellValue::Value(est.kappa));
            if let Some(prev) = prev_kappa {
                out.table.push(
                    &cfg.label,
                    level,
                    dt,
                    p,
                    "kappa_ratio",
                    CellValue::Value(est.kappa / prev),
                );
            }
            prev_kappa = Some(est.kappa);
        }
    }
    print_cond_block(&out.table, cfg, p, max_level);
    out.write_csv(cfg)?;
    Ok(out)
}

/// Method-identity check: the condensed matrices of SFH (two tau* values),
/// BDM-H, and RT-H must agree entrywise. With `negative_control` set, a
/// deliberately mis-stabilized variant must disagree.
pub fn cmd_identity(cfg: &ExperimentConfig) -> Result<CmdOutcome> {
    let mut out = CmdOutcome::default();
    let tol = 1e-10;
    let max_level = cfg.levels.unwrap_or(2).min(3);
    let hier = MeshHierarchy::build(max_level);
    let prob = cfg.problem_data();
    let dt = cfg.dts[0];
    for &p in &cfg.degrees {
        for level in 1..=max_level {
            let mesh = hier.level(level);
            let space = TraceSpace::new(mesh, p, prob.dirichlet)?;
            let assemble = |method: MethodKind, stab: Option<Stabilization>| -> Result<_> {
                Ok(
                    assemble_condensed_with_stabilization(mesh, &space, method, dt, stab)?
                        .matrix
                        .to_dense(),
                )
            };
            let reference = assemble(MethodKind::Sfh { tau_star: 1.0 }, None)?;
            let scale = reference.amax();
            let mut worst: f64 = 0.0;
            for method in [
                MethodKind::Sfh { tau_star: 10.0 },
                MethodKind::Bdmh,
                MethodKind::Rth,
            ] {
                let a = assemble(method, None)?;
                worst = worst.max((a - &reference).amax() / scale);
            }
            out.table.push(
                &cfg.label,
                level,
                dt,
                p,
                "max_rel_diff",
                CellValue::Value(worst),
            );
            let mut pass = worst < tol;
            if cfg.negative_control {
                // Stabilization off the designated face changes the matrix.
                let perturbed = assemble(
                    MethodKind::Sfh { tau_star: 1.0 },
                    Some(Stabilization {
                        star: 1.0,
                        off_star: 0.05,
                    }),
                )?;
                let control = (perturbed - &reference).amax() / scale;
                out.table.push(
                    &cfg.label,
                    level,
                    dt,
                    p,
                    "control_rel_diff",
                    CellValue::Value(control),
                );
                pass = pass && control > tol;
            }
            println!(
                "identity p = {p}, level {level}: max relative diff {worst:.3e} -> {}",
                if pass { "pass" } else { "FAIL" }
            );
            if !pass {
                out.failures
                    .push(format!("p = {p}, level {level}: identity check failed"));
            }
        }
    }
    out.write_csv(cfg)?;
    Ok(out)
}

/// One full outer solve at the given level, reported as JSON (and CSV rows).
pub fn cmd_solve(
    cfg: &ExperimentConfig,
    level: Option<usize>,
) -> Result<(SolveReport, CmdOutcome)> {
    let p = cfg.degrees[0];
    let dt = cfg.dts[0];
    let m = cfg.steps[0];
    let max_level = level.unwrap_or_else(|| cfg.max_level_for(p));
    let hier = MeshHierarchy::build(max_level);
    let prob = cfg.problem_data();
    let t0 = Instant::now();
    let mg = MgHierarchy::assemble(
        &hier,
        max_level,
        p,
        cfg.method_kind(),
        dt,
        prob.dirichlet,
        cfg.smoother_config(m),
    )?;
    let assemble_seconds = t0.elapsed().as_secs_f64();

    let nested = cfg.init != InitMode::Zero;
    let t1 = Instant::now();
    let mut results = Vec::new();
    sweep_levels(&hier, &mg, cfg, p, dt, nested, max_level, &mut results);
    let solve_seconds = t1.elapsed().as_secs_f64();
    let last = results.last().unwrap();
    let run = match &last.run {
        Ok(run) => run,
        Err(e) => {
            return Err(Error::MgDiverged {
                cap: crate::multigrid::MG_ITERATION_CAP,
                residual: f64::NAN,
                history: match e {
                    Error::MgDiverged { history, .. } => history.clone(),
                    _ => Vec::new(),
                },
            })
        }
    };
    if !run.converged {
        return Err(Error::OuterDiverged {
            cap: cfg.al_config(p, dt).max_outer,
            increment: run
                .state
                .history
                .last()
                .map(|s| s.pressure_increment)
                .unwrap_or(f64::NAN),
        });
    }

    let al_cfg = cfg.al_config(p, dt);
    let report = SolveReport {
        level: last.level,
        degree: p,
        dt,
        method: cfg.method_kind().name().to_string(),
        smoother: cfg.smoother_name().to_string(),
        smoothing_steps: m,
        eps_tol: al_cfg.eps_tol,
        rho: al_cfg.rho,
        warm_start: al_cfg.warm_start,
        nested_init: nested,
        dofs: last.dofs,
        converged: run.converged,
        n_outer: run.state.n,
        mg_iterations: run.state.history.iter().map(|s| s.mg_iterations).collect(),
        pressure_increments: run
            .state
            .history
            .iter()
            .map(|s| s.pressure_increment)
            .collect(),
        err_u: run.errors.as_ref().map(|e| e.u),
        err_p: run.errors.as_ref().map(|e| e.p),
        err_l: run.errors.as_ref().map(|e| e.l),
        assemble_seconds,
        solve_seconds,
    };

    let mut out = CmdOutcome::default();
    out.table.push(
        &cfg.label,
        last.level,
        dt,
        p,
        "dofs",
        CellValue::Count(last.dofs),
    );
    out.table.push(
        &cfg.label,
        last.level,
        dt,
        p,
        "n_outer",
        CellValue::Count(run.state.n),
    );
    out.table.push(
        &cfg.label,
        last.level,
        dt,
        p,
        "mg_max",
        CellValue::Count(max_inner(run)),
    );
    if let Some(e) = &run.errors {
        out.table
            .push(&cfg.label, last.level, dt, p, "err_u", CellValue::Value(e.u));
        out.table
            .push(&cfg.label, last.level, dt, p, "err_p", CellValue::Value(e.p));
        out.table
            .push(&cfg.label, last.level, dt, p, "err_l", CellValue::Value(e.l));
    }

    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join(format!("solve_report_l{}_p{}.json", last.level, p)),
            report.to_json(),
        )?;
        if cfg.verbose {
            // Mesh dump, matrix export, and an outer-iteration telemetry CSV.
            fs::write(
                dir.join(format!("mesh_l{}.txt", last.level)),
                hier.level(last.level).dump(),
            )?;
            let mut coo = Vec::new();
            mg.levels[last.level - 1]
                .system
                .matrix
                .write_coordinate(&mut coo)?;
            fs::write(dir.join(format!("matrix_l{}_p{}.txt", last.level, p)), coo)?;
            let mut telemetry = Vec::new();
            write_telemetry(&mut telemetry, &report.pressure_increments)?;
            fs::write(
                dir.join(format!("telemetry_l{}_p{}.csv", last.level, p)),
                telemetry,
            )?;
        }
    }
    println!("{}", report.to_json());
    out.write_csv(cfg)?;
    Ok((report, out))
}

// ---------------------------------------------------------------------------
// Console rendering
// ---------------------------------------------------------------------------

fn fmt_cell(v: Option<CellValue>) -> String {
    match v {
        Some(CellValue::Value(x)) => format!("{x:.2}"),
        Some(c) => format!("{c}"),
        None => ".".to_string(),
    }
}

fn print_eoc_block(table: &ResultTable, p: usize, dt: f64, max_level: usize) {
    println!("estimated orders of convergence, degree {p}:");
    print!("{:>8}", "level");
    for level in 2..=max_level {
        print!("{level:>8}");
    }
    println!();
    for q in ["eoc_p", "eoc_u", "eoc_l"] {
        print!("{:>8}", q.trim_start_matches("eoc_"));
        for level in 2..=max_level {
            print!("{:>8}", fmt_cell(table.get(level, dt, p, q)));
        }
        println!();
    }
}

fn print_iters_block(
    table: &ResultTable,
    p: usize,
    m: usize,
    dt: f64,
    max_level: usize,
    modes: &[(InitMode, &str)],
) {
    println!("iteration counts, degree {p}, {m} smoothing steps, dt = {dt} (outer/inner):");
    for (_, suffix) in modes {
        print!("{:>10}", *suffix);
        for level in 1..=max_level {
            let a = fmt_cell(table.get(level, dt, p, &format!("n_outer_{suffix}_m{m}")));
            let b = fmt_cell(table.get(level, dt, p, &format!("mg_max_{suffix}_m{m}")));
            print!("{:>10}", format!("{a}/{b}"));
        }
        println!();
    }
}

fn print_cond_block(table: &ResultTable, cfg: &ExperimentConfig, p: usize, max_level: usize) {
    println!("condition numbers, degree {p}:");
    print!("{:>10}", "dt\\level");
    for level in 2..=max_level {
        print!("{:>16}", level);
    }
    println!();
    for &dt in &cfg.dts {
        print!("{dt:>10}");
        for level in 2..=max_level {
            let kappa = match table.get(level, dt, p, "kappa") {
                Some(CellValue::Value(v)) => format!("{v:.1}"),
                _ => "--".to_string(),
            };
            let ratio = match table.get(level, dt, p, "kappa_ratio") {
                Some(CellValue::Value(v)) => format!(" (x{v:.2})"),
                _ => String::new(),
            };
            print!("{:>16}", format!("{kappa}{ratio}"));
        }
        println!();
    }
}

/// Writes telemetry rows `iter,residual`.
pub fn write_telemetry(out: &mut dyn std::io::Write, history: &[f64]) -> std::io::Result<()> {
    writeln!(out, "iter,residual")?;
    for (i, r) in history.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, r)?;
    }
    Ok(())
}
