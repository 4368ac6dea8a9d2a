//! Augmented-Lagrangian outer iteration.
//!
//! Backward-Euler pseudo-time stepping: each step assembles the right-hand
//! side from the previous pressure, solves the condensed skeleton system
//! (multigrid or a direct factorization), and reconstructs the new pressure.
//! The iteration stops when the relative pressure increment drops below the
//! configured tolerance; its fixed point is the stationary Stokes solution,
//! independent of the pseudo-time step.

use nalgebra::{Cholesky, DVector, Dyn};
use serde::Serialize;

use crate::assembly::{
    assemble_rhs_fixed, assemble_rhs_pressure_part, compute_errors, gather_element_trace,
    reconstruct_fields, CondensedSystem, DiscreteFields, FieldErrors, PressureField,
    SourceMoments, TraceSpace,
};
use crate::error::Error;
use crate::mesh::MeshLevel;
use crate::multigrid::MgHierarchy;
use crate::problem::ProblemData;
use crate::Result;

/// Outer iteration controls.
#[derive(Clone, Copy, Debug)]
pub struct ALConfig {
    pub dt: f64,
    /// Relative pressure-increment stopping tolerance.
    pub eps_tol: f64,
    /// Inner relative residual tolerance.
    pub rho: f64,
    pub max_outer: usize,
    /// Reuse the previous skeleton solution as the inner initial guess.
    pub warm_start: bool,
    /// Abort as non-converged after this many steps without a new best
    /// increment; catches runs whose inexact inner solves floor above the
    /// outer tolerance.
    pub stall_patience: usize,
}

impl ALConfig {
    pub fn new(dt: f64, eps_tol: f64, rho: f64) -> Self {
        Self {
            dt,
            eps_tol,
            rho,
            max_outer: 500,
            warm_start: true,
            stall_patience: 60,
        }
    }
}

/// Inner solver for the condensed system.
pub enum InnerSolver<'a> {
    /// V-cycle iteration with the given hierarchy level (0-based index) as
    /// the finest one.
    Multigrid { mg: &'a MgHierarchy, level_idx: usize },
    Direct(Box<Cholesky<f64, Dyn>>),
}

impl<'a> InnerSolver<'a> {
    /// Multigrid on the hierarchy's finest level.
    pub fn multigrid(mg: &'a MgHierarchy) -> Self {
        InnerSolver::Multigrid {
            mg,
            level_idx: mg.levels.len() - 1,
        }
    }

    /// Dense Cholesky of the condensed matrix; practical on coarse levels
    /// and in tests where iteration error must not mask scheme identities.
    pub fn direct(sys: &CondensedSystem) -> Result<Self> {
        let chol = sys
            .matrix
            .to_dense()
            .cholesky()
            .ok_or(Error::CoarseFactorization)?;
        Ok(InnerSolver::Direct(Box::new(chol)))
    }

    fn solve(
        &self,
        rho: f64,
        b: &DVector<f64>,
        x0: DVector<f64>,
        warm: bool,
    ) -> std::result::Result<(DVector<f64>, usize), Error> {
        match self {
            InnerSolver::Multigrid { mg, level_idx } => {
                // A warm-started step must apply at least one cycle so the
                // trace keeps tracking the moving right-hand side.
                let min_cycles = usize::from(warm);
                let (x, stats) = mg.solve_at(*level_idx, b, rho, x0, min_cycles)?;
                Ok((x, stats.iterations))
            }
            InnerSolver::Direct(chol) => Ok((chol.solve(b), 1)),
        }
    }
}

/// One outer step's record.
#[derive(Clone, Debug, Serialize)]
pub struct OuterStep {
    pub mg_iterations: usize,
    pub pressure_increment: f64,
}

/// Mutable state of the outer iteration.
pub struct ALState {
    pub n: usize,
    pub lambda: DVector<f64>,
    pub pressure: PressureField,
    pub history: Vec<OuterStep>,
}

impl ALState {
    pub fn new(space: &TraceSpace, p0: PressureField) -> Self {
        Self {
            n: 0,
            lambda: DVector::zeros(space.n_dofs),
            pressure: p0,
            history: Vec::new(),
        }
    }
}

/// New pressure coefficients from the skeleton solution, source moments, and
/// previous pressure; only the pressure rows of the local maps are applied.
fn next_pressure(
    sys: &CondensedSystem,
    space: &TraceSpace,
    mesh: &MeshLevel,
    lambda: &DVector<f64>,
    p_prev: &PressureField,
    moments: &SourceMoments,
) -> PressureField {
    let n_pres = PressureField::coeffs_per_element(space.degree);
    let mut coeffs = vec![0.0; mesh.triangles.len() * n_pres];
    for tid in 0..mesh.triangles.len() {
        let op = &sys.elements[tid];
        let d = &op.dims;
        let off = d.n_grad + d.n_vel;
        let lam = gather_element_trace(space, mesh, tid, lambda);
        let m_e = DVector::from_column_slice(&p_prev.coeffs[tid * n_pres..(tid + 1) * n_pres]);
        let p_new = op.map_lambda.rows(off, d.n_pres) * lam
            + op.map_f.rows(off, d.n_pres) * &moments.per_element[tid]
            + op.map_m.rows(off, d.n_pres) * m_e;
        coeffs[tid * n_pres..(tid + 1) * n_pres].copy_from_slice(p_new.as_slice());
    }
    PressureField {
        level: mesh.level,
        degree: space.degree,
        coeffs,
    }
}

/// Runs one backward-Euler step: assemble the pressure part of the
/// right-hand side, solve for the skeleton trace, reconstruct the pressure,
/// and append the step record. Returns the relative pressure increment.
pub fn al_step(
    state: &mut ALState,
    cfg: &ALConfig,
    sys: &CondensedSystem,
    space: &TraceSpace,
    mesh: &MeshLevel,
    fixed_rhs: &DVector<f64>,
    moments: &SourceMoments,
    inner: &InnerSolver,
) -> Result<f64> {
    let b = fixed_rhs + assemble_rhs_pressure_part(sys, space, mesh, &state.pressure);
    let x0 = if cfg.warm_start {
        state.lambda.clone()
    } else {
        DVector::zeros(space.n_dofs)
    };
    let (lambda, its) = inner.solve(cfg.rho, &b, x0, cfg.warm_start && state.n > 0)?;
    let p_new = next_pressure(sys, space, mesh, &lambda, &state.pressure, moments);
    let inc = p_new.diff_norm(&state.pressure);
    let p_norm = p_new.norm();
    let rel = if p_norm > 0.0 {
        inc / p_norm
    } else if inc == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    state.n += 1;
    state.lambda = lambda;
    state.pressure = p_new;
    state.history.push(OuterStep {
        mg_iterations: its,
        pressure_increment: rel,
    });
    Ok(rel)
}

/// Result of a full outer solve.
pub struct ALRun {
    pub state: ALState,
    /// False when the outer cap was reached before the tolerance.
    pub converged: bool,
    pub fields: DiscreteFields,
    pub errors: Option<FieldErrors>,
}

/// Iterates [`al_step`] from the given initial pressure until the relative
/// pressure increment drops below `cfg.eps_tol`, then reconstructs all
/// fields and computes errors against the problem's exact solution if one
/// is attached. Inner-solver divergence is propagated as an error; reaching
/// the outer cap is reported through `converged` with the history intact.
pub fn al_solve(
    sys: &CondensedSystem,
    space: &TraceSpace,
    mesh: &MeshLevel,
    problem: &ProblemData,
    p0: PressureField,
    cfg: &ALConfig,
    inner: &InnerSolver,
) -> Result<ALRun> {
    let moments = SourceMoments::build(mesh, sys, problem.source)?;
    let fixed = assemble_rhs_fixed(sys, space, mesh, problem, &moments)?;
    let mut state = ALState::new(space, p0);
    let mut converged = false;
    // The final reconstruction must use the pressure that drove the last
    // skeleton solve, i.e. p^{n-1}, not the p^n it produced.
    let mut driving = state.pressure.clone();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    while state.n < cfg.max_outer {
        driving = state.pressure.clone();
        let rel = al_step(&mut state, cfg, sys, space, mesh, &fixed, &moments, inner)?;
        if rel < cfg.eps_tol {
            converged = true;
            break;
        }
        if rel < 0.999 * best {
            best = rel;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.stall_patience {
                break;
            }
        }
    }
    let fields = reconstruct_fields(sys, space, mesh, &state.lambda, &driving, &moments);
    let errors = match &problem.exact {
        Some(exact) => Some(compute_errors(mesh, &fields, exact)?),
        None => None,
    };
    Ok(ALRun {
        state,
        converged,
        fields,
        errors,
    })
}

/// Serializable record of one outer solve, written by the harness.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub level: usize,
    pub degree: usize,
    pub dt: f64,
    pub method: String,
    pub smoother: String,
    pub smoothing_steps: usize,
    pub eps_tol: f64,
    pub rho: f64,
    pub warm_start: bool,
    pub nested_init: bool,
    pub dofs: usize,
    pub converged: bool,
    pub n_outer: usize,
    pub mg_iterations: Vec<usize>,
    pub pressure_increments: Vec<f64>,
    pub err_u: Option<f64>,
    pub err_p: Option<f64>,
    pub err_l: Option<f64>,
    pub assemble_seconds: f64,
    pub solve_seconds: f64,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
