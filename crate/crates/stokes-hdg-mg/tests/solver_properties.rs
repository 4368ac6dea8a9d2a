//! Cross-cutting solver properties: invariance of the condensed operator
//! under the stabilized-face assignment, and pseudo-time-step independence
//! of the converged solution.

use stokes_hdg_mg::al::{al_solve, ALConfig, InnerSolver};
use stokes_hdg_mg::assembly::{assemble_condensed, PressureField, TraceSpace};
use stokes_hdg_mg::local::MethodKind;
use stokes_hdg_mg::mesh::MeshHierarchy;
use stokes_hdg_mg::problem;

#[test]
fn condensed_matrix_does_not_depend_on_the_star_face_choice() {
    let hier = MeshHierarchy::build(2);
    let mesh = hier.level(2);
    let prob = problem::manufactured();
    for p in [1, 2] {
        let space = TraceSpace::new(mesh, p, prob.dirichlet).unwrap();
        let reference = assemble_condensed(mesh, &space, MethodKind::Sfh { tau_star: 1.0 }, 2.0)
            .unwrap()
            .matrix
            .to_dense();
        // Reassign every element's stabilized face to the smallest face id
        // instead of the largest; the condensed operator must not change.
        let mut remeshed = mesh.clone();
        for t in remeshed.triangles.iter_mut() {
            t.star_face = (0..3).min_by_key(|&k| t.faces[k]).unwrap();
        }
        let alt = assemble_condensed(&remeshed, &space, MethodKind::Sfh { tau_star: 1.0 }, 2.0)
            .unwrap()
            .matrix
            .to_dense();
        let rel = (alt - &reference).norm() / reference.norm();
        assert!(rel < 1e-10, "p = {p}: star-face dependence {rel:.3e}");
    }
}

#[test]
fn converged_errors_do_not_depend_on_the_time_step() {
    let hier = MeshHierarchy::build(2);
    let mesh = hier.level(2);
    let prob = problem::manufactured();
    let p = 1;
    let mut errs = Vec::new();
    for dt in [2.0, 4.0, 8.0] {
        let space = TraceSpace::new(mesh, p, prob.dirichlet).unwrap();
        let sys = assemble_condensed(mesh, &space, MethodKind::Sfh { tau_star: 1.0 }, dt).unwrap();
        let inner = InnerSolver::direct(&sys).unwrap();
        // Tight outer tolerance exposes the shared fixed point.
        let mut cfg = ALConfig::new(dt, 1e-11, 1e-12);
        cfg.max_outer = 3000;
        let run = al_solve(
            &sys,
            &space,
            mesh,
            &prob,
            PressureField::zeros(mesh, p),
            &cfg,
            &inner,
        )
        .unwrap();
        assert!(run.converged);
        errs.push(run.errors.unwrap());
    }
    for e in &errs[1..] {
        assert!((e.u - errs[0].u).abs() < 1e-6 * errs[0].u, "u errors differ");
        assert!((e.p - errs[0].p).abs() < 1e-6 * errs[0].p, "p errors differ");
        assert!((e.l - errs[0].l).abs() < 1e-6 * errs[0].l, "L errors differ");
    }
}
