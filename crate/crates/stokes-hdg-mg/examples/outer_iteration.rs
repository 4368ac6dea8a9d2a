//! Outer (augmented-Lagrangian) iteration counts: level-independent for a
//! fixed pseudo-time step, halving as the step doubles, and smaller again
//! with nested initialization.
//!
//!     cargo run --release --example outer_iteration

use stokes_hdg_mg::al::{al_solve, ALConfig, InnerSolver};
use stokes_hdg_mg::assembly::PressureField;
use stokes_hdg_mg::local::MethodKind;
use stokes_hdg_mg::mesh::MeshHierarchy;
use stokes_hdg_mg::multigrid::{MgHierarchy, SmootherConfig};
use stokes_hdg_mg::problem;

fn main() {
    let max_level = 4;
    let hier = MeshHierarchy::build(max_level);
    let prob = problem::manufactured();
    let p = 1;
    println!("outer iterations to a 1e-8 relative pressure increment:");
    println!("{:>6} {:>22} {:>22}", "dt", "zero init (levels 1-4)", "nested (levels 1-4)");
    for dt in [2.0, 4.0, 8.0] {
        let mg = MgHierarchy::assemble(
            &hier,
            max_level,
            p,
            MethodKind::Sfh { tau_star: 1.0 },
            dt,
            prob.dirichlet,
            SmootherConfig::default(),
        )
        .unwrap();
        let cfg = ALConfig::new(dt, 1e-8, 1e-10);
        let mut zero_counts = Vec::new();
        let mut nested_counts = Vec::new();
        let mut p0 = PressureField::zeros(hier.level(1), p);
        for level in 1..=max_level {
            let mesh = hier.level(level);
            let lvl = &mg.levels[level - 1];
            let inner = InnerSolver::Multigrid { mg: &mg, level_idx: level - 1 };
            let zero = al_solve(
                &lvl.system,
                &lvl.space,
                mesh,
                &prob,
                PressureField::zeros(mesh, p),
                &cfg,
                &inner,
            )
            .unwrap();
            zero_counts.push(zero.state.n);
            let nested = al_solve(&lvl.system, &lvl.space, mesh, &prob, p0.clone(), &cfg, &inner)
                .unwrap();
            nested_counts.push(nested.state.n);
            if level < max_level {
                p0 = nested
                    .state
                    .pressure
                    .embed_from_coarse(mesh, hier.level(level + 1))
                    .unwrap();
            }
        }
        println!("{dt:>6} {:>22} {:>22}", format!("{zero_counts:?}"), format!("{nested_counts:?}"));
    }
}
