//! Measure the V-cycle's asymptotic error contraction per level: it stays
//! bounded away from one uniformly in the level and improves with more
//! smoothing steps.
//!
//!     cargo run --release --example multigrid_vcycle

use stokes_hdg_mg::local::MethodKind;
use stokes_hdg_mg::mesh::MeshHierarchy;
use stokes_hdg_mg::multigrid::{GsOrder, MgHierarchy, SmootherConfig, SmootherKind};
use stokes_hdg_mg::problem;

fn main() {
    let max_level = 5;
    let hier = MeshHierarchy::build(max_level);
    let prob = problem::manufactured();
    let dt = 2.0;
    for steps in [2usize, 4] {
        let smoother = SmootherConfig {
            kind: SmootherKind::BlockGaussSeidel {
                order: GsOrder::Symmetric,
            },
            steps,
        };
        let mg = MgHierarchy::assemble(
            &hier,
            max_level,
            1,
            MethodKind::Sfh { tau_star: 1.0 },
            dt,
            prob.dirichlet,
            smoother,
        )
        .unwrap();
        print!("m = {steps}: A-norm contraction per level:");
        for idx in 1..max_level {
            let delta = mg.measure_contraction(idx, 30, 42 + idx as u64);
            print!("  level {}: {delta:.3}", idx + 1);
        }
        println!();
    }
}
