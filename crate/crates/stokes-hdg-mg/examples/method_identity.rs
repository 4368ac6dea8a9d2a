//! The three hybrid discretizations (and any tau* > 0) condense to the same
//! skeleton matrix; a deliberately mis-stabilized variant does not.
//!
//!     cargo run --release --example method_identity

use stokes_hdg_mg::assembly::{
    assemble_condensed, assemble_condensed_with_stabilization, TraceSpace,
};
use stokes_hdg_mg::local::{MethodKind, Stabilization};
use stokes_hdg_mg::mesh::MeshHierarchy;
use stokes_hdg_mg::problem;

fn main() {
    let hier = MeshHierarchy::build(2);
    let mesh = hier.level(2);
    let prob = problem::manufactured();
    let dt = 2.0;
    for p in 1..=3 {
        let space = TraceSpace::new(mesh, p, prob.dirichlet).unwrap();
        let reference = assemble_condensed(mesh, &space, MethodKind::Sfh { tau_star: 1.0 }, dt)
            .unwrap()
            .matrix
            .to_dense();
        let scale = reference.amax();
        println!("degree {p} ({} unknowns):", space.n_dofs);
        for method in [
            MethodKind::Sfh { tau_star: 10.0 },
            MethodKind::Bdmh,
            MethodKind::Rth,
        ] {
            let a = assemble_condensed(mesh, &space, method, dt)
                .unwrap()
                .matrix
                .to_dense();
            println!(
                "  vs {:5}: max relative entry diff {:.3e}",
                method.name(),
                (a - &reference).amax() / scale
            );
        }
        let perturbed = assemble_condensed_with_stabilization(
            mesh,
            &space,
            MethodKind::Sfh { tau_star: 1.0 },
            dt,
            Some(Stabilization { star: 1.0, off_star: 0.05 }),
        )
        .unwrap()
        .matrix
        .to_dense();
        println!(
            "  off-star control:  max relative entry diff {:.3e}  (must differ)",
            (perturbed - &reference).amax() / scale
        );
    }
}
