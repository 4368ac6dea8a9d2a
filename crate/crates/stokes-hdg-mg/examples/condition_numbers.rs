//! Spectral condition numbers of the condensed operator: growth like
//! 1/h^2 between levels (ratio about four) and growth with the pseudo-time
//! step at a fixed level.
//!
//!     cargo run --release --example condition_numbers

use stokes_hdg_mg::assembly::{assemble_condensed, estimate_condition_number, TraceSpace};
use stokes_hdg_mg::local::MethodKind;
use stokes_hdg_mg::mesh::MeshHierarchy;
use stokes_hdg_mg::problem;

fn main() {
    let hier = MeshHierarchy::build(3);
    let prob = problem::manufactured();
    let p = 1;
    println!("{:>6} {:>8} {:>12} {:>12} {:>10} {:>8}", "dt", "level", "lambda_min", "lambda_max", "kappa", "ratio");
    for dt in [2.0, 4.0, 8.0] {
        let mut prev = None;
        for level in 2..=3 {
            let mesh = hier.level(level);
            let space = TraceSpace::new(mesh, p, prob.dirichlet).unwrap();
            let sys =
                assemble_condensed(mesh, &space, MethodKind::Sfh { tau_star: 1.0 }, dt).unwrap();
            let est = estimate_condition_number(&sys.matrix);
            let ratio = prev
                .map(|k| format!("{:.2}", est.kappa / k))
                .unwrap_or_else(|| "-".into());
            println!(
                "{dt:>6} {level:>8} {:>12.4e} {:>12.4e} {:>10.1} {ratio:>8}",
                est.lambda_min, est.lambda_max, est.kappa
            );
            prev = Some(est.kappa);
        }
    }
}
