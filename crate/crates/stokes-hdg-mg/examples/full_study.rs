//! End-to-end run at one level: multigrid-driven outer iteration on the
//! manufactured problem with a JSON report, the same path the `stokes-mg`
//! binary takes.
//!
//!     cargo run --release --example full_study

use stokes_hdg_mg::harness::{cmd_solve, ExperimentConfig};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.label = "full_study".into();
    cfg.degrees = vec![2];
    cfg.dts = vec![4.0];
    let (report, _) = cmd_solve(&cfg, Some(3)).unwrap();
    println!(
        "\nsolved level {} (degree {}, {} unknowns): {} outer steps, max {} V-cycles, |u - u_h| = {:.3e}",
        report.level,
        report.degree,
        report.dofs,
        report.n_outer,
        report.mg_iterations.iter().max().unwrap(),
        report.err_u.unwrap()
    );
}
