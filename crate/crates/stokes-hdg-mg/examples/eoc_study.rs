//! Small convergence-order study via the harness: orders approach p + 1 for
//! velocity, pressure, and the velocity gradient.
//!
//!     cargo run --release --example eoc_study

use stokes_hdg_mg::harness::{cmd_eoc, ExperimentConfig};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.label = "eoc_study".into();
    cfg.degrees = vec![1, 2];
    cfg.levels = Some(4);
    cfg.dts = vec![8.0];
    let out = cmd_eoc(&cfg).unwrap();
    assert!(out.failures.is_empty());
    println!("\nlong-format rows:\n{}", out.table.to_csv());
}
