//! Build the 16-triangle initial mesh, refine it a few times, and print the
//! entity counts and a validation report.
//!
//!     cargo run --release --example mesh_hierarchy

use stokes_hdg_mg::mesh::{FaceKind, MeshHierarchy};

fn main() {
    let hier = MeshHierarchy::build(4);
    println!("level  triangles  vertices  faces  boundary  neumann   h");
    for lvl in &hier.levels {
        let neumann = lvl.faces.iter().filter(|f| f.kind == FaceKind::Neumann).count();
        println!(
            "{:>5}  {:>9}  {:>8}  {:>5}  {:>8}  {:>7}  {:.5}",
            lvl.level,
            lvl.triangles.len(),
            lvl.vertices.len(),
            lvl.faces.len(),
            lvl.n_boundary_faces(),
            neumann,
            lvl.h,
        );
        let report = lvl.validate();
        assert!(report.is_valid(), "{:?}", report.violations);
    }
    println!("\ninitial mesh dump:");
    print!("{}", hier.level(1).dump());
}
