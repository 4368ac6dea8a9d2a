//! Element-local solution maps on a single triangle: the linear-trace and
//! constant-trace identities, and the single-face stabilization property
//! that the pressure-history velocity vanishes on the designated face.
//!
//!     cargo run --release --example local_solvers

use nalgebra::DVector;
use stokes_hdg_mg::local::{
    trace_dofs_per_face, ElementBases, ElementGeometry, ElementOperator, MethodKind,
};

fn main() {
    let geom = ElementGeometry {
        vertices: [[0.1, 0.0], [1.2, 0.3], [0.4, 1.0]],
        star_face: 2,
        flip: [false, true, false],
    };
    let p = 2;
    let dt = 4.0;
    let method = MethodKind::Sfh { tau_star: 1.0 };
    let op = ElementOperator::new(method, p, &geom, dt).unwrap();
    let bases = ElementBases::new(method, p, &geom).unwrap();

    // Trace of the linear field w(x) = A x + b.
    let a = [[0.5, -0.25], [1.0, 0.75]];
    let w = |x: [f64; 2]| {
        [
            a[0][0] * x[0] + a[0][1] * x[1] + 0.3,
            a[1][0] * x[0] + a[1][1] * x[1] - 0.1,
        ]
    };
    let k = trace_dofs_per_face(p);
    let mut lambda = DVector::zeros(3 * k);
    for lf in 0..3 {
        let (pa, pb) = (geom.face_point(lf, 0.0), geom.face_point(lf, 1.0));
        let (wa, wb) = (w(pa), w(pb));
        for c in 0..2 {
            lambda[lf * k + c] = 0.5 * (wa[c] + wb[c]);
            lambda[lf * k + 2 + c] = (wb[c] - wa[c]) / (2.0 * 3f64.sqrt());
        }
    }
    let state = op.solve_lambda(&lambda);
    let x = [0.55, 0.45];
    let (wv, _) = bases.grad.eval(x);
    let mut l_val = [[0.0; 2]; 2];
    for (i, m) in wv.iter().enumerate() {
        for r in 0..2 {
            for c in 0..2 {
                l_val[r][c] += state.grad[i] * m[r][c];
            }
        }
    }
    println!("linear trace w = A x + b:");
    println!("  A            = {:?}", a);
    println!("  L at sample  = {:?}   (expect A)", l_val);
    let qv = bases.pres.eval(x);
    let p_val: f64 = (0..op.dims.n_pres).map(|i| state.pres[i] * qv[i]).sum();
    println!(
        "  p at sample  = {:.6}   (expect -dt tr A = {:.6})",
        p_val,
        -dt * (a[0][0] + a[1][1])
    );

    // Pressure-history solve: u vanishes on the stabilized face.
    let mut m = DVector::zeros(op.dims.n_pres);
    m[0] = 1.0;
    let hist = op.solve_m(&m);
    let n_s = bases.vel.dim();
    print!("previous-pressure velocity trace on F*: ");
    for t in [0.2, 0.5, 0.8] {
        let xq = geom.face_point(geom.star_face, t);
        let vv = bases.vel.eval(xq);
        let u0: f64 = (0..n_s).map(|i| hist.vel[i] * vv[i]).sum();
        let u1: f64 = (0..n_s).map(|i| hist.vel[n_s + i] * vv[i]).sum();
        print!("({u0:+.1e}, {u1:+.1e}) ");
    }
    println!("  (expect zeros)");
}
