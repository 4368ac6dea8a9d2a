//! The hard-coded manufactured source must equal -Lap u + grad p of the
//! closed-form solution. The check differentiates an independent generic
//! reimplementation of (u, p) with second-order forward-mode jets, so the
//! derivatives are exact to machine precision.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use stokes_hdg_mg::problem;

/// Second-order jet: value, gradient, and Hessian carried through arithmetic.
#[derive(Clone, Copy, Debug)]
struct Jet {
    v: f64,
    gx: f64,
    gy: f64,
    hxx: f64,
    hxy: f64,
    hyy: f64,
}

impl Jet {
    fn var_x(x: f64) -> Self {
        Jet { v: x, gx: 1.0, gy: 0.0, hxx: 0.0, hxy: 0.0, hyy: 0.0 }
    }

    fn var_y(y: f64) -> Self {
        Jet { v: y, gx: 0.0, gy: 1.0, hxx: 0.0, hxy: 0.0, hyy: 0.0 }
    }

    fn scale(self, c: f64) -> Self {
        Jet {
            v: c * self.v,
            gx: c * self.gx,
            gy: c * self.gy,
            hxx: c * self.hxx,
            hxy: c * self.hxy,
            hyy: c * self.hyy,
        }
    }

    fn mul(self, o: Jet) -> Self {
        Jet {
            v: self.v * o.v,
            gx: self.gx * o.v + self.v * o.gx,
            gy: self.gy * o.v + self.v * o.gy,
            hxx: self.hxx * o.v + 2.0 * self.gx * o.gx + self.v * o.hxx,
            hxy: self.hxy * o.v + self.gx * o.gy + self.gy * o.gx + self.v * o.hxy,
            hyy: self.hyy * o.v + 2.0 * self.gy * o.gy + self.v * o.hyy,
        }
    }

    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        Jet {
            v: f,
            gx: df * self.gx,
            gy: df * self.gy,
            hxx: df * self.hxx + ddf * self.gx * self.gx,
            hxy: df * self.hxy + ddf * self.gx * self.gy,
            hyy: df * self.hyy + ddf * self.gy * self.gy,
        }
    }

    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos(), -self.v.sin())
    }

    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin(), -self.v.cos())
    }
}

/// Independent reimplementation of the manufactured pair.
fn exact_jets(x: [f64; 2]) -> ([Jet; 2], Jet) {
    let pi = std::f64::consts::PI;
    let px = Jet::var_x(x[0]).scale(pi);
    let py = Jet::var_y(x[1]).scale(pi);
    let u = [px.sin().mul(py.sin()), px.cos().mul(py.cos())];
    let p = px.sin().mul(py.cos());
    (u, p)
}

#[test]
fn source_equals_minus_laplacian_plus_pressure_gradient_to_machine_precision() {
    let prob = problem::manufactured();
    let exact = prob.exact.unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for _ in 0..1000 {
        let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let (u, p) = exact_jets(x);
        // The jet reimplementation matches the production closures...
        let u_prod = (exact.velocity)(x);
        let p_prod = (exact.pressure)(x);
        let g_prod = (exact.velocity_gradient)(x);
        assert!((u[0].v - u_prod[0]).abs() < 1e-14);
        assert!((u[1].v - u_prod[1]).abs() < 1e-14);
        assert!((p.v - p_prod).abs() < 1e-14);
        for (c, jet) in u.iter().enumerate() {
            assert!((jet.gx - g_prod[c][0]).abs() < 1e-12);
            assert!((jet.gy - g_prod[c][1]).abs() < 1e-12);
        }
        // ...and its exact derivatives reproduce the hard-coded source.
        let f = (prob.source)(x);
        let expected = [
            -(u[0].hxx + u[0].hyy) + p.gx,
            -(u[1].hxx + u[1].hyy) + p.gy,
        ];
        for c in 0..2 {
            let scale = expected[c].abs().max(1.0);
            assert!(
                (f[c] - expected[c]).abs() <= 1e-12 * scale,
                "component {c} at {x:?}: {} vs {}",
                f[c],
                expected[c]
            );
        }
        // Divergence-free velocity.
        assert!((u[0].gx + u[1].gy).abs() < 1e-13);
    }
}
