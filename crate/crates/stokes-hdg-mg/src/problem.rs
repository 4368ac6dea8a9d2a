//! Problem data: source, boundary values, and optional exact solution.

use std::f64::consts::PI;

pub type ScalarFn = fn([f64; 2]) -> f64;
pub type VectorFn = fn([f64; 2]) -> [f64; 2];
pub type MatrixFn = fn([f64; 2]) -> [[f64; 2]; 2];
/// Neumann datum as a function of position and outward normal.
pub type FluxFn = fn([f64; 2], [f64; 2]) -> [f64; 2];

/// Closed-form reference solution for error computation.
#[derive(Clone, Copy)]
pub struct ExactSolution {
    pub velocity: VectorFn,
    pub pressure: ScalarFn,
    /// Jacobian of the velocity, L_ij = du_i/dx_j.
    pub velocity_gradient: MatrixFn,
}

/// Data of one Stokes boundary-value problem on the unit square.
#[derive(Clone, Copy)]
pub struct ProblemData {
    pub source: VectorFn,
    pub dirichlet: VectorFn,
    /// Boundary flux (grad u - p I) nu prescribed on the Neumann part.
    pub neumann: FluxFn,
    pub exact: Option<ExactSolution>,
}

fn m_u(x: [f64; 2]) -> [f64; 2] {
    [
        (PI * x[0]).sin() * (PI * x[1]).sin(),
        (PI * x[0]).cos() * (PI * x[1]).cos(),
    ]
}

fn m_p(x: [f64; 2]) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).cos()
}

fn m_grad_u(x: [f64; 2]) -> [[f64; 2]; 2] {
    let (s0, c0) = (PI * x[0]).sin_cos();
    let (s1, c1) = (PI * x[1]).sin_cos();
    [
        [PI * c0 * s1, PI * s0 * c1],
        [-PI * s0 * c1, -PI * c0 * s1],
    ]
}

fn m_source(x: [f64; 2]) -> [f64; 2] {
    let (s0, c0) = (PI * x[0]).sin_cos();
    let (s1, c1) = (PI * x[1]).sin_cos();
    [
        2.0 * PI * PI * s0 * s1 + PI * c0 * c1,
        2.0 * PI * PI * c0 * c1 - PI * s0 * s1,
    ]
}

fn m_neumann(x: [f64; 2], nu: [f64; 2]) -> [f64; 2] {
    let g = m_grad_u(x);
    let p = m_p(x);
    [
        g[0][0] * nu[0] + g[0][1] * nu[1] - p * nu[0],
        g[1][0] * nu[0] + g[1][1] * nu[1] - p * nu[1],
    ]
}

/// The trigonometric manufactured problem: u = (sin pi x1 sin pi x2,
/// cos pi x1 cos pi x2), p = sin pi x1 cos pi x2, with data derived so this
/// pair solves the Stokes system with Neumann data on the bottom edge.
pub fn manufactured() -> ProblemData {
    ProblemData {
        source: m_source,
        dirichlet: m_u,
        neumann: m_neumann,
        exact: Some(ExactSolution {
            velocity: m_u,
            pressure: m_p,
            velocity_gradient: m_grad_u,
        }),
    }
}

fn zero_vec(_: [f64; 2]) -> [f64; 2] {
    [0.0, 0.0]
}

fn zero_flux(_: [f64; 2], _: [f64; 2]) -> [f64; 2] {
    [0.0, 0.0]
}

fn zero_scalar(_: [f64; 2]) -> f64 {
    0.0
}

fn zero_mat(_: [f64; 2]) -> [[f64; 2]; 2] {
    [[0.0; 2]; 2]
}

/// All-zero data; the solution is identically zero.
pub fn zero() -> ProblemData {
    ProblemData {
        source: zero_vec,
        dirichlet: zero_vec,
        neumann: zero_flux,
        exact: Some(ExactSolution {
            velocity: zero_vec,
            pressure: zero_scalar,
            velocity_gradient: zero_mat,
        }),
    }
}
