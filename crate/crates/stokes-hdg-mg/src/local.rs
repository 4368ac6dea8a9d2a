//! Element-local saddle-point solvers and static condensation.
//!
//! Per element T the discrete unknowns are a gradient field L in W_T, a
//! velocity u in V_T and a pressure p in Q_T, driven by a trace datum lambda
//! on the element boundary, a source term through its V_T moments, and the
//! previous pressure m. The three local problems share one factorized matrix:
//!
//! ```text
//!   (L, G)   + (u, div G)                          = <lambda, G nu>
//!   (-div L + grad p, v) + <S (u - lambda), v>     = (f, v)
//!   (1/dt) (p, q) - (u, grad q)                    = -<lambda.nu, q> + (1/dt)(m, q)
//! ```
//!
//! solved in the symmetrized block form (second row negated)
//!
//! ```text
//!   [ M_L   B     0      ] [L]   [  C_L lambda                 ]
//!   [ B^T  -S_uu -G      ] [u] = [ -S_ul lambda - f_mom        ]
//!   [ 0    -G^T   M_q/dt ] [p]   [ -C_p lambda + (1/dt) M_q m  ]
//! ```
//!
//! The condensed bilinear form on the element's six trace blocks is
//! a(l_i, l_j) = (L_i, L_j) + <S (u_i - l_i), (u_j - l_j)> + (1/dt)(p_i, p_j),
//! which equals the Schur complement of the block system above.

use nalgebra::{DMatrix, DVector};

use crate::basis::{edge_rule, triangle_rule, CellBasis, EdgeBasis, RtBasis};
use crate::error::Error;
use crate::Result;

/// Discretization variant. All three produce the same condensed matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MethodKind {
    /// Single-face hybridizable: full polynomial spaces, stabilization
    /// tau* > 0 on exactly one face per element.
    Sfh { tau_star: f64 },
    /// Hybrid Raviart-Thomas: rows of L in RT_p, no stabilization.
    Rth,
    /// Hybrid Brezzi-Douglas-Marini: velocity one degree lower, no
    /// stabilization.
    Bdmh,
}

impl MethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::Sfh { .. } => "sfh",
            MethodKind::Rth => "rth",
            MethodKind::Bdmh => "bdmh",
        }
    }

    /// Degree of the velocity space V_T at trace degree p.
    pub fn velocity_degree(&self, p: usize) -> usize {
        match self {
            MethodKind::Bdmh => p - 1,
            _ => p,
        }
    }

    fn stabilization(&self) -> Stabilization {
        match self {
            MethodKind::Sfh { tau_star } => Stabilization {
                star: *tau_star,
                off_star: 0.0,
            },
            _ => Stabilization {
                star: 0.0,
                off_star: 0.0,
            },
        }
    }
}

/// Stabilization weights: `star` acts on the designated face F*, `off_star`
/// on the remaining two faces. Regular methods use `off_star = 0`; a nonzero
/// value is only used as a negative control in the method-identity check.
#[derive(Clone, Copy, Debug)]
pub struct Stabilization {
    pub star: f64,
    pub off_star: f64,
}

/// Geometry of one element as needed by the local solvers.
///
/// Local face i connects vertices (i+1)%3 and (i+2)%3 (counterclockwise).
/// `flip[i]` is true when the face's global parametrization (from the lower
/// global vertex id to the higher) runs against the local direction.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub vertices: [[f64; 2]; 3],
    pub star_face: usize,
    pub flip: [bool; 3],
}

impl ElementGeometry {
    pub fn area(&self) -> f64 {
        let [a, b, c] = self.vertices;
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    /// Endpoints of local face i in local (counterclockwise) order.
    pub fn face_endpoints(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.vertices[(i + 1) % 3], self.vertices[(i + 2) % 3])
    }

    pub fn face_length(&self, i: usize) -> f64 {
        let (a, b) = self.face_endpoints(i);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    /// Outward unit normal of local face i.
    pub fn outward_normal(&self, i: usize) -> [f64; 2] {
        let (a, b) = self.face_endpoints(i);
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        [d[1] / len, -d[0] / len]
    }

    /// Physical point at global face parameter t on local face i.
    pub fn face_point(&self, i: usize, t: f64) -> [f64; 2] {
        let (a, b) = self.face_endpoints(i);
        let (start, end) = if self.flip[i] { (b, a) } else { (a, b) };
        [
            start[0] + t * (end[0] - start[0]),
            start[1] + t * (end[1] - start[1]),
        ]
    }
}

/// Gradient space representation.
#[derive(Clone, Debug)]
pub enum GradBasis {
    /// Each of the four matrix components is a scalar polynomial.
    Poly(CellBasis),
    /// Each of the two rows is a Raviart-Thomas field.
    Rt(RtBasis),
}

impl GradBasis {
    pub fn dim(&self) -> usize {
        match self {
            GradBasis::Poly(b) => 4 * b.dim(),
            GradBasis::Rt(b) => 2 * b.dim(),
        }
    }

    /// Values (2x2 matrices, row-major) and row-wise divergences at a point.
    pub fn eval(&self, x: [f64; 2]) -> (Vec<[[f64; 2]; 2]>, Vec<[f64; 2]>) {
        match self {
            GradBasis::Poly(b) => {
                let (vals, grads) = b.eval_grad(x);
                let n = b.dim();
                let mut mats = Vec::with_capacity(4 * n);
                let mut divs = Vec::with_capacity(4 * n);
                for r in 0..2 {
                    for c in 0..2 {
                        for k in 0..n {
                            let mut m = [[0.0; 2]; 2];
                            m[r][c] = vals[k];
                            mats.push(m);
                            let mut d = [0.0; 2];
                            d[r] = grads[k][c];
                            divs.push(d);
                        }
                    }
                }
                (mats, divs)
            }
            GradBasis::Rt(b) => {
                let (fields, field_divs) = b.eval(x);
                let n = b.dim();
                let mut mats = Vec::with_capacity(2 * n);
                let mut divs = Vec::with_capacity(2 * n);
                for r in 0..2 {
                    for k in 0..n {
                        let mut m = [[0.0; 2]; 2];
                        m[r] = fields[k];
                        mats.push(m);
                        let mut d = [0.0; 2];
                        d[r] = field_divs[k];
                        divs.push(d);
                    }
                }
                (mats, divs)
            }
        }
    }
}

/// The scalar bases backing one element's spaces.
#[derive(Clone, Debug)]
pub struct ElementBases {
    pub grad: GradBasis,
    /// Scalar basis whose two Cartesian components span V_T.
    pub vel: CellBasis,
    pub pres: CellBasis,
}

impl ElementBases {
    pub fn new(method: MethodKind, p: usize, geom: &ElementGeometry) -> Result<Self> {
        if p == 0 || p > crate::basis::MAX_DEGREE {
            return Err(Error::UnsupportedDegree(p));
        }
        let grad = match method {
            MethodKind::Rth => GradBasis::Rt(RtBasis::new(p, &geom.vertices)?),
            _ => GradBasis::Poly(CellBasis::new(p, &geom.vertices)?),
        };
        let vel = CellBasis::new_any(method.velocity_degree(p), &geom.vertices);
        let pres = CellBasis::new(p, &geom.vertices)?;
        Ok(Self { grad, vel, pres })
    }
}

/// Space dimensions and block offsets of the local solution vector.
#[derive(Clone, Copy, Debug)]
pub struct SpaceDims {
    /// Gradient coefficients.
    pub n_grad: usize,
    /// Velocity coefficients (2 components).
    pub n_vel: usize,
    /// Scalar velocity basis size (n_vel / 2).
    pub n_vel_scalar: usize,
    /// Pressure coefficients.
    pub n_pres: usize,
    /// Trace coefficients on the element boundary: 3 faces x 2 x (p+1).
    pub n_trace: usize,
}

impl SpaceDims {
    pub fn n_interior(&self) -> usize {
        self.n_grad + self.n_vel + self.n_pres
    }
}

/// Number of trace degrees of freedom per face at degree p.
pub fn trace_dofs_per_face(p: usize) -> usize {
    2 * (p + 1)
}

/// Coefficients of one element-local solution (L, u, p).
#[derive(Clone, Debug)]
pub struct LocalState {
    pub grad: DVector<f64>,
    pub vel: DVector<f64>,
    pub pres: DVector<f64>,
}

/// Condensed element operator: the local bilinear form on the element's
/// trace blocks plus the three solution maps obtained from one factorization.
#[derive(Clone, Debug)]
pub struct ElementOperator {
    pub method: MethodKind,
    pub degree: usize,
    pub dt: f64,
    pub dims: SpaceDims,
    /// Symmetric n_trace x n_trace condensed matrix.
    pub a_local: DMatrix<f64>,
    /// (L, u, p) coefficients per unit trace coefficient; n_interior x n_trace.
    pub map_lambda: DMatrix<f64>,
    /// (L, u, p) coefficients per unit V_T source moment; n_interior x n_vel.
    pub map_f: DMatrix<f64>,
    /// (L, u, p) coefficients per unit previous-pressure coefficient;
    /// n_interior x n_pres.
    pub map_m: DMatrix<f64>,
}

impl ElementOperator {
    pub fn new(method: MethodKind, p: usize, geom: &ElementGeometry, dt: f64) -> Result<Self> {
        Self::with_stabilization(method, p, geom, dt, method.stabilization())
    }

    /// Builds the operator with explicit stabilization weights. Only the
    /// method-identity negative control passes a nonzero `off_star`.
    pub fn with_stabilization(
        method: MethodKind,
        p: usize,
        geom: &ElementGeometry,
        dt: f64,
        stab: Stabilization,
    ) -> Result<Self> {
        assert!(dt > 0.0, "time step must be positive");
        let bases = ElementBases::new(method, p, geom)?;
        let edge_basis = EdgeBasis::new(p)?;
        let n_grad = bases.grad.dim();
        let n_vel_scalar = bases.vel.dim();
        let n_vel = 2 * n_vel_scalar;
        let n_pres = bases.pres.dim();
        let k_face = trace_dofs_per_face(p);
        let dims = SpaceDims {
            n_grad,
            n_vel,
            n_vel_scalar,
            n_pres,
            n_trace: 3 * k_face,
        };
        let n_x = dims.n_interior();

        // Cell pairings. Exactness 2p+4 covers every polynomial product,
        // including the RT fields of degree p+1.
        let cell_rule = triangle_rule(2 * p + 4)?;
        let area2 = 2.0 * geom.area();
        let [v0, v1, v2] = geom.vertices;

        let mut m_l = DMatrix::<f64>::zeros(n_grad, n_grad);
        let mut b_div = DMatrix::<f64>::zeros(n_grad, n_vel);
        let mut g_pres = DMatrix::<f64>::zeros(n_vel, n_pres);
        for (qp, qw) in cell_rule.points.iter().zip(&cell_rule.weights) {
            let w = qw * area2;
            let x = [
                v0[0] + (v1[0] - v0[0]) * qp[0] + (v2[0] - v0[0]) * qp[1],
                v0[1] + (v1[1] - v0[1]) * qp[0] + (v2[1] - v0[1]) * qp[1],
            ];
            let (wv, wd) = bases.grad.eval(x);
            let vv = bases.vel.eval(x);
            let (_, qg) = bases.pres.eval_grad(x);
            for i in 0..n_grad {
                for j in i..n_grad {
                    let dot = wv[i][0][0] * wv[j][0][0]
                        + wv[i][0][1] * wv[j][0][1]
                        + wv[i][1][0] * wv[j][1][0]
                        + wv[i][1][1] * wv[j][1][1];
                    m_l[(i, j)] += w * dot;
                }
                for c in 0..2 {
                    for k in 0..n_vel_scalar {
                        b_div[(i, c * n_vel_scalar + k)] += w * vv[k] * wd[i][c];
                    }
                }
            }
            for c in 0..2 {
                for k in 0..n_vel_scalar {
                    for j in 0..n_pres {
                        g_pres[(c * n_vel_scalar + k, j)] += w * vv[k] * qg[j][c];
                    }
                }
            }
        }
        for i in 0..n_grad {
            for j in 0..i {
                m_l[(i, j)] = m_l[(j, i)];
            }
        }

        // Face pairings against the trace basis, plus the stabilized
        // velocity-velocity term. Edge exactness 2p+2 is exact for all
        // products (RT normal traces have degree p).
        let face_rule = edge_rule(2 * p + 2)?;
        let n_qe = face_rule.nodes.len();
        let mut c_l = DMatrix::<f64>::zeros(n_grad, dims.n_trace);
        let mut c_p = DMatrix::<f64>::zeros(n_pres, dims.n_trace);
        let mut s_ul = DMatrix::<f64>::zeros(n_vel, dims.n_trace);
        let mut s_uu = DMatrix::<f64>::zeros(n_vel, n_vel);
        // Per face: edge values of the velocity scalar basis, kept for the
        // condensed jump term.
        let mut vel_edge = vec![DMatrix::<f64>::zeros(0, 0); 3];
        let mut edge_w = vec![Vec::new(); 3];
        for lf in 0..3 {
            let tau = if lf == geom.star_face { stab.star } else { stab.off_star };
            let h_f = geom.face_length(lf);
            let nu = geom.outward_normal(lf);
            let mut vel_vals = DMatrix::<f64>::zeros(n_qe, n_vel_scalar);
            let mut w_phys = Vec::with_capacity(n_qe);
            for (q, (&t, &wt)) in face_rule.nodes.iter().zip(&face_rule.weights).enumerate() {
                let w = wt * h_f;
                w_phys.push(w);
                let x = geom.face_point(lf, t);
                let (wv, _) = bases.grad.eval(x);
                let vv = bases.vel.eval(x);
                let qv = bases.pres.eval(x);
                let tb = edge_basis.eval(t);
                for k in 0..n_vel_scalar {
                    vel_vals[(q, k)] = vv[k];
                }
                for mode in 0..=p {
                    for comp in 0..2 {
                        let j = lf * k_face + 2 * mode + comp;
                        let lam = tb[mode];
                        for i in 0..n_grad {
                            // <lambda, W nu> with lambda = e_comp * b_mode.
                            let wnu = wv[i][comp][0] * nu[0] + wv[i][comp][1] * nu[1];
                            c_l[(i, j)] += w * lam * wnu;
                        }
                        for i in 0..n_pres {
                            // <lambda.nu, q>.
                            c_p[(i, j)] += w * lam * nu[comp] * qv[i];
                        }
                        if tau != 0.0 {
                            for k in 0..n_vel_scalar {
                                s_ul[(comp * n_vel_scalar + k, j)] += w * tau * lam * vv[k];
                            }
                        }
                    }
                }
                if tau != 0.0 {
                    for c in 0..2 {
                        for k in 0..n_vel_scalar {
                            for k2 in 0..n_vel_scalar {
                                s_uu[(c * n_vel_scalar + k, c * n_vel_scalar + k2)] +=
                                    w * tau * vv[k] * vv[k2];
                            }
                        }
                    }
                }
            }
            vel_edge[lf] = vel_vals;
            edge_w[lf] = w_phys;
        }

        // Symmetrized block matrix.
        let mut k_mat = DMatrix::<f64>::zeros(n_x, n_x);
        let (ou, op) = (n_grad, n_grad + n_vel);
        k_mat.view_mut((0, 0), (n_grad, n_grad)).copy_from(&m_l);
        k_mat.view_mut((0, ou), (n_grad, n_vel)).copy_from(&b_div);
        k_mat
            .view_mut((ou, 0), (n_vel, n_grad))
            .copy_from(&b_div.transpose());
        k_mat.view_mut((ou, ou), (n_vel, n_vel)).copy_from(&(-&s_uu));
        k_mat.view_mut((ou, op), (n_vel, n_pres)).copy_from(&(-&g_pres));
        k_mat
            .view_mut((op, ou), (n_pres, n_vel))
            .copy_from(&(-g_pres.transpose()));
        for i in 0..n_pres {
            k_mat[(op + i, op + i)] = 1.0 / dt;
        }

        // Right-hand sides for all three solution maps in one factorization.
        let n_rhs = dims.n_trace + n_vel + n_pres;
        let mut rhs = DMatrix::<f64>::zeros(n_x, n_rhs);
        rhs.view_mut((0, 0), (n_grad, dims.n_trace)).copy_from(&c_l);
        rhs.view_mut((ou, 0), (n_vel, dims.n_trace)).copy_from(&(-&s_ul));
        rhs.view_mut((op, 0), (n_pres, dims.n_trace)).copy_from(&(-&c_p));
        for i in 0..n_vel {
            rhs[(ou + i, dims.n_trace + i)] = -1.0;
        }
        for i in 0..n_pres {
            rhs[(op + i, dims.n_trace + n_vel + i)] = 1.0 / dt;
        }
        let lu = k_mat.lu();
        let solved = lu
            .solve(&rhs)
            .ok_or(Error::SingularLocalSystem { element: usize::MAX })?;
        let map_lambda = solved.columns(0, dims.n_trace).into_owned();
        let map_f = solved.columns(dims.n_trace, n_vel).into_owned();
        let map_m = solved.columns(dims.n_trace + n_vel, n_pres).into_owned();

        // Condensed form a(l_i, l_j) = (L_i, L_j) + sum_F tau <(u-l)_i, (u-l)_j>
        // + (1/dt)(p_i, p_j), assembled as a Gram matrix of the lambda-maps.
        let l_rows = map_lambda.rows(0, n_grad);
        let u_rows = map_lambda.rows(ou, n_vel);
        let p_rows = map_lambda.rows(op, n_pres);
        let mut a_local = l_rows.transpose() * (&m_l * l_rows);
        a_local += p_rows.transpose() * p_rows.clone_owned() / dt;
        for lf in 0..3 {
            let tau = if lf == geom.star_face { stab.star } else { stab.off_star };
            if tau == 0.0 {
                continue;
            }
            // Jump values (u - lambda) at this face's quadrature points for
            // every trace basis function: rows are (point, component).
            let mut z = DMatrix::<f64>::zeros(2 * n_qe, dims.n_trace);
            for q in 0..n_qe {
                let tb = edge_basis.eval(face_rule.nodes[q]);
                for j in 0..dims.n_trace {
                    for c in 0..2 {
                        let mut val = 0.0;
                        for k in 0..n_vel_scalar {
                            val += vel_edge[lf][(q, k)] * u_rows[(c * n_vel_scalar + k, j)];
                        }
                        z[(2 * q + c, j)] = val;
                    }
                }
                for mode in 0..=p {
                    for comp in 0..2 {
                        let j = lf * k_face + 2 * mode + comp;
                        z[(2 * q + comp, j)] -= tb[mode];
                    }
                }
            }
            for i in 0..dims.n_trace {
                for j in 0..dims.n_trace {
                    let mut acc = 0.0;
                    for q in 0..n_qe {
                        acc += edge_w[lf][q]
                            * (z[(2 * q, i)] * z[(2 * q, j)] + z[(2 * q + 1, i)] * z[(2 * q + 1, j)]);
                    }
                    a_local[(i, j)] += tau * acc;
                }
            }
        }
        // Mirror the upper triangle so the matrix is symmetric bit for bit.
        for i in 0..dims.n_trace {
            for j in 0..i {
                a_local[(i, j)] = a_local[(j, i)];
            }
        }

        Ok(Self {
            method,
            degree: p,
            dt,
            dims,
            a_local,
            map_lambda,
            map_f,
            map_m,
        })
    }

    fn split(&self, x: DVector<f64>) -> LocalState {
        let d = &self.dims;
        LocalState {
            grad: x.rows(0, d.n_grad).into_owned(),
            vel: x.rows(d.n_grad, d.n_vel).into_owned(),
            pres: x.rows(d.n_grad + d.n_vel, d.n_pres).into_owned(),
        }
    }

    /// Local solution driven by a boundary trace.
    pub fn solve_lambda(&self, lambda: &DVector<f64>) -> LocalState {
        assert_eq!(lambda.len(), self.dims.n_trace);
        self.split(&self.map_lambda * lambda)
    }

    /// Local solution driven by the V_T moments (f, v_i) of the source.
    pub fn solve_f(&self, f_moments: &DVector<f64>) -> LocalState {
        assert_eq!(f_moments.len(), self.dims.n_vel);
        self.split(&self.map_f * f_moments)
    }

    /// Local solution driven by the previous pressure's coefficients.
    pub fn solve_m(&self, m: &DVector<f64>) -> LocalState {
        assert_eq!(m.len(), self.dims.n_pres);
        self.split(&self.map_m * m)
    }
}
