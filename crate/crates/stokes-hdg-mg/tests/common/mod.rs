//! Shared test oracles.
//!
//! The monolithic oracle assembles the full saddle-point system in all
//! element unknowns (L, u, p) plus the skeleton trace, with its own
//! quadrature loops over the scheme's four equations, then solves it by
//! dense LU. It never touches the static-condensation path it is used to
//! check.

// Each test binary compiles its own copy; not every binary uses every item.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use stokes_hdg_mg::assembly::{
    data_exactness, element_geometry, DiscreteFields, PressureField, TraceSpace,
};
use stokes_hdg_mg::basis::{edge_rule, triangle_rule, EdgeBasis};
use stokes_hdg_mg::local::{trace_dofs_per_face, ElementBases, ElementGeometry, MethodKind};
use stokes_hdg_mg::mesh::{FaceKind, MeshLevel};
use stokes_hdg_mg::problem::ProblemData;

/// All variational pairings of one element, assembled by direct quadrature
/// in the unsymmetrized form of the scheme's rows.
pub struct LocalBlocks {
    pub n_grad: usize,
    pub n_vel: usize,
    pub n_pres: usize,
    pub n_trace: usize,
    /// Row 1: (L, G) block.
    pub m_l: DMatrix<f64>,
    /// Row 1: (u, div G) block.
    pub b_u: DMatrix<f64>,
    /// Row 1 trace coupling: <lambda, G nu>.
    pub c_l: DMatrix<f64>,
    /// Row 2: (-div L, v) block.
    pub d_l: DMatrix<f64>,
    /// Row 2: <S u, v> block.
    pub s_uu: DMatrix<f64>,
    /// Row 2: (grad p, v) block.
    pub g_p: DMatrix<f64>,
    /// Row 2 trace coupling: <S lambda, v>.
    pub s_ul: DMatrix<f64>,
    /// Row 3: (u, grad q) block.
    pub e_u: DMatrix<f64>,
    /// Row 3: (p, q) block.
    pub m_p: DMatrix<f64>,
    /// Row 3 trace coupling: <lambda.nu, q>.
    pub c_p: DMatrix<f64>,
    /// Transmission row: coefficients of (L, u, p) in
    /// <-L nu + p nu + S u, mu> per trace test function.
    pub flux_x: DMatrix<f64>,
    /// Transmission row: coefficients of lambda in -<S lambda, mu>.
    pub flux_lam: DMatrix<f64>,
}

fn tau_of(method: MethodKind, star: bool) -> f64 {
    match method {
        MethodKind::Sfh { tau_star } if star => tau_star,
        _ => 0.0,
    }
}

pub fn local_blocks(
    method: MethodKind,
    p: usize,
    geom: &ElementGeometry,
    dt: f64,
) -> LocalBlocks {
    let bases = ElementBases::new(method, p, geom).unwrap();
    let edge_basis = EdgeBasis::new(p).unwrap();
    let n_grad = bases.grad.dim();
    let n_vs = bases.vel.dim();
    let n_vel = 2 * n_vs;
    let n_pres = bases.pres.dim();
    let k_face = trace_dofs_per_face(p);
    let n_trace = 3 * k_face;

    let mut blk = LocalBlocks {
        n_grad,
        n_vel,
        n_pres,
        n_trace,
        m_l: DMatrix::zeros(n_grad, n_grad),
        b_u: DMatrix::zeros(n_grad, n_vel),
        c_l: DMatrix::zeros(n_grad, n_trace),
        d_l: DMatrix::zeros(n_vel, n_grad),
        s_uu: DMatrix::zeros(n_vel, n_vel),
        g_p: DMatrix::zeros(n_vel, n_pres),
        s_ul: DMatrix::zeros(n_vel, n_trace),
        e_u: DMatrix::zeros(n_pres, n_vel),
        m_p: DMatrix::zeros(n_pres, n_pres),
        c_p: DMatrix::zeros(n_pres, n_trace),
        flux_x: DMatrix::zeros(n_trace, n_grad + n_vel + n_pres),
        flux_lam: DMatrix::zeros(n_trace, n_trace),
    };

    let rule = triangle_rule(data_exactness(p)).unwrap();
    let area2 = 2.0 * geom.area();
    let [v0, v1, v2] = geom.vertices;
    for (q, w) in rule.points.iter().zip(&rule.weights) {
        let w = w * area2;
        let x = [
            v0[0] + (v1[0] - v0[0]) * q[0] + (v2[0] - v0[0]) * q[1],
            v0[1] + (v1[1] - v0[1]) * q[0] + (v2[1] - v0[1]) * q[1],
        ];
        let (wv, wd) = bases.grad.eval(x);
        let vv = bases.vel.eval(x);
        let (qv, qg) = bases.pres.eval_grad(x);
        for i in 0..n_grad {
            for j in 0..n_grad {
                let dot = (0..2)
                    .map(|r| wv[i][r][0] * wv[j][r][0] + wv[i][r][1] * wv[j][r][1])
                    .sum::<f64>();
                blk.m_l[(i, j)] += w * dot;
            }
            for c in 0..2 {
                for k in 0..n_vs {
                    blk.b_u[(i, c * n_vs + k)] += w * vv[k] * wd[i][c];
                }
            }
        }
        for c in 0..2 {
            for k in 0..n_vs {
                let vi = c * n_vs + k;
                for j in 0..n_grad {
                    blk.d_l[(vi, j)] += w * (-wd[j][c]) * vv[k];
                }
                for j in 0..n_pres {
                    blk.g_p[(vi, j)] += w * qg[j][c] * vv[k];
                }
            }
        }
        for i in 0..n_pres {
            for j in 0..n_pres {
                blk.m_p[(i, j)] += w * qv[i] * qv[j] / dt;
            }
            for c in 0..2 {
                for k in 0..n_vs {
                    blk.e_u[(i, c * n_vs + k)] += w * vv[k] * qg[i][c];
                }
            }
        }
    }

    let erule = edge_rule(data_exactness(p)).unwrap();
    let (ou, op) = (n_grad, n_grad + n_vel);
    for lf in 0..3 {
        let tau = tau_of(method, lf == geom.star_face);
        let h = geom.face_length(lf);
        let nu = geom.outward_normal(lf);
        for (&t, &wt) in erule.nodes.iter().zip(&erule.weights) {
            let w = wt * h;
            let x = geom.face_point(lf, t);
            let (wv, _) = bases.grad.eval(x);
            let vv = bases.vel.eval(x);
            let qv = bases.pres.eval(x);
            let tb = edge_basis.eval(t);
            for mode in 0..=p {
                for comp in 0..2 {
                    let tr = lf * k_face + 2 * mode + comp;
                    let lam = tb[mode];
                    for j in 0..n_grad {
                        let wnu = wv[j][comp][0] * nu[0] + wv[j][comp][1] * nu[1];
                        blk.c_l[(j, tr)] += w * lam * wnu;
                        // Transmission: -<L nu, mu>.
                        blk.flux_x[(tr, j)] -= w * lam * wnu;
                    }
                    for j in 0..n_pres {
                        blk.c_p[(j, tr)] += w * lam * nu[comp] * qv[j];
                        // Transmission: +<p nu, mu>.
                        blk.flux_x[(tr, op + j)] += w * lam * nu[comp] * qv[j];
                    }
                    if tau != 0.0 {
                        for k in 0..n_vs {
                            blk.s_ul[(comp * n_vs + k, tr)] += w * tau * lam * vv[k];
                            // Transmission: +<S u, mu>.
                            blk.flux_x[(tr, ou + comp * n_vs + k)] += w * tau * lam * vv[k];
                        }
                        // Transmission: -<S lambda, mu>; same-face pairing.
                        for mode2 in 0..=p {
                            let tr2 = lf * k_face + 2 * mode2 + comp;
                            blk.flux_lam[(tr, tr2)] -= w * tau * tb[mode] * tb[mode2];
                        }
                    }
                }
            }
            if tau != 0.0 {
                for c in 0..2 {
                    for k in 0..n_vs {
                        for k2 in 0..n_vs {
                            blk.s_uu[(c * n_vs + k, c * n_vs + k2)] += w * tau * vv[k] * vv[k2];
                        }
                    }
                }
            }
        }
    }
    blk
}

impl LocalBlocks {
    /// Interior matrix of the unsymmetrized local rows (1)-(3).
    pub fn interior_matrix(&self) -> DMatrix<f64> {
        let (ng, nv, np) = (self.n_grad, self.n_vel, self.n_pres);
        let n = ng + nv + np;
        let mut k = DMatrix::zeros(n, n);
        k.view_mut((0, 0), (ng, ng)).copy_from(&self.m_l);
        k.view_mut((0, ng), (ng, nv)).copy_from(&self.b_u);
        k.view_mut((ng, 0), (nv, ng)).copy_from(&self.d_l);
        k.view_mut((ng, ng), (nv, nv)).copy_from(&self.s_uu);
        k.view_mut((ng, ng + nv), (nv, np)).copy_from(&self.g_p);
        k.view_mut((ng + nv, ng), (np, nv)).copy_from(&(-&self.e_u));
        k.view_mut((ng + nv, ng + nv), (np, np)).copy_from(&self.m_p);
        k
    }

    /// Trace coupling of rows (1)-(3): K X + C lambda = F.
    pub fn interior_coupling(&self) -> DMatrix<f64> {
        let (ng, nv, np) = (self.n_grad, self.n_vel, self.n_pres);
        let mut c = DMatrix::zeros(ng + nv + np, self.n_trace);
        c.view_mut((0, 0), (ng, self.n_trace)).copy_from(&(-&self.c_l));
        c.view_mut((ng, 0), (nv, self.n_trace)).copy_from(&(-&self.s_ul));
        c.view_mut((ng + nv, 0), (np, self.n_trace)).copy_from(&self.c_p);
        c
    }

    /// Condensed element matrix by direct elimination of (L, u, p):
    /// A = flux_x K^{-1} C - flux_lam.
    pub fn schur_condensed(&self) -> DMatrix<f64> {
        let k = self.interior_matrix();
        let c = self.interior_coupling();
        let kinv_c = k.lu().solve(&c).expect("local block system is singular");
        &self.flux_x * kinv_c - &self.flux_lam
    }
}

/// Solution of the monolithic system.
pub struct MonolithicSolution {
    pub lambda: DVector<f64>,
    pub fields: DiscreteFields,
}

/// Assembles and solves the full (L, u, p, lambda) system by dense LU.
pub fn monolithic_solve(
    mesh: &MeshLevel,
    space: &TraceSpace,
    method: MethodKind,
    dt: f64,
    problem: &ProblemData,
    p_prev: &PressureField,
) -> MonolithicSolution {
    let p = space.degree;
    let k_face = trace_dofs_per_face(p);
    let n_elem = mesh.triangles.len();
    let probe = local_blocks(method, p, &element_geometry(mesh, 0), dt);
    let n_x = probe.n_grad + probe.n_vel + probe.n_pres;
    let n = n_elem * n_x + space.n_dofs;
    let lam_off = n_elem * n_x;

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);

    let rule = triangle_rule(data_exactness(p)).unwrap();
    let erule = edge_rule(data_exactness(p)).unwrap();
    let edge_basis = EdgeBasis::new(p).unwrap();
    let n_pres_per = PressureField::coeffs_per_element(p);

    for tid in 0..n_elem {
        let geom = element_geometry(mesh, tid);
        let blk = local_blocks(method, p, &geom, dt);
        let bases = ElementBases::new(method, p, &geom).unwrap();
        let x_off = tid * n_x;
        let kmat = blk.interior_matrix();
        let cmat = blk.interior_coupling();
        for i in 0..n_x {
            for j in 0..n_x {
                a[(x_off + i, x_off + j)] = kmat[(i, j)];
            }
        }
        // Trace coupling of the interior rows and the transmission rows.
        // Unknown faces couple through the matrix; Dirichlet data moves to
        // the right-hand side.
        let tri = &mesh.triangles[tid];
        let mut col_of_trace = vec![None; blk.n_trace];
        let mut dirichlet_val = vec![0.0; blk.n_trace];
        for (lf, &fid) in tri.faces.iter().enumerate() {
            match space.face_base(fid) {
                Some(base) => {
                    for i in 0..k_face {
                        col_of_trace[lf * k_face + i] = Some(lam_off + base + i);
                    }
                }
                None => {
                    if let Some(coeff) = &space.dirichlet[fid] {
                        for i in 0..k_face {
                            dirichlet_val[lf * k_face + i] = coeff[i];
                        }
                    }
                }
            }
        }
        for i in 0..n_x {
            for j in 0..blk.n_trace {
                match col_of_trace[j] {
                    Some(col) => a[(x_off + i, col)] += cmat[(i, j)],
                    None => rhs[x_off + i] -= cmat[(i, j)] * dirichlet_val[j],
                }
            }
        }
        for i in 0..blk.n_trace {
            let Some(row) = col_of_trace[i] else { continue };
            for j in 0..n_x {
                a[(row, x_off + j)] += blk.flux_x[(i, j)];
            }
            for j in 0..blk.n_trace {
                match col_of_trace[j] {
                    Some(col) => a[(row, col)] += blk.flux_lam[(i, j)],
                    None => rhs[row] -= blk.flux_lam[(i, j)] * dirichlet_val[j],
                }
            }
        }
        // Interior right-hand side: (f, v) and (1/dt)(m, q).
        let area2 = 2.0 * geom.area();
        let [v0, v1, v2] = geom.vertices;
        let n_vs = bases.vel.dim();
        let m_c = &p_prev.coeffs[tid * n_pres_per..(tid + 1) * n_pres_per];
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let w = w * area2;
            let x = [
                v0[0] + (v1[0] - v0[0]) * q[0] + (v2[0] - v0[0]) * q[1],
                v0[1] + (v1[1] - v0[1]) * q[0] + (v2[1] - v0[1]) * q[1],
            ];
            let f = (problem.source)(x);
            let vv = bases.vel.eval(x);
            let qv = bases.pres.eval(x);
            for c in 0..2 {
                for k in 0..n_vs {
                    rhs[x_off + blk.n_grad + c * n_vs + k] += w * f[c] * vv[k];
                }
            }
            let m_val: f64 = m_c.iter().zip(&qv).map(|(c, v)| c * v).sum();
            for i in 0..n_pres_per {
                rhs[x_off + blk.n_grad + blk.n_vel + i] += w * m_val * qv[i] / dt;
            }
        }
    }
    // Neumann transmission data: the prescribed flux enters the trace rows
    // as -<g, mu> with g = (grad u - p I) nu.
    for (fid, face) in mesh.faces.iter().enumerate() {
        if face.kind != FaceKind::Neumann {
            continue;
        }
        let base = space.face_base(fid).unwrap();
        let tid = face.cells[0];
        let geom = element_geometry(mesh, tid);
        let lf = mesh.triangles[tid].faces.iter().position(|&f| f == fid).unwrap();
        let nu = geom.outward_normal(lf);
        let av = mesh.vertices[face.vertices[0]].pos();
        let bv = mesh.vertices[face.vertices[1]].pos();
        for (&t, &wt) in erule.nodes.iter().zip(&erule.weights) {
            let w = wt * face.length;
            let x = [av[0] + t * (bv[0] - av[0]), av[1] + t * (bv[1] - av[1])];
            let g = (problem.neumann)(x, nu);
            let tb = edge_basis.eval(t);
            for mode in 0..=p {
                for c in 0..2 {
                    rhs[lam_off + base + 2 * mode + c] -= w * g[c] * tb[mode];
                }
            }
        }
    }

    let sol = a.lu().solve(&rhs).expect("monolithic system is singular");
    let lambda = sol.rows(lam_off, space.n_dofs).into_owned();
    let mut fields = DiscreteFields {
        method,
        degree: p,
        n_grad: probe.n_grad,
        n_vel: probe.n_vel,
        n_pres: probe.n_pres,
        grad: vec![0.0; n_elem * probe.n_grad],
        vel: vec![0.0; n_elem * probe.n_vel],
        pres: vec![0.0; n_elem * probe.n_pres],
    };
    for tid in 0..n_elem {
        let x_off = tid * n_x;
        for i in 0..probe.n_grad {
            fields.grad[tid * probe.n_grad + i] = sol[x_off + i];
        }
        for i in 0..probe.n_vel {
            fields.vel[tid * probe.n_vel + i] = sol[x_off + probe.n_grad + i];
        }
        for i in 0..probe.n_pres {
            fields.pres[tid * probe.n_pres + i] = sol[x_off + probe.n_grad + probe.n_vel + i];
        }
    }
    MonolithicSolution { lambda, fields }
}

/// Relative difference of two coefficient slices.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}
