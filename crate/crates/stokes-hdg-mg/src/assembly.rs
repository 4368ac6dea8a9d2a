//! Global assembly over the mesh skeleton.
//!
//! Interior and Neumann faces carry trace unknowns; Dirichlet faces carry the
//! face-wise L2 projection of the boundary velocity, whose coupling terms
//! move to the right-hand side (the standard hybridized lifting of
//! inhomogeneous Dirichlet data). The assembled matrix is symmetric positive
//! definite and block-sparse with face blocks of size 2(p+1).

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::basis::{edge_rule, triangle_rule, CellBasis, EdgeBasis};
use crate::local::{
    trace_dofs_per_face, ElementBases, ElementGeometry, ElementOperator, MethodKind,
    Stabilization,
};
use crate::mesh::{FaceKind, MeshLevel};
use crate::problem::{ExactSolution, ProblemData};
use crate::sparse::BlockMatrix;
use crate::Result;

/// Quadrature exactness used for data terms (source moments, boundary
/// projections, error norms): polynomial terms are exact and smooth data is
/// integrated well below the discretization error.
pub fn data_exactness(p: usize) -> usize {
    2 * p + 6
}

/// Degrees of freedom of the trace space on one mesh level.
///
/// `face_block[f]` is the block index of face f among unknown faces (in
/// ascending face order), or None on Dirichlet faces. Scalar dof layout per
/// face block: index 2*mode + component.
#[derive(Clone, Debug)]
pub struct TraceSpace {
    pub level: usize,
    pub degree: usize,
    pub n_dofs: usize,
    pub face_block: Vec<Option<usize>>,
    pub unknown_faces: Vec<usize>,
    /// Projection of the Dirichlet datum per Dirichlet face.
    pub dirichlet: Vec<Option<DVector<f64>>>,
}

impl TraceSpace {
    pub fn new(
        mesh: &MeshLevel,
        degree: usize,
        u_dirichlet: impl Fn([f64; 2]) -> [f64; 2],
    ) -> Result<Self> {
        let edge_basis = EdgeBasis::new(degree)?;
        let rule = edge_rule(data_exactness(degree))?;
        let k = trace_dofs_per_face(degree);
        let mut face_block = vec![None; mesh.faces.len()];
        let mut unknown_faces = Vec::new();
        let mut dirichlet = vec![None; mesh.faces.len()];
        for (fid, face) in mesh.faces.iter().enumerate() {
            if face.kind == FaceKind::Dirichlet {
                let a = mesh.vertices[face.vertices[0]].pos();
                let b = mesh.vertices[face.vertices[1]].pos();
                let mut coeff = DVector::zeros(k);
                for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let u = u_dirichlet(x);
                    let tb = edge_basis.eval(t);
                    for mode in 0..=degree {
                        for c in 0..2 {
                            coeff[2 * mode + c] += w * u[c] * tb[mode];
                        }
                    }
                }
                dirichlet[fid] = Some(coeff);
            } else {
                face_block[fid] = Some(unknown_faces.len());
                unknown_faces.push(fid);
            }
        }
        Ok(Self {
            level: mesh.level,
            degree,
            n_dofs: unknown_faces.len() * k,
            face_block,
            unknown_faces,
            dirichlet,
        })
    }

    pub fn block_size(&self) -> usize {
        trace_dofs_per_face(self.degree)
    }

    /// Scalar base index of an unknown face's block.
    pub fn face_base(&self, fid: usize) -> Option<usize> {
        self.face_block[fid].map(|b| b * self.block_size())
    }
}

/// Element geometry in the form the local solvers need.
pub fn element_geometry(mesh: &MeshLevel, tri: usize) -> ElementGeometry {
    let t = &mesh.triangles[tri];
    let mut flip = [false; 3];
    for (i, f) in flip.iter_mut().enumerate() {
        let local_start = t.vertices[(i + 1) % 3];
        *f = mesh.faces[t.faces[i]].vertices[0] != local_start;
    }
    ElementGeometry {
        vertices: mesh.triangle_vertices(tri),
        star_face: t.star_face,
        flip,
    }
}

/// Trace coefficients on one element's boundary, filling unknown faces from
/// the solution vector and Dirichlet faces from the stored projections.
pub fn gather_element_trace(
    space: &TraceSpace,
    mesh: &MeshLevel,
    tri: usize,
    lambda: &DVector<f64>,
) -> DVector<f64> {
    let k = space.block_size();
    let mut out = DVector::zeros(3 * k);
    for (lf, &fid) in mesh.triangles[tri].faces.iter().enumerate() {
        match space.face_base(fid) {
            Some(base) => {
                for i in 0..k {
                    out[lf * k + i] = lambda[base + i];
                }
            }
            None => {
                if let Some(coeff) = &space.dirichlet[fid] {
                    for i in 0..k {
                        out[lf * k + i] = coeff[i];
                    }
                }
            }
        }
    }
    out
}

/// Assembled condensed system plus the per-element operators behind it.
#[derive(Clone, Debug)]
pub struct CondensedSystem {
    pub level: usize,
    pub degree: usize,
    pub dt: f64,
    pub method: MethodKind,
    pub matrix: BlockMatrix,
    pub elements: Vec<ElementOperator>,
}

/// Assembles the condensed skeleton operator for the given method.
pub fn assemble_condensed(
    mesh: &MeshLevel,
    space: &TraceSpace,
    method: MethodKind,
    dt: f64,
) -> Result<CondensedSystem> {
    assemble_condensed_with_stabilization(mesh, space, method, dt, None)
}

/// Variant taking explicit stabilization weights; used by the method-identity
/// negative control.
pub fn assemble_condensed_with_stabilization(
    mesh: &MeshLevel,
    space: &TraceSpace,
    method: MethodKind,
    dt: f64,
    stab: Option<Stabilization>,
) -> Result<CondensedSystem> {
    let k = space.block_size();
    // Block sparsity: faces couple iff they share a triangle.
    let n_blocks = space.unknown_faces.len();
    let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); n_blocks];
    for t in &mesh.triangles {
        for &fi in &t.faces {
            let Some(bi) = space.face_block[fi] else { continue };
            for &fj in &t.faces {
                if let Some(bj) = space.face_block[fj] {
                    pattern[bi].push(bj);
                }
            }
        }
    }
    for row in pattern.iter_mut() {
        row.sort_unstable();
        row.dedup();
    }
    let mut matrix = BlockMatrix::from_pattern(k, &pattern);

    let mut elements = Vec::with_capacity(mesh.triangles.len());
    for (tid, tri) in mesh.triangles.iter().enumerate() {
        let geom = element_geometry(mesh, tid);
        let op = match stab {
            None => ElementOperator::new(method, space.degree, &geom, dt),
            Some(s) => {
                ElementOperator::with_stabilization(method, space.degree, &geom, dt, s)
            }
        }
        .map_err(|e| match e {
            crate::Error::SingularLocalSystem { .. } => {
                crate::Error::SingularLocalSystem { element: tid }
            }
            other => other,
        })?;
        for (li, &fi) in tri.faces.iter().enumerate() {
            let Some(bi) = space.face_block[fi] else { continue };
            for (lj, &fj) in tri.faces.iter().enumerate() {
                let Some(bj) = space.face_block[fj] else { continue };
                for i in 0..k {
                    for j in 0..k {
                        matrix.add(bi, bj, i, j, op.a_local[(li * k + i, lj * k + j)]);
                    }
                }
            }
        }
        elements.push(op);
    }
    Ok(CondensedSystem {
        level: mesh.level,
        degree: space.degree,
        dt,
        method,
        matrix,
        elements,
    })
}

/// Piecewise polynomial pressure field, stored as orthonormal-basis
/// coefficients per element (so coefficient norms are exact L2 norms).
#[derive(Clone, Debug)]
pub struct PressureField {
    pub level: usize,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl PressureField {
    pub fn coeffs_per_element(degree: usize) -> usize {
        crate::basis::p_dim(degree)
    }

    pub fn zeros(mesh: &MeshLevel, degree: usize) -> Self {
        Self {
            level: mesh.level,
            degree,
            coeffs: vec![0.0; mesh.triangles.len() * Self::coeffs_per_element(degree)],
        }
    }

    /// Element-wise L2 projection of a scalar function.
    pub fn project(mesh: &MeshLevel, degree: usize, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let rule = triangle_rule(data_exactness(degree))?;
        let n = Self::coeffs_per_element(degree);
        let mut coeffs = vec![0.0; mesh.triangles.len() * n];
        for tid in 0..mesh.triangles.len() {
            let verts = mesh.triangle_vertices(tid);
            let basis = CellBasis::new(degree, &verts)?;
            let area2 = 2.0 * mesh.signed_area(tid);
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    verts[0][0] + (verts[1][0] - verts[0][0]) * q[0]
                        + (verts[2][0] - verts[0][0]) * q[1],
                    verts[0][1] + (verts[1][1] - verts[0][1]) * q[0]
                        + (verts[2][1] - verts[0][1]) * q[1],
                ];
                let vals = basis.eval(x);
                for i in 0..n {
                    coeffs[tid * n + i] += w * area2 * f(x) * vals[i];
                }
            }
        }
        Ok(Self {
            level: mesh.level,
            degree,
            coeffs,
        })
    }

    /// Exact embedding of a coarse-level field: children inherit the parent
    /// polynomial (re-expanded in the child bases by exact quadrature).
    pub fn embed_from_coarse(
        &self,
        coarse_mesh: &MeshLevel,
        fine_mesh: &MeshLevel,
    ) -> Result<Self> {
        assert_eq!(self.level, coarse_mesh.level);
        assert_eq!(fine_mesh.level, coarse_mesh.level + 1);
        let degree = self.degree;
        let n = Self::coeffs_per_element(degree);
        let rule = triangle_rule(2 * degree)?;
        let mut coeffs = vec![0.0; fine_mesh.triangles.len() * n];
        for cid in 0..coarse_mesh.triangles.len() {
            let cbasis = CellBasis::new(degree, &coarse_mesh.triangle_vertices(cid))?;
            let cvals = &self.coeffs[cid * n..(cid + 1) * n];
            for child in 0..4 {
                let tid = 4 * cid + child;
                let verts = fine_mesh.triangle_vertices(tid);
                let fbasis = CellBasis::new(degree, &verts)?;
                let area2 = 2.0 * fine_mesh.signed_area(tid);
                for (q, w) in rule.points.iter().zip(&rule.weights) {
                    let x = [
                        verts[0][0] + (verts[1][0] - verts[0][0]) * q[0]
                            + (verts[2][0] - verts[0][0]) * q[1],
                        verts[0][1] + (verts[1][1] - verts[0][1]) * q[0]
                            + (verts[2][1] - verts[0][1]) * q[1],
                    ];
                    let parent = cbasis
                        .eval(x)
                        .iter()
                        .zip(cvals)
                        .map(|(b, c)| b * c)
                        .sum::<f64>();
                    let fvals = fbasis.eval(x);
                    for i in 0..n {
                        coeffs[tid * n + i] += w * area2 * parent * fvals[i];
                    }
                }
            }
        }
        Ok(Self {
            level: fine_mesh.level,
            degree,
            coeffs,
        })
    }

    /// Exact L2 norm over the domain.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn diff_norm(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Source moments (f, v_i)_T per element, fixed across outer iterations.
#[derive(Clone, Debug)]
pub struct SourceMoments {
    pub per_element: Vec<DVector<f64>>,
}

impl SourceMoments {
    pub fn build(
        mesh: &MeshLevel,
        sys: &CondensedSystem,
        source: impl Fn([f64; 2]) -> [f64; 2],
    ) -> Result<Self> {
        let rule = triangle_rule(data_exactness(sys.degree))?;
        let mut per_element = Vec::with_capacity(mesh.triangles.len());
        for (tid, op) in sys.elements.iter().enumerate() {
            let geom = element_geometry(mesh, tid);
            let bases = ElementBases::new(sys.method, sys.degree, &geom)?;
            let n_s = op.dims.n_vel_scalar;
            let mut mom = DVector::zeros(op.dims.n_vel);
            let area2 = 2.0 * geom.area();
            let [v0, v1, v2] = geom.vertices;
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    v0[0] + (v1[0] - v0[0]) * q[0] + (v2[0] - v0[0]) * q[1],
                    v0[1] + (v1[1] - v0[1]) * q[0] + (v2[1] - v0[1]) * q[1],
                ];
                let f = source(x);
                let vv = bases.vel.eval(x);
                for c in 0..2 {
                    for kk in 0..n_s {
                        mom[c * n_s + kk] += w * area2 * f[c] * vv[kk];
                    }
                }
            }
            per_element.push(mom);
        }
        Ok(Self { per_element })
    }
}

/// The part of the right-hand side that does not depend on the previous
/// pressure: source term through the local solution maps, Neumann boundary
/// term, and the Dirichlet coupling lift.
pub fn assemble_rhs_fixed(
    sys: &CondensedSystem,
    space: &TraceSpace,
    mesh: &MeshLevel,
    problem: &ProblemData,
    moments: &SourceMoments,
) -> Result<DVector<f64>> {
    let k = space.block_size();
    let p = space.degree;
    let mut b = DVector::zeros(space.n_dofs);
    for (tid, tri) in mesh.triangles.iter().enumerate() {
        let op = &sys.elements[tid];
        let d = &op.dims;
        let f_mom = &moments.per_element[tid];
        // (f, u^dt mu_i): dot the source moments with the velocity rows of
        // the trace-to-solution map.
        let u_rows = op.map_lambda.rows(d.n_grad, d.n_vel);
        let contrib = u_rows.transpose() * f_mom;
        for (lf, &fid) in tri.faces.iter().enumerate() {
            if let Some(base) = space.face_base(fid) {
                for i in 0..k {
                    b[base + i] += contrib[lf * k + i];
                }
            }
        }
        // Dirichlet coupling: move a_local columns of fixed dofs to the rhs.
        let mut has_dirichlet = false;
        for &fid in &tri.faces {
            if space.face_block[fid].is_none() {
                has_dirichlet = true;
            }
        }
        if has_dirichlet {
            let lam_d = gather_element_trace(space, mesh, tid, &DVector::zeros(space.n_dofs));
            let coupled = &op.a_local * &lam_d;
            for (lf, &fid) in tri.faces.iter().enumerate() {
                if let Some(base) = space.face_base(fid) {
                    for i in 0..k {
                        b[base + i] -= coupled[lf * k + i];
                    }
                }
            }
        }
    }
    // Neumann boundary term <g, mu> with g = (grad u - p I) nu.
    let edge_basis = EdgeBasis::new(p)?;
    let rule = edge_rule(data_exactness(p))?;
    for (fid, face) in mesh.faces.iter().enumerate() {
        if face.kind != FaceKind::Neumann {
            continue;
        }
        let base = space.face_base(fid).expect("Neumann faces carry unknowns");
        let tid = face.cells[0];
        let geom = element_geometry(mesh, tid);
        let lf = mesh.triangles[tid].faces.iter().position(|&f| f == fid).unwrap();
        let nu = geom.outward_normal(lf);
        let a = mesh.vertices[face.vertices[0]].pos();
        let bpt = mesh.vertices[face.vertices[1]].pos();
        let h = face.length;
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let x = [a[0] + t * (bpt[0] - a[0]), a[1] + t * (bpt[1] - a[1])];
            let g = (problem.neumann)(x, nu);
            let tb = edge_basis.eval(t);
            for mode in 0..=p {
                for c in 0..2 {
                    b[base + 2 * mode + c] += w * h * g[c] * tb[mode];
                }
            }
        }
    }
    Ok(b)
}

/// The previous-pressure contribution -(1/dt)(m, p^dt mu).
pub fn assemble_rhs_pressure_part(
    sys: &CondensedSystem,
    space: &TraceSpace,
    mesh: &MeshLevel,
    p_prev: &PressureField,
) -> DVector<f64> {
    let k = space.block_size();
    let n_pres = PressureField::coeffs_per_element(space.degree);
    let mut b = DVector::zeros(space.n_dofs);
    for (tid, tri) in mesh.triangles.iter().enumerate() {
        let op = &sys.elements[tid];
        let d = &op.dims;
        let m_e = DVector::from_column_slice(&p_prev.coeffs[tid * n_pres..(tid + 1) * n_pres]);
        let p_rows = op.map_lambda.rows(d.n_grad + d.n_vel, d.n_pres);
        let contrib = p_rows.transpose() * m_e / (-sys.dt);
        for (lf, &fid) in tri.faces.iter().enumerate() {
            if let Some(base) = space.face_base(fid) {
                for i in 0..k {
                    b[base + i] += contrib[lf * k + i];
                }
            }
        }
    }
    b
}

/// Full right-hand side for one outer step.
pub fn assemble_rhs(
    sys: &CondensedSystem,
    space: &TraceSpace,
    mesh: &MeshLevel,
    problem: &ProblemData,
    p_prev: &PressureField,
) -> Result<DVector<f64>> {
    let moments = SourceMoments::build(mesh, sys, problem.source)?;
    let fixed = assemble_rhs_fixed(sys, space, mesh, problem, &moments)?;
    Ok(fixed + assemble_rhs_pressure_part(sys, space, mesh, p_prev))
}

/// Volumetric solution coefficients on a whole level.
#[derive(Clone, Debug)]
pub struct DiscreteFields {
    pub method: MethodKind,
    pub degree: usize,
    pub n_grad: usize,
    pub n_vel: usize,
    pub n_pres: usize,
    pub grad: Vec<f64>,
    pub vel: Vec<f64>,
    pub pres: Vec<f64>,
}

impl DiscreteFields {
    pub fn pressure_field(&self, level: usize) -> PressureField {
        PressureField {
            level,
            degree: self.degree,
            coeffs: self.pres.clone(),
        }
    }
}

/// Reconstructs (L, u, p) on every element by superposing the three local
/// solution maps applied to the skeleton solution, the source moments, and
/// the previous pressure.
pub fn reconstruct_fields(
    sys: &CondensedSystem,
    space: &TraceSpace,
    mesh: &MeshLevel,
    lambda: &DVector<f64>,
    p_prev: &PressureField,
    moments: &SourceMoments,
) -> DiscreteFields {
    let d0 = &sys.elements[0].dims;
    let (n_grad, n_vel, n_pres) = (d0.n_grad, d0.n_vel, d0.n_pres);
    let n_elem = mesh.triangles.len();
    let mut fields = DiscreteFields {
        method: sys.method,
        degree: sys.degree,
        n_grad,
        n_vel,
        n_pres,
        grad: vec![0.0; n_elem * n_grad],
        vel: vec![0.0; n_elem * n_vel],
        pres: vec![0.0; n_elem * n_pres],
    };
    for tid in 0..n_elem {
        let op = &sys.elements[tid];
        let lam = gather_element_trace(space, mesh, tid, lambda);
        let m_e = DVector::from_column_slice(&p_prev.coeffs[tid * n_pres..(tid + 1) * n_pres]);
        let x = &op.map_lambda * lam
            + &op.map_f * &moments.per_element[tid]
            + &op.map_m * m_e;
        for i in 0..n_grad {
            fields.grad[tid * n_grad + i] = x[i];
        }
        for i in 0..n_vel {
            fields.vel[tid * n_vel + i] = x[n_grad + i];
        }
        for i in 0..n_pres {
            fields.pres[tid * n_pres + i] = x[n_grad + n_vel + i];
        }
    }
    fields
}

/// L2 errors of the three fields against a closed-form solution.
#[derive(Clone, Copy, Debug)]
pub struct FieldErrors {
    pub u: f64,
    pub p: f64,
    pub l: f64,
}

pub fn compute_errors(
    mesh: &MeshLevel,
    fields: &DiscreteFields,
    exact: &ExactSolution,
) -> Result<FieldErrors> {
    let rule = triangle_rule(data_exactness(fields.degree))?;
    let (mut eu, mut ep, mut el) = (0.0, 0.0, 0.0);
    for tid in 0..mesh.triangles.len() {
        let geom = element_geometry(mesh, tid);
        let bases = ElementBases::new(fields.method, fields.degree, &geom)?;
        let n_s = bases.vel.dim();
        let area2 = 2.0 * geom.area();
        let [v0, v1, v2] = geom.vertices;
        let g_c = &fields.grad[tid * fields.n_grad..(tid + 1) * fields.n_grad];
        let u_c = &fields.vel[tid * fields.n_vel..(tid + 1) * fields.n_vel];
        let p_c = &fields.pres[tid * fields.n_pres..(tid + 1) * fields.n_pres];
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                v0[0] + (v1[0] - v0[0]) * q[0] + (v2[0] - v0[0]) * q[1],
                v0[1] + (v1[1] - v0[1]) * q[0] + (v2[1] - v0[1]) * q[1],
            ];
            let w = w * area2;
            let (wv, _) = bases.grad.eval(x);
            let vv = bases.vel.eval(x);
            let qv = bases.pres.eval(x);
            let mut l_h = [[0.0; 2]; 2];
            for (i, m) in wv.iter().enumerate() {
                for r in 0..2 {
                    for c in 0..2 {
                        l_h[r][c] += g_c[i] * m[r][c];
                    }
                }
            }
            let mut u_h = [0.0, 0.0];
            for c in 0..2 {
                for kk in 0..n_s {
                    u_h[c] += u_c[c * n_s + kk] * vv[kk];
                }
            }
            let p_h: f64 = p_c.iter().zip(&qv).map(|(c, v)| c * v).sum();
            let ue = (exact.velocity)(x);
            let pe = (exact.pressure)(x);
            let le = (exact.velocity_gradient)(x);
            eu += w * ((u_h[0] - ue[0]).powi(2) + (u_h[1] - ue[1]).powi(2));
            ep += w * (p_h - pe).powi(2);
            for r in 0..2 {
                for c in 0..2 {
                    el += w * (l_h[r][c] - le[r][c]).powi(2);
                }
            }
        }
    }
    Ok(FieldErrors {
        u: eu.sqrt(),
        p: ep.sqrt(),
        l: el.sqrt(),
    })
}

/// Spectral estimates of an SPD block matrix.
#[derive(Clone, Copy, Debug)]
pub struct ConditionEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    /// False when an iteration hit its cap before the 1e-6 relative
    /// tolerance; the values are then best-effort estimates.
    pub converged: bool,
}

/// Largest eigenvalue by power iteration, smallest by inverse iteration with
/// a dense Cholesky factorization.
pub fn estimate_condition_number(matrix: &BlockMatrix) -> ConditionEstimate {
    let n = matrix.n();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let tol = 1e-6;
    let cap = 20_000;

    let mut v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
    v /= v.norm();
    let mut av = DVector::zeros(n);
    let mut lambda_max = 0.0;
    let mut converged_max = false;
    for _ in 0..cap {
        matrix.mul_vec(&v, &mut av);
        let rho = v.dot(&av);
        let norm = av.norm();
        if norm == 0.0 {
            lambda_max = 0.0;
            converged_max = true;
            break;
        }
        v = &av / norm;
        if (rho - lambda_max).abs() <= tol * rho.abs() {
            lambda_max = rho;
            converged_max = true;
            break;
        }
        lambda_max = rho;
    }

    let dense = matrix.to_dense();
    let chol = dense.cholesky();
    let (lambda_min, converged_min) = match chol {
        Some(f) => {
            let mut v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
            v /= v.norm();
            let mut lam = f64::INFINITY;
            let mut ok = false;
            for _ in 0..cap {
                let mut z = v.clone();
                f.solve_mut(&mut z);
                let mu = v.dot(&z);
                let norm = z.norm();
                v = z / norm;
                let est = 1.0 / mu;
                if (est - lam).abs() <= tol * est.abs() {
                    lam = est;
                    ok = true;
                    break;
                }
                lam = est;
            }
            (lam, ok)
        }
        None => (f64::NAN, false),
    };
    ConditionEstimate {
        lambda_min,
        lambda_max,
        kappa: lambda_max / lambda_min,
        converged: converged_max && converged_min,
    }
}
