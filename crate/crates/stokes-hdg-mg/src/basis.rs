//! Polynomial bases and quadrature on triangles and edges.
//!
//! All scalar bases are orthonormal: shifted Legendre polynomials on the
//! face parameter in [0,1], and a Dubiner-type basis on triangles normalized
//! in L2 of the physical element. Orthonormality keeps face mass matrices
//! diagonal and the element-local saddle systems well conditioned up to the
//! supported degree 4.
//!
//! Triangle quadrature uses the collapsed (Duffy) tensor product of
//! Gauss-Legendre rules: for requested exactness d a monomial x^a y^b with
//! a + b <= d becomes degree a in the first tensor direction and a + b + 1
//! in the second (including the Jacobian factor), so ceil((d+2)/2) points per
//! direction integrate it exactly.

use crate::error::Error;
use crate::Result;

/// Largest supported polynomial degree for all bases.
pub const MAX_DEGREE: usize = 4;
/// Largest supported quadrature exactness.
pub const MAX_EXACTNESS: usize = 20;

/// Dimension of the scalar polynomial space P_p on a triangle.
pub fn p_dim(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

// ---------------------------------------------------------------------------
// Gauss-Legendre and quadrature rules
// ---------------------------------------------------------------------------

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Newton starts at descending nodes; flip to ascending order.
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial P_n at z.
fn legendre_pair(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}

/// Quadrature on the parameter interval [0, 1]; weights sum to 1.
#[derive(Clone, Debug)]
pub struct EdgeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss rule on [0,1] exact for polynomials up to the given degree.
pub fn edge_rule(exactness: usize) -> Result<EdgeRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::UnsupportedExactness(exactness));
    }
    let n = exactness / 2 + 1;
    let (z, w) = gauss_legendre(n);
    Ok(EdgeRule {
        nodes: z.iter().map(|&x| 0.5 * (x + 1.0)).collect(),
        weights: w.iter().map(|&w| 0.5 * w).collect(),
    })
}

/// Quadrature on the reference triangle {x, y >= 0, x + y <= 1};
/// weights sum to 1/2.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Collapsed tensor rule on the reference triangle, exact for total degree
/// up to `exactness`.
pub fn triangle_rule(exactness: usize) -> Result<TriangleRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::UnsupportedExactness(exactness));
    }
    let n = (exactness + 3) / 2;
    let (z, w) = gauss_legendre(n);
    let u: Vec<f64> = z.iter().map(|&x| 0.5 * (x + 1.0)).collect();
    let wu: Vec<f64> = w.iter().map(|&w| 0.5 * w).collect();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for j in 0..n {
        let v = u[j];
        for i in 0..n {
            points.push([u[i] * (1.0 - v), v]);
            weights.push(wu[i] * wu[j] * (1.0 - v));
        }
    }
    Ok(TriangleRule { points, weights })
}

// ---------------------------------------------------------------------------
// Jacobi polynomials (needed for the Dubiner basis)
// ---------------------------------------------------------------------------

/// Values of P_k^(alpha,beta)(z) for k = 0..=n.
fn jacobi(n: usize, alpha: f64, beta: f64, z: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n == 0 {
        return p;
    }
    p.push(0.5 * (alpha - beta) + 0.5 * (alpha + beta + 2.0) * z);
    for k in 2..=n {
        let kf = k as f64;
        let a = kf + alpha;
        let b = kf + beta;
        let c = 2.0 * kf + alpha + beta;
        let c1 = 2.0 * kf * (kf + alpha + beta) * (c - 2.0);
        let c2 = (c - 1.0) * (c * (c - 2.0) * z + alpha * alpha - beta * beta);
        let c3 = 2.0 * (a - 1.0) * (b - 1.0) * c;
        p.push((c2 * p[k - 1] - c3 * p[k - 2]) / c1);
    }
    p
}

/// Values and z-derivatives of P_k^(alpha,0)(z) for k = 0..=n.
fn jacobi_with_deriv(n: usize, alpha: f64, z: f64) -> (Vec<f64>, Vec<f64>) {
    let vals = jacobi(n, alpha, 0.0, z);
    let shifted = jacobi(n.saturating_sub(1), alpha + 1.0, 1.0, z);
    let mut derivs = vec![0.0; n + 1];
    for k in 1..=n {
        derivs[k] = 0.5 * (k as f64 + alpha + 1.0) * shifted[k - 1];
    }
    (vals, derivs)
}

// ---------------------------------------------------------------------------
// Dubiner basis on the reference triangle
// ---------------------------------------------------------------------------

/// Index pairs (m, n) of the Dubiner basis in degree-graded order.
fn dubiner_indices(p: usize) -> Vec<(usize, usize)> {
    let mut idx = Vec::with_capacity(p_dim(p));
    for d in 0..=p {
        for m in 0..=d {
            idx.push((m, d - m));
        }
    }
    idx
}

/// Scaled Legendre factors f_m(x,y) = (1-y)^m P_m((2x-1+y)/(1-y)) and their
/// gradients, evaluated through a singularity-free recurrence.
fn scaled_legendre(p: usize, x: f64, y: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut f = vec![0.0; p + 1];
    let mut fx = vec![0.0; p + 1];
    let mut fy = vec![0.0; p + 1];
    f[0] = 1.0;
    if p == 0 {
        return (f, fx, fy);
    }
    let s = 2.0 * x - 1.0 + y;
    let t = 1.0 - y;
    f[1] = s;
    fx[1] = 2.0;
    fy[1] = 1.0;
    for m in 1..p {
        let mf = m as f64;
        let a = (2.0 * mf + 1.0) / (mf + 1.0);
        let b = mf / (mf + 1.0);
        f[m + 1] = a * s * f[m] - b * t * t * f[m - 1];
        fx[m + 1] = a * (2.0 * f[m] + s * fx[m]) - b * t * t * fx[m - 1];
        fy[m + 1] = a * (f[m] + s * fy[m]) - b * (t * t * fy[m - 1] - 2.0 * t * f[m - 1]);
    }
    (f, fx, fy)
}

/// Values of the orthonormal Dubiner basis of degree p at a reference point.
pub(crate) fn dubiner(p: usize, x: f64, y: f64) -> Vec<f64> {
    let (f, _, _) = scaled_legendre(p, x, y);
    let z = 2.0 * y - 1.0;
    let idx = dubiner_indices(p);
    let mut vals = Vec::with_capacity(idx.len());
    let mut jac_cache: Vec<Option<Vec<f64>>> = vec![None; p + 1];
    for &(m, n) in &idx {
        let g = jac_cache[m]
            .get_or_insert_with(|| jacobi(p - m, 2.0 * m as f64 + 1.0, 0.0, z));
        let c = (2.0 * (2.0 * m as f64 + 1.0) * (m as f64 + n as f64 + 1.0)).sqrt();
        vals.push(c * f[m] * g[n]);
    }
    vals
}

/// Values and reference gradients of the orthonormal Dubiner basis.
pub(crate) fn dubiner_with_grad(p: usize, x: f64, y: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    let (f, fx, fy) = scaled_legendre(p, x, y);
    let z = 2.0 * y - 1.0;
    let idx = dubiner_indices(p);
    let mut vals = Vec::with_capacity(idx.len());
    let mut grads = Vec::with_capacity(idx.len());
    let mut jac_cache: Vec<Option<(Vec<f64>, Vec<f64>)>> = vec![None; p + 1];
    for &(m, n) in &idx {
        let (g, dg) = jac_cache[m]
            .get_or_insert_with(|| jacobi_with_deriv(p - m, 2.0 * m as f64 + 1.0, z));
        let c = (2.0 * (2.0 * m as f64 + 1.0) * (m as f64 + n as f64 + 1.0)).sqrt();
        vals.push(c * f[m] * g[n]);
        grads.push([
            c * fx[m] * g[n],
            c * (fy[m] * g[n] + 2.0 * f[m] * dg[n]),
        ]);
    }
    (vals, grads)
}

// ---------------------------------------------------------------------------
// Bases on physical entities
// ---------------------------------------------------------------------------

/// Orthonormal Legendre basis of degree p on a face parameter in [0, 1].
///
/// The first function is the constant 1; the Gram matrix with respect to the
/// uniform weight is the identity, so with respect to arc length it is h_F
/// times the identity.
#[derive(Clone, Debug)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        Ok(Self { degree })
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    /// Values of all p+1 basis functions at parameter t.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let z = 2.0 * t - 1.0;
        let mut vals = Vec::with_capacity(self.degree + 1);
        let mut p0 = 1.0;
        let mut p1 = z;
        vals.push(1.0);
        if self.degree >= 1 {
            vals.push(3f64.sqrt() * z);
        }
        for k in 1..self.degree {
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
            vals.push(((2 * k + 3) as f64).sqrt() * p2);
        }
        vals
    }
}

/// Orthonormal scalar basis of P_p on a physical triangle.
///
/// Basis functions are degree-graded: the first (q+1)(q+2)/2 functions span
/// P_q for every q <= p, with the same functions reappearing for every degree.
#[derive(Clone, Debug)]
pub struct CellBasis {
    pub degree: usize,
    v0: [f64; 2],
    inv_jac: [[f64; 2]; 2],
    /// 1/sqrt(2|T|): normalizes the reference-orthonormal basis on T.
    scale: f64,
}

impl CellBasis {
    pub fn new(degree: usize, vertices: &[[f64; 2]; 3]) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        Ok(Self::new_unchecked(degree, vertices))
    }

    /// Internal constructor for degrees down to 0 (the BDM velocity space at
    /// p = 1 uses piecewise constants).
    pub(crate) fn new_any(degree: usize, vertices: &[[f64; 2]; 3]) -> Self {
        Self::new_unchecked(degree, vertices)
    }

    fn new_unchecked(degree: usize, vertices: &[[f64; 2]; 3]) -> Self {
        let j = [
            [vertices[1][0] - vertices[0][0], vertices[2][0] - vertices[0][0]],
            [vertices[1][1] - vertices[0][1], vertices[2][1] - vertices[0][1]],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let inv_jac = [
            [j[1][1] / det, -j[0][1] / det],
            [-j[1][0] / det, j[0][0] / det],
        ];
        Self {
            degree,
            v0: vertices[0],
            inv_jac,
            scale: 1.0 / det.abs().sqrt(),
        }
    }

    pub fn dim(&self) -> usize {
        p_dim(self.degree)
    }

    fn to_ref(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.v0[0], x[1] - self.v0[1]];
        [
            self.inv_jac[0][0] * d[0] + self.inv_jac[0][1] * d[1],
            self.inv_jac[1][0] * d[0] + self.inv_jac[1][1] * d[1],
        ]
    }

    /// Basis values at a physical point.
    pub fn eval(&self, x: [f64; 2]) -> Vec<f64> {
        let r = self.to_ref(x);
        let mut vals = dubiner(self.degree, r[0], r[1]);
        for v in vals.iter_mut() {
            *v *= self.scale;
        }
        vals
    }

    /// Basis values and physical gradients at a physical point.
    pub fn eval_grad(&self, x: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let r = self.to_ref(x);
        let (mut vals, ref_grads) = dubiner_with_grad(self.degree, r[0], r[1]);
        let c = self.scale;
        let mut grads = Vec::with_capacity(ref_grads.len());
        for (v, g) in vals.iter_mut().zip(&ref_grads) {
            *v *= c;
            grads.push([
                c * (self.inv_jac[0][0] * g[0] + self.inv_jac[1][0] * g[1]),
                c * (self.inv_jac[0][1] * g[0] + self.inv_jac[1][1] * g[1]),
            ]);
        }
        (vals, grads)
    }
}

/// Vector-valued Raviart-Thomas basis RT_p = [P_p]^2 + x * (homogeneous
/// degree p) on a physical triangle, dimension (p+1)(p+3).
///
/// The first 2 * dim P_p fields are the Cartesian components of the scalar
/// basis; the trailing p+1 fields are (x - x_c) q(x - x_c) with q ranging
/// over scaled homogeneous monomials, whose divergence is (p+2) q by Euler's
/// relation.
#[derive(Clone, Debug)]
pub struct RtBasis {
    pub degree: usize,
    cell: CellBasis,
    centroid: [f64; 2],
    inv_len: f64,
}

impl RtBasis {
    pub fn new(degree: usize, vertices: &[[f64; 2]; 3]) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let cell = CellBasis::new(degree, vertices)?;
        let centroid = [
            (vertices[0][0] + vertices[1][0] + vertices[2][0]) / 3.0,
            (vertices[0][1] + vertices[1][1] + vertices[2][1]) / 3.0,
        ];
        let mut len: f64 = 0.0;
        for k in 0..3 {
            let a = vertices[k];
            let b = vertices[(k + 1) % 3];
            len = len.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
        }
        Ok(Self {
            degree,
            cell,
            centroid,
            inv_len: 1.0 / len,
        })
    }

    pub fn dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 3)
    }

    /// Field values and divergences at a physical point.
    pub fn eval(&self, x: [f64; 2]) -> (Vec<[f64; 2]>, Vec<f64>) {
        let n = self.cell.dim();
        let (vals, grads) = self.cell.eval_grad(x);
        let mut fields = Vec::with_capacity(self.dim());
        let mut divs = Vec::with_capacity(self.dim());
        for c in 0..2 {
            for i in 0..n {
                let mut f = [0.0, 0.0];
                f[c] = vals[i];
                fields.push(f);
                divs.push(grads[i][c]);
            }
        }
        let xi = [
            (x[0] - self.centroid[0]) * self.inv_len,
            (x[1] - self.centroid[1]) * self.inv_len,
        ];
        let p = self.degree;
        for k in 0..=p {
            // q = xi_0^k xi_1^(p-k), homogeneous of degree p in xi.
            let q = xi[0].powi(k as i32) * xi[1].powi((p - k) as i32);
            fields.push([xi[0] * q, xi[1] * q]);
            divs.push((p as f64 + 2.0) * q * self.inv_len);
        }
        (fields, divs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Exact integral of x^a y^b over the reference triangle.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        // a! b! / (a + b + 2)!
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rule_is_exact_for_monomials() {
        for d in 0..=MAX_EXACTNESS {
            let rule = triangle_rule(d).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let num: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!(
                        (num - exact).abs() < 1e-13 * exact.abs().max(1.0),
                        "degree {d}, monomial x^{a} y^{b}: {num} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_rule_examples() {
        let rule = triangle_rule(2).unwrap();
        let x2: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[0] * p[0])
            .sum();
        assert_abs_diff_eq!(x2, 1.0 / 12.0, epsilon = 1e-14);
        let area: f64 = rule.weights.iter().sum();
        assert_abs_diff_eq!(area, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn edge_rule_examples() {
        let rule = edge_rule(5).unwrap();
        assert_eq!(rule.nodes.len(), 3);
        for d in 0..=5 {
            let num: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(t, w)| w * t.powi(d))
                .sum();
            assert_abs_diff_eq!(num, 1.0 / (d as f64 + 1.0), epsilon = 1e-14);
        }
        assert!(edge_rule(21).is_err());
        assert!(triangle_rule(40).is_err());
    }

    #[test]
    fn edge_basis_is_orthonormal() {
        for p in 1..=MAX_DEGREE {
            let basis = EdgeBasis::new(p).unwrap();
            assert_eq!(basis.dim(), p + 1);
            let rule = edge_rule(2 * p).unwrap();
            for i in 0..basis.dim() {
                for j in 0..basis.dim() {
                    let g: f64 = rule
                        .nodes
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&t, &w)| {
                            let v = basis.eval(t);
                            w * v[i] * v[j]
                        })
                        .sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(g, expect, epsilon = 1e-13);
                }
            }
            assert_abs_diff_eq!(basis.eval(0.37)[0], 1.0, epsilon = 1e-15);
        }
        assert!(EdgeBasis::new(0).is_err());
        assert!(EdgeBasis::new(5).is_err());
    }

    fn random_triangle(rng: &mut ChaCha8Rng) -> [[f64; 2]; 3] {
        loop {
            let v: Vec<[f64; 2]> = (0..3)
                .map(|_| [rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)])
                .collect();
            let area = 0.5
                * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1])
                    - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0]));
            if area > 0.05 {
                return [v[0], v[1], v[2]];
            }
        }
    }

    #[test]
    fn cell_basis_is_orthonormal_on_physical_triangles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in 1..=MAX_DEGREE {
            let verts = random_triangle(&mut rng);
            let basis = CellBasis::new(p, &verts).unwrap();
            let rule = triangle_rule(2 * p).unwrap();
            let area2 = 2.0
                * (0.5
                    * ((verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1])
                        - (verts[1][1] - verts[0][1]) * (verts[2][0] - verts[0][0])));
            let n = basis.dim();
            let mut gram = vec![0.0; n * n];
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    verts[0][0]
                        + (verts[1][0] - verts[0][0]) * q[0]
                        + (verts[2][0] - verts[0][0]) * q[1],
                    verts[0][1]
                        + (verts[1][1] - verts[0][1]) * q[0]
                        + (verts[2][1] - verts[0][1]) * q[1],
                ];
                let vals = basis.eval(x);
                for i in 0..n {
                    for j in 0..n {
                        gram[i * n + j] += w * area2 * vals[i] * vals[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(gram[i * n + j], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn cell_basis_reproduces_linears_exactly() {
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let basis = CellBasis::new(1, &verts).unwrap();
        assert_eq!(basis.dim(), 3);
        // Project 1, x, y onto the basis and evaluate back at random points.
        let rule = triangle_rule(4).unwrap();
        let funcs: [Box<dyn Fn([f64; 2]) -> f64>; 3] = [
            Box::new(|_| 1.0),
            Box::new(|x| x[0]),
            Box::new(|x| x[1]),
        ];
        for f in &funcs {
            let mut coeff = vec![0.0; 3];
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let vals = basis.eval(*q);
                for i in 0..3 {
                    coeff[i] += w * f(*q) * vals[i];
                }
            }
            for t in [[0.1, 0.2], [0.3, 0.5], [0.6, 0.1]] {
                let vals = basis.eval(t);
                let rec: f64 = (0..3).map(|i| coeff[i] * vals[i]).sum();
                assert_abs_diff_eq!(rec, f(t), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn cell_basis_gradient_matches_symbolic_example() {
        // Represent g(x,y) = x^2 + y at degree 2, then check grad = (2x, 1).
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let verts = random_triangle(&mut rng);
        let basis = CellBasis::new(2, &verts).unwrap();
        assert_eq!(basis.dim(), 6);
        let rule = triangle_rule(6).unwrap();
        let area2 = ((verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1])
            - (verts[1][1] - verts[0][1]) * (verts[2][0] - verts[0][0]))
            .abs();
        let mut coeff = vec![0.0; 6];
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let x = [
                verts[0][0] + (verts[1][0] - verts[0][0]) * q[0] + (verts[2][0] - verts[0][0]) * q[1],
                verts[0][1] + (verts[1][1] - verts[0][1]) * q[0] + (verts[2][1] - verts[0][1]) * q[1],
            ];
            let vals = basis.eval(x);
            let g = x[0] * x[0] + x[1];
            for i in 0..6 {
                coeff[i] += w * area2 * g * vals[i];
            }
        }
        let x = [
            (verts[0][0] + verts[1][0] + verts[2][0]) / 3.0,
            (verts[0][1] + verts[1][1] + verts[2][1]) / 3.0,
        ];
        let (_, grads) = basis.eval_grad(x);
        let gx: f64 = (0..6).map(|i| coeff[i] * grads[i][0]).sum();
        let gy: f64 = (0..6).map(|i| coeff[i] * grads[i][1]).sum();
        assert_abs_diff_eq!(gx, 2.0 * x[0], epsilon = 1e-12);
        assert_abs_diff_eq!(gy, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cell_basis_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let verts = random_triangle(&mut rng);
        for p in 1..=MAX_DEGREE {
            let basis = CellBasis::new(p, &verts).unwrap();
            let x = [
                0.4 * verts[0][0] + 0.3 * verts[1][0] + 0.3 * verts[2][0],
                0.4 * verts[0][1] + 0.3 * verts[1][1] + 0.3 * verts[2][1],
            ];
            let h = 1e-6;
            let (_, grads) = basis.eval_grad(x);
            let vxp = basis.eval([x[0] + h, x[1]]);
            let vxm = basis.eval([x[0] - h, x[1]]);
            let vyp = basis.eval([x[0], x[1] + h]);
            let vym = basis.eval([x[0], x[1] - h]);
            for i in 0..basis.dim() {
                assert_abs_diff_eq!(grads[i][0], (vxp[i] - vxm[i]) / (2.0 * h), epsilon = 1e-5);
                assert_abs_diff_eq!(grads[i][1], (vyp[i] - vym[i]) / (2.0 * h), epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn rt_basis_dimension_and_constants() {
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let rt = RtBasis::new(1, &verts).unwrap();
        assert_eq!(rt.dim(), 8);
        // (1, 0) lies in the span: solve a least-squares fit at sample points.
        let rule = triangle_rule(4).unwrap();
        let n = rt.dim();
        let mut gram = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut rhs = nalgebra::DVector::<f64>::zeros(n);
        for (q, w) in rule.points.iter().zip(&rule.weights) {
            let (fields, _) = rt.eval(*q);
            for i in 0..n {
                for j in 0..n {
                    gram[(i, j)] += w * (fields[i][0] * fields[j][0] + fields[i][1] * fields[j][1]);
                }
                rhs[i] += w * fields[i][0];
            }
        }
        let coeff = gram.clone().lu().solve(&rhs).unwrap();
        for t in [[0.2, 0.3], [0.5, 0.1]] {
            let (fields, _) = rt.eval(t);
            let mut v = [0.0, 0.0];
            for i in 0..n {
                v[0] += coeff[i] * fields[i][0];
                v[1] += coeff[i] * fields[i][1];
            }
            assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rt_divergence_is_consistent_with_projection() {
        // Project the divergence of each field onto P_p; the projection must
        // reproduce the pointwise divergence (div RT_p lies in P_p).
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in 1..=3 {
            let verts = random_triangle(&mut rng);
            let rt = RtBasis::new(p, &verts).unwrap();
            let cell = CellBasis::new(p, &verts).unwrap();
            let rule = triangle_rule(2 * p + 2).unwrap();
            let area2 = ((verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1])
                - (verts[1][1] - verts[0][1]) * (verts[2][0] - verts[0][0]))
                .abs();
            for i in 0..rt.dim() {
                let mut coeff = vec![0.0; cell.dim()];
                for (q, w) in rule.points.iter().zip(&rule.weights) {
                    let x = [
                        verts[0][0]
                            + (verts[1][0] - verts[0][0]) * q[0]
                            + (verts[2][0] - verts[0][0]) * q[1],
                        verts[0][1]
                            + (verts[1][1] - verts[0][1]) * q[0]
                            + (verts[2][1] - verts[0][1]) * q[1],
                    ];
                    let (_, divs) = rt.eval(x);
                    let vals = cell.eval(x);
                    for k in 0..cell.dim() {
                        coeff[k] += w * area2 * divs[i] * vals[k];
                    }
                }
                let x = [
                    0.25 * verts[0][0] + 0.4 * verts[1][0] + 0.35 * verts[2][0],
                    0.25 * verts[0][1] + 0.4 * verts[1][1] + 0.35 * verts[2][1],
                ];
                let (_, divs) = rt.eval(x);
                let vals = cell.eval(x);
                let rec: f64 = (0..cell.dim()).map(|k| coeff[k] * vals[k]).sum();
                assert_abs_diff_eq!(rec, divs[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rt_normal_trace_has_degree_p() {
        // On each edge, fit the normal trace with the degree-p edge basis and
        // check the fit is exact at off-node points.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let verts = random_triangle(&mut rng);
        for p in 1..=3 {
            let rt = RtBasis::new(p, &verts).unwrap();
            let eb = EdgeBasis::new(p).unwrap();
            let rule = edge_rule(2 * p + 4).unwrap();
            for e in 0..3 {
                let a = verts[(e + 1) % 3];
                let b = verts[(e + 2) % 3];
                let d = [b[0] - a[0], b[1] - a[1]];
                let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
                let nu = [d[1] / len, -d[0] / len];
                for i in 0..rt.dim() {
                    let mut coeff = vec![0.0; p + 1];
                    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                        let x = [a[0] + t * d[0], a[1] + t * d[1]];
                        let (fields, _) = rt.eval(x);
                        let fnu = fields[i][0] * nu[0] + fields[i][1] * nu[1];
                        let vals = eb.eval(t);
                        for k in 0..=p {
                            coeff[k] += w * fnu * vals[k];
                        }
                    }
                    for t in [0.123, 0.789] {
                        let x = [a[0] + t * d[0], a[1] + t * d[1]];
                        let (fields, _) = rt.eval(x);
                        let fnu = fields[i][0] * nu[0] + fields[i][1] * nu[1];
                        let vals = eb.eval(t);
                        let rec: f64 = (0..=p).map(|k| coeff[k] * vals[k]).sum();
                        assert_abs_diff_eq!(rec, fnu, epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn interpolation_round_trip_is_exact_for_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for p in 1..=MAX_DEGREE {
            let verts = random_triangle(&mut rng);
            let basis = CellBasis::new(p, &verts).unwrap();
            let rule = triangle_rule(2 * p).unwrap();
            let area2 = ((verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1])
                - (verts[1][1] - verts[0][1]) * (verts[2][0] - verts[0][0]))
                .abs();
            // Random polynomial in monomials of total degree <= p.
            let mut mono = Vec::new();
            for a in 0..=p {
                for b in 0..=(p - a) {
                    mono.push((a as i32, b as i32, rng.gen_range(-1.0..1.0)));
                }
            }
            let f = |x: [f64; 2]| -> f64 {
                mono.iter()
                    .map(|&(a, b, c)| c * x[0].powi(a) * x[1].powi(b))
                    .sum()
            };
            let mut coeff = vec![0.0; basis.dim()];
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    verts[0][0] + (verts[1][0] - verts[0][0]) * q[0] + (verts[2][0] - verts[0][0]) * q[1],
                    verts[0][1] + (verts[1][1] - verts[0][1]) * q[0] + (verts[2][1] - verts[0][1]) * q[1],
                ];
                let vals = basis.eval(x);
                for i in 0..basis.dim() {
                    coeff[i] += w * area2 * f(x) * vals[i];
                }
            }
            let scale: f64 = mono.iter().map(|m| m.2.abs()).sum();
            for _ in 0..10 {
                let l = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                let (q0, q1) = if l[0] + l[1] > 1.0 {
                    (1.0 - l[0], 1.0 - l[1])
                } else {
                    (l[0], l[1])
                };
                let x = [
                    verts[0][0] + (verts[1][0] - verts[0][0]) * q0 + (verts[2][0] - verts[0][0]) * q1,
                    verts[0][1] + (verts[1][1] - verts[0][1]) * q0 + (verts[2][1] - verts[0][1]) * q1,
                ];
                let vals = basis.eval(x);
                let rec: f64 = (0..basis.dim()).map(|i| coeff[i] * vals[i]).sum();
                assert!(
                    (rec - f(x)).abs() <= 1e-12 * scale.max(1.0),
                    "p = {p}: {rec} vs {}",
                    f(x)
                );
            }
        }
    }
}
