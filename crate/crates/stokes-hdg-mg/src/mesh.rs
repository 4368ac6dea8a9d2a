//! Triangular meshes on the unit square and their uniform refinement.
//!
//! The initial mesh has 16 congruent triangles generated by the lines
//! x = 1/2, y = 1/2, y = x, y = 1 - x and the midpoint diamond
//! |x - 1/2| + |y - 1/2| = 1/2. Refinement is "red": every triangle is split
//! into four by connecting edge midpoints, so all coordinates stay dyadic and
//! comparisons of vertex positions are exact in binary floating point.
//!
//! Faces on the bottom edge y = 0 are Neumann, all other boundary faces are
//! Dirichlet. Interior and Neumann faces carry trace unknowns.

use std::collections::BTreeMap;
use std::fmt::Write as _;

/// A mesh vertex. Coordinates lie in the closed unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vertex {
    pub x: f64,
    pub y: f64,
}

impl Vertex {
    pub fn pos(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

/// Classification of a face relative to the boundary decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// An edge of the triangulation.
///
/// `vertices` is stored sorted ascending; the face's parameter t in [0,1]
/// runs from `vertices[0]` to `vertices[1]`, which makes trace degrees of
/// freedom globally unique without orientation flags.
#[derive(Clone, Debug)]
pub struct Face {
    pub vertices: [usize; 2],
    /// Adjacent triangles: boundary faces have one, interior faces two.
    pub cells: Vec<usize>,
    pub kind: FaceKind,
    pub length: f64,
}

/// A triangle, oriented counterclockwise.
///
/// `faces[i]` is the face opposite `vertices[i]`, i.e. it connects
/// `vertices[(i+1)%3]` and `vertices[(i+2)%3]`.
#[derive(Clone, Debug)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub faces: [usize; 3],
    /// Local index in {0,1,2} of the single stabilized face F*. Chosen as the
    /// face with the largest global face id; the condensed system does not
    /// depend on this choice.
    pub star_face: usize,
    pub parent: Option<usize>,
    pub children: Option<[usize; 4]>,
}

/// One level of the mesh hierarchy.
#[derive(Clone, Debug)]
pub struct MeshLevel {
    /// Level number, starting at 1 for the initial mesh.
    pub level: usize,
    pub vertices: Vec<Vertex>,
    pub triangles: Vec<Triangle>,
    pub faces: Vec<Face>,
    /// Maximum face length.
    pub h: f64,
}

/// Where a fine face sits relative to the coarser level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceParent {
    /// One of the two halves of a coarse face; `half` 0 contains the coarse
    /// face's first (lower-id) endpoint.
    Half { coarse_face: usize, half: u8 },
    /// One of the three new faces interior to a coarse triangle.
    CellInterior { coarse_cell: usize },
}

/// Where a fine vertex comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexOrigin {
    /// Same vertex already present on the coarser level.
    Coarse(usize),
    /// Midpoint of a coarse face.
    FaceMidpoint(usize),
}

/// A nested sequence of uniformly refined meshes plus the parent/child maps
/// connecting consecutive levels.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    /// Levels 1..=L; `levels[0]` is the initial mesh.
    pub levels: Vec<MeshLevel>,
    /// `face_parents[k][f]` locates face `f` of `levels[k+1]` on `levels[k]`.
    pub face_parents: Vec<Vec<FaceParent>>,
    /// `vertex_origins[k][v]` locates vertex `v` of `levels[k+1]` on `levels[k]`.
    pub vertex_origins: Vec<Vec<VertexOrigin>>,
}

impl MeshHierarchy {
    /// Builds levels 1..=`max_level` by repeated red refinement.
    pub fn build(max_level: usize) -> Self {
        assert!(max_level >= 1);
        let mut levels = vec![initial_mesh()];
        let mut face_parents = Vec::new();
        let mut vertex_origins = Vec::new();
        for _ in 1..max_level {
            let (fine, fp, vo) = refine(levels.last().unwrap());
            levels.push(fine);
            face_parents.push(fp);
            vertex_origins.push(vo);
        }
        Self {
            levels,
            face_parents,
            vertex_origins,
        }
    }

    /// Mesh of the given level number (1-based).
    pub fn level(&self, level: usize) -> &MeshLevel {
        &self.levels[level - 1]
    }

    pub fn max_level(&self) -> usize {
        self.levels.len()
    }
}

impl MeshLevel {
    pub fn signed_area(&self, tri: usize) -> f64 {
        let t = &self.triangles[tri];
        let a = self.vertices[t.vertices[0]];
        let b = self.vertices[t.vertices[1]];
        let c = self.vertices[t.vertices[2]];
        0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
    }

    pub fn triangle_vertices(&self, tri: usize) -> [[f64; 2]; 3] {
        let t = &self.triangles[tri];
        [
            self.vertices[t.vertices[0]].pos(),
            self.vertices[t.vertices[1]].pos(),
            self.vertices[t.vertices[2]].pos(),
        ]
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.kind != FaceKind::Interior).count()
    }

    /// Faces incident to each vertex, in ascending face order.
    pub fn vertex_face_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (fid, f) in self.faces.iter().enumerate() {
            adj[f.vertices[0]].push(fid);
            adj[f.vertices[1]].push(fid);
        }
        adj
    }

    /// Checks the level invariants and reports all violations found.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (i, _) in self.triangles.iter().enumerate() {
            if self.signed_area(i) <= 0.0 {
                violations.push(format!("triangle {i} is not counterclockwise"));
            }
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if !(0.0..=1.0).contains(&v.x) || !(0.0..=1.0).contains(&v.y) {
                violations.push(format!("vertex {i} lies outside the unit square"));
            }
        }
        for (i, f) in self.faces.iter().enumerate() {
            match (f.cells.len(), f.kind) {
                (1, FaceKind::Interior) => {
                    violations.push(format!("face {i} is interior but has one cell"))
                }
                (2, FaceKind::Dirichlet) | (2, FaceKind::Neumann) => {
                    violations.push(format!("face {i} is boundary-kind but has two cells"))
                }
                (1, _) | (2, _) => {}
                (n, _) => violations.push(format!("face {i} has {n} adjacent cells")),
            }
            if f.kind == FaceKind::Neumann {
                let on_bottom = self.vertices[f.vertices[0]].y == 0.0
                    && self.vertices[f.vertices[1]].y == 0.0;
                if !on_bottom {
                    violations.push(format!("face {i} is Neumann but not on y = 0"));
                }
            }
        }
        for (i, t) in self.triangles.iter().enumerate() {
            for (k, &fid) in t.faces.iter().enumerate() {
                let (a, b) = (t.vertices[(k + 1) % 3], t.vertices[(k + 2) % 3]);
                let mut pair = [a, b];
                pair.sort_unstable();
                if self.faces[fid].vertices != pair {
                    violations.push(format!("triangle {i} face {k} does not match face {fid}"));
                }
            }
            if t.star_face > 2 {
                violations.push(format!("triangle {i} has invalid star face index"));
            }
        }
        let n = self.triangles.len();
        let b = self.n_boundary_faces();
        if 2 * self.faces.len() != 3 * n + b {
            violations.push(format!(
                "face count {} violates (3N + B)/2 with N = {n}, B = {b}",
                self.faces.len()
            ));
        }
        ValidationReport { violations }
    }

    /// Text dump, one record per entity: `v x y`, `t v0 v1 v2`, `f v0 v1 kind`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            writeln!(out, "v {} {}", v.x, v.y).unwrap();
        }
        for t in &self.triangles {
            writeln!(out, "t {} {} {}", t.vertices[0], t.vertices[1], t.vertices[2]).unwrap();
        }
        for f in &self.faces {
            let kind = match f.kind {
                FaceKind::Interior => "interior",
                FaceKind::Dirichlet => "dirichlet",
                FaceKind::Neumann => "neumann",
            };
            writeln!(out, "f {} {} {}", f.vertices[0], f.vertices[1], kind).unwrap();
        }
        out
    }
}

/// Result of [`MeshLevel::validate`]. Empty means valid.
#[derive(Debug)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn face_len(a: Vertex, b: Vertex) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// Helper that assigns face ids on first use of a sorted vertex pair.
struct FaceRegistry {
    map: BTreeMap<[usize; 2], usize>,
    faces: Vec<Face>,
}

impl FaceRegistry {
    fn new() -> Self {
        Self {
            map: BTreeMap::new(),
            faces: Vec::new(),
        }
    }

    fn get_or_insert(&mut self, a: usize, b: usize, vertices: &[Vertex]) -> usize {
        let mut key = [a, b];
        key.sort_unstable();
        *self.map.entry(key).or_insert_with(|| {
            let id = self.faces.len();
            self.faces.push(Face {
                vertices: key,
                cells: Vec::new(),
                kind: FaceKind::Interior,
                length: face_len(vertices[key[0]], vertices[key[1]]),
            });
            id
        })
    }
}

fn finish_level(
    level: usize,
    vertices: Vec<Vertex>,
    tri_vertices: Vec<[usize; 3]>,
    mut registry: FaceRegistry,
    parents: Option<&[usize]>,
) -> MeshLevel {
    let mut triangles = Vec::with_capacity(tri_vertices.len());
    for (i, vs) in tri_vertices.iter().enumerate() {
        let faces = [
            registry.get_or_insert(vs[1], vs[2], &vertices),
            registry.get_or_insert(vs[2], vs[0], &vertices),
            registry.get_or_insert(vs[0], vs[1], &vertices),
        ];
        for &fid in &faces {
            registry.faces[fid].cells.push(i);
        }
        let star_face = (0..3).max_by_key(|&k| faces[k]).unwrap();
        triangles.push(Triangle {
            vertices: *vs,
            faces,
            star_face,
            parent: parents.map(|p| p[i]),
            children: None,
        });
    }
    let mut faces = registry.faces;
    for f in faces.iter_mut() {
        if f.cells.len() == 1 {
            let bottom =
                vertices[f.vertices[0]].y == 0.0 && vertices[f.vertices[1]].y == 0.0;
            f.kind = if bottom { FaceKind::Neumann } else { FaceKind::Dirichlet };
        }
    }
    let h = faces.iter().map(|f| f.length).fold(0.0, f64::max);
    MeshLevel {
        level,
        vertices,
        triangles,
        faces,
        h,
    }
}

/// The 16-triangle level-1 mesh of the unit square.
pub fn initial_mesh() -> MeshLevel {
    let v = |x: f64, y: f64| Vertex { x, y };
    let vertices = vec![
        v(0.0, 0.0),   // 0
        v(0.5, 0.0),   // 1
        v(1.0, 0.0),   // 2
        v(0.0, 0.5),   // 3
        v(0.5, 0.5),   // 4
        v(1.0, 0.5),   // 5
        v(0.0, 1.0),   // 6
        v(0.5, 1.0),   // 7
        v(1.0, 1.0),   // 8
        v(0.25, 0.25), // 9
        v(0.75, 0.25), // 10
        v(0.75, 0.75), // 11
        v(0.25, 0.75), // 12
    ];
    // Each quadrant of the square is split into four triangles around its
    // diamond vertex; corners listed counterclockwise.
    let quadrants: [([usize; 4], usize); 4] = [
        ([0, 1, 4, 3], 9),
        ([1, 2, 5, 4], 10),
        ([4, 5, 8, 7], 11),
        ([3, 4, 7, 6], 12),
    ];
    let mut tri_vertices = Vec::with_capacity(16);
    for (corners, center) in quadrants {
        for k in 0..4 {
            tri_vertices.push([corners[k], corners[(k + 1) % 4], center]);
        }
    }
    finish_level(1, vertices, tri_vertices, FaceRegistry::new(), None)
}

/// Red refinement: each triangle is split into four by connecting edge
/// midpoints, each coarse face into two halves inheriting its kind.
///
/// Also returns, for every fine face and vertex, its location relative to the
/// coarse level.
pub fn refine(coarse: &MeshLevel) -> (MeshLevel, Vec<FaceParent>, Vec<VertexOrigin>) {
    let ncv = coarse.vertices.len();
    let mut vertices = coarse.vertices.clone();
    let mut vertex_origins: Vec<VertexOrigin> =
        (0..ncv).map(VertexOrigin::Coarse).collect();
    // Midpoint vertex of coarse face f gets id ncv + f.
    for (fid, f) in coarse.faces.iter().enumerate() {
        let a = coarse.vertices[f.vertices[0]];
        let b = coarse.vertices[f.vertices[1]];
        vertices.push(Vertex {
            x: 0.5 * (a.x + b.x),
            y: 0.5 * (a.y + b.y),
        });
        vertex_origins.push(VertexOrigin::FaceMidpoint(fid));
    }

    // Child faces of coarse faces come first so their ids are 2f and 2f+1;
    // the three interior faces of triangle t follow at 2F + 3t + k.
    let mut registry = FaceRegistry::new();
    let mut face_parents = Vec::new();
    for (fid, f) in coarse.faces.iter().enumerate() {
        let m = ncv + fid;
        let h0 = registry.get_or_insert(f.vertices[0], m, &vertices);
        let h1 = registry.get_or_insert(f.vertices[1], m, &vertices);
        debug_assert_eq!(h0, 2 * fid);
        debug_assert_eq!(h1, 2 * fid + 1);
        face_parents.push(FaceParent::Half { coarse_face: fid, half: 0 });
        face_parents.push(FaceParent::Half { coarse_face: fid, half: 1 });
    }
    for (tid, t) in coarse.triangles.iter().enumerate() {
        let m = [ncv + t.faces[0], ncv + t.faces[1], ncv + t.faces[2]];
        registry.get_or_insert(m[1], m[2], &vertices);
        registry.get_or_insert(m[2], m[0], &vertices);
        registry.get_or_insert(m[0], m[1], &vertices);
        for _ in 0..3 {
            face_parents.push(FaceParent::CellInterior { coarse_cell: tid });
        }
    }
    debug_assert_eq!(face_parents.len(), registry.faces.len());

    // Children of triangle t get ids 4t..4t+3: three corner children and the
    // middle one; midpoint m[i] sits on the face opposite vertex i.
    let mut tri_vertices = Vec::with_capacity(4 * coarse.triangles.len());
    let mut parents = Vec::with_capacity(4 * coarse.triangles.len());
    for (tid, t) in coarse.triangles.iter().enumerate() {
        let [v0, v1, v2] = t.vertices;
        let m = [ncv + t.faces[0], ncv + t.faces[1], ncv + t.faces[2]];
        tri_vertices.push([v0, m[2], m[1]]);
        tri_vertices.push([v1, m[0], m[2]]);
        tri_vertices.push([v2, m[1], m[0]]);
        tri_vertices.push([m[0], m[1], m[2]]);
        parents.extend_from_slice(&[tid; 4]);
    }

    let mut fine = finish_level(
        coarse.level + 1,
        vertices,
        tri_vertices,
        registry,
        Some(&parents),
    );
    // Inherit boundary kinds exactly; the geometric classification in
    // finish_level already agrees, but the parent map is authoritative.
    for (fid, fp) in face_parents.iter().enumerate() {
        if let FaceParent::Half { coarse_face, .. } = fp {
            if coarse.faces[*coarse_face].kind != FaceKind::Interior {
                fine.faces[fid].kind = coarse.faces[*coarse_face].kind;
            }
        }
    }
    (fine, face_parents, vertex_origins)
}

/// Records children on the coarse level. Done outside `refine` so the coarse
/// level can stay immutable in a hierarchy built level by level.
pub fn link_children(coarse: &mut MeshLevel, fine: &MeshLevel) {
    for (cid, t) in coarse.triangles.iter_mut().enumerate() {
        let base = 4 * cid;
        t.children = Some([base, base + 1, base + 2, base + 3]);
        debug_assert!(fine.triangles[base].parent == Some(cid));
    }
}
