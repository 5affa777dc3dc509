//! Oriented simplicial meshes of model manifolds.
//!
//! The generators produce flat tori (cycle graph, diagonal-split grid,
//! Freudenthal split) and icospheres. Simplices are stored with sorted
//! vertex indices; incidence signs follow the alternating-face rule, which
//! makes the chain-complex identity checkable exactly in integers.

use crate::sparse::{CooBuilder, CsrMatrix, IntCsr};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("resolution {0} too small: periodic identification needs at least 3 per axis")]
    ResolutionTooSmall(usize),
    #[error("dimension {0} unsupported: model manifolds have dimension 1..=3")]
    UnsupportedDimension(usize),
    #[error("subdivision level {0} exceeds cap {1}")]
    SubdivisionTooDeep(usize, usize),
    #[error("degree {degree} out of range for a {dim}-complex")]
    DegreeOutOfRange { degree: usize, dim: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh file malformed: {0}")]
    Malformed(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// The model manifolds this toolkit knows how to generate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    #[serde(rename = "torus1d")]
    Torus1d,
    #[serde(rename = "torus2d")]
    Torus2d,
    #[serde(rename = "torus3d")]
    Torus3d,
    #[serde(rename = "sphere2")]
    Sphere2,
}

impl ManifoldKind {
    pub fn torus(dim: usize) -> Option<Self> {
        match dim {
            1 => Some(Self::Torus1d),
            2 => Some(Self::Torus2d),
            3 => Some(Self::Torus3d),
            _ => None,
        }
    }

    pub fn is_torus(&self) -> bool {
        !matches!(self, Self::Sphere2)
    }

    /// Euler characteristic of the underlying manifold.
    pub fn euler_characteristic(&self) -> i64 {
        match self {
            Self::Sphere2 => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Torus1d => "torus1d",
            Self::Torus2d => "torus2d",
            Self::Torus3d => "torus3d",
            Self::Sphere2 => "sphere2",
        };
        f.write_str(s)
    }
}

/// Geometric data of the manifold a mesh approximates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldMetadata {
    pub name: ManifoldKind,
    pub volume: f64,
    pub diameter: f64,
    pub curvature_bound: f64,
}

/// Oriented simplicial mesh with per-degree simplex lists.
///
/// Immutable after construction; shared read access is safe.
#[derive(Clone, Debug)]
pub struct SimplicialComplex {
    dim: usize,
    coord_dim: usize,
    coords: Vec<f64>,
    /// `simplices[p]` holds (p+1)-tuples flattened, in generation order.
    simplices: Vec<Vec<usize>>,
    /// sorted-tuple -> index map per degree, for face lookups
    lookup: Vec<HashMap<Vec<usize>, usize>>,
    metadata: ManifoldMetadata,
    /// wrap period for flat tori (None for embedded meshes)
    period: Option<f64>,
}

impl SimplicialComplex {
    /// Assemble a complex from top-dimensional cells; all lower-degree
    /// simplex lists are derived in deterministic (first-seen) order.
    pub fn from_cells(
        dim: usize,
        coord_dim: usize,
        coords: Vec<f64>,
        top_cells: Vec<usize>,
        metadata: ManifoldMetadata,
        period: Option<f64>,
    ) -> Self {
        assert_eq!(coords.len() % coord_dim, 0);
        assert_eq!(top_cells.len() % (dim + 1), 0);
        let n_vertices = coords.len() / coord_dim;
        let mut simplices: Vec<Vec<usize>> = vec![Vec::new(); dim + 1];
        simplices[0] = (0..n_vertices).collect();
        let mut top = top_cells;
        for cell in top.chunks_exact_mut(dim + 1) {
            cell.sort_unstable();
        }
        simplices[dim] = top;
        // derive each lower degree from the one above
        for p in (1..dim).rev() {
            let upper = simplices[p + 1].clone();
            let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut list = Vec::new();
            for s in upper.chunks_exact(p + 2) {
                for skip in 0..=p + 1 {
                    let face: Vec<usize> = s
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    if !seen.contains_key(&face) {
                        seen.insert(face.clone(), list.len() / (p + 1));
                        list.extend_from_slice(&face);
                    }
                }
            }
            simplices[p] = list;
        }
        let mut complex = Self {
            dim,
            coord_dim,
            coords,
            simplices,
            lookup: Vec::new(),
            metadata,
            period,
        };
        complex.rebuild_lookup();
        complex
    }

    /// Rebuild a complex from explicit per-degree lists (mesh file loading).
    pub fn from_parts(
        dim: usize,
        coord_dim: usize,
        coords: Vec<f64>,
        simplices: Vec<Vec<usize>>,
        metadata: ManifoldMetadata,
    ) -> Self {
        let period = if metadata.name.is_torus() {
            Some(metadata.volume.powf(1.0 / dim as f64))
        } else {
            None
        };
        let mut complex = Self {
            dim,
            coord_dim,
            coords,
            simplices,
            lookup: Vec::new(),
            metadata,
            period,
        };
        complex.rebuild_lookup();
        complex
    }

    fn rebuild_lookup(&mut self) {
        self.lookup = (0..=self.dim)
            .map(|p| {
                let mut map = HashMap::new();
                for (i, s) in self.simplices[p].chunks_exact(p + 1).enumerate() {
                    let mut key = s.to_vec();
                    key.sort_unstable();
                    map.insert(key, i);
                }
                map
            })
            .collect();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    pub fn metadata(&self) -> &ManifoldMetadata {
        &self.metadata
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len() / self.coord_dim
    }

    pub fn simplex_count(&self, p: usize) -> usize {
        self.simplices[p].len() / (p + 1)
    }

    pub fn simplex(&self, p: usize, i: usize) -> &[usize] {
        &self.simplices[p][i * (p + 1)..(i + 1) * (p + 1)]
    }

    pub fn simplices(&self, p: usize) -> impl Iterator<Item = &[usize]> {
        self.simplices[p].chunks_exact(p + 1)
    }

    pub fn simplex_index(&self, p: usize, sorted_tuple: &[usize]) -> Option<usize> {
        self.lookup[p].get(sorted_tuple).copied()
    }

    pub fn vertex(&self, i: usize) -> Vector3<f64> {
        let mut v = Vector3::zeros();
        for k in 0..self.coord_dim {
            v[k] = self.coords[i * self.coord_dim + k];
        }
        v
    }

    /// Displacement from vertex `a` to vertex `b`, wrapped per component to
    /// the minimum image on periodic meshes.
    pub fn displacement(&self, a: usize, b: usize) -> Vector3<f64> {
        let mut d = self.vertex(b) - self.vertex(a);
        if let Some(period) = self.period {
            for k in 0..self.coord_dim {
                d[k] -= period * (d[k] / period).round();
            }
        }
        d
    }

    /// Positions of a simplex's vertices relative to its first vertex,
    /// unwrapped on periodic meshes. Entry 0 is always zero.
    pub fn local_positions(&self, p: usize, i: usize) -> Vec<Vector3<f64>> {
        let s = self.simplex(p, i);
        s.iter().map(|&v| self.displacement(s[0], v)).collect()
    }

    /// Unsigned p-volume via the Gram determinant.
    pub fn simplex_volume(&self, p: usize, i: usize) -> f64 {
        if p == 0 {
            return 1.0;
        }
        let pts = self.local_positions(p, i);
        simplex_volume_from_points(&pts)
    }

    pub fn volumes(&self, p: usize) -> Vec<f64> {
        (0..self.simplex_count(p))
            .map(|i| self.simplex_volume(p, i))
            .collect()
    }

    /// Alternating sum of simplex counts.
    pub fn euler_characteristic(&self) -> i64 {
        (0..=self.dim)
            .map(|p| {
                let c = self.simplex_count(p) as i64;
                if p % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .sum()
    }

    /// Signed incidence triplets of the boundary operator taking p-chains to
    /// (p-1)-chains. Signs are the alternating-face rule applied by position
    /// to the stored tuple; faces are matched by sorted vertex set.
    pub fn boundary_triplets(&self, p: usize) -> Result<Vec<(u32, u32, i8)>, ComplexError> {
        if p == 0 || p > self.dim {
            return Err(ComplexError::DegreeOutOfRange {
                degree: p,
                dim: self.dim,
            });
        }
        let mut triplets = Vec::with_capacity(self.simplex_count(p) * (p + 1));
        for (i, s) in self.simplices(p).enumerate() {
            for skip in 0..=p {
                let mut face: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != skip)
                    .map(|(_, &v)| v)
                    .collect();
                face.sort_unstable();
                let row = self.lookup[p - 1]
                    .get(&face)
                    .copied()
                    .unwrap_or_else(|| panic!("face of simplex {i} missing from degree {}", p - 1));
                let sign = if skip % 2 == 0 { 1 } else { -1 };
                triplets.push((row as u32, i as u32, sign));
            }
        }
        Ok(triplets)
    }

    pub fn boundary_int(&self, p: usize) -> Result<IntCsr, ComplexError> {
        let t = self.boundary_triplets(p)?;
        Ok(IntCsr::from_triplets(
            self.simplex_count(p - 1),
            self.simplex_count(p),
            t.into_iter().map(|(r, c, s)| (r, c, s as i64)).collect(),
        ))
    }

    pub fn save_json(&self, path: &Path) -> Result<(), ComplexError> {
        let file = MeshFile::from_complex(self);
        let text = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, ComplexError> {
        let text = std::fs::read_to_string(path)?;
        let file: MeshFile = serde_json::from_str(&text)?;
        file.into_complex()
    }
}

pub(crate) fn simplex_volume_from_points(pts: &[Vector3<f64>]) -> f64 {
    let p = pts.len() - 1;
    match p {
        0 => 1.0,
        1 => (pts[1] - pts[0]).norm(),
        _ => {
            let edges: Vec<Vector3<f64>> = (1..=p).map(|i| pts[i] - pts[0]).collect();
            let mut gram = nalgebra::DMatrix::zeros(p, p);
            for i in 0..p {
                for j in 0..p {
                    gram[(i, j)] = edges[i].dot(&edges[j]);
                }
            }
            let factorial: f64 = (1..=p).map(|i| i as f64).product();
            gram.determinant().max(0.0).sqrt() / factorial
        }
    }
}

/// Mesh file schema.
#[derive(Serialize, Deserialize)]
struct MeshFile {
    dim: usize,
    metadata: ManifoldMetadata,
    vertices: Vec<Vec<f64>>,
    simplices: BTreeMap<String, Vec<Vec<usize>>>,
}

impl MeshFile {
    fn from_complex(c: &SimplicialComplex) -> Self {
        let vertices = (0..c.vertex_count())
            .map(|i| c.coords[i * c.coord_dim..(i + 1) * c.coord_dim].to_vec())
            .collect();
        let mut simplices = BTreeMap::new();
        for p in 1..=c.dim {
            simplices.insert(p.to_string(), c.simplices(p).map(|s| s.to_vec()).collect());
        }
        Self {
            dim: c.dim,
            metadata: c.metadata.clone(),
            vertices,
            simplices,
        }
    }

    fn into_complex(self) -> Result<SimplicialComplex, ComplexError> {
        if self.vertices.is_empty() {
            return Err(ComplexError::Malformed("no vertices".into()));
        }
        let coord_dim = self.vertices[0].len();
        let mut coords = Vec::with_capacity(self.vertices.len() * coord_dim);
        for v in &self.vertices {
            if v.len() != coord_dim {
                return Err(ComplexError::Malformed(
                    "inconsistent vertex coordinate lengths".into(),
                ));
            }
            coords.extend_from_slice(v);
        }
        let n_vertices = self.vertices.len();
        let mut simplices: Vec<Vec<usize>> = vec![Vec::new(); self.dim + 1];
        simplices[0] = (0..n_vertices).collect();
        for p in 1..=self.dim {
            let list = self
                .simplices
                .get(&p.to_string())
                .ok_or_else(|| ComplexError::Malformed(format!("missing degree {p} simplices")))?;
            let mut flat = Vec::with_capacity(list.len() * (p + 1));
            for s in list {
                if s.len() != p + 1 {
                    return Err(ComplexError::Malformed(format!(
                        "degree {p} tuple of length {}",
                        s.len()
                    )));
                }
                flat.extend_from_slice(s);
            }
            simplices[p] = flat;
        }
        Ok(SimplicialComplex::from_parts(
            self.dim,
            coord_dim,
            coords,
            simplices,
            self.metadata,
        ))
    }
}

/// Triangulated flat torus `(R / period Z)^dim`.
///
/// dim 1 is a cycle graph, dim 2 a diagonal-split grid, dim 3 the
/// Freudenthal (six tetrahedra per cube) split.
pub fn generate_flat_torus(
    dim: usize,
    resolution: usize,
    period: f64,
) -> Result<SimplicialComplex, ComplexError> {
    if !(1..=3).contains(&dim) {
        return Err(ComplexError::UnsupportedDimension(dim));
    }
    if resolution < 3 {
        return Err(ComplexError::ResolutionTooSmall(resolution));
    }
    assert!(period > 0.0);
    let n = resolution;
    let h = period / n as f64;
    let kind = ManifoldKind::torus(dim).unwrap();
    let metadata = ManifoldMetadata {
        name: kind,
        volume: period.powi(dim as i32),
        diameter: period * (dim as f64).sqrt() / 2.0,
        curvature_bound: 0.0,
    };

    let mut coords = Vec::new();
    let mut cells = Vec::new();
    match dim {
        1 => {
            for i in 0..n {
                coords.push(i as f64 * h);
            }
            for i in 0..n {
                cells.extend_from_slice(&[i, (i + 1) % n]);
            }
        }
        2 => {
            let idx = |x: usize, y: usize| (y % n) * n + (x % n);
            for y in 0..n {
                for x in 0..n {
                    coords.push(x as f64 * h);
                    coords.push(y as f64 * h);
                }
            }
            for y in 0..n {
                for x in 0..n {
                    let a = idx(x, y);
                    let b = idx(x + 1, y);
                    let c = idx(x, y + 1);
                    let d = idx(x + 1, y + 1);
                    // split along the a-d diagonal
                    cells.extend_from_slice(&[a, b, d]);
                    cells.extend_from_slice(&[a, d, c]);
                }
            }
        }
        3 => {
            let idx = |x: usize, y: usize, z: usize| ((z % n) * n + (y % n)) * n + (x % n);
            for z in 0..n {
                for y in 0..n {
                    for x in 0..n {
                        coords.push(x as f64 * h);
                        coords.push(y as f64 * h);
                        coords.push(z as f64 * h);
                    }
                }
            }
            // Freudenthal split: one tetrahedron per axis permutation,
            // each walking from the cube corner to the far corner
            const PERMS: [[usize; 3]; 6] = [
                [0, 1, 2],
                [0, 2, 1],
                [1, 0, 2],
                [1, 2, 0],
                [2, 0, 1],
                [2, 1, 0],
            ];
            for z in 0..n {
                for y in 0..n {
                    for x in 0..n {
                        for perm in PERMS {
                            let mut corner = [x, y, z];
                            let mut tet = [idx(corner[0], corner[1], corner[2]), 0, 0, 0];
                            for (step, &axis) in perm.iter().enumerate() {
                                corner[axis] += 1;
                                tet[step + 1] = idx(corner[0], corner[1], corner[2]);
                            }
                            cells.extend_from_slice(&tet);
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(SimplicialComplex::from_cells(
        dim,
        dim,
        coords,
        cells,
        metadata,
        Some(period),
    ))
}

/// Icosahedron subdivided `level` times with vertices projected to the unit
/// sphere. Metadata volume is the summed triangle area.
pub fn generate_icosphere(level: usize) -> Result<SimplicialComplex, ComplexError> {
    const MAX_LEVEL: usize = 8;
    if level > MAX_LEVEL {
        return Err(ComplexError::SubdivisionTooDeep(level, MAX_LEVEL));
    }
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = vec![
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ];
    for v in &mut vertices {
        v.normalize_mut();
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let mut mid = |i: usize, j: usize, verts: &mut Vec<Vector3<f64>>| {
                let key = (i.min(j), i.max(j));
                *midpoints.entry(key).or_insert_with(|| {
                    let m = (verts[i] + verts[j]).normalize();
                    verts.push(m);
                    verts.len() - 1
                })
            };
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            new_faces.push([a, ab, ca]);
            new_faces.push([b, bc, ab]);
            new_faces.push([c, ca, bc]);
            new_faces.push([ab, bc, ca]);
        }
        faces = new_faces;
    }

    let coords: Vec<f64> = vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
    let cells: Vec<usize> = faces.iter().flatten().copied().collect();
    let metadata = ManifoldMetadata {
        name: ManifoldKind::Sphere2,
        volume: 0.0, // filled in below from triangle areas
        diameter: std::f64::consts::PI,
        curvature_bound: 1.0,
    };
    let mut complex = SimplicialComplex::from_cells(2, 3, coords, cells, metadata, None);
    complex.metadata.volume = (0..complex.simplex_count(2))
        .map(|i| complex.simplex_volume(2, i))
        .sum();
    Ok(complex)
}

/// Outcome of the structural mesh checks.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub dd_zero: bool,
    pub closed_manifold: bool,
    pub tuples_canonical: bool,
    pub volume_consistent: bool,
    pub well_centered: bool,
    pub euler_characteristic: i64,
    pub min_quality: f64,
    pub min_volume: f64,
    pub violations: Vec<String>,
}

/// Structural checks: exact chain-complex identity, closed-manifold face
/// counts, simplex quality, and circumcenter containment. Violations are
/// reported, not raised.
pub fn validate(complex: &SimplicialComplex) -> ValidationReport {
    let dim = complex.dim();
    let mut violations = Vec::new();

    // tuples sorted, distinct, in range
    let mut tuples_canonical = true;
    let n_vertices = complex.vertex_count();
    for p in 1..=dim {
        for (i, s) in complex.simplices(p).enumerate() {
            let sorted = s.windows(2).all(|w| w[0] < w[1]);
            let in_range = s.iter().all(|&v| v < n_vertices);
            if !sorted || !in_range {
                tuples_canonical = false;
                violations.push(format!("degree {p} simplex {i} has a non-canonical tuple"));
            }
        }
    }

    // exact integer chain-complex identity
    let mut dd_zero = true;
    for p in 2..=dim {
        let lower = complex.boundary_int(p - 1).expect("degree in range");
        let upper = complex.boundary_int(p).expect("degree in range");
        let prod = lower.matmul(&upper);
        if !prod.is_zero() {
            dd_zero = false;
            violations.push(format!(
                "boundary composition at degree {p} has max |entry| {}",
                prod.max_abs()
            ));
        }
    }

    // each (n-1)-simplex must bound exactly two n-simplices
    let mut closed_manifold = true;
    if dim >= 1 {
        let mut counts = vec![0usize; complex.simplex_count(dim - 1)];
        for s in complex.simplices(dim) {
            for skip in 0..=dim {
                let mut face: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != skip)
                    .map(|(_, &v)| v)
                    .collect();
                face.sort_unstable();
                if let Some(f) = complex.simplex_index(dim - 1, &face) {
                    counts[f] += 1;
                }
            }
        }
        for (f, &c) in counts.iter().enumerate() {
            if c != 2 {
                closed_manifold = false;
                violations.push(format!(
                    "degree {} simplex {f} bounds {c} top simplices (want 2)",
                    dim - 1
                ));
                if violations.len() > 32 {
                    break;
                }
            }
        }
    }

    // volumes and quality
    let volumes = complex.volumes(dim);
    let total: f64 = volumes.iter().sum();
    let min_volume = volumes.iter().cloned().fold(f64::INFINITY, f64::min);
    let volume_consistent = if complex.metadata().name.is_torus() {
        (total - complex.metadata().volume).abs() <= 1e-12 * complex.metadata().volume
    } else {
        (total - complex.metadata().volume).abs() <= 1e-9 * complex.metadata().volume
    };
    if !volume_consistent {
        violations.push(format!(
            "summed volume {total} not consistent with metadata {}",
            complex.metadata().volume
        ));
    }

    let mut min_quality = f64::INFINITY;
    for i in 0..complex.simplex_count(dim) {
        min_quality = min_quality.min(simplex_quality(complex, i));
    }

    // circumcenters contained in their (closed) simplices, degrees >= 2
    let mut well_centered = true;
    'outer: for p in 2..=dim {
        for i in 0..complex.simplex_count(p) {
            let pts = complex.local_positions(p, i);
            if let Some(bary) = circumcenter_barycentric(&pts) {
                if bary.iter().any(|&b| b < -1e-10) {
                    well_centered = false;
                    violations.push(format!(
                        "degree {p} simplex {i} does not contain its circumcenter"
                    ));
                    break 'outer;
                }
            } else {
                well_centered = false;
                violations.push(format!("degree {p} simplex {i} is degenerate"));
                break 'outer;
            }
        }
    }

    let pass = dd_zero && closed_manifold && tuples_canonical && volume_consistent;
    ValidationReport {
        pass,
        dd_zero,
        closed_manifold,
        tuples_canonical,
        volume_consistent,
        well_centered,
        euler_characteristic: complex.euler_characteristic(),
        min_quality,
        min_volume,
        violations,
    }
}

/// Shape quality of a top simplex: minimum interior angle for triangles,
/// normalized volume-to-edge ratio otherwise.
fn simplex_quality(complex: &SimplicialComplex, i: usize) -> f64 {
    let dim = complex.dim();
    let pts = complex.local_positions(dim, i);
    match dim {
        1 => 1.0,
        2 => {
            let mut min_angle = f64::INFINITY;
            for k in 0..3 {
                let a = pts[k];
                let b = pts[(k + 1) % 3];
                let c = pts[(k + 2) % 3];
                let u = b - a;
                let v = c - a;
                let cosang = u.dot(&v) / (u.norm() * v.norm());
                min_angle = min_angle.min(cosang.clamp(-1.0, 1.0).acos());
            }
            min_angle
        }
        _ => {
            let vol = simplex_volume_from_points(&pts);
            let mut max_edge: f64 = 0.0;
            for a in 0..pts.len() {
                for b in a + 1..pts.len() {
                    max_edge = max_edge.max((pts[b] - pts[a]).norm());
                }
            }
            // regular tetrahedron of unit edge has volume sqrt(2)/12
            vol / (max_edge.powi(3) * std::f64::consts::SQRT_2 / 12.0)
        }
    }
}

/// Circumcenter of a simplex in barycentric coordinates, or None when the
/// simplex is numerically degenerate.
pub(crate) fn circumcenter_barycentric(pts: &[Vector3<f64>]) -> Option<Vec<f64>> {
    let k = pts.len() - 1;
    if k == 0 {
        return Some(vec![1.0]);
    }
    let edges: Vec<Vector3<f64>> = (1..=k).map(|i| pts[i] - pts[0]).collect();
    let mut gram = nalgebra::DMatrix::zeros(k, k);
    let mut rhs = nalgebra::DVector::zeros(k);
    for i in 0..k {
        rhs[i] = 0.5 * edges[i].norm_squared();
        for j in 0..k {
            gram[(i, j)] = edges[i].dot(&edges[j]);
        }
    }
    let beta = gram.lu().solve(&rhs)?;
    let mut bary = Vec::with_capacity(k + 1);
    bary.push(1.0 - beta.iter().sum::<f64>());
    bary.extend(beta.iter());
    Some(bary)
}

/// Circumcenter position in the local frame of `pts`.
pub(crate) fn circumcenter_point(pts: &[Vector3<f64>]) -> Option<Vector3<f64>> {
    let bary = circumcenter_barycentric(pts)?;
    let mut c = Vector3::zeros();
    for (b, p) in bary.iter().zip(pts) {
        c += *b * *p;
    }
    Some(c)
}

pub(crate) fn barycenter_point(pts: &[Vector3<f64>]) -> Vector3<f64> {
    let mut c = Vector3::zeros();
    for p in pts {
        c += *p;
    }
    c / pts.len() as f64
}

/// Signed incidence matrix taking p-chains to (p-1)-chains, entries in
/// {-1, 0, +1} stored as reals.
pub fn boundary_matrix(complex: &SimplicialComplex, p: usize) -> Result<CsrMatrix, ComplexError> {
    let triplets = complex.boundary_triplets(p)?;
    let mut b = CooBuilder::with_capacity(
        complex.simplex_count(p - 1),
        complex.simplex_count(p),
        triplets.len(),
    );
    for (r, c, s) in triplets {
        b.push(r as usize, c as usize, s as f64);
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_graph_counts() {
        let c = generate_flat_torus(1, 8, std::f64::consts::TAU).unwrap();
        assert_eq!(c.vertex_count(), 8);
        assert_eq!(c.simplex_count(1), 8);
        let total: f64 = c.volumes(1).iter().sum();
        assert!((total - std::f64::consts::TAU).abs() < 1e-12);
    }

    #[test]
    fn torus2d_counts_and_euler() {
        let c = generate_flat_torus(2, 4, std::f64::consts::TAU).unwrap();
        assert_eq!(c.vertex_count(), 16);
        assert_eq!(c.simplex_count(1), 48);
        assert_eq!(c.simplex_count(2), 32);
        assert_eq!(c.euler_characteristic(), 0);
    }

    #[test]
    fn torus3d_freudenthal_counts() {
        let c = generate_flat_torus(3, 4, std::f64::consts::TAU).unwrap();
        let n3 = 4usize.pow(3);
        assert_eq!(c.vertex_count(), n3);
        assert_eq!(c.simplex_count(3), 6 * n3);
        assert_eq!(c.simplex_count(2), 12 * n3);
        assert_eq!(c.simplex_count(1), 7 * n3);
        assert_eq!(c.euler_characteristic(), 0);
    }

    #[test]
    fn torus_volume_exact() {
        for dim in 1..=3 {
            let c = generate_flat_torus(dim, 5, 2.5).unwrap();
            let total: f64 = c.volumes(dim).iter().sum();
            let expect = 2.5f64.powi(dim as i32);
            assert!(
                (total - expect).abs() <= 1e-12 * expect,
                "dim {dim}: {total} vs {expect}"
            );
        }
    }

    #[test]
    fn rejects_small_resolution() {
        assert!(matches!(
            generate_flat_torus(2, 2, 1.0),
            Err(ComplexError::ResolutionTooSmall(2))
        ));
    }

    #[test]
    fn icosahedron_level0() {
        let c = generate_icosphere(0).unwrap();
        assert_eq!(c.vertex_count(), 12);
        assert_eq!(c.simplex_count(1), 30);
        assert_eq!(c.simplex_count(2), 20);
        assert_eq!(c.euler_characteristic(), 2);
    }

    #[test]
    fn icosphere_level3_vertices() {
        // 10 * 4^level + 2 vertices
        let c = generate_icosphere(3).unwrap();
        assert_eq!(c.vertex_count(), 10 * 4usize.pow(3) + 2);
        assert_eq!(c.euler_characteristic(), 2);
    }

    #[test]
    fn icosphere_level5_area_close_to_sphere() {
        let c = generate_icosphere(5).unwrap();
        let area = c.metadata().volume;
        let exact = 4.0 * std::f64::consts::PI;
        assert!((area - exact).abs() / exact < 1e-3, "area {area}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_flat_torus(3, 4, std::f64::consts::TAU).unwrap();
        let b = generate_flat_torus(3, 4, std::f64::consts::TAU).unwrap();
        assert_eq!(a.coords, b.coords);
        assert_eq!(a.simplices, b.simplices);
        let s1 = generate_icosphere(2).unwrap();
        let s2 = generate_icosphere(2).unwrap();
        assert_eq!(s1.coords, s2.coords);
        assert_eq!(s1.simplices, s2.simplices);
    }

    #[test]
    fn boundary_composition_is_zero() {
        for complex in [
            generate_flat_torus(2, 5, std::f64::consts::TAU).unwrap(),
            generate_flat_torus(3, 3, 1.0).unwrap(),
            generate_icosphere(1).unwrap(),
        ] {
            for p in 2..=complex.dim() {
                let prod = complex
                    .boundary_int(p - 1)
                    .unwrap()
                    .matmul(&complex.boundary_int(p).unwrap());
                assert!(prod.is_zero(), "dd != 0 at p={p}");
            }
        }
    }

    #[test]
    fn single_triangle_boundary_column() {
        // one triangle fixture under the sorted-tuple convention
        let metadata = ManifoldMetadata {
            name: ManifoldKind::Sphere2,
            volume: 0.5,
            diameter: 1.0,
            curvature_bound: 0.0,
        };
        let coords = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let c = SimplicialComplex::from_cells(2, 3, coords, vec![0, 1, 2], metadata, None);
        let b2 = boundary_matrix(&c, 2).unwrap().to_dense();
        // edges in derived order: (1,2), (0,2), (0,1); alternating signs
        let e12 = c.simplex_index(1, &[1, 2]).unwrap();
        let e02 = c.simplex_index(1, &[0, 2]).unwrap();
        let e01 = c.simplex_index(1, &[0, 1]).unwrap();
        assert_eq!(b2[(e12, 0)], 1.0);
        assert_eq!(b2[(e02, 0)], -1.0);
        assert_eq!(b2[(e01, 0)], 1.0);
    }

    #[test]
    fn validate_passes_on_generated_meshes() {
        let c = generate_flat_torus(2, 6, std::f64::consts::TAU).unwrap();
        let report = validate(&c);
        assert!(report.pass, "violations: {:?}", report.violations);
        assert!(report.dd_zero);
        assert_eq!(report.euler_characteristic, 0);
        // right triangles carry the circumcenter on the hypotenuse midpoint,
        // which still counts as (weakly) well-centered
        assert!(report.well_centered);

        let s = generate_icosphere(2).unwrap();
        let report = validate(&s);
        assert!(report.pass);
        assert!(report.well_centered);
        assert_eq!(report.euler_characteristic, 2);
    }

    #[test]
    fn validate_flags_flipped_triangle() {
        let mut c = generate_flat_torus(2, 4, std::f64::consts::TAU).unwrap();
        // reverse one stored triangle tuple: orientation is no longer canonical
        let s = c.simplices[2][0..3].to_vec();
        c.simplices[2][0] = s[1];
        c.simplices[2][1] = s[0];
        c.rebuild_lookup();
        let report = validate(&c);
        assert!(!report.pass);
        assert!(!report.dd_zero);
        assert!(!report.tuples_canonical);
    }

    #[test]
    fn mesh_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t2.json");
        let c = generate_flat_torus(2, 4, std::f64::consts::TAU).unwrap();
        c.save_json(&path).unwrap();
        let loaded = SimplicialComplex::load_json(&path).unwrap();
        assert_eq!(loaded.vertex_count(), c.vertex_count());
        assert_eq!(loaded.simplices, c.simplices);
        assert_eq!(loaded.metadata(), c.metadata());
        assert_eq!(loaded.period(), c.period());
    }
}
