//! Simplicial meshes of polytopal domains.
//!
//! Triangles in 2D and tetrahedra in 3D. Cells are stored positively
//! oriented; boundary facets carry an integer marker (0 = no-slip wall).
//! The text format read by [`Mesh::load`] and written by [`Mesh::save`]:
//!
//! ```text
//! nsvmesh <dim>
//! vertices <n>
//! <x> <y> [<z>]          (n lines)
//! cells <m>
//! <v0> <v1> <v2> [<v3>]  (m lines, 0-based)
//! boundary <k>
//! <marker> <v0> <v1> [<v2>]  (k lines)
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Spatial point; the third coordinate is zero for 2D meshes.
pub type Point = [f64; 3];

/// Axis-aligned box `[lower, upper]` in 2 or 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() || !(2..=3).contains(&lower.len()) {
            return Err(Error::invalid("box must have matching 2D or 3D corners"));
        }
        for (a, b) in lower.iter().zip(upper) {
            if !(b - a > 0.0) || !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid(format!("degenerate box extent [{a}, {b}]")));
            }
        }
        Ok(Self {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
        })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// Geometric quality figures reported for every mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    /// max over cells of `h_T / rho_T`, `rho_T` the inscribed-ball diameter.
    pub shape_regularity: f64,
    /// max over cells of `h / h_T`.
    pub quasi_uniformity: f64,
    pub volume: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    boundary: Vec<usize>,
    markers: Vec<i32>,
    volumes: Vec<f64>,
    diameters: Vec<f64>,
    h: f64,
    quality: MeshQuality,
}

impl Mesh {
    /// Builds a mesh from explicit data and checks every invariant: indices in
    /// range, positive cell volumes, and boundary facets matching the
    /// topological boundary exactly.
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        cells: Vec<Vec<usize>>,
        boundary: Vec<(i32, Vec<usize>)>,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::invalid(format!("unsupported dimension {dim}")));
        }
        let nv = dim + 1;
        let mut flat = Vec::with_capacity(cells.len() * nv);
        for (k, c) in cells.iter().enumerate() {
            if c.len() != nv {
                return Err(Error::Topology {
                    cell: k,
                    message: format!("expected {nv} vertices, got {}", c.len()),
                });
            }
            if let Some(&v) = c.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Topology {
                    cell: k,
                    message: format!("vertex index {v} out of range"),
                });
            }
            flat.extend_from_slice(c);
        }
        let mut bflat = Vec::with_capacity(boundary.len() * dim);
        let mut markers = Vec::with_capacity(boundary.len());
        for (i, (m, f)) in boundary.iter().enumerate() {
            if f.len() != dim || f.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::invalid(format!("malformed boundary facet {i}")));
            }
            bflat.extend_from_slice(f);
            markers.push(*m);
        }
        Self::from_flat(dim, vertices, flat, bflat, markers)
    }

    /// Builds a mesh whose boundary facets are detected from the cell
    /// topology and tagged with marker 0. Negatively oriented cells are
    /// fixed by swapping their last two vertices.
    pub fn from_cells(dim: usize, vertices: Vec<Point>, cells: Vec<usize>) -> Result<Self> {
        let nv = dim + 1;
        let mut cells = cells;
        for c in cells.chunks_mut(nv) {
            if signed_volume(dim, &vertices, c) < 0.0 {
                c.swap(dim - 1, dim);
            }
        }
        let faces = facet_counts(dim, &cells);
        let mut boundary = Vec::new();
        let mut keys: Vec<_> = faces
            .iter()
            .filter(|(_, v)| v.0 == 1)
            .map(|(_, v)| v.1.clone())
            .collect();
        keys.sort();
        for f in &keys {
            boundary.extend_from_slice(f);
        }
        let markers = vec![0; keys.len()];
        Self::from_flat(dim, vertices, cells, boundary, markers)
    }

    fn from_flat(
        dim: usize,
        vertices: Vec<Point>,
        cells: Vec<usize>,
        boundary: Vec<usize>,
        markers: Vec<i32>,
    ) -> Result<Self> {
        let nv = dim + 1;
        if cells.is_empty() {
            return Err(Error::invalid("mesh has no cells"));
        }
        let mut volumes = Vec::with_capacity(cells.len() / nv);
        let mut diameters = Vec::with_capacity(cells.len() / nv);
        let mut ratio: f64 = 0.0;
        for (k, c) in cells.chunks(nv).enumerate() {
            let vol = signed_volume(dim, &vertices, c);
            if !(vol > 0.0) {
                return Err(Error::Topology {
                    cell: k,
                    message: format!("non-positive signed volume {vol:e} (inverted or degenerate)"),
                });
            }
            let diam = simplex_diameter(&vertices, c);
            let rho = inball_diameter(dim, &vertices, c, vol);
            ratio = ratio.max(diam / rho);
            volumes.push(vol);
            diameters.push(diam);
        }

        let faces = facet_counts(dim, &cells);
        for (_, (count, _, cell)) in faces.iter() {
            if *count > 2 {
                return Err(Error::Topology {
                    cell: *cell,
                    message: "facet shared by more than two cells".into(),
                });
            }
        }
        let mut seen = HashMap::new();
        for (i, f) in boundary.chunks(dim).enumerate() {
            let key = sorted_key(f);
            match faces.get(&key) {
                Some((1, _, _)) => {}
                Some((_, _, cell)) => {
                    return Err(Error::Topology {
                        cell: *cell,
                        message: format!("boundary facet {i} is an interior facet"),
                    })
                }
                None => {
                    return Err(Error::invalid(format!(
                        "boundary facet {i} is not a facet of any cell"
                    )))
                }
            }
            if seen.insert(key, i).is_some() {
                return Err(Error::invalid(format!("boundary facet {i} listed twice")));
            }
        }
        if let Some((_, (_, _, cell))) = faces
            .iter()
            .find(|(k, v)| v.0 == 1 && !seen.contains_key(*k))
        {
            return Err(Error::Topology {
                cell: *cell,
                message: "boundary facet missing from boundary list".into(),
            });
        }

        let h = diameters.iter().cloned().fold(0.0, f64::max);
        let hmin = diameters.iter().cloned().fold(f64::INFINITY, f64::min);
        let quality = MeshQuality {
            shape_regularity: ratio,
            quasi_uniformity: h / hmin,
            volume: volumes.iter().sum(),
        };
        Ok(Self {
            dim,
            vertices,
            cells,
            boundary,
            markers,
            volumes,
            diameters,
            h,
            quality,
        })
    }

    /// Conforming structured mesh of a box with `n` subdivisions per axis:
    /// `2n²` triangles (diagonal split) or `6n³` Kuhn tetrahedra.
    pub fn build_structured(domain: &BoxDomain, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one subdivision"));
        }
        let domain = BoxDomain::new(&domain.lower, &domain.upper)?;
        let dim = domain.dim();
        let np = n + 1;
        let coord = |a: usize, i: usize| {
            let s = i as f64 / n as f64;
            domain.lower[a] + s * (domain.upper[a] - domain.lower[a])
        };
        let mut vertices = Vec::new();
        let mut cells = Vec::new();
        if dim == 2 {
            for j in 0..np {
                for i in 0..np {
                    vertices.push([coord(0, i), coord(1, j), 0.0]);
                }
            }
            let id = |i: usize, j: usize| i + j * np;
            for j in 0..n {
                for i in 0..n {
                    let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                    cells.extend_from_slice(&[v00, v10, v11, v00, v11, v01]);
                }
            }
        } else {
            for k in 0..np {
                for j in 0..np {
                    for i in 0..np {
                        vertices.push([coord(0, i), coord(1, j), coord(2, k)]);
                    }
                }
            }
            let id = |c: [usize; 3]| c[0] + c[1] * np + c[2] * np * np;
            const PERMS: [[usize; 3]; 6] =
                [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        for p in PERMS {
                            let mut c = [i, j, k];
                            let mut tet = [id(c); 4];
                            for (s, &axis) in p.iter().enumerate() {
                                c[axis] += 1;
                                tet[s + 1] = id(c);
                            }
                            cells.extend_from_slice(&tet);
                        }
                    }
                }
            }
        }
        Self::from_cells(dim, vertices, cells)
    }

    /// Uniform refinement: red refinement of triangles, Bey's refinement of
    /// tetrahedra (vertices ordered along the Kuhn path so structured meshes
    /// refine into congruent children).
    pub fn refine_uniform(&self) -> Mesh {
        self.refine_with_parents().0
    }

    /// Like [`Mesh::refine_uniform`], also returning the parent cell of every child.
    pub fn refine_with_parents(&self) -> (Mesh, Vec<usize>) {
        let dim = self.dim;
        let mut vertices = self.vertices.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *mids.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([
                    0.5 * (p[0] + q[0]),
                    0.5 * (p[1] + q[1]),
                    0.5 * (p[2] + q[2]),
                ]);
                vertices.len() - 1
            })
        };
        let mut cells = Vec::with_capacity(self.cells.len() << dim);
        let mut parents = Vec::with_capacity(self.n_cells() << dim);
        for (k, c) in self.cells.chunks(dim + 1).enumerate() {
            if dim == 2 {
                let (a, b, cc) = (c[0], c[1], c[2]);
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, cc, &mut vertices);
                let ca = mid(cc, a, &mut vertices);
                cells.extend_from_slice(&[a, ab, ca, ab, b, bc, ca, bc, cc, ab, bc, ca]);
            } else {
                let mut x = [c[0], c[1], c[2], c[3]];
                x.sort_by(|&p, &q| {
                    let sp: f64 = vertices[p].iter().sum();
                    let sq: f64 = vertices[q].iter().sum();
                    sp.partial_cmp(&sq)
                        .unwrap()
                        .then_with(|| vertices[p].partial_cmp(&vertices[q]).unwrap())
                });
                let [x0, x1, x2, x3] = x;
                let x01 = mid(x0, x1, &mut vertices);
                let x02 = mid(x0, x2, &mut vertices);
                let x03 = mid(x0, x3, &mut vertices);
                let x12 = mid(x1, x2, &mut vertices);
                let x13 = mid(x1, x3, &mut vertices);
                let x23 = mid(x2, x3, &mut vertices);
                cells.extend_from_slice(&[
                    x0, x01, x02, x03, //
                    x01, x1, x12, x13, //
                    x02, x12, x2, x23, //
                    x03, x13, x23, x3, //
                    x01, x02, x03, x13, //
                    x01, x02, x12, x13, //
                    x02, x03, x13, x23, //
                    x02, x12, x13, x23,
                ]);
            }
            parents.extend(std::iter::repeat(k).take(1 << dim));
        }
        for c in cells.chunks_mut(dim + 1) {
            if signed_volume(dim, &vertices, c) < 0.0 {
                c.swap(dim - 1, dim);
            }
        }
        let mut boundary = Vec::with_capacity(self.boundary.len() << (dim - 1));
        let mut markers = Vec::with_capacity(self.markers.len() << (dim - 1));
        for (f, &m) in self.boundary.chunks(dim).zip(&self.markers) {
            if dim == 2 {
                let ab = mid(f[0], f[1], &mut vertices);
                boundary.extend_from_slice(&[f[0], ab, ab, f[1]]);
                markers.extend_from_slice(&[m, m]);
            } else {
                let (a, b, c) = (f[0], f[1], f[2]);
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                boundary.extend_from_slice(&[a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca]);
                markers.extend_from_slice(&[m; 4]);
            }
        }
        let mesh = Self::from_flat(dim, vertices, cells, boundary, markers)
            .expect("refinement of a valid mesh is valid");
        (mesh, parents)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let d = self.dim;
        writeln!(s, "nsvmesh {d}").unwrap();
        writeln!(s, "vertices {}", self.vertices.len()).unwrap();
        for p in &self.vertices {
            let coords: Vec<String> = p[..d].iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(s, "{}", coords.join(" ")).unwrap();
        }
        writeln!(s, "cells {}", self.n_cells()).unwrap();
        for c in self.cells.chunks(d + 1) {
            let idx: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            writeln!(s, "{}", idx.join(" ")).unwrap();
        }
        writeln!(s, "boundary {}", self.markers.len()).unwrap();
        for (f, m) in self.boundary.chunks(d).zip(&self.markers) {
            let idx: Vec<String> = f.iter().map(|v| v.to_string()).collect();
            writeln!(s, "{m} {}", idx.join(" ")).unwrap();
        }
        s
    }

    /// Parses the text format. Syntax problems and out-of-range vertex
    /// references are reported with their 1-based line number; geometric
    /// problems (inverted cells, bad boundary) as topology errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            })
        };
        let perr = |line: usize, message: String| Error::Parse { line, message };

        let (ln, header) = next("header")?;
        let dim = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["nsvmesh", d] => d
                .parse::<usize>()
                .ok()
                .filter(|d| (2..=3).contains(d))
                .ok_or_else(|| perr(ln, format!("bad dimension `{d}`")))?,
            _ => return Err(perr(ln, "expected `nsvmesh <dim>`".into())),
        };
        let section = |(ln, l): (usize, &str), name: &str| -> Result<usize> {
            match l.split_whitespace().collect::<Vec<_>>()[..] {
                [n, c] if n == name => c
                    .parse()
                    .map_err(|_| perr(ln, format!("bad count `{c}`"))),
                _ => Err(perr(ln, format!("expected `{name} <count>`"))),
            }
        };

        let nv = section(next("vertices")?, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = next("vertex line")?;
            let xs: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad coordinate: {e}")))?;
            if xs.len() != dim {
                return Err(perr(ln, format!("expected {dim} coordinates, got {}", xs.len())));
            }
            let mut p = [0.0; 3];
            p[..dim].copy_from_slice(&xs);
            vertices.push(p);
        }
        let read_indices = |ln: usize, toks: &[&str], n: usize| -> Result<Vec<usize>> {
            if toks.len() != n {
                return Err(perr(ln, format!("expected {n} indices, got {}", toks.len())));
            }
            toks.iter()
                .map(|t| {
                    let v: usize = t.parse().map_err(|_| perr(ln, format!("bad index `{t}`")))?;
                    if v >= nv {
                        Err(perr(ln, format!("vertex index {v} out of range (have {nv})")))
                    } else {
                        Ok(v)
                    }
                })
                .collect()
        };

        let nc = section(next("cells")?, "cells")?;
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, l) = next("cell line")?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            cells.push(read_indices(ln, &toks, dim + 1)?);
        }
        let nb = section(next("boundary")?, "boundary")?;
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, l) = next("boundary line")?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.is_empty() {
                return Err(perr(ln, "empty boundary line".into()));
            }
            let marker: i32 = toks[0]
                .parse()
                .map_err(|_| perr(ln, format!("bad marker `{}`", toks[0])))?;
            boundary.push((marker, read_indices(ln, &toks[1..], dim)?));
        }
        if let Some((ln, _)) = next("").ok() {
            return Err(perr(ln, "trailing content".into()));
        }
        Mesh::new(dim, vertices, cells, boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.volumes.len()
    }

    pub fn cell(&self, k: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.cells[k * nv..(k + 1) * nv]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks(self.dim + 1)
    }

    pub fn boundary_facets(&self) -> impl Iterator<Item = (i32, &[usize])> {
        self.markers.iter().copied().zip(self.boundary.chunks(self.dim))
    }

    pub fn n_boundary_facets(&self) -> usize {
        self.markers.len()
    }

    pub fn cell_volume(&self, k: usize) -> f64 {
        self.volumes[k]
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn cell_diameter(&self, k: usize) -> f64 {
        self.diameters[k]
    }

    /// Mesh size: the largest cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn quality(&self) -> MeshQuality {
        self.quality
    }

    pub fn volume(&self) -> f64 {
        self.quality.volume
    }

    pub fn centroid(&self, k: usize) -> Point {
        let c = self.cell(k);
        let mut p = [0.0; 3];
        for &v in c {
            for a in 0..3 {
                p[a] += self.vertices[v][a];
            }
        }
        p.map(|x| x / c.len() as f64)
    }

    /// Barycentric coordinates of `x` with respect to cell `k`.
    pub fn barycentric(&self, k: usize, x: &Point) -> [f64; 4] {
        let c = self.cell(k);
        let d = self.dim;
        let p0 = self.vertices[c[0]];
        let mut jac = [[0.0; 3]; 3];
        for j in 0..d {
            let pj = self.vertices[c[j + 1]];
            for i in 0..d {
                jac[i][j] = pj[i] - p0[i];
            }
        }
        let mut rhs = [0.0; 3];
        for i in 0..d {
            rhs[i] = x[i] - p0[i];
        }
        let s = solve_small(d, jac, rhs);
        let mut lam = [0.0; 4];
        lam[0] = 1.0 - s[..d].iter().sum::<f64>();
        lam[1..=d].copy_from_slice(&s[..d]);
        lam
    }

    /// First cell containing `x` (tolerance `1e-12` in barycentric coordinates).
    pub fn locate(&self, x: &Point) -> Option<usize> {
        (0..self.n_cells()).find(|&k| {
            self.barycentric(k, x)[..=self.dim]
                .iter()
                .all(|&l| l >= -1e-12)
        })
    }
}

fn sorted_key(f: &[usize]) -> Vec<usize> {
    let mut k = f.to_vec();
    k.sort_unstable();
    k
}

/// Facet -> (number of incident cells, facet vertices in cell order, first cell).
fn facet_counts(dim: usize, cells: &[usize]) -> HashMap<Vec<usize>, (usize, Vec<usize>, usize)> {
    let nv = dim + 1;
    let mut faces: HashMap<Vec<usize>, (usize, Vec<usize>, usize)> = HashMap::new();
    for (k, c) in cells.chunks(nv).enumerate() {
        for skip in 0..nv {
            let f: Vec<usize> = (0..nv).filter(|&i| i != skip).map(|i| c[i]).collect();
            let e = faces.entry(sorted_key(&f)).or_insert((0, f, k));
            e.0 += 1;
        }
    }
    faces
}

pub(crate) fn signed_volume(dim: usize, v: &[Point], c: &[usize]) -> f64 {
    let p0 = v[c[0]];
    let d = |i: usize, a: usize| v[c[i]][a] - p0[a];
    if dim == 2 {
        0.5 * (d(1, 0) * d(2, 1) - d(1, 1) * d(2, 0))
    } else {
        let det = d(1, 0) * (d(2, 1) * d(3, 2) - d(2, 2) * d(3, 1))
            - d(1, 1) * (d(2, 0) * d(3, 2) - d(2, 2) * d(3, 0))
            + d(1, 2) * (d(2, 0) * d(3, 1) - d(2, 1) * d(3, 0));
        det / 6.0
    }
}

fn dist(p: &Point, q: &Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}

fn simplex_diameter(v: &[Point], c: &[usize]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            h = h.max(dist(&v[c[i]], &v[c[j]]));
        }
    }
    h
}

fn inball_diameter(dim: usize, v: &[Point], c: &[usize], vol: f64) -> f64 {
    let n = c.len();
    let mut area = 0.0;
    for skip in 0..n {
        let f: Vec<usize> = (0..n).filter(|&i| i != skip).map(|i| c[i]).collect();
        area += if dim == 2 {
            dist(&v[f[0]], &v[f[1]])
        } else {
            let a = sub(&v[f[1]], &v[f[0]]);
            let b = sub(&v[f[2]], &v[f[0]]);
            0.5 * norm(&cross(&a, &b))
        };
    }
    2.0 * dim as f64 * vol / area
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Gaussian elimination with partial pivoting for `d <= 3`.
pub(crate) fn solve_small(d: usize, mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for k in 0..d {
        let p = (k..d)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..d {
            let f = a[i][k] / a[k][k];
            for j in k..d {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..d).rev() {
        let s: f64 = (k + 1..d).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}
