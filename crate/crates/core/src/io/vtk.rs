//! Legacy ASCII VTK unstructured grids with quadratic cells. Points are the
//! P2 nodes (vertices, then edge midpoints), so velocity coefficients map
//! one-to-one onto point vectors. Reals are written with 17 significant
//! digits and reload bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::MixedSpace;

pub const VTK_QUADRATIC_TRIANGLE: u8 = 22;
pub const VTK_QUADRATIC_TETRA: u8 = 24;

/// Contents of a legacy unstructured-grid file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VtkGrid {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub point_vectors: Vec<(String, Vec<[f64; 3]>)>,
    pub point_scalars: Vec<(String, Vec<f64>)>,
    pub cell_vectors: Vec<(String, Vec<[f64; 3]>)>,
}

impl VtkGrid {
    /// Geometry of the P2 space.
    pub fn from_space(space: &MixedSpace, title: &str) -> Self {
        let ty = if space.dim() == 2 {
            VTK_QUADRATIC_TRIANGLE
        } else {
            VTK_QUADRATIC_TETRA
        };
        let n_cells = space.mesh().n_cells();
        Self {
            title: title.to_string(),
            points: space.node_coords().to_vec(),
            cells: (0..n_cells).map(|k| space.cell_nodes(k).to_vec()).collect(),
            cell_types: vec![ty; n_cells],
            ..Self::default()
        }
    }

    /// Velocity coefficients as point vectors (zero-padded to 3D).
    pub fn add_velocity(&mut self, name: &str, space: &MixedSpace, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != space.n_vel() {
            return Err(Error::invalid(format!(
                "`{name}` has {} coefficients, space expects {}",
                coeffs.len(),
                space.n_vel()
            )));
        }
        let dim = space.dim();
        let v = coeffs
            .chunks(dim)
            .map(|c| {
                let mut p = [0.0; 3];
                p[..dim].copy_from_slice(c);
                p
            })
            .collect();
        self.point_vectors.push((name.to_string(), v));
        Ok(())
    }

    /// P1 pressure: vertex values, midpoints get the edge average.
    pub fn add_pressure(&mut self, name: &str, space: &MixedSpace, p: &[f64]) -> Result<()> {
        if p.len() != space.n_pre() {
            return Err(Error::invalid(format!("`{name}` does not match the pressure space")));
        }
        let mut values = p.to_vec();
        values.extend(space.edges().iter().map(|&[a, b]| 0.5 * (p[a] + p[b])));
        self.point_scalars.push((name.to_string(), values));
        Ok(())
    }

    /// Cellwise vectors in the control layout `k·dim + j`.
    pub fn add_cell_vector(&mut self, name: &str, dim: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.cells.len() * dim {
            return Err(Error::invalid(format!("`{name}` does not match the cell count")));
        }
        let v = values
            .chunks(dim)
            .map(|c| {
                let mut p = [0.0; 3];
                p[..dim].copy_from_slice(c);
                p
            })
            .collect();
        self.cell_vectors.push((name.to_string(), v));
        Ok(())
    }

    pub fn point_vector(&self, name: &str) -> Option<&[[f64; 3]]> {
        self.point_vectors.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn point_scalar(&self, name: &str) -> Option<&[f64]> {
        self.point_scalars.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn cell_vector(&self, name: &str) -> Option<&[[f64; 3]]> {
        self.cell_vectors.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Velocity coefficients of a point vector, after checking that the
    /// points are the nodes of `space`.
    pub fn velocity(&self, name: &str, space: &MixedSpace) -> Result<Vec<f64>> {
        if self.points.len() != space.n_nodes() || self.points.iter().zip(space.node_coords()).any(|(a, b)| a != b) {
            return Err(Error::invalid("file points are not the nodes of the space"));
        }
        let v = self
            .point_vector(name)
            .ok_or_else(|| Error::invalid(format!("no point vectors named `{name}`")))?;
        let dim = space.dim();
        Ok(v.iter().flat_map(|p| p[..dim].to_vec()).collect())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\n");
        let title = if self.title.is_empty() { "nsvoigt" } else { &self.title };
        writeln!(s, "{}", title.lines().next().unwrap_or("nsvoigt")).unwrap();
        s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
        writeln!(s, "POINTS {} double", self.points.len()).unwrap();
        for p in &self.points {
            write_triple(&mut s, p);
        }
        let size: usize = self.cells.iter().map(|c| c.len() + 1).sum();
        writeln!(s, "CELLS {} {size}", self.cells.len()).unwrap();
        for c in &self.cells {
            let idx: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            writeln!(s, "{} {}", c.len(), idx.join(" ")).unwrap();
        }
        writeln!(s, "CELL_TYPES {}", self.cell_types.len()).unwrap();
        for t in &self.cell_types {
            writeln!(s, "{t}").unwrap();
        }
        if !self.point_vectors.is_empty() || !self.point_scalars.is_empty() {
            writeln!(s, "POINT_DATA {}", self.points.len()).unwrap();
            for (name, v) in &self.point_vectors {
                writeln!(s, "VECTORS {name} double").unwrap();
                v.iter().for_each(|p| write_triple(&mut s, p));
            }
            for (name, v) in &self.point_scalars {
                writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
                v.iter().for_each(|x| writeln!(s, "{x:.16e}").unwrap());
            }
        }
        if !self.cell_vectors.is_empty() {
            writeln!(s, "CELL_DATA {}", self.cells.len()).unwrap();
            for (name, v) in &self.cell_vectors {
                writeln!(s, "VECTORS {name} double").unwrap();
                v.iter().for_each(|p| write_triple(&mut s, p));
            }
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Reads the subset written by [`VtkGrid::to_text`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        let header = r.line()?;
        if !header.starts_with("# vtk DataFile") {
            return Err(r.error("missing `# vtk DataFile` header"));
        }
        let mut grid = VtkGrid {
            title: r.line()?.to_string(),
            ..Self::default()
        };
        if r.line()? != "ASCII" {
            return Err(r.error("only ASCII files are supported"));
        }
        if r.line()? != "DATASET UNSTRUCTURED_GRID" {
            return Err(r.error("expected DATASET UNSTRUCTURED_GRID"));
        }
        let mut section = Section::None;
        while let Some(line) = r.next_line() {
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["POINTS", n, _] => {
                    let n = r.count(n)?;
                    grid.points = (0..n).map(|_| r.triple()).collect::<Result<_>>()?;
                }
                ["CELLS", n, _] => {
                    let n = r.count(n)?;
                    for _ in 0..n {
                        let nums = r.numbers::<usize>()?;
                        match nums.split_first() {
                            Some((&k, rest)) if k == rest.len() => grid.cells.push(rest.to_vec()),
                            _ => return Err(r.error("cell size does not match its index count")),
                        }
                    }
                }
                ["CELL_TYPES", n] => {
                    let n = r.count(n)?;
                    for _ in 0..n {
                        grid.cell_types.push(r.scalar()?);
                    }
                }
                ["POINT_DATA", n] => {
                    section = Section::Point;
                    if r.count(n)? != grid.points.len() {
                        return Err(r.error("POINT_DATA count differs from POINTS"));
                    }
                }
                ["CELL_DATA", n] => {
                    section = Section::Cell;
                    if r.count(n)? != grid.cells.len() {
                        return Err(r.error("CELL_DATA count differs from CELLS"));
                    }
                }
                ["VECTORS", name, _] => {
                    let (n, list) = match section {
                        Section::Point => (grid.points.len(), &mut grid.point_vectors),
                        Section::Cell => (grid.cells.len(), &mut grid.cell_vectors),
                        Section::None => return Err(r.error("VECTORS outside a data section")),
                    };
                    let v = (0..n).map(|_| r.triple()).collect::<Result<_>>()?;
                    list.push((name.to_string(), v));
                }
                ["SCALARS", name, _, rest @ ..] => {
                    if section != Section::Point || rest.iter().any(|c| *c != "1") {
                        return Err(r.error("only single-component point scalars are supported"));
                    }
                    if r.line()? != "LOOKUP_TABLE default" {
                        return Err(r.error("expected LOOKUP_TABLE default"));
                    }
                    let v = (0..grid.points.len()).map(|_| r.scalar()).collect::<Result<_>>()?;
                    grid.point_scalars.push((name.to_string(), v));
                }
                _ => return Err(r.error(&format!("unexpected `{line}`"))),
            }
        }
        if grid.cell_types.len() != grid.cells.len() {
            return Err(Error::Parse {
                line: 0,
                message: "CELL_TYPES count differs from CELLS".into(),
            });
        }
        Ok(grid)
    }
}

#[derive(PartialEq)]
enum Section {
    None,
    Point,
    Cell,
}

fn write_triple(s: &mut String, p: &[f64; 3]) {
    writeln!(s, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]).unwrap();
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line_no: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
            line_no: 0,
        }
    }

    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            line: self.line_no,
            message: msg.to_string(),
        }
    }

    fn next_line(&mut self) -> Option<&'a str> {
        for (i, l) in self.lines.by_ref() {
            self.line_no = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Some(l);
            }
        }
        None
    }

    fn line(&mut self) -> Result<&'a str> {
        self.next_line().ok_or_else(|| self.error("unexpected end of file"))
    }

    fn count(&self, s: &str) -> Result<usize> {
        s.parse().map_err(|_| self.error(&format!("bad count `{s}`")))
    }

    fn numbers<T: std::str::FromStr>(&mut self) -> Result<Vec<T>> {
        let l = self.line()?;
        l.split_whitespace()
            .map(|w| w.parse().map_err(|_| self.error(&format!("bad number `{w}`"))))
            .collect()
    }

    fn scalar<T: std::str::FromStr>(&mut self) -> Result<T> {
        let mut v = self.numbers()?;
        if v.len() != 1 {
            return Err(self.error("expected one value per line"));
        }
        Ok(v.pop().unwrap())
    }

    fn triple(&mut self) -> Result<[f64; 3]> {
        let v: Vec<f64> = self.numbers()?;
        v.try_into().map_err(|_| self.error("expected three values"))
    }
}
