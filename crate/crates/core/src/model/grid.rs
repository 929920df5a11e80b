//! Uniform Cartesian cell grids, scalar fields on them, cell masks and face sets.
//!
//! Cell `(i, j)` covers `[x0 + i·dx, x0 + (i+1)·dx] × [y0 + j·dy, y0 + (j+1)·dy]`;
//! `origin` is therefore the lower-left corner of the grid, and values are stored
//! row-major with `i` fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry of a uniform cell grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
}

/// One interior face between two 4-neighbour cells.
#[derive(Clone, Copy, Debug)]
pub struct Face {
    /// Cell on the lower/left side.
    pub a: usize,
    /// Cell on the upper/right side.
    pub b: usize,
    /// `true` for faces normal to x (between `(i,j)` and `(i+1,j)`).
    pub vertical: bool,
    /// Index within [`FaceSet::vertical`] or [`FaceSet::horizontal`].
    pub index: usize,
    pub length: f64,
    /// Distance between the two cell centres.
    pub distance: f64,
    pub midpoint: [f64; 2],
}

impl Grid {
    pub fn new(nx: usize, ny: usize, origin: [f64; 2], spacing: [f64; 2]) -> Result<Self> {
        let g = Grid {
            nx,
            ny,
            origin,
            spacing,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square grid of `n × n` cells covering `[-half_width, half_width]²` around `center`.
    pub fn square(n: usize, center: [f64; 2], half_width: f64) -> Self {
        let h = 2.0 * half_width / n as f64;
        Grid {
            nx: n,
            ny: n,
            origin: [center[0] - half_width, center[1] - half_width],
            spacing: [h, h],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::precondition("grid must have at least one cell"));
        }
        if !(self.spacing[0] > 0.0 && self.spacing[1] > 0.0)
            || !self.spacing.iter().all(|s| s.is_finite())
        {
            return Err(Error::precondition(format!(
                "grid spacing must be strictly positive, got {:?}",
                self.spacing
            )));
        }
        if !self.origin.iter().all(|o| o.is_finite()) {
            return Err(Error::precondition("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.spacing[0],
            self.origin[1] + (j as f64 + 0.5) * self.spacing[1],
        ]
    }

    pub fn center_of(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.coords(idx);
        self.center(i, j)
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing[0] * self.spacing[1]
    }

    /// `[xmin, ymin, xmax, ymax]` of the covered rectangle.
    pub fn extent(&self) -> [f64; 4] {
        [
            self.origin[0],
            self.origin[1],
            self.origin[0] + self.nx as f64 * self.spacing[0],
            self.origin[1] + self.ny as f64 * self.spacing[1],
        ]
    }

    pub fn area(&self) -> f64 {
        self.len() as f64 * self.cell_area()
    }

    pub fn vertical_face_count(&self) -> usize {
        self.nx.saturating_sub(1) * self.ny
    }

    pub fn horizontal_face_count(&self) -> usize {
        self.nx * self.ny.saturating_sub(1)
    }

    /// All interior faces, vertical ones first.
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        let g = *self;
        let vertical = (0..g.ny).flat_map(move |j| {
            (0..g.nx.saturating_sub(1)).map(move |i| Face {
                a: g.idx(i, j),
                b: g.idx(i + 1, j),
                vertical: true,
                index: j * (g.nx - 1) + i,
                length: g.spacing[1],
                distance: g.spacing[0],
                midpoint: [
                    g.origin[0] + (i + 1) as f64 * g.spacing[0],
                    g.origin[1] + (j as f64 + 0.5) * g.spacing[1],
                ],
            })
        });
        let horizontal = (0..g.ny.saturating_sub(1)).flat_map(move |j| {
            (0..g.nx).map(move |i| Face {
                a: g.idx(i, j),
                b: g.idx(i, j + 1),
                vertical: false,
                index: j * g.nx + i,
                length: g.spacing[0],
                distance: g.spacing[1],
                midpoint: [
                    g.origin[0] + (i as f64 + 0.5) * g.spacing[0],
                    g.origin[1] + (j + 1) as f64 * g.spacing[1],
                ],
            })
        });
        vertical.chain(horizontal)
    }

    /// 4-neighbours of a cell.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (i, j) = self.coords(idx);
        let (nx, ny) = (self.nx, self.ny);
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = idx - 1;
        }
        if i + 1 < nx {
            out[1] = idx + 1;
        }
        if j > 0 {
            out[2] = idx - nx;
        }
        if j + 1 < ny {
            out[3] = idx + nx;
        }
        out.into_iter().filter(|&n| n != usize::MAX)
    }

    pub fn on_border(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.origin == other.origin
            && self.spacing == other.spacing
    }
}

/// Scalar field sampled at cell centres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub nx: usize,
    pub ny: usize,
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub values: Vec<f64>,
}

impl GridField {
    pub fn filled(grid: Grid, value: f64) -> Self {
        GridField {
            nx: grid.nx,
            ny: grid.ny,
            origin: grid.origin,
            spacing: grid.spacing,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::precondition(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        let f = GridField {
            nx: grid.nx,
            ny: grid.ny,
            origin: grid.origin,
            spacing: grid.spacing,
            values,
        };
        f.validate()?;
        Ok(f)
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.center_of(k))).collect();
        GridField {
            nx: grid.nx,
            ny: grid.ny,
            origin: grid.origin,
            spacing: grid.spacing,
            values,
        }
    }

    pub fn grid(&self) -> Grid {
        Grid {
            nx: self.nx,
            ny: self.ny,
            origin: self.origin,
            spacing: self.spacing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid().validate()?;
        if self.values.len() != self.nx * self.ny {
            return Err(Error::precondition(format!(
                "field has {} values, expected {}",
                self.values.len(),
                self.nx * self.ny
            )));
        }
        if let Some(k) = self.values.iter().position(|v| !v.is_finite()) {
            let (i, j) = self.grid().coords(k);
            return Err(Error::precondition(format!(
                "non-finite value {} at cell ({i}, {j})",
                self.values[k]
            )));
        }
        Ok(())
    }

    /// Checks the temperature range `[0, 1]` with a small slack.
    pub fn validate_unit_range(&self, slack: f64) -> Result<()> {
        self.validate()?;
        if let Some(k) = self
            .values
            .iter()
            .position(|&v| v < -slack || v > 1.0 + slack)
        {
            let (i, j) = self.grid().coords(k);
            return Err(Error::precondition(format!(
                "value {} at cell ({i}, {j}) outside [0, 1]",
                self.values[k]
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn same_grid(&self, other: &GridField) -> bool {
        self.grid().same_as(&other.grid())
    }
}

/// Boolean cell mask on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMask {
    pub grid: Grid,
    pub cells: Vec<bool>,
}

impl CellMask {
    pub fn empty(grid: Grid) -> Self {
        CellMask {
            grid,
            cells: vec![false; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize) -> bool) -> Self {
        CellMask {
            grid,
            cells: (0..grid.len()).map(&mut f).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.cell_area()
    }

    pub fn to_field(&self) -> GridField {
        GridField::from_values(
            self.grid,
            self.cells.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect(),
        )
        .expect("mask field is well formed")
    }

    /// Cells `> 0.5` of a 0/1 field.
    pub fn from_field(field: &GridField) -> Self {
        CellMask {
            grid: field.grid(),
            cells: field.values.iter().map(|&v| v > 0.5).collect(),
        }
    }

    /// Length of the mask boundary counted on axis-aligned faces, including the
    /// grid border.
    pub fn boundary_length(&self) -> f64 {
        let g = self.grid;
        let mut len = 0.0;
        for f in g.faces() {
            if self.cells[f.a] != self.cells[f.b] {
                len += f.length;
            }
        }
        for k in 0..g.len() {
            if !self.cells[k] {
                continue;
            }
            let (i, j) = g.coords(k);
            if i == 0 {
                len += g.spacing[1];
            }
            if i + 1 == g.nx {
                len += g.spacing[1];
            }
            if j == 0 {
                len += g.spacing[0];
            }
            if j + 1 == g.ny {
                len += g.spacing[0];
            }
        }
        len
    }
}

/// Set of interior grid faces, e.g. a discrete jump set.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceSet {
    pub grid: Grid,
    pub vertical: Vec<bool>,
    pub horizontal: Vec<bool>,
}

impl FaceSet {
    pub fn empty(grid: Grid) -> Self {
        FaceSet {
            grid,
            vertical: vec![false; grid.vertical_face_count()],
            horizontal: vec![false; grid.horizontal_face_count()],
        }
    }

    pub fn contains(&self, face: &Face) -> bool {
        if face.vertical {
            self.vertical[face.index]
        } else {
            self.horizontal[face.index]
        }
    }

    pub fn insert(&mut self, face: &Face) {
        if face.vertical {
            self.vertical[face.index] = true;
        } else {
            self.horizontal[face.index] = true;
        }
    }

    /// Faces separating cells whose values differ by more than `threshold`.
    pub fn jumps_of(field: &GridField, threshold: f64) -> Self {
        let g = field.grid();
        let mut set = FaceSet::empty(g);
        for f in g.faces() {
            if (field.values[f.a] - field.values[f.b]).abs() > threshold {
                set.insert(&f);
            }
        }
        set
    }

    /// Faces where the mask changes value.
    pub fn boundary_of(mask: &CellMask) -> Self {
        let mut set = FaceSet::empty(mask.grid);
        for f in mask.grid.faces() {
            if mask.cells[f.a] != mask.cells[f.b] {
                set.insert(&f);
            }
        }
        set
    }

    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        self.grid.faces().filter(move |f| self.contains(f))
    }

    pub fn count(&self) -> usize {
        self.vertical.iter().chain(&self.horizontal).filter(|&&b| b).count()
    }

    pub fn length(&self) -> f64 {
        self.faces().map(|f| f.length).sum()
    }
}
