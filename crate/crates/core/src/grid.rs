//! Regions, meshes, cells and per-window binning.
//!
//! Coordinates follow the catalog convention: `x` is latitude and `y` is
//! longitude. Every interval is half-open, `[x0, x0 + x_len)`, and a point is
//! assigned to a mesh by flooring its offset. Offsets are snapped by a tiny
//! tolerance first so that a point lying on a mesh boundary in decimal terms
//! (28.0 with 0.1° meshes) lands on the upper mesh even when the binary
//! quotient comes out as 29.999999999999996.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::Event;
use crate::time::{TimeWindow, WindowIndex};
use crate::{Error, Result};

const SNAP: f64 = 1e-9;

fn axis_index(value: f64, origin: f64, step: f64) -> i64 {
    ((value - origin) / step + SNAP).floor() as i64
}

fn whole_steps(extent: f64, step: f64) -> Option<usize> {
    let q = extent / step;
    let r = q.round();
    ((q - r).abs() <= 1e-6 * r.max(1.0) && r >= 1.0).then_some(r as usize)
}

/// Lat/lon aligned rectangle `(x0, y0) - (x0 + x_len, y0 + y_len)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x_len: f64,
    pub y_len: f64,
}

impl Region {
    pub fn new(x0: f64, y0: f64, x_len: f64, y_len: f64) -> Result<Self> {
        let r = Region {
            x0,
            y0,
            x_len,
            y_len,
        };
        r.validate()?;
        Ok(r)
    }

    /// Region spanning the corners `(lat0, lon0) - (lat1, lon1)`.
    pub fn from_corners(lat0: f64, lon0: f64, lat1: f64, lon1: f64) -> Result<Self> {
        Self::new(lat0, lon0, lat1 - lat0, lon1 - lon0)
    }

    /// The whole Earth, with longitudes normalized to `[-180, 180)`.
    pub fn whole_earth() -> Self {
        Region {
            x0: -90.0,
            y0: -180.0,
            x_len: 180.0 + 1e-6,
            y_len: 360.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x_len, self.y_len]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_len <= 0.0 || self.y_len <= 0.0 {
            return Err(Error::Region(format!(
                "extents must be positive and finite, got {self}"
            )));
        }
        Ok(())
    }

    pub fn x1(&self) -> f64 {
        self.x0 + self.x_len
    }

    pub fn y1(&self) -> f64 {
        self.y0 + self.y_len
    }

    /// Half-open containment; points on the max-lat/max-lon edges are outside.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        axis_index(lat, self.x0, self.x_len) == 0 && axis_index(lon, self.y0, self.y_len) == 0
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})-({},{})", self.x0, self.y0, self.x1(), self.y1())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Mesh width in latitude (degrees).
    pub dx: f64,
    /// Mesh width in longitude (degrees).
    pub dy: f64,
    /// A mesh is quaking when its count is strictly greater than this.
    pub theta_m: u32,
    /// Events below this magnitude are not binned.
    pub m_theta: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            dx: 0.1,
            dy: 0.1,
            theta_m: 1,
            m_theta: 2.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dy > 0.0 && self.dx.is_finite() && self.dy.is_finite()) {
            return Err(Error::Config(format!(
                "mesh widths must be positive, got dx={} dy={}",
                self.dx, self.dy
            )));
        }
        if !self.m_theta.is_finite() {
            return Err(Error::Config("mesh cutoff magnitude must be finite".into()));
        }
        Ok(())
    }

    /// Number of mesh rows and columns covering `region`.
    pub fn dims(&self, region: &Region) -> (usize, usize) {
        let rows = (region.x_len / self.dx - SNAP).ceil().max(1.0) as usize;
        let cols = (region.y_len / self.dy - SNAP).ceil().max(1.0) as usize;
        (rows, cols)
    }
}

/// Mesh index inside some region: `row` counts latitude steps from `x0`,
/// `col` longitude steps from `y0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mesh {
    pub row: u32,
    pub col: u32,
}

impl Mesh {
    pub fn new(row: u32, col: u32) -> Self {
        Mesh { row, col }
    }
}

/// Mesh of `(lat, lon)` in `region`, or `None` when the point is outside.
pub fn mesh_index(lat: f64, lon: f64, region: &Region, spec: &GridSpec) -> Option<Mesh> {
    if !region.contains(lat, lon) {
        return None;
    }
    let (rows, cols) = spec.dims(region);
    let i = axis_index(lat, region.x0, spec.dx).clamp(0, rows as i64 - 1);
    let j = axis_index(lon, region.y0, spec.dy).clamp(0, cols as i64 - 1);
    Some(Mesh::new(i as u32, j as u32))
}

/// Per-mesh event counts of one region over one window.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshWindowCounts {
    pub region: Region,
    pub window: TimeWindow,
    pub counts: BTreeMap<Mesh, u32>,
    /// quakes(S, t): events in the region, quaking mesh or not.
    pub region_total: u64,
    /// quakes(S^U, t): events in the whole map for the same window.
    pub universe_total: u64,
}

impl MeshWindowCounts {
    pub fn empty(region: Region, window: TimeWindow) -> Self {
        MeshWindowCounts {
            region,
            window,
            counts: BTreeMap::new(),
            region_total: 0,
            universe_total: 0,
        }
    }

    pub fn count(&self, mesh: Mesh) -> u32 {
        self.counts.get(&mesh).copied().unwrap_or(0)
    }

    /// Counts for a mesh-aligned sub-region, re-indexed to the sub-region's
    /// origin. The universe total is carried over unchanged.
    pub fn restrict(&self, sub: &Region, spec: &GridSpec) -> Result<MeshWindowCounts> {
        let (row0, col0, rows, cols) = aligned_block(&self.region, sub, spec)?;
        let mut counts = BTreeMap::new();
        let mut total = 0u64;
        for (m, &c) in &self.counts {
            let (r, k) = (m.row as usize, m.col as usize);
            if r >= row0 && r < row0 + rows && k >= col0 && k < col0 + cols {
                counts.insert(Mesh::new((r - row0) as u32, (k - col0) as u32), c);
                total += c as u64;
            }
        }
        Ok(MeshWindowCounts {
            region: *sub,
            window: self.window,
            counts,
            region_total: total,
            universe_total: self.universe_total,
        })
    }
}

/// Mesh offset and size of `sub` inside `outer`; errors when `sub` is not
/// aligned to the mesh lattice of `outer` or sticks out of it.
fn aligned_block(outer: &Region, sub: &Region, spec: &GridSpec) -> Result<(usize, usize, usize, usize)> {
    let misaligned = || Error::Region(format!("{sub} is not mesh-aligned inside {outer}"));
    let row0 = whole_steps(sub.x0 - outer.x0 + spec.dx, spec.dx).ok_or_else(misaligned)? - 1;
    let col0 = whole_steps(sub.y0 - outer.y0 + spec.dy, spec.dy).ok_or_else(misaligned)? - 1;
    let rows = whole_steps(sub.x_len, spec.dx).ok_or_else(misaligned)?;
    let cols = whole_steps(sub.y_len, spec.dy).ok_or_else(misaligned)?;
    let (outer_rows, outer_cols) = spec.dims(outer);
    if row0 + rows > outer_rows || col0 + cols > outer_cols {
        return Err(misaligned());
    }
    Ok((row0, col0, rows, cols))
}

/// Bins `events` into per-window mesh counts over `region`. The region acts
/// as its own universe; use [`MeshWindowCounts::restrict`] or
/// [`CellLayout::split`] to derive per-cell counts that keep the universe
/// total. Events outside every window or below `spec.m_theta` are skipped.
pub fn bin_events(
    events: &[Event],
    region: &Region,
    spec: &GridSpec,
    windows: &[TimeWindow],
) -> Result<Vec<MeshWindowCounts>> {
    spec.validate()?;
    region.validate()?;
    if windows.is_empty() {
        return Ok(Vec::new());
    }
    let index = WindowIndex::new(windows)?;
    let mut out: Vec<MeshWindowCounts> = windows
        .iter()
        .map(|w| MeshWindowCounts::empty(*region, *w))
        .collect();
    for ev in events {
        if ev.magnitude < spec.m_theta {
            continue;
        }
        let Some(k) = index.of(ev.month()) else { continue };
        let Some(mesh) = mesh_index(ev.lat, ev.lon, region, spec) else { continue };
        let slot = &mut out[k];
        *slot.counts.entry(mesh).or_insert(0) += 1;
        slot.region_total += 1;
    }
    for slot in &mut out {
        slot.universe_total = slot.region_total;
    }
    Ok(out)
}

/// Msh(S): meshes whose count exceeds `theta_m`.
pub fn quaking_meshes(counts: &MeshWindowCounts, spec: &GridSpec) -> BTreeSet<Mesh> {
    counts
        .counts
        .iter()
        .filter(|(_, &c)| c > spec.theta_m)
        .map(|(m, _)| *m)
        .collect()
}

/// Row-major tiling of `universe` into square cells, starting at the
/// south-west corner.
pub fn cell_grid(universe: &Region, cell_len: f64) -> Result<Vec<Region>> {
    Ok(CellLayout::new(*universe, cell_len)?.cells)
}

/// Cell tiling of the universe together with its shape.
#[derive(Clone, Debug, PartialEq)]
pub struct CellLayout {
    pub universe: Region,
    pub cell_len: f64,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Region>,
}

impl CellLayout {
    pub fn new(universe: Region, cell_len: f64) -> Result<Self> {
        universe.validate()?;
        if !(cell_len > 0.0 && cell_len.is_finite()) {
            return Err(Error::Config(format!("cell length must be positive, got {cell_len}")));
        }
        let rows = whole_steps(universe.x_len, cell_len).ok_or_else(|| {
            Error::Region(format!("cell length {cell_len} does not divide latitude extent {}", universe.x_len))
        })?;
        let cols = whole_steps(universe.y_len, cell_len).ok_or_else(|| {
            Error::Region(format!("cell length {cell_len} does not divide longitude extent {}", universe.y_len))
        })?;
        let mut cells = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                cells.push(Region {
                    x0: universe.x0 + r as f64 * cell_len,
                    y0: universe.y0 + c as f64 * cell_len,
                    x_len: cell_len,
                    y_len: cell_len,
                });
            }
        }
        Ok(CellLayout {
            universe,
            cell_len,
            rows,
            cols,
            cells,
        })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn row_col(&self, cell: usize) -> (usize, usize) {
        (cell / self.cols, cell % self.cols)
    }

    pub fn cell_of(&self, lat: f64, lon: f64) -> Option<usize> {
        if !self.universe.contains(lat, lon) {
            return None;
        }
        let r = axis_index(lat, self.universe.x0, self.cell_len).clamp(0, self.rows as i64 - 1) as usize;
        let c = axis_index(lon, self.universe.y0, self.cell_len).clamp(0, self.cols as i64 - 1) as usize;
        Some(r * self.cols + c)
    }

    /// The cell itself plus its existing 8-neighbours.
    pub fn moore_neighborhood(&self, cell: usize) -> Vec<usize> {
        let (r, c) = self.row_col(cell);
        let mut out = Vec::with_capacity(9);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr >= 0 && nc >= 0 && (nr as usize) < self.rows && (nc as usize) < self.cols {
                    out.push(nr as usize * self.cols + nc as usize);
                }
            }
        }
        out
    }

    /// Splits universe-level counts into one [`MeshWindowCounts`] per cell in
    /// a single pass. `counts.region` must be this layout's universe.
    pub fn split(&self, counts: &MeshWindowCounts, spec: &GridSpec) -> Result<Vec<MeshWindowCounts>> {
        let meshes_per_cell_row = whole_steps(self.cell_len, spec.dx)
            .ok_or_else(|| Error::Config(format!("mesh {} does not divide cell {}", spec.dx, self.cell_len)))?;
        let meshes_per_cell_col = whole_steps(self.cell_len, spec.dy)
            .ok_or_else(|| Error::Config(format!("mesh {} does not divide cell {}", spec.dy, self.cell_len)))?;
        let mut out: Vec<MeshWindowCounts> = self
            .cells
            .iter()
            .map(|r| {
                let mut m = MeshWindowCounts::empty(*r, counts.window);
                m.universe_total = counts.universe_total;
                m
            })
            .collect();
        for (mesh, &c) in &counts.counts {
            let cr = mesh.row as usize / meshes_per_cell_row;
            let cc = mesh.col as usize / meshes_per_cell_col;
            if cr >= self.rows || cc >= self.cols {
                continue;
            }
            let slot = &mut out[cr * self.cols + cc];
            let local = Mesh::new(
                (mesh.row as usize % meshes_per_cell_row) as u32,
                (mesh.col as usize % meshes_per_cell_col) as u32,
            );
            slot.counts.insert(local, c);
            slot.region_total += c as u64;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::{Month, WindowLength};

    fn cell() -> Region {
        Region::new(25.0, 125.0, 4.0, 4.0).unwrap()
    }

    #[test]
    fn mesh_index_examples() {
        let spec = GridSpec::default();
        assert_eq!(mesh_index(28.0, 125.0, &cell(), &spec), Some(Mesh::new(30, 0)));
        assert_eq!(mesh_index(25.0, 125.0, &cell(), &spec), Some(Mesh::new(0, 0)));
        assert_eq!(mesh_index(29.0, 125.0, &cell(), &spec), None);
        assert_eq!(mesh_index(25.0, 129.0, &cell(), &spec), None);
        assert_eq!(mesh_index(24.99, 126.0, &cell(), &spec), None);
        assert_eq!(mesh_index(28.95, 128.95, &cell(), &spec), Some(Mesh::new(39, 39)));
    }

    #[test]
    fn boundary_points_fall_on_the_upper_mesh() {
        let spec = GridSpec::default();
        // 28.1 = 28 + 6/60; the binary quotient sits just below 31.
        let lat = 28.0 + 6.0 / 60.0;
        assert_eq!(mesh_index(lat, 125.05, &cell(), &spec), Some(Mesh::new(31, 0)));
    }

    #[test]
    fn cell_grid_examples() {
        let u = Region::from_corners(25.0, 125.0, 49.0, 149.0).unwrap();
        let cells = cell_grid(&u, 4.0).unwrap();
        assert_eq!(cells.len(), 36);
        assert_eq!(cells[0], Region::from_corners(25.0, 125.0, 29.0, 129.0).unwrap());
        assert_eq!(cell_grid(&cell(), 4.0).unwrap().len(), 1);
        let narrow = Region::from_corners(25.0, 125.0, 49.0, 133.0).unwrap();
        assert_eq!(cell_grid(&narrow, 4.0).unwrap().len(), 12);
        let odd = Region::from_corners(25.0, 125.0, 30.0, 129.0).unwrap();
        assert!(cell_grid(&odd, 4.0).is_err());
    }

    #[test]
    fn moore_neighborhood_respects_edges() {
        let layout = CellLayout::new(Region::from_corners(25.0, 125.0, 49.0, 149.0).unwrap(), 4.0).unwrap();
        assert_eq!(layout.moore_neighborhood(0), vec![0, 1, 6, 7]);
        assert_eq!(layout.moore_neighborhood(7).len(), 9);
        assert_eq!(layout.moore_neighborhood(35).len(), 4);
        assert_eq!(layout.moore_neighborhood(3).len(), 6);
    }

    #[test]
    fn quaking_threshold_is_strict() {
        let w = TimeWindow {
            start: Month::ym(2000, 1),
            len: WindowLength::Month,
        };
        let mut c = MeshWindowCounts::empty(cell(), w);
        c.counts.insert(Mesh::new(0, 0), 2);
        c.counts.insert(Mesh::new(5, 5), 1);
        let msh = quaking_meshes(&c, &GridSpec::default());
        assert!(msh.contains(&Mesh::new(0, 0)));
        assert!(!msh.contains(&Mesh::new(5, 5)));
        assert!(quaking_meshes(&MeshWindowCounts::empty(cell(), w), &GridSpec::default()).is_empty());
    }

    #[test]
    fn restrict_rejects_misaligned_subregions() {
        let u = Region::from_corners(25.0, 125.0, 49.0, 149.0).unwrap();
        let w = TimeWindow {
            start: Month::ym(2000, 1),
            len: WindowLength::Month,
        };
        let c = MeshWindowCounts::empty(u, w);
        let spec = GridSpec::default();
        assert!(c.restrict(&Region::new(25.05, 125.0, 4.0, 4.0).unwrap(), &spec).is_err());
        assert!(c.restrict(&Region::new(47.0, 125.0, 4.0, 4.0).unwrap(), &spec).is_err());
        assert!(c.restrict(&Region::new(29.0, 133.0, 4.0, 4.0).unwrap(), &spec).is_ok());
    }
}
