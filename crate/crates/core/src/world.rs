//! Spatio-temporal values of world variables.
//!
//! Space is a uniform 2-D grid of square cells. A world variable holds one
//! [`FieldSlice`] per trajectory sample; the slices of one variable over a
//! trajectory form a [`SpatioTemporalField`]. Cell-wise summation gives the
//! commutative group (reals), cancellative monoid (counts) or monoid (booleans
//! under OR) used when composed automata share a world output.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};
use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::fmt::g9;
use crate::trajectory::TimeStep;

/// Largest number of cells a grid may hold unless a caller raises the budget.
pub const DEFAULT_CELL_BUDGET: usize = 1024 * 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("point ({x}, {y}) lies outside the grid")]
    OutOfGrid { x: f64, y: f64 },
    #[error("region lies entirely outside the grid")]
    RegionOffGrid,
    #[error("time {0} is not a sample of the field")]
    TimeOutOfDomain(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field kinds differ: {0:?} vs {1:?}")]
    KindMismatch(FieldKind, FieldKind),
    #[error("fields cover different time domains")]
    DomainMismatch,
    #[error("footprint is empty")]
    EmptyFootprint,
    #[error("grid of {cells} cells exceeds the budget of {budget}")]
    GridTooLarge { cells: usize, budget: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
}

/// A point of the plane, in meters.
pub type Point = (f64, f64);

/// A grid cell, ordered row-major (`y` first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub y: usize,
    pub x: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Cell { y, x }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpaceGrid {
    width: usize,
    height: usize,
    cell_size: f64,
    origin: Point,
}

impl SpaceGrid {
    pub fn new(width: usize, height: usize, cell_size: f64) -> Result<Self, FieldError> {
        Self::with_origin(width, height, cell_size, (0.0, 0.0), DEFAULT_CELL_BUDGET)
    }

    pub fn with_origin(
        width: usize,
        height: usize,
        cell_size: f64,
        origin: Point,
        budget: usize,
    ) -> Result<Self, FieldError> {
        if width == 0 || height == 0 {
            return Err(FieldError::InvalidGrid("width and height must be positive".into()));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(FieldError::InvalidGrid("cell size must be positive".into()));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(FieldError::InvalidGrid("origin must be finite".into()));
        }
        let cells = width.checked_mul(height).ok_or(FieldError::GridTooLarge { cells: usize::MAX, budget })?;
        if cells > budget {
            return Err(FieldError::GridTooLarge { cells, budget });
        }
        Ok(SpaceGrid { width, height, cell_size, origin })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.y * self.width + cell.x
    }

    pub fn cell_of_index(&self, idx: usize) -> Cell {
        Cell::new(idx % self.width, idx / self.width)
    }

    pub fn center(&self, cell: Cell) -> Point {
        (self.origin.0 + (cell.x as f64 + 0.5) * self.cell_size, self.origin.1 + (cell.y as f64 + 0.5) * self.cell_size)
    }

    /// Cell containing `p`; cells are half-open `[lo, hi)` in both axes.
    pub fn cell_at(&self, p: Point) -> Result<Cell, FieldError> {
        let fx = ((p.0 - self.origin.0) / self.cell_size).floor();
        let fy = ((p.1 - self.origin.1) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 || fx.is_nan() || fy.is_nan() {
            return Err(FieldError::OutOfGrid { x: p.0, y: p.1 });
        }
        Ok(Cell::new(fx as usize, fy as usize))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
    }

    /// Cells whose centers may fall within the axis-aligned box `[lo, hi]`.
    fn cells_in_box(&self, lo: Point, hi: Point) -> impl Iterator<Item = Cell> + '_ {
        let cs = self.cell_size;
        let clamp = |v: f64, n: usize| -> usize {
            if v <= 0.0 {
                0
            } else if v >= n as f64 {
                n
            } else {
                v as usize
            }
        };
        let x0 = clamp(((lo.0 - self.origin.0) / cs - 0.5).floor(), self.width);
        let x1 = clamp(((hi.0 - self.origin.0) / cs + 0.5).ceil() + 1.0, self.width);
        let y0 = clamp(((lo.1 - self.origin.1) / cs - 0.5).floor(), self.height);
        let y1 = clamp(((hi.1 - self.origin.1) / cs + 0.5).ceil() + 1.0, self.height);
        (y0..y1).flat_map(move |y| (x0..x1).map(move |x| Cell::new(x, y)))
    }

    fn key(&self) -> (usize, usize, u64, u64, u64) {
        (self.width, self.height, self.cell_size.to_bits(), self.origin.0.to_bits(), self.origin.1.to_bits())
    }
}

impl PartialEq for SpaceGrid {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for SpaceGrid {}

impl Hash for SpaceGrid {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

impl PartialOrd for SpaceGrid {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SpaceGrid {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldKind {
    /// Reals under `+`, identity 0.
    Real,
    /// Non-negative integers under `+`, identity 0.
    Count,
    /// Booleans under OR, identity `false`.
    Bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldValue {
    Real(f64),
    Count(u32),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Color {
    White,
    Black,
}

impl FieldValue {
    pub fn kind(&self) -> FieldKind {
        match self {
            FieldValue::Real(_) => FieldKind::Real,
            FieldValue::Count(_) => FieldKind::Count,
            FieldValue::Bool(_) => FieldKind::Bool,
        }
    }

    /// Black wherever the cell differs from the identity element.
    pub fn color(&self) -> Color {
        let marked = match *self {
            FieldValue::Real(v) => v != 0.0,
            FieldValue::Count(n) => n > 0,
            FieldValue::Bool(b) => b,
        };
        if marked {
            Color::Black
        } else {
            Color::White
        }
    }

    pub fn is_black(&self) -> bool {
        self.color() == Color::Black
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldCells {
    Real(Vec<f64>),
    Count(Vec<u32>),
    Bool(Vec<bool>),
}

impl FieldCells {
    pub fn kind(&self) -> FieldKind {
        match self {
            FieldCells::Real(_) => FieldKind::Real,
            FieldCells::Count(_) => FieldKind::Count,
            FieldCells::Bool(_) => FieldKind::Bool,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FieldCells::Real(v) => v.len(),
            FieldCells::Count(v) => v.len(),
            FieldCells::Bool(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, idx: usize) -> FieldValue {
        match self {
            FieldCells::Real(v) => FieldValue::Real(v[idx]),
            FieldCells::Count(v) => FieldValue::Count(v[idx]),
            FieldCells::Bool(v) => FieldValue::Bool(v[idx]),
        }
    }
}

#[derive(Debug)]
struct FieldData {
    grid: SpaceGrid,
    cells: FieldCells,
}

/// The value of a world variable at one instant: one value per grid cell.
///
/// Slices are immutable and cheap to clone.
#[derive(Debug, Clone)]
pub struct FieldSlice {
    data: Arc<FieldData>,
}

impl FieldSlice {
    pub fn new(grid: SpaceGrid, cells: FieldCells) -> Result<Self, FieldError> {
        if cells.len() != grid.cell_count() {
            return Err(FieldError::CellCount { expected: grid.cell_count(), got: cells.len() });
        }
        Ok(FieldSlice { data: Arc::new(FieldData { grid, cells }) })
    }

    /// The identity element of `kind` on every cell.
    pub fn zeros(grid: SpaceGrid, kind: FieldKind) -> Self {
        let n = grid.cell_count();
        let cells = match kind {
            FieldKind::Real => FieldCells::Real(vec![0.0; n]),
            FieldKind::Count => FieldCells::Count(vec![0; n]),
            FieldKind::Bool => FieldCells::Bool(vec![false; n]),
        };
        FieldSlice { data: Arc::new(FieldData { grid, cells }) }
    }

    pub fn constant(grid: SpaceGrid, value: FieldValue) -> Self {
        let n = grid.cell_count();
        let cells = match value {
            FieldValue::Real(v) => FieldCells::Real(vec![v; n]),
            FieldValue::Count(v) => FieldCells::Count(vec![v; n]),
            FieldValue::Bool(v) => FieldCells::Bool(vec![v; n]),
        };
        FieldSlice { data: Arc::new(FieldData { grid, cells }) }
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.data.grid
    }

    pub fn kind(&self) -> FieldKind {
        self.data.cells.kind()
    }

    pub fn cells(&self) -> &FieldCells {
        &self.data.cells
    }

    pub fn get(&self, cell: Cell) -> FieldValue {
        self.data.cells.get(self.data.grid.index(cell))
    }

    pub fn value_at(&self, p: Point) -> Result<FieldValue, FieldError> {
        let cell = self.data.grid.cell_at(p)?;
        Ok(self.get(cell))
    }

    pub fn same_allocation(&self, other: &FieldSlice) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
    }

    /// Cell-wise group sum.
    pub fn try_add(&self, other: &FieldSlice) -> Result<FieldSlice, FieldError> {
        if self.grid() != other.grid() {
            return Err(FieldError::GridMismatch);
        }
        let cells = match (self.cells(), other.cells()) {
            (FieldCells::Real(a), FieldCells::Real(b)) => {
                FieldCells::Real(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (FieldCells::Count(a), FieldCells::Count(b)) => {
                FieldCells::Count(a.iter().zip(b).map(|(x, y)| x.saturating_add(*y)).collect())
            }
            (FieldCells::Bool(a), FieldCells::Bool(b)) => {
                FieldCells::Bool(a.iter().zip(b).map(|(x, y)| *x || *y).collect())
            }
            (a, b) => return Err(FieldError::KindMismatch(a.kind(), b.kind())),
        };
        Ok(FieldSlice { data: Arc::new(FieldData { grid: *self.grid(), cells }) })
    }

    /// Equality with an absolute per-cell tolerance on real cells; other
    /// kinds compare exactly.
    pub fn approx_eq(&self, other: &FieldSlice, tol: f64) -> bool {
        if self.same_allocation(other) {
            return true;
        }
        if self.grid() != other.grid() {
            return false;
        }
        match (self.cells(), other.cells()) {
            (FieldCells::Real(a), FieldCells::Real(b)) => {
                a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits() || (x - y).abs() <= tol)
            }
            (a, b) => a == b,
        }
    }

    /// Sum of `value * cell area` over all cells; counts and booleans count as 0/1.
    pub fn integral(&self) -> f64 {
        let area = self.grid().cell_area();
        let total: f64 = match self.cells() {
            FieldCells::Real(v) => v.iter().sum(),
            FieldCells::Count(v) => v.iter().map(|&n| n as f64).sum(),
            FieldCells::Bool(v) => v.iter().filter(|&&b| b).count() as f64,
        };
        total * area
    }

    /// True iff some cell of `region` satisfies `pred`.
    pub fn any_in(&self, region: &Region, pred: impl Fn(FieldValue) -> bool) -> bool {
        region.iter().any(|&c| pred(self.get(c)))
    }

    /// Cells holding a non-identity value.
    pub fn support(&self) -> Region {
        let grid = *self.grid();
        let mut out = Region::new();
        for idx in 0..grid.cell_count() {
            if self.data.cells.get(idx).is_black() {
                out.insert(grid.cell_of_index(idx));
            }
        }
        out
    }

    /// Writes the slice as CSV with header `x,y,value`, one row per cell in
    /// row-major order. Reals use `%.9g`, counts are integers, booleans 0/1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y,value")?;
        let grid = *self.grid();
        for idx in 0..grid.cell_count() {
            let cell = grid.cell_of_index(idx);
            let value = match self.data.cells.get(idx) {
                FieldValue::Real(v) => g9(v),
                FieldValue::Count(n) => n.to_string(),
                FieldValue::Bool(b) => u8::from(b).to_string(),
            };
            writeln!(out, "{},{},{}", cell.x, cell.y, value)?;
        }
        Ok(())
    }

    fn cmp_cells(&self, other: &FieldSlice) -> Ordering {
        match (self.cells(), other.cells()) {
            (FieldCells::Real(a), FieldCells::Real(b)) => {
                a.iter().map(|v| v.to_bits()).cmp(b.iter().map(|v| v.to_bits()))
            }
            (FieldCells::Count(a), FieldCells::Count(b)) => a.cmp(b),
            (FieldCells::Bool(a), FieldCells::Bool(b)) => a.cmp(b),
            (a, b) => a.kind().cmp(&b.kind()),
        }
    }
}

impl PartialEq for FieldSlice {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for FieldSlice {}

impl PartialOrd for FieldSlice {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldSlice {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.same_allocation(other) {
            return Ordering::Equal;
        }
        self.grid().cmp(other.grid()).then_with(|| self.cmp_cells(other))
    }
}

impl Hash for FieldSlice {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.grid().hash(state);
        self.kind().hash(state);
        match self.cells() {
            FieldCells::Real(v) => v.iter().for_each(|x| x.to_bits().hash(state)),
            FieldCells::Count(v) => v.hash(state),
            FieldCells::Bool(v) => v.hash(state),
        }
    }
}

/// A world variable over a whole trajectory: one slice per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatioTemporalField {
    dt: TimeStep,
    slices: Vec<FieldSlice>,
}

impl SpatioTemporalField {
    pub fn new(dt: TimeStep, slices: Vec<FieldSlice>) -> Result<Self, FieldError> {
        let first = slices.first().ok_or(FieldError::DomainMismatch)?;
        for s in &slices[1..] {
            if s.grid() != first.grid() {
                return Err(FieldError::GridMismatch);
            }
            if s.kind() != first.kind() {
                return Err(FieldError::KindMismatch(first.kind(), s.kind()));
            }
        }
        Ok(SpatioTemporalField { dt, slices })
    }

    pub fn constant(dt: TimeStep, samples: usize, slice: FieldSlice) -> Self {
        SpatioTemporalField { dt, slices: vec![slice; samples.max(1)] }
    }

    pub fn grid(&self) -> &SpaceGrid {
        self.slices[0].grid()
    }

    pub fn kind(&self) -> FieldKind {
        self.slices[0].kind()
    }

    pub fn dt(&self) -> TimeStep {
        self.dt
    }

    pub fn slices(&self) -> &[FieldSlice] {
        &self.slices
    }

    pub fn slice_at(&self, t: f64) -> Result<&FieldSlice, FieldError> {
        let k = self.dt.steps(t).map_err(|_| FieldError::TimeOutOfDomain(t))?;
        self.slices.get(k).ok_or(FieldError::TimeOutOfDomain(t))
    }

    /// Value of the cell containing `p` at time `t`.
    pub fn field_at(&self, t: f64, p: Point) -> Result<FieldValue, FieldError> {
        self.slice_at(t)?.value_at(p)
    }

    /// True iff some cell of `region` satisfies `pred` at time `t`.
    pub fn region_exists(
        &self,
        t: f64,
        region: &Region,
        pred: impl Fn(FieldValue) -> bool,
    ) -> Result<bool, FieldError> {
        Ok(self.slice_at(t)?.any_in(region, pred))
    }
}

/// Sample-wise, cell-wise sum of two fields over the same grid and time domain.
pub fn field_sum(a: &SpatioTemporalField, b: &SpatioTemporalField) -> Result<SpatioTemporalField, FieldError> {
    if a.dt != b.dt || a.slices.len() != b.slices.len() {
        return Err(FieldError::DomainMismatch);
    }
    let slices = a.slices.iter().zip(&b.slices).map(|(x, y)| x.try_add(y)).collect::<Result<Vec<_>, _>>()?;
    Ok(SpatioTemporalField { dt: a.dt, slices })
}

/// An explicit set of grid cells.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Region {
    cells: BTreeSet<Cell>,
}

impl Region {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, cell: Cell) {
        self.cells.insert(cell);
    }

    pub fn contains(&self, cell: &Cell) -> bool {
        self.cells.contains(cell)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter()
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.cells.is_disjoint(&other.cells)
    }

    pub fn intersects(&self, other: &Region) -> bool {
        !self.is_disjoint(other)
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region { cells: self.cells.difference(&other.cells).copied().collect() }
    }

    pub fn union(&self, other: &Region) -> Region {
        Region { cells: self.cells.union(&other.cells).copied().collect() }
    }
}

impl FromIterator<Cell> for Region {
    fn from_iter<I: IntoIterator<Item = Cell>>(iter: I) -> Self {
        Region { cells: iter.into_iter().collect() }
    }
}

// Cell-center tests are inclusive up to this slack so that a rectangle and
// its half-turn pick the same cells despite rounding in sin/cos.
const EDGE_SLACK: f64 = 1e-9;

/// Cells whose centers lie in the `length` x `width` rectangle centered at
/// `center` with heading `phi`. Empty when the rectangle misses the grid.
pub fn footprint_cells(grid: &SpaceGrid, phi: f64, center: Point, length: f64, width: f64) -> Region {
    let (s, c) = phi.sin_cos();
    let hl = length / 2.0;
    let hw = width / 2.0;
    let reach = (hl * hl + hw * hw).sqrt();
    grid.cells_in_box((center.0 - reach, center.1 - reach), (center.0 + reach, center.1 + reach))
        .filter(|&cell| {
            let p = grid.center(cell);
            let dx = p.0 - center.0;
            let dy = p.1 - center.1;
            let along = dx * c + dy * s;
            let across = -dx * s + dy * c;
            along.abs() <= hl + EDGE_SLACK && across.abs() <= hw + EDGE_SLACK
        })
        .collect()
}

/// The area covered by a body of the given size at `center` with heading `phi`.
pub fn footprint(phi: f64, center: Point, length: f64, width: f64, grid: &SpaceGrid) -> Result<Region, FieldError> {
    if !(length > 0.0 && width > 0.0) {
        return Err(FieldError::InvalidGrid("footprint dimensions must be positive".into()));
    }
    let region = footprint_cells(grid, phi, center, length, width);
    if region.is_empty() {
        return Err(FieldError::RegionOffGrid);
    }
    Ok(region)
}

/// Cells whose centers are within `radius` of `center`.
pub fn disc(grid: &SpaceGrid, center: Point, radius: f64) -> Region {
    let r2 = radius * radius;
    grid.cells_in_box((center.0 - radius, center.1 - radius), (center.0 + radius, center.1 + radius))
        .filter(|&cell| {
            let p = grid.center(cell);
            let dx = p.0 - center.0;
            let dy = p.1 - center.1;
            dx * dx + dy * dy <= r2 + EDGE_SLACK
        })
        .collect()
}

/// The sensing ring of a body: cells within `radius` of `center`, minus the
/// body's own footprint `fp`.
pub fn neighborhood(grid: &SpaceGrid, center: Point, radius: f64, fp: &Region) -> Region {
    let extent = fp
        .iter()
        .map(|&cell| {
            let p = grid.center(cell);
            ((p.0 - center.0).powi(2) + (p.1 - center.1).powi(2)).sqrt()
        })
        .fold(0.0_f64, f64::max);
    if !fp.is_empty() && radius <= extent {
        log::warn!("neighborhood radius {radius} does not exceed the footprint extent {extent}");
    }
    disc(grid, center, radius).difference(fp)
}

/// Uniform pressure `mass / area(fp)` on the footprint cells, 0 elsewhere.
pub fn pressure_field(mass: f64, fp: &Region, grid: &SpaceGrid) -> Result<FieldSlice, FieldError> {
    if fp.is_empty() {
        return Err(FieldError::EmptyFootprint);
    }
    let mut cells = vec![0.0; grid.cell_count()];
    let value = mass / (fp.len() as f64 * grid.cell_area());
    for &cell in fp.iter() {
        cells[grid.index(cell)] = value;
    }
    FieldSlice::new(*grid, FieldCells::Real(cells))
}

/// Occupancy count: 1 on each cell of `fp`, 0 elsewhere.
pub fn occupancy_field(fp: &Region, grid: &SpaceGrid) -> FieldSlice {
    let mut cells = vec![0u32; grid.cell_count()];
    for &cell in fp.iter() {
        cells[grid.index(cell)] = 1;
    }
    FieldSlice { data: Arc::new(FieldData { grid: *grid, cells: FieldCells::Count(cells) }) }
}
