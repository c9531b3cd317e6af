//! Grid-sampled functions, cubes, and local averages.
//!
//! A [`GridFunction`] is piecewise constant on the cells of a uniform grid of
//! side `h = 2^-k`. Everything outside the grid box is zero, so every integral
//! in this crate is a finite sum over cells.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid of cells `[(origin + i) h, (origin + i + 1) h)` per axis.
///
/// For `dim == 1` the second axis is degenerate (`shape[1] == 1`, `origin[1] == 0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub k: i32,
    pub origin: [i64; 2],
    pub shape: [usize; 2],
}

impl Grid {
    /// Grid covering the box `[lo, hi)` at cell side `2^-k`. The box corners
    /// must be multiples of the cell side.
    pub fn new(dim: usize, k: i32, lo: &[f64], hi: &[f64]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidInput(format!("dimension {dim} not in {{1,2}}")));
        }
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::InvalidInput("box corners must have `dim` coordinates".into()));
        }
        let h = pow2(-k);
        let mut origin = [0i64; 2];
        let mut shape = [1usize; 2];
        for a in 0..dim {
            let l = lo[a] / h;
            let u = hi[a] / h;
            if l.fract() != 0.0 || u.fract() != 0.0 {
                return Err(Error::Alignment(format!(
                    "box [{}, {}) is not a union of cells of side {h}",
                    lo[a], hi[a]
                )));
            }
            if u <= l {
                return Err(Error::InvalidInput("empty box".into()));
            }
            origin[a] = l as i64;
            shape[a] = (u - l) as usize;
        }
        Ok(Self { dim, k, origin, shape })
    }

    pub fn h(&self) -> f64 {
        pow2(-self.k)
    }

    /// Measure of one cell, `h^n`.
    pub fn cell_measure(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn box_lo(&self) -> Vec<f64> {
        (0..self.dim).map(|a| self.origin[a] as f64 * self.h()).collect()
    }

    pub fn box_hi(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|a| (self.origin[a] + self.shape[a] as i64) as f64 * self.h())
            .collect()
    }

    /// Global integer coordinates of the cell stored at `idx`.
    pub fn cell(&self, idx: usize) -> [i64; 2] {
        let ix = idx % self.shape[0];
        let iy = idx / self.shape[0];
        [self.origin[0] + ix as i64, self.origin[1] + iy as i64]
    }

    /// Storage index of a global cell, `None` outside the box.
    pub fn index(&self, cell: [i64; 2]) -> Option<usize> {
        let ix = cell[0] - self.origin[0];
        let iy = cell[1] - self.origin[1];
        if ix < 0 || iy < 0 || ix as usize >= self.shape[0] || iy as usize >= self.shape[1] {
            return None;
        }
        Some(iy as usize * self.shape[0] + ix as usize)
    }

    pub fn center_of(&self, cell: [i64; 2]) -> [f64; 2] {
        let h = self.h();
        let mut c = [(cell[0] as f64 + 0.5) * h, 0.0];
        if self.dim == 2 {
            c[1] = (cell[1] as f64 + 0.5) * h;
        }
        c
    }

    pub fn center(&self, idx: usize) -> [f64; 2] {
        self.center_of(self.cell(idx))
    }

    /// The grid box itself as a cell rectangle.
    pub fn cell_rect(&self) -> CellRect {
        CellRect {
            lo: self.origin,
            hi: [
                self.origin[0] + self.shape[0] as i64,
                self.origin[1] + self.shape[1] as i64,
            ],
        }
    }

    /// Same resolution, covering the given cell rectangle.
    pub fn with_rect(&self, rect: CellRect) -> Self {
        Self {
            dim: self.dim,
            k: self.k,
            origin: rect.lo,
            shape: [(rect.hi[0] - rect.lo[0]) as usize, (rect.hi[1] - rect.lo[1]) as usize],
        }
    }
}

pub(crate) fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// Half-open rectangle of global cells `[lo, hi)` per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellRect {
    pub lo: [i64; 2],
    pub hi: [i64; 2],
}

impl CellRect {
    pub fn intersect(&self, other: &CellRect) -> Option<CellRect> {
        let lo = [self.lo[0].max(other.lo[0]), self.lo[1].max(other.lo[1])];
        let hi = [self.hi[0].min(other.hi[0]), self.hi[1].min(other.hi[1])];
        (lo[0] < hi[0] && lo[1] < hi[1]).then_some(CellRect { lo, hi })
    }

    pub fn count(&self) -> usize {
        ((self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])) as usize
    }

    pub fn contains(&self, c: [i64; 2]) -> bool {
        c[0] >= self.lo[0] && c[0] < self.hi[0] && c[1] >= self.lo[1] && c[1] < self.hi[1]
    }

    pub fn cells(&self) -> impl Iterator<Item = [i64; 2]> + '_ {
        (self.lo[1]..self.hi[1]).flat_map(move |y| (self.lo[0]..self.hi[0]).map(move |x| [x, y]))
    }
}

/// Summed-area table of cell values, for O(1) rectangle sums clipped to the box.
#[derive(Clone, Debug)]
pub struct PrefixSums {
    rect: CellRect,
    width: usize,
    table: Vec<f64>,
}

impl PrefixSums {
    pub fn new(f: &GridFunction) -> Self {
        Self::of_values(&f.grid, f.values.iter().copied())
    }

    pub fn of_values(grid: &Grid, values: impl IntoIterator<Item = f64>) -> Self {
        let [mx, my] = grid.shape;
        let width = mx + 1;
        let mut table = vec![0.0; width * (my + 1)];
        let mut it = values.into_iter();
        for y in 0..my {
            let mut row = 0.0;
            for x in 0..mx {
                row += it.next().unwrap_or(0.0);
                table[(y + 1) * width + x + 1] = table[y * width + x + 1] + row;
            }
        }
        Self { rect: grid.cell_rect(), width, table }
    }

    /// Sum over the cells of `r`, treating cells outside the box as zero.
    pub fn sum(&self, r: &CellRect) -> f64 {
        let Some(c) = r.intersect(&self.rect) else { return 0.0 };
        let x0 = (c.lo[0] - self.rect.lo[0]) as usize;
        let x1 = (c.hi[0] - self.rect.lo[0]) as usize;
        let y0 = (c.lo[1] - self.rect.lo[1]) as usize;
        let y1 = (c.hi[1] - self.rect.lo[1]) as usize;
        let w = self.width;
        self.table[y1 * w + x1] - self.table[y0 * w + x1] - self.table[y1 * w + x0] + self.table[y0 * w + x0]
    }
}

/// A cube given in cell units at a fixed resolution: `side` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellCube {
    pub dim: usize,
    pub lo: [i64; 2],
    pub side: i64,
}

impl CellCube {
    pub fn rect(&self) -> CellRect {
        let hi1 = if self.dim == 2 { self.lo[1] + self.side } else { 1 };
        let lo1 = if self.dim == 2 { self.lo[1] } else { 0 };
        CellRect {
            lo: [self.lo[0], lo1],
            hi: [self.lo[0] + self.side, hi1],
        }
    }

    pub fn triple(&self) -> CellCube {
        let mut lo = self.lo;
        for v in lo.iter_mut().take(self.dim) {
            *v -= self.side;
        }
        CellCube { dim: self.dim, lo, side: 3 * self.side }
    }

    pub fn count(&self) -> usize {
        (self.side as usize).pow(self.dim as u32)
    }

    pub fn contains(&self, c: [i64; 2]) -> bool {
        self.rect().contains(c)
    }

    /// The `2^n` children, or `None` when the side is odd.
    pub fn children(&self) -> Option<Vec<CellCube>> {
        if self.side % 2 != 0 {
            return None;
        }
        let s = self.side / 2;
        let mut out = Vec::with_capacity(1 << self.dim);
        let ys: &[i64] = if self.dim == 2 { &[0, 1] } else { &[0] };
        for &dy in ys {
            for dx in [0, 1] {
                out.push(CellCube {
                    dim: self.dim,
                    lo: [self.lo[0] + dx * s, self.lo[1] + dy * s],
                    side: s,
                });
            }
        }
        Some(out)
    }

    pub fn to_cube(&self, k: i32) -> Cube {
        let h = pow2(-k);
        Cube {
            dim: self.dim,
            lo: [self.lo[0] as f64 * h, if self.dim == 2 { self.lo[1] as f64 * h } else { 0.0 }],
            side: self.side as f64 * h,
        }
    }
}

/// Axis-parallel cube `[lo, lo + side)^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub dim: usize,
    pub lo: [f64; 2],
    pub side: f64,
}

impl Cube {
    pub fn new(dim: usize, lo: &[f64], side: f64) -> Self {
        let mut l = [0.0; 2];
        l[..dim].copy_from_slice(&lo[..dim]);
        Self { dim, lo: l, side }
    }

    pub fn from_center(dim: usize, center: &[f64], side: f64) -> Self {
        let mut l = [0.0; 2];
        for a in 0..dim {
            l[a] = center[a] - side / 2.0;
        }
        Self { dim, lo: l, side }
    }

    pub fn center(&self) -> [f64; 2] {
        let mut c = [0.0; 2];
        for a in 0..self.dim {
            c[a] = self.lo[a] + self.side / 2.0;
        }
        c
    }

    /// Concentric cube with side `factor * side`.
    pub fn dilate(&self, factor: f64) -> Cube {
        Cube::from_center(self.dim, &self.center()[..self.dim], self.side * factor)
    }

    pub fn measure(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Closed-cube membership.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] && x[a] <= self.lo[a] + self.side)
    }

    /// Half-open membership, used for cell centers.
    pub fn contains_half_open(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] && x[a] < self.lo[a] + self.side)
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        (0..self.dim).all(|a| {
            other.lo[a] >= self.lo[a] && other.lo[a] + other.side <= self.lo[a] + self.side
        })
    }

    /// The cube in cell units at resolution `k`; fails unless corner and side
    /// are whole multiples of `2^-k`.
    pub fn to_cells(&self, k: i32) -> Result<CellCube> {
        let h = pow2(-k);
        let s = self.side / h;
        let mut lo = [0i64; 2];
        if s.fract() != 0.0 || s < 1.0 {
            return Err(Error::Alignment(format!("side {} vs cell {h}", self.side)));
        }
        for a in 0..self.dim {
            let l = self.lo[a] / h;
            if l.fract() != 0.0 {
                return Err(Error::Alignment(format!("corner {} vs cell {h}", self.lo[a])));
            }
            lo[a] = l as i64;
        }
        Ok(CellCube { dim: self.dim, lo, side: s as i64 })
    }
}

/// Piecewise-constant function on the cells of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| f(&grid.center(i)[..grid.dim]))
            .collect();
        Self { grid, values }
    }

    /// Value on a global cell; zero outside the box.
    pub fn at(&self, cell: [i64; 2]) -> f64 {
        self.grid.index(cell).map_or(0.0, |i| self.values[i])
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let dv = self.grid.cell_measure();
        if p.is_infinite() {
            return self.sup_norm();
        }
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * dv).powf(1.0 / p)
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_measure()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ f`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    /// `∫ f g` over the common cells (both must share the resolution).
    pub fn inner(&self, other: &GridFunction) -> f64 {
        debug_assert_eq!(self.grid.k, other.grid.k);
        let mut s = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                s += v * other.at(self.grid.cell(i));
            }
        }
        s * self.grid.cell_measure()
    }

    /// Bounding rectangle of the nonzero cells, `None` for the zero function.
    pub fn support(&self) -> Option<CellRect> {
        let mut rect: Option<CellRect> = None;
        for (i, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                let c = self.grid.cell(i);
                let r = rect.get_or_insert(CellRect { lo: c, hi: [c[0] + 1, c[1] + 1] });
                r.lo = [r.lo[0].min(c[0]), r.lo[1].min(c[1])];
                r.hi = [r.hi[0].max(c[0] + 1), r.hi[1].max(c[1] + 1)];
            }
        }
        rect
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let values = (0..self.grid.len())
            .map(|i| f(self.values[i], other.at(self.grid.cell(i))))
            .collect();
        GridFunction { grid: self.grid, values }
    }

    /// Same function re-sampled on another grid of equal resolution.
    pub fn restrict_to(&self, grid: Grid) -> GridFunction {
        debug_assert_eq!(self.grid.k, grid.k);
        let values = (0..grid.len()).map(|i| self.at(grid.cell(i))).collect();
        GridFunction { grid, values }
    }

    /// Values of `|f|^p` summed over the cells of a rectangle (zero extension).
    pub fn sum_pow_on(&self, rect: &CellRect, p: f64) -> f64 {
        let Some(r) = rect.intersect(&self.grid.cell_rect()) else {
            return 0.0;
        };
        let mut s = 0.0;
        for c in r.cells() {
            let v = self.values[self.grid.index(c).unwrap()].abs();
            s += if p == 1.0 { v } else { v.powf(p) };
        }
        s
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(self.grid.dim as u32).to_le_bytes())?;
        w.write_all(&self.grid.k.to_le_bytes())?;
        for a in 0..2 {
            w.write_all(&self.grid.origin[a].to_le_bytes())?;
        }
        for a in 0..2 {
            w.write_all(&(self.grid.shape[a] as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        let sidecar = path.with_extension("json");
        let meta = GridMeta {
            grid: self.grid,
            h: self.grid.h(),
            box_lo: self.grid.box_lo(),
            box_hi: self.grid.box_hi(),
        };
        std::fs::write(sidecar, serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidInput("not a grid function file".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let k = i32::from_le_bytes(b4);
        let mut origin = [0i64; 2];
        for o in origin.iter_mut() {
            r.read_exact(&mut b8)?;
            *o = i64::from_le_bytes(b8);
        }
        let mut shape = [0usize; 2];
        for s in shape.iter_mut() {
            r.read_exact(&mut b8)?;
            *s = u64::from_le_bytes(b8) as usize;
        }
        let grid = Grid { dim, k, origin, shape };
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Self::from_values(grid, values)
    }

    /// `x[,y],value` rows at cell centers.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(if self.grid.dim == 1 { "x,value\n" } else { "x,y,value\n" });
        for (i, v) in self.values.iter().enumerate() {
            let c = self.grid.center(i);
            if self.grid.dim == 1 {
                s.push_str(&format!("{},{}\n", c[0], v));
            } else {
                s.push_str(&format!("{},{},{}\n", c[0], c[1], v));
            }
        }
        s
    }
}

const MAGIC: &[u8; 4] = b"GRDF";

#[derive(Serialize, Deserialize)]
struct GridMeta {
    grid: Grid,
    h: f64,
    box_lo: Vec<f64>,
    box_hi: Vec<f64>,
}

/// Young function of an Orlicz average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum OrliczGauge {
    Power(f64),
    LLogL,
    ExpL,
}

impl OrliczGauge {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            OrliczGauge::Power(p) => t.powf(p),
            OrliczGauge::LLogL => t * (std::f64::consts::E + t).ln(),
            OrliczGauge::ExpL => t.exp_m1(),
        }
    }
}

fn cube_cells(f: &GridFunction, q: &Cube) -> Result<CellCube> {
    if q.dim != f.grid.dim {
        return Err(Error::InvalidInput("cube and function dimensions differ".into()));
    }
    q.to_cells(f.grid.k)
}

/// `<f>_{p,Q} = (|Q|^-1 ∫_Q |f|^p)^{1/p}`, exact over cells.
pub fn p_average(f: &GridFunction, q: &Cube, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::Parameter(format!("p = {p} < 1")));
    }
    let cc = cube_cells(f, q)?;
    if p.is_infinite() {
        let r = cc.rect();
        let m = r
            .intersect(&f.grid.cell_rect())
            .map_or(0.0, |r| r.cells().map(|c| f.at(c).abs()).fold(0.0, f64::max));
        return Ok(m);
    }
    let s = f.sum_pow_on(&cc.rect(), p);
    Ok((s / cc.count() as f64).powf(1.0 / p))
}

/// Mean of `φ(|v|/α)` over a list of cell values.
fn gauge_mean(values: &[f64], gauge: OrliczGauge, alpha: f64) -> f64 {
    values.iter().map(|v| gauge.eval(v.abs() / alpha)).sum::<f64>() / values.len() as f64
}

/// Luxemburg average of raw cell values (every value counts as one cell).
pub fn orlicz_of_values(values: &[f64], gauge: OrliczGauge) -> f64 {
    let max = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if max == 0.0 || values.is_empty() {
        return 0.0;
    }
    let mut hi = max;
    while gauge_mean(values, gauge, hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while gauge_mean(values, gauge, lo) <= 1.0 {
        hi = lo;
        lo /= 2.0;
    }
    while (hi - lo) > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if gauge_mean(values, gauge, mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `inf{α > 0 : |Q|^-1 ∫_Q φ(|f|/α) ≤ 1}` by bisection.
pub fn orlicz_average(f: &GridFunction, q: &Cube, gauge: OrliczGauge) -> Result<f64> {
    let cc = cube_cells(f, q)?;
    let values: Vec<f64> = cc.rect().cells().map(|c| f.at(c)).collect();
    Ok(orlicz_of_values(&values, gauge))
}

/// `f χ_{R^n \ 3Q}`: cells whose center lies in `3Q` are zeroed.
pub fn exclude(f: &GridFunction, q: &Cube) -> GridFunction {
    let t = q.dilate(3.0);
    let values = (0..f.grid.len())
        .map(|i| {
            let c = f.grid.center(i);
            if t.contains_half_open(&c[..f.grid.dim]) {
                0.0
            } else {
                f.values[i]
            }
        })
        .collect();
    GridFunction { grid: f.grid, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_grid(dim: usize, k: i32) -> Grid {
        let lo = vec![0.0; dim];
        let hi = vec![1.0; dim];
        Grid::new(dim, k, &lo, &hi).unwrap()
    }

    #[test]
    fn constant_average() {
        let g = unit_grid(2, 3);
        let f = GridFunction::from_fn(g, |_| -2.5);
        let q = Cube::new(2, &[0.25, 0.5], 0.5);
        for p in [1.0, 2.0, 3.5] {
            assert_relative_eq!(p_average(&f, &q, p).unwrap(), 2.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn half_indicator_average() {
        let g = unit_grid(1, 4);
        let f = GridFunction::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { 0.0 });
        let q = Cube::new(1, &[0.0], 1.0);
        assert_relative_eq!(p_average(&f, &q, 1.0).unwrap(), 0.5);
        assert_relative_eq!(p_average(&f, &q, 2.0).unwrap(), 0.5f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn misaligned_cube_is_an_error() {
        let f = GridFunction::zeros(unit_grid(1, 3));
        let q = Cube::new(1, &[0.1], 0.5);
        assert!(matches!(p_average(&f, &q, 1.0), Err(Error::Alignment(_))));
    }

    #[test]
    fn orlicz_closed_forms() {
        let f = GridFunction::from_fn(unit_grid(1, 3), |_| 3.0);
        let q = Cube::new(1, &[0.0], 1.0);
        let e = orlicz_average(&f, &q, OrliczGauge::ExpL).unwrap();
        assert_relative_eq!(e, 3.0 / std::f64::consts::LN_2, max_relative = 1e-10);
        let z = GridFunction::zeros(unit_grid(1, 3));
        assert_eq!(orlicz_average(&z, &q, OrliczGauge::LLogL).unwrap(), 0.0);
    }

    #[test]
    fn llogl_of_one_matches_scalar_root() {
        // t0 log(e + t0) = 1 solved by plain bisection, answer is 1/t0.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m * (std::f64::consts::E + m).ln() > 1.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        let expected = 1.0 / lo;
        let f = GridFunction::from_fn(unit_grid(2, 2), |_| 1.0);
        let q = Cube::new(2, &[0.0, 0.0], 1.0);
        let got = orlicz_average(&f, &q, OrliczGauge::LLogL).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-9);
        assert!((got - 1.257).abs() < 1e-3);
    }

    #[test]
    fn exclude_straddling_box() {
        let g = Grid::new(1, 4, &[-4.0], &[4.0]).unwrap();
        let f = GridFunction::from_fn(g, |x| if (1.5..3.0).contains(&x[0]) { 1.0 } else { 0.0 });
        let q = Cube::new(1, &[0.0], 1.0); // 3Q = [-1, 2)
        let e = exclude(&f, &q);
        let h = g.h();
        let overlap_cells = ((2.0 - 1.5) / h) as usize;
        let total_cells = ((3.0 - 1.5) / h) as usize;
        assert_relative_eq!(e.integral(), (total_cells - overlap_cells) as f64 * h);
        assert_eq!(exclude(&e, &q), e);
    }

    #[test]
    fn binary_roundtrip() {
        let g = Grid::new(2, 2, &[-1.0, 0.0], &[1.0, 0.5]).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] * 3.0 - x[1]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.grid");
        f.write_binary(&p).unwrap();
        assert_eq!(GridFunction::read_binary(&p).unwrap(), f);
        assert!(dir.path().join("f.json").exists());
        assert!(f.to_csv().starts_with("x,y,value\n"));
    }
}
