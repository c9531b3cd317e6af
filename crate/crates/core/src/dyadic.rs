//! Dyadic lattices, the three-lattice system, and Calderón–Zygmund splitting.
//!
//! Lattice geometry is exact integer arithmetic in *atoms* of length
//! `2^{k_min}`. A lattice with side factor `F` and per-level offsets `c_k`
//! has, at level `k`, the cubes `Π_a [(F t_a + c_k^a) 2^k, (F t_a + c_k^a + F) 2^k)`.
//! The standard lattice is `F = 1`, `c = 0`; the three-lattice derived
//! systems have `F = 3`.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{pow2, CellCube, Cube, Grid, GridFunction, PrefixSums};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub lattice_id: usize,
    pub level: i32,
    pub coords: [i64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicLattice {
    pub id: usize,
    pub dim: usize,
    pub k_min: i32,
    pub k_max: i32,
    pub factor: i64,
    /// `offsets[k - k_min]` is `c_k` per axis.
    pub offsets: Vec<[i64; 2]>,
}

impl DyadicLattice {
    /// The standard lattice `{2^k (t + [0,1)^n)}` on levels `k_min..=k_max`.
    pub fn standard(dim: usize, k_min: i32, k_max: i32) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidInput(format!("dimension {dim}")));
        }
        if k_min > k_max {
            return Err(Error::Parameter(format!("empty level range {k_min}..={k_max}")));
        }
        let levels = (k_max - k_min + 1) as usize;
        Ok(Self { id: 0, dim, k_min, k_max, factor: 1, offsets: vec![[0, 0]; levels] })
    }

    pub fn is_standard(&self) -> bool {
        self.factor == 1 && self.offsets.iter().all(|c| *c == [0, 0])
    }

    fn offset(&self, level: i32) -> [i64; 2] {
        self.offsets[(level - self.k_min) as usize]
    }

    fn scale(&self, level: i32) -> i64 {
        1i64 << (level - self.k_min)
    }

    pub fn side_atoms(&self, level: i32) -> i64 {
        self.factor * self.scale(level)
    }

    pub fn side(&self, level: i32) -> f64 {
        self.factor as f64 * pow2(level)
    }

    pub fn atom(&self) -> f64 {
        pow2(self.k_min)
    }

    pub fn cube(&self, level: i32, coords: [i64; 2]) -> DyadicCube {
        let coords = if self.dim == 1 { [coords[0], 0] } else { coords };
        DyadicCube { lattice_id: self.id, level, coords }
    }

    pub fn lo_atoms(&self, q: &DyadicCube) -> [i64; 2] {
        let c = self.offset(q.level);
        let s = self.scale(q.level);
        let mut lo = [0, 0];
        for a in 0..self.dim {
            lo[a] = (self.factor * q.coords[a] + c[a]) * s;
        }
        lo
    }

    pub fn to_cube(&self, q: &DyadicCube) -> Cube {
        let lo = self.lo_atoms(q);
        let atom = self.atom();
        Cube::new(self.dim, &[lo[0] as f64 * atom, lo[1] as f64 * atom][..self.dim], self.side(q.level))
    }

    /// The same cube in cell units at resolution `h = 2^{-grid_k}`, if aligned.
    pub fn to_cells(&self, q: &DyadicCube, grid_k: i32) -> Option<CellCube> {
        // Cells per atom is 2^{k_min + grid_k}.
        let e = self.k_min + grid_k;
        let lo = self.lo_atoms(q);
        let side = self.side_atoms(q.level);
        let conv = |v: i64| -> Option<i64> {
            if e >= 0 {
                Some(v << e)
            } else {
                let d = 1i64 << (-e);
                (v % d == 0).then(|| v / d)
            }
        };
        let mut out = [0, 0];
        for a in 0..self.dim {
            out[a] = conv(lo[a])?;
        }
        Some(CellCube { dim: self.dim, lo: out, side: conv(side)? })
    }

    /// The level-`level` cube containing the point `p` (in atoms).
    pub fn containing(&self, level: i32, p: [i64; 2]) -> DyadicCube {
        let c = self.offset(level);
        let s = self.scale(level);
        let mut coords = [0, 0];
        for a in 0..self.dim {
            coords[a] = (p[a].div_euclid(s) - c[a]).div_euclid(self.factor);
        }
        self.cube(level, coords)
    }

    /// The cube `R` with `ℓ_Q/2 < ℓ_R ≤ ℓ_Q` containing the center of `q`,
    /// so that `Q ⊂ 3R` and `3Q ⊂ 9R`. Needs a standard lattice whose levels
    /// reach `ℓ_Q`.
    pub fn reduction_cube(&self, q: &Cube) -> Option<DyadicCube> {
        if !self.is_standard() || !(q.side > 0.0) || q.dim != self.dim {
            return None;
        }
        let level = q.side.log2().floor() as i32;
        if level < self.k_min || level > self.k_max {
            return None;
        }
        let center = q.center();
        let mut p = [0, 0];
        for a in 0..self.dim {
            p[a] = (center[a] / self.atom()).floor() as i64;
        }
        Some(self.containing(level, p))
    }

    pub fn parent(&self, q: &DyadicCube) -> Option<DyadicCube> {
        (q.level < self.k_max).then(|| self.containing(q.level + 1, self.lo_atoms(q)))
    }

    /// The `2^n` children, or `None` at the finest level.
    pub fn children(&self, q: &DyadicCube) -> Option<Vec<DyadicCube>> {
        if q.level <= self.k_min {
            return None;
        }
        let lo = self.lo_atoms(q);
        let half = self.side_atoms(q.level - 1);
        let corners: Vec<[i64; 2]> = if self.dim == 1 {
            vec![[0, 0], [1, 0]]
        } else {
            vec![[0, 0], [1, 0], [0, 1], [1, 1]]
        };
        Some(
            corners
                .into_iter()
                .map(|d| self.containing(q.level - 1, [lo[0] + d[0] * half, lo[1] + d[1] * half]))
                .collect(),
        )
    }

    /// Level-`level` cubes meeting the half-open atom box `[lo, hi)`.
    pub fn cubes_meeting(&self, level: i32, lo: [i64; 2], hi: [i64; 2]) -> Vec<DyadicCube> {
        let first = self.containing(level, lo);
        let last = self.containing(level, [hi[0] - 1, hi[1] - 1]);
        let ys = if self.dim == 2 { first.coords[1]..=last.coords[1] } else { 0..=0 };
        ys.flat_map(|y| (first.coords[0]..=last.coords[0]).map(move |x| [x, y]))
            .map(|c| self.cube(level, c))
            .collect()
    }

    /// Atom box of a grid's cell box (requires `k_min ≥ -grid.k` for exactness).
    pub fn grid_atoms(&self, grid: &Grid) -> ([i64; 2], [i64; 2]) {
        let e = self.k_min + grid.k;
        let r = grid.cell_rect();
        let conv = |v: i64, up: bool| -> i64 {
            if e <= 0 {
                v << (-e)
            } else {
                let d = 1i64 << e;
                if up { (v + d - 1).div_euclid(d) } else { v.div_euclid(d) }
            }
        };
        let mut lo = [0, 0];
        let mut hi = [1, 1];
        for a in 0..self.dim {
            lo[a] = conv(r.lo[a], false);
            hi[a] = conv(r.hi[a], true);
        }
        (lo, hi)
    }
}

/// A standard lattice together with its `3^n` derived lattices.
#[derive(Clone, Debug)]
pub struct ShiftedSystem {
    pub base: DyadicLattice,
    pub derived: Vec<DyadicLattice>,
}

/// Residue sequence of the derived lattice with `r_0 = start`:
/// `r_{k+1} = 2(r_k + 1) mod 3`, equivalently `r_{k-1} = 2 r_k - 1 mod 3`.
fn residues(start: i64, k_min: i32, k_max: i32) -> Vec<i64> {
    let mut r = BTreeMap::new();
    r.insert(0, start);
    let mut cur = start;
    for k in 1..=k_max.max(0) {
        cur = (2 * (cur + 1)).rem_euclid(3);
        r.insert(k, cur);
    }
    cur = start;
    for k in (k_min.min(0)..0).rev() {
        cur = (2 * cur - 1).rem_euclid(3);
        r.insert(k, cur);
    }
    (k_min..=k_max).map(|k| r[&k]).collect()
}

pub fn three_lattice(d: &DyadicLattice) -> Result<ShiftedSystem> {
    if d.k_min > d.k_max {
        return Err(Error::Parameter("empty level range".into()));
    }
    if !d.is_standard() {
        return Err(Error::InvalidInput("three-lattice system needs the standard lattice".into()));
    }
    let per_axis: Vec<Vec<i64>> = (0..3).map(|j| residues(j, d.k_min, d.k_max)).collect();
    let count = 3usize.pow(d.dim as u32);
    let derived = (0..count)
        .map(|j| {
            let (jx, jy) = (j % 3, j / 3);
            let offsets = (0..per_axis[0].len())
                .map(|i| {
                    let ox = per_axis[jx][i] - 1;
                    let oy = if d.dim == 2 { per_axis[jy][i] - 1 } else { 0 };
                    [ox, oy]
                })
                .collect();
            DyadicLattice { id: j + 1, dim: d.dim, k_min: d.k_min, k_max: d.k_max, factor: 3, offsets }
        })
        .collect();
    Ok(ShiftedSystem { base: d.clone(), derived })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ThreeLatticeReport {
    pub triples_checked: usize,
    pub membership_violations: usize,
    pub uniqueness_checks: usize,
    pub uniqueness_violations: usize,
    pub nesting_violations: usize,
}

impl ThreeLatticeReport {
    pub fn passed(&self) -> bool {
        self.membership_violations == 0 && self.uniqueness_violations == 0 && self.nesting_violations == 0
    }
}

impl ShiftedSystem {
    /// The derived lattice holding `3Q` and the cube itself.
    pub fn triple_of(&self, q: &DyadicCube) -> Option<(usize, DyadicCube)> {
        let lo = self.base.lo_atoms(q);
        let s = self.base.side_atoms(q.level);
        let tlo = [lo[0] - s, if self.base.dim == 2 { lo[1] - s } else { 0 }];
        self.derived.iter().enumerate().find_map(|(j, l)| {
            let c = l.containing(q.level, tlo);
            (l.lo_atoms(&c) == tlo).then_some((j, c))
        })
    }

    /// Exhaustive check on all base cubes inside `[-window, window)^n` (atoms).
    ///
    /// Every `3Q` must be a cube of exactly one derived lattice, each derived
    /// lattice must hold exactly one `R` with `ℓ_R = 3ℓ_Q` and `Q ⊂ R`, and
    /// the children of every derived cube must be derived cubes again.
    pub fn verify(&self, window: i64) -> ThreeLatticeReport {
        let d = &self.base;
        let n = d.dim;
        let (lo, hi) = ([-window, if n == 2 { -window } else { 0 }], [window, if n == 2 { window } else { 1 }]);
        let levels: Vec<i32> = (d.k_min..=d.k_max).collect();
        let reports: Vec<ThreeLatticeReport> = levels
            .par_iter()
            .map(|&k| {
                let mut rep = ThreeLatticeReport::default();
                let s = d.side_atoms(k);
                let pad = [3 * s, if n == 2 { 3 * s } else { 0 }];
                let wlo = [lo[0] - pad[0], lo[1] - pad[1]];
                let whi = [hi[0] + pad[0], hi[1] + pad[1]];
                // Geometric cube sets of every derived lattice at this level.
                let sets: Vec<HashSet<[i64; 2]>> = self
                    .derived
                    .iter()
                    .map(|l| l.cubes_meeting(k, wlo, whi).iter().map(|c| l.lo_atoms(c)).collect())
                    .collect();
                for q in d.cubes_meeting(k, lo, hi) {
                    let ql = d.lo_atoms(&q);
                    let tlo = [ql[0] - s, if n == 2 { ql[1] - s } else { 0 }];
                    rep.triples_checked += 1;
                    if sets.iter().filter(|set| set.contains(&tlo)).count() != 1 {
                        rep.membership_violations += 1;
                    }
                    for set in &sets {
                        rep.uniqueness_checks += 1;
                        let holders = set
                            .iter()
                            .filter(|r| (0..n).all(|a| r[a] <= ql[a] && ql[a] + s <= r[a] + 3 * s))
                            .count();
                        if holders != 1 {
                            rep.uniqueness_violations += 1;
                        }
                    }
                }
                if k > d.k_min {
                    for l in &self.derived {
                        let finer: HashSet<[i64; 2]> =
                            l.cubes_meeting(k - 1, wlo, whi).iter().map(|c| l.lo_atoms(c)).collect();
                        for c in l.cubes_meeting(k, lo, hi) {
                            let cl = l.lo_atoms(&c);
                            let half = l.side_atoms(k - 1);
                            let kids: Vec<[i64; 2]> = if n == 1 {
                                vec![[cl[0], 0], [cl[0] + half, 0]]
                            } else {
                                vec![cl, [cl[0] + half, cl[1]], [cl[0], cl[1] + half], [cl[0] + half, cl[1] + half]]
                            };
                            if kids.iter().any(|kid| !finer.contains(kid)) {
                                rep.nesting_violations += 1;
                            }
                        }
                    }
                }
                rep
            })
            .collect();
        reports.into_iter().fold(ThreeLatticeReport::default(), |mut a, r| {
            a.triples_checked += r.triples_checked;
            a.membership_violations += r.membership_violations;
            a.uniqueness_checks += r.uniqueness_checks;
            a.uniqueness_violations += r.uniqueness_violations;
            a.nesting_violations += r.nesting_violations;
            a
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CzAtom {
    pub cube: DyadicCube,
    pub cells: CellCube,
    pub average: f64,
    /// `b_P` on the cells of `P` in storage order.
    pub bad: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CZDecomposition {
    pub height: f64,
    pub atoms: Vec<CzAtom>,
    pub good: GridFunction,
}

impl CZDecomposition {
    pub fn total_measure(&self) -> f64 {
        let cm = self.good.grid.cell_measure();
        self.atoms.iter().map(|a| a.cells.count() as f64 * cm).sum()
    }

    /// Levels present among the stopping cubes.
    pub fn levels(&self) -> Vec<i32> {
        let mut l: Vec<i32> = self.atoms.iter().map(|a| a.cube.level).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// `Σ_P b_P` on the decomposition grid.
    pub fn bad(&self) -> GridFunction {
        let mut out = GridFunction::zeros(self.good.grid);
        for a in &self.atoms {
            scatter(&mut out, a);
        }
        out
    }

    pub fn atom_function(&self, a: &CzAtom) -> GridFunction {
        let mut out = GridFunction::zeros(self.good.grid);
        scatter(&mut out, a);
        out
    }
}

fn scatter(out: &mut GridFunction, a: &CzAtom) {
    for (c, v) in a.cells.rect().cells().zip(&a.bad) {
        if let Some(i) = out.grid.index(c) {
            out.values[i] += v;
        }
    }
}

/// Maximal cubes `Q` of `lattice` (descending from `roots`) with
/// `⟨|f|⟩_Q > height`. A cube that cannot be split into grid-aligned
/// children is a leaf.
pub fn stopping_cubes(
    lattice: &DyadicLattice,
    roots: &[DyadicCube],
    grid_k: i32,
    abs_sums: &PrefixSums,
    height: f64,
) -> Vec<(DyadicCube, CellCube)> {
    let mut out = vec![];
    let mut stack: Vec<DyadicCube> = roots.iter().rev().copied().collect();
    while let Some(q) = stack.pop() {
        let Some(cc) = lattice.to_cells(&q, grid_k) else { continue };
        let mass = abs_sums.sum(&cc.rect());
        if mass == 0.0 {
            continue;
        }
        if mass / cc.count() as f64 > height {
            out.push((q, cc));
        } else if let Some(kids) = lattice.children(&q) {
            if kids.iter().all(|k| lattice.to_cells(k, grid_k).is_some()) {
                stack.extend(kids.into_iter().rev());
            }
        }
    }
    out
}

/// Calderón–Zygmund decomposition of `f` at `height` along `lattice`.
///
/// Roots are the top-level cubes meeting the support of `f`. The output grid
/// is the hull of the input box and all stopping cubes.
pub fn cz_decompose(f: &GridFunction, lattice: &DyadicLattice, height: f64) -> Result<CZDecomposition> {
    if !(height > 0.0) {
        return Err(Error::Parameter(format!("height {height} must be positive")));
    }
    if lattice.dim != f.grid.dim {
        return Err(Error::InvalidInput("lattice and grid dimensions differ".into()));
    }
    let abs = PrefixSums::of_values(&f.grid, f.values.iter().map(|v| v.abs()));
    let roots = match f.support() {
        None => vec![],
        Some(s) => {
            let support = f.grid.with_rect(s);
            let (lo, hi) = lattice.grid_atoms(&support);
            lattice.cubes_meeting(lattice.k_max, lo, hi)
        }
    };
    let stops = stopping_cubes(lattice, &roots, f.grid.k, &abs, height);
    let mut hull = f.grid.cell_rect();
    for (_, cc) in &stops {
        let r = cc.rect();
        for a in 0..2 {
            hull.lo[a] = hull.lo[a].min(r.lo[a]);
            hull.hi[a] = hull.hi[a].max(r.hi[a]);
        }
    }
    let grid = f.grid.with_rect(hull);
    let mut good = GridFunction::zeros(grid);
    for (i, c) in (0..grid.len()).map(|i| (i, grid.cell(i))) {
        good.values[i] = f.at(c);
    }
    let atoms = stops
        .into_iter()
        .map(|(cube, cells)| {
            let vals: Vec<f64> = cells.rect().cells().map(|c| f.at(c)).collect();
            let average = vals.iter().sum::<f64>() / vals.len() as f64;
            for c in cells.rect().cells() {
                let i = grid.index(c).expect("stopping cube inside hull");
                good.values[i] = average;
            }
            CzAtom { cube, cells, average, bad: vals.iter().map(|v| v - average).collect() }
        })
        .collect();
    Ok(CZDecomposition { height, atoms, good })
}

/// `B_l = Σ_{ℓ_P = 2^l} b_P`.
pub fn level_sum(d: &CZDecomposition, l: i32) -> GridFunction {
    let h = d.good.grid.h();
    let mut out = GridFunction::zeros(d.good.grid);
    for a in &d.atoms {
        if (a.cells.side as f64 * h - pow2(l)).abs() < 0.5 * h {
            scatter(&mut out, a);
        }
    }
    out
}

/// Physical side exponents `l` of the stopping cubes.
pub fn atom_levels(d: &CZDecomposition) -> Vec<i32> {
    let mut v: Vec<i32> =
        d.atoms.iter().map(|a| (a.cells.side as f64 * d.good.grid.h()).log2().round() as i32).collect();
    v.sort_unstable();
    v.dedup();
    v
}
