//! Maximal operators over finite cube families.
//!
//! Every supremum here runs over a finite [`CubeFamily`], so each output is a
//! lower bound for the corresponding operator with the supremum over all
//! cubes. A cube contains a point iff the point's cell center lies in it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicLattice;
use crate::error::{Error, Result};
use crate::field::{orlicz_of_values, CellCube, Cube, Grid, GridFunction, OrliczGauge, PrefixSums};
use crate::kernel::SphereKernel;
use crate::rearrange::quantile_of_values;
use crate::sio::{apply_excluded_cells, sources, KernelTable, OperatorHandle};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeFamily {
    pub dim: usize,
    /// Resolution exponent of the cell coordinates.
    pub k: i32,
    pub cubes: Vec<CellCube>,
}

fn box_side_cells(grid: &Grid) -> i64 {
    (0..grid.dim).map(|a| grid.shape[a] as i64).max().unwrap_or(1)
}

impl CubeFamily {
    pub fn from_cells(grid: &Grid, cubes: Vec<CellCube>) -> Self {
        Self { dim: grid.dim, k: grid.k, cubes }
    }

    pub fn from_cubes(grid: &Grid, cubes: &[Cube]) -> Result<Self> {
        let cells = cubes.iter().map(|q| q.to_cells(grid.k)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_cells(grid, cells))
    }

    /// Standard dyadic cubes meeting the box, with sides `2^a h` in
    /// `[min_side, max_side]` (given in cells).
    pub fn dyadic(grid: &Grid, min_side: i64, max_side: i64) -> Result<Self> {
        Self::lattice_like(grid, min_side, max_side, &[0])
    }

    /// Dyadic cubes of sides in `[4h, L/2]`, `L` the longest box side.
    pub fn default_for(grid: &Grid) -> Result<Self> {
        Self::dyadic(grid, 4, (box_side_cells(grid) / 2).max(4))
    }

    /// Dyadic cubes plus the lattice shifted by half a side in every axis.
    pub fn shifted(grid: &Grid, min_side: i64, max_side: i64) -> Result<Self> {
        Self::lattice_like(grid, min_side, max_side, &[0, 1])
    }

    fn lattice_like(grid: &Grid, min_side: i64, max_side: i64, halves: &[i64]) -> Result<Self> {
        if min_side < 1 || max_side < min_side {
            return Err(Error::Parameter(format!("side range [{min_side}, {max_side}] cells")));
        }
        let mut cubes = vec![];
        let mut side = (min_side as u64).next_power_of_two() as i64;
        while side <= max_side {
            for &half in halves {
                if half == 1 && side < 2 {
                    continue;
                }
                push_grid_cubes(grid, side, side, half * side / 2, &mut cubes);
            }
            side *= 2;
        }
        Ok(Self::from_cells(grid, cubes))
    }

    /// `per_octave` geometrically spaced sides per factor of two, each placed
    /// at every multiple of `max(1, side / shifts)` cells.
    pub fn dense(grid: &Grid, min_side: i64, max_side: i64, per_octave: u32, shifts: i64) -> Result<Self> {
        if min_side < 1 || max_side < min_side || per_octave == 0 || shifts < 1 {
            return Err(Error::Parameter("dense family parameters".into()));
        }
        let mut sides = vec![];
        let mut i = 0;
        loop {
            let s = (min_side as f64 * 2f64.powf(i as f64 / per_octave as f64)).round() as i64;
            if s > max_side {
                break;
            }
            if sides.last() != Some(&s) {
                sides.push(s);
            }
            i += 1;
        }
        let mut cubes = vec![];
        for s in sides {
            push_grid_cubes(grid, s, (s / shifts).max(1), 0, &mut cubes);
        }
        Ok(Self::from_cells(grid, cubes))
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Indices of the cubes containing `cell`.
    pub fn containing(&self, cell: [i64; 2]) -> Vec<usize> {
        self.cubes
            .iter()
            .enumerate()
            .filter(|(_, q)| q.rect().contains(cell))
            .map(|(i, _)| i)
            .collect()
    }

    /// Smallest and largest side in cells.
    pub fn side_bounds(&self) -> Option<(i64, i64)> {
        let min = self.cubes.iter().map(|q| q.side).min()?;
        let max = self.cubes.iter().map(|q| q.side).max()?;
        Some((min, max))
    }

    pub fn to_cubes(&self) -> Vec<Cube> {
        self.cubes.iter().map(|c| c.to_cube(self.k)).collect()
    }
}

/// All cubes of side `side` with lower corners `≡ offset (mod step)` meeting the box.
fn push_grid_cubes(grid: &Grid, side: i64, step: i64, offset: i64, out: &mut Vec<CellCube>) {
    let r = grid.cell_rect();
    let axis = |a: usize| -> Vec<i64> {
        if a >= grid.dim {
            return vec![0];
        }
        let first = (r.lo[a] - side + 1 - offset).div_euclid(step) * step + offset;
        let mut v = vec![];
        let mut lo = first;
        while lo < r.hi[a] {
            if lo + side > r.lo[a] {
                v.push(lo);
            }
            lo += step;
        }
        v
    };
    let (xs, ys) = (axis(0), axis(1));
    for &y in &ys {
        for &x in &xs {
            out.push(CellCube { dim: grid.dim, lo: [x, y], side });
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaximalConfig {
    pub lambda: f64,
    pub p: f64,
    pub gauge: Option<OrliczGauge>,
    pub family: CubeFamily,
}

impl MaximalConfig {
    pub fn new(lambda: f64, p: f64, family: CubeFamily) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Parameter(format!("lambda = {lambda} not in (0,1)")));
        }
        if !(p >= 1.0) {
            return Err(Error::Parameter(format!("p = {p} below 1")));
        }
        if family.is_empty() {
            return Err(Error::Parameter("empty cube family".into()));
        }
        Ok(Self { lambda, p, gauge: None, family })
    }
}

/// Cellwise `max` over the family of per-cube scores.
pub fn sup_over_family(grid: &Grid, family: &CubeFamily, scores: &[f64]) -> GridFunction {
    let mut out = GridFunction::zeros(*grid);
    let bx = grid.cell_rect();
    for (q, &s) in family.cubes.iter().zip(scores) {
        if let Some(r) = q.rect().intersect(&bx) {
            for c in r.cells() {
                let i = grid.index(c).expect("cell inside box");
                if s > out.values[i] {
                    out.values[i] = s;
                }
            }
        }
    }
    out
}

/// `T(f χ_{R^n \ 3Q})` on the cells of each family cube, computed once and
/// reused by every maximal functional.
#[derive(Clone, Debug)]
pub struct ExcludedApplications {
    pub grid: Grid,
    pub family: CubeFamily,
    pub values: Vec<Vec<f64>>,
}

impl ExcludedApplications {
    pub fn compute(op: &OperatorHandle, f: &GridFunction, family: &CubeFamily) -> Result<Self> {
        if family.k != f.grid.k || family.dim != f.grid.dim {
            return Err(Error::Alignment("family resolution differs from grid".into()));
        }
        let margin = family.side_bounds().map_or(0, |(_, m)| m);
        let table = KernelTable::for_grid(op, &f.grid, margin);
        let src = sources(f);
        let values = family
            .cubes
            .par_iter()
            .map(|cc| apply_excluded_cells(&table, f, &src, cc).values)
            .collect();
        Ok(Self { grid: f.grid, family: family.clone(), values })
    }

    fn sup(&self, score: impl Fn(&[f64]) -> f64 + Sync) -> GridFunction {
        let scores: Vec<f64> = self.values.par_iter().map(|v| score(v)).collect();
        sup_over_family(&self.grid, &self.family, &scores)
    }

    pub fn m_lambda(&self, lambda: f64) -> GridFunction {
        self.sup(|v| quantile_of_values(v.to_vec(), lambda))
    }

    pub fn m_p(&self, p: f64) -> GridFunction {
        self.sup(|v| p_mean(v, p))
    }

    pub fn m_orlicz(&self, gauge: OrliczGauge) -> GridFunction {
        self.sup(|v| orlicz_of_values(v, gauge))
    }

    /// `sup_Q (1/|Q|) ∫_Q |T(f χ_{R^n \ 3Q})| |g|`.
    pub fn bilinear(&self, g: &GridFunction) -> GridFunction {
        let scores: Vec<f64> = self
            .family
            .cubes
            .par_iter()
            .zip(&self.values)
            .map(|(cc, v)| {
                let s: f64 = cc.rect().cells().zip(v).map(|(c, t)| t.abs() * g.at(c).abs()).sum();
                s / v.len() as f64
            })
            .collect();
        sup_over_family(&self.grid, &self.family, &scores)
    }
}

/// `(mean |v|^p)^{1/p}`, the maximum for `p = ∞`.
pub fn p_mean(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return v.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    (v.iter().map(|x| x.abs().powf(p)).sum::<f64>() / v.len() as f64).powf(1.0 / p)
}

pub fn m_lambda(op: &OperatorHandle, f: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    Ok(ExcludedApplications::compute(op, f, &cfg.family)?.m_lambda(cfg.lambda))
}

/// `𝓜_{p,T}`; `p = ∞` gives `M_T`.
pub fn m_p(op: &OperatorHandle, f: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    Ok(ExcludedApplications::compute(op, f, &cfg.family)?.m_p(cfg.p))
}

pub fn m_orlicz(op: &OperatorHandle, f: &GridFunction, cfg: &MaximalConfig) -> Result<GridFunction> {
    let gauge = cfg.gauge.unwrap_or(OrliczGauge::ExpL);
    Ok(ExcludedApplications::compute(op, f, &cfg.family)?.m_orlicz(gauge))
}

pub fn bilinear_m(op: &OperatorHandle, f: &GridFunction, g: &GridFunction, family: &CubeFamily) -> Result<GridFunction> {
    if f.grid != g.grid {
        return Err(Error::Alignment("f and g live on different grids".into()));
    }
    Ok(ExcludedApplications::compute(op, f, family)?.bilinear(g))
}

/// `M_{T_j}`, the `p = ∞` maximal operator of the annular piece `T_j`.
pub fn annular_maximal(omega: &SphereKernel, j: i32, f: &GridFunction, family: &CubeFamily) -> Result<GridFunction> {
    let op = OperatorHandle::annular(omega.clone(), j);
    Ok(ExcludedApplications::compute(&op, f, family)?.m_p(f64::INFINITY))
}

/// `M_s f = sup_Q ⟨|f|^s⟩_Q^{1/s}`.
pub fn hl_maximal(f: &GridFunction, s: f64, family: &CubeFamily) -> Result<GridFunction> {
    if !(s >= 1.0) {
        return Err(Error::Parameter(format!("s = {s} below 1")));
    }
    let sums = PrefixSums::of_values(&f.grid, f.values.iter().map(|v| v.abs().powf(s)));
    let scores: Vec<f64> = family
        .cubes
        .iter()
        .map(|q| (sums.sum(&q.rect()) / q.count() as f64).powf(1.0 / s))
        .collect();
    Ok(sup_over_family(&f.grid, family, &scores))
}

/// Supremum of `⟨|f|⟩_Q` over the cubes of `lattice` containing each cell.
pub fn dyadic_maximal(f: &GridFunction, lattice: &DyadicLattice) -> Result<GridFunction> {
    if lattice.dim != f.grid.dim {
        return Err(Error::InvalidInput("lattice and grid dimensions differ".into()));
    }
    let (lo, hi) = lattice.grid_atoms(&f.grid);
    let cubes: Vec<CellCube> = (lattice.k_min..=lattice.k_max)
        .flat_map(|l| lattice.cubes_meeting(l, lo, hi))
        .filter_map(|q| lattice.to_cells(&q, f.grid.k))
        .collect();
    hl_maximal(f, 1.0, &CubeFamily::from_cells(&f.grid, cubes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::project_zero_mean;

    fn hilbert() -> OperatorHandle {
        OperatorHandle::rough(project_zero_mean(&[1.0, -1.0], 1).unwrap())
    }

    #[test]
    fn constant_is_its_own_maximal_function() {
        let g = Grid::new(2, 3, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let f = GridFunction::from_fn(g, |_| -2.0);
        // Cubes inside the box only, so no zero padding enters the average.
        let fam = CubeFamily::from_cells(&g, vec![CellCube { dim: 2, lo: [0, 0], side: 8 }, CellCube { dim: 2, lo: [4, 0], side: 4 }]);
        let m = hl_maximal(&f, 1.0, &fam).unwrap();
        assert!(m.values.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn interval_maximal_at_two_and_a_half() {
        let g = Grid::new(1, 6, &[-4.0], &[4.0]).unwrap();
        let f = GridFunction::from_fn(g, |x| if (0.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 });
        let fam = CubeFamily::dense(&g, 4, 256, 8, 16).unwrap();
        let m = hl_maximal(&f, 1.0, &fam).unwrap();
        let v = m.values[g.index([160, 0]).unwrap()];
        assert!((v - 0.4).abs() <= 0.05 * 0.4, "{v}");
        let m2 = hl_maximal(&f, 2.0, &fam).unwrap();
        assert!(m.values.iter().zip(&m2.values).all(|(a, b)| a <= b));
        assert!(m.values.iter().zip(&f.values).all(|(a, b)| *a >= *b));
    }

    #[test]
    fn dyadic_maximal_ancestors() {
        let g = Grid::new(1, 4, &[-4.0], &[8.0]).unwrap();
        let f = GridFunction::from_fn(g, |x| if (0.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 });
        let d = DyadicLattice::standard(1, -4, 2).unwrap();
        let m = dyadic_maximal(&f, &d).unwrap();
        let at = |x: f64| m.values[g.index([(x * 16.0) as i64, 0]).unwrap()];
        assert_eq!(at(1.5), 0.5);
        assert_eq!(at(3.0), 0.25);
        assert_eq!(at(0.5), 1.0);
    }

    #[test]
    fn far_spike_median() {
        let g = Grid::new(1, 10, &[0.0], &[10.0]).unwrap();
        let h = g.h();
        let spike = GridFunction::from_fn(g, |x| if (8.0..8.0 + h).contains(&x[0]) { 1.0 / h } else { 0.0 });
        let fam = CubeFamily::from_cubes(&g, &[Cube::new(1, &[0.0], 1.0)]).unwrap();
        let cfg = MaximalConfig::new(0.5, 1.0, fam).unwrap();
        let m = m_lambda(&hilbert(), &spike, &cfg).unwrap();
        // Spike at 8 + h/2 ≈ 8: T δ(x) = 1/(x - 8) on [0,1].
        let expected = 1.0 / (8.0 - 0.5);
        assert!((m.values[0] - expected).abs() < 2e-3, "{}", m.values[0]);
        let bar = GridFunction::from_fn(g, |x| if (8.0..9.0).contains(&x[0]) { 1.0 } else { 0.0 });
        let mb = m_lambda(&hilbert(), &bar, &cfg).unwrap();
        assert!((mb.values[0] - (8.5f64 / 7.5).ln()).abs() < 2e-3, "{}", mb.values[0]);
        assert_eq!(mb.values[g.index([1024, 0]).unwrap()], 0.0);
    }

    #[test]
    fn local_data_gives_zero() {
        let g = Grid::new(1, 6, &[-2.0], &[2.0]).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0].cos());
        let fam = CubeFamily::from_cubes(&g, &[Cube::new(1, &[-1.0], 2.0)]).unwrap();
        let ex = ExcludedApplications::compute(&hilbert(), &f, &fam).unwrap();
        for v in [ex.m_lambda(0.3), ex.m_p(2.0), ex.m_p(f64::INFINITY), ex.m_orlicz(OrliczGauge::ExpL)] {
            assert!(v.values.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn monotone_in_lambda_and_bridges() {
        let g = Grid::new(1, 7, &[-2.0], &[2.0]).unwrap();
        let f = GridFunction::from_fn(g, |x| if x[0] > 0.3 && x[0] < 0.7 { 1.0 } else if x[0] < -1.0 { -0.5 } else { 0.0 });
        let fam = CubeFamily::default_for(&g).unwrap();
        let ex = ExcludedApplications::compute(&hilbert(), &f, &fam).unwrap();
        let lams: Vec<f64> = (1..=6).map(|i| 0.5f64.powi(i)).collect();
        let ms: Vec<GridFunction> = lams.iter().map(|&l| ex.m_lambda(l)).collect();
        for w in ms.windows(2) {
            assert!(w[0].values.iter().zip(&w[1].values).all(|(a, b)| a <= b));
        }
        for p in [1.0, 2.0, 4.0] {
            let mp = ex.m_p(p);
            for (l, m) in lams.iter().zip(&ms) {
                assert!(m.values.iter().zip(&mp.values).all(|(a, b)| *a <= l.powf(-1.0 / p) * b));
            }
        }
        let ones = GridFunction::from_fn(g, |_| 1.0);
        assert_eq!(ex.bilinear(&ones), ex.m_p(1.0));
        assert!(ex.bilinear(&GridFunction::zeros(g)).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_orlicz_contribution() {
        let v = vec![3.0; 16];
        assert!((orlicz_of_values(&v, OrliczGauge::ExpL) - 3.0 / 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn family_shapes() {
        let g = Grid::new(2, 3, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let fam = CubeFamily::default_for(&g).unwrap();
        assert_eq!(fam.side_bounds(), Some((4, 4)));
        assert_eq!(fam.len(), 4);
        let sh = CubeFamily::shifted(&g, 4, 4).unwrap();
        assert_eq!(sh.len(), 4 + 9);
        assert_eq!(fam.containing([0, 0]), vec![0]);
        assert!(CubeFamily::dyadic(&g, 4, 2).is_err());
        assert!(MaximalConfig::new(1.0, 1.0, fam.clone()).is_err());
    }
}
