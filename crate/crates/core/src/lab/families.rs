use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{CellRect, Grid, GridFunction};

use super::config::{TestFamilySpec, TestKind};

#[derive(Clone, Debug)]
pub struct TestFunction {
    pub id: String,
    pub f: GridFunction,
}

/// Cells of the middle half of the box along each axis.
fn middle(grid: &Grid) -> CellRect {
    let r = grid.cell_rect();
    let mut lo = r.lo;
    let mut hi = r.hi;
    for a in 0..grid.dim {
        let w = r.hi[a] - r.lo[a];
        lo[a] = r.lo[a] + w / 4;
        hi[a] = (r.lo[a] + 3 * w / 4).max(lo[a] + 1);
    }
    CellRect { lo, hi }
}

fn random_cell(rng: &mut ChaCha8Rng, r: &CellRect) -> [i64; 2] {
    [rng.gen_range(r.lo[0]..r.hi[0]), rng.gen_range(r.lo[1]..r.hi[1])]
}

/// A random dyadic cube (side `2^a` cells, aligned to its side) inside `r`.
fn random_dyadic(rng: &mut ChaCha8Rng, r: &CellRect, dim: usize, max_log: u32) -> CellRect {
    let width = (0..dim).map(|a| r.hi[a] - r.lo[a]).min().unwrap_or(1);
    let cap = (63 - (width.max(1) as u64).leading_zeros()).min(max_log).max(1);
    let side = 1i64 << rng.gen_range(1..=cap);
    let side = side.min(width.max(1));
    let mut lo = [0, 0];
    let mut hi = [1, 1];
    for a in 0..dim {
        let first = r.lo[a].div_euclid(side) + 1;
        let last = (r.hi[a] - side).div_euclid(side);
        let t = if last >= first { rng.gen_range(first..=last) } else { first };
        lo[a] = t * side;
        hi[a] = lo[a] + side;
    }
    CellRect { lo, hi }
}

pub fn spike(grid: &Grid, cell: [i64; 2]) -> GridFunction {
    let mut f = GridFunction::zeros(*grid);
    if let Some(i) = grid.index(cell) {
        f.values[i] = 1.0 / grid.cell_measure();
    }
    f
}

/// `+1` on the lower half of `cube` along the first axis, `-1` on the upper half.
pub fn atom(grid: &Grid, cube: &CellRect) -> GridFunction {
    let mid = (cube.lo[0] + cube.hi[0]) / 2;
    let mut f = GridFunction::zeros(*grid);
    for c in cube.cells() {
        if let Some(i) = grid.index(c) {
            f.values[i] = if c[0] < mid { 1.0 } else { -1.0 };
        }
    }
    f
}

/// Generates `spec.count` functions of each kind from one seeded stream.
pub fn test_family(grid: &Grid, spec: &TestFamilySpec, seed: u64) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mid = middle(grid);
    let longest = (0..grid.dim).map(|a| grid.shape[a]).max().unwrap_or(1) as u64;
    let max_log = (64 - longest.leading_zeros()).saturating_sub(4).max(1);
    let mut out = vec![];
    for kind in &spec.kinds {
        for i in 0..spec.count {
            let (name, f) = match kind {
                TestKind::Spike => ("spike", spike(grid, random_cell(&mut rng, &mid))),
                TestKind::Atom => {
                    let q = random_dyadic(&mut rng, &mid, grid.dim, max_log);
                    ("atom", atom(grid, &q))
                }
                TestKind::Comb => {
                    let q = random_dyadic(&mut rng, &mid, grid.dim, max_log + 1);
                    let spacing = 1i64 << rng.gen_range(1..=3);
                    let mut f = GridFunction::zeros(*grid);
                    for c in q.cells() {
                        if (0..grid.dim).all(|a| c[a].rem_euclid(spacing) == 0) {
                            let i = grid.index(c).expect("comb inside box");
                            f.values[i] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        }
                    }
                    ("comb", f)
                }
            };
            out.push(TestFunction { id: format!("{name}-{i}"), f });
        }
    }
    out
}

/// Uniform `[-1, 1]` values on every cell of `r`.
pub fn random_on(grid: &Grid, r: &CellRect, rng: &mut ChaCha8Rng) -> GridFunction {
    let mut f = GridFunction::zeros(*grid);
    for c in r.cells() {
        if let Some(i) = grid.index(c) {
            f.values[i] = rng.gen_range(-1.0..1.0);
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_is_seeded_and_nonzero() {
        let g = Grid::new(2, 5, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let spec = TestFamilySpec::default();
        let a = test_family(&g, &spec, 9);
        let b = test_family(&g, &spec, 9);
        assert_eq!(a.len(), 12);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.f, y.f);
            assert!(x.f.l1_norm() > 0.0);
        }
        for t in a.iter().filter(|t| t.id.starts_with("atom")) {
            assert_eq!(t.f.integral(), 0.0);
        }
        for t in a.iter().filter(|t| t.id.starts_with("spike")) {
            assert!((t.f.l1_norm() - 1.0).abs() < 1e-12);
        }
    }
}
