//! Discretized singular integral operators.
//!
//! An operator acts on a [`GridFunction`] by the cell sum
//! `Tf(x) = Σ_y K(x - y) f(y) h^n` over cell centers, with the diagonal
//! `y = x` always dropped (the identity-test kind is the one exception, it
//! keeps only the diagonal). Cells outside the grid box carry zero.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::field::{pow2, CellCube, Cube, Grid, GridFunction};
use crate::kernel::{
    kernel_value_unchecked, MollifiedOmega, MollifierSpec, QuadratureConfig, RadialCutoff,
    SphereKernel,
};

#[derive(Clone, Debug)]
pub enum OperatorKind {
    /// `T_Ω`.
    Rough(SphereKernel),
    /// `T_{Ω - Ω_ε}`.
    RoughDifference(Arc<MollifiedOmega>),
    /// `T_{Ω_ε}`.
    SmoothMollified(Arc<MollifiedOmega>),
    /// Convolution with `K_j = ψ(2^-j|x|) K`.
    Annular(SphereKernel, i32),
    /// `f ↦ f`, used to validate the norm estimator.
    IdentityTest(usize),
}

#[derive(Clone, Debug)]
pub struct OperatorHandle {
    pub kind: OperatorKind,
}

impl OperatorHandle {
    pub fn rough(omega: SphereKernel) -> Self {
        Self { kind: OperatorKind::Rough(omega) }
    }

    pub fn rough_difference(omega: &SphereKernel, epsilon: f64, quad: &QuadratureConfig) -> Result<Self> {
        let m = MollifiedOmega::new(omega, MollifierSpec::new(epsilon)?, quad)?;
        Ok(Self { kind: OperatorKind::RoughDifference(Arc::new(m)) })
    }

    pub fn smooth_mollified(omega: &SphereKernel, epsilon: f64, quad: &QuadratureConfig) -> Result<Self> {
        let m = MollifiedOmega::new(omega, MollifierSpec::new(epsilon)?, quad)?;
        Ok(Self { kind: OperatorKind::SmoothMollified(Arc::new(m)) })
    }

    /// Both halves of `T_Ω = T_{Ω_ε} + T_{Ω-Ω_ε}` sharing one mollified table.
    pub fn split(omega: &SphereKernel, epsilon: f64, quad: &QuadratureConfig) -> Result<(Self, Self)> {
        let m = Arc::new(MollifiedOmega::new(omega, MollifierSpec::new(epsilon)?, quad)?);
        Ok((
            Self { kind: OperatorKind::SmoothMollified(m.clone()) },
            Self { kind: OperatorKind::RoughDifference(m) },
        ))
    }

    pub fn annular(omega: SphereKernel, j: i32) -> Self {
        Self { kind: OperatorKind::Annular(omega, j) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { kind: OperatorKind::IdentityTest(dim) }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            OperatorKind::Rough(o) | OperatorKind::Annular(o, _) => o.dim(),
            OperatorKind::RoughDifference(m) | OperatorKind::SmoothMollified(m) => m.omega().dim(),
            OperatorKind::IdentityTest(d) => *d,
        }
    }

    /// `‖Ω‖_∞` of the underlying profile (1 for the identity).
    pub fn omega_sup(&self) -> f64 {
        match &self.kind {
            OperatorKind::Rough(o) | OperatorKind::Annular(o, _) => o.sup_norm(),
            OperatorKind::RoughDifference(m) | OperatorKind::SmoothMollified(m) => m.omega().sup_norm(),
            OperatorKind::IdentityTest(_) => 1.0,
        }
    }

    /// Continuous kernel at `x ≠ 0`.
    pub fn kernel_at(&self, x: &[f64]) -> f64 {
        match &self.kind {
            OperatorKind::Rough(o) => kernel_value_unchecked(o, x),
            OperatorKind::RoughDifference(m) => kernel_value_unchecked(m.omega(), x) - m.kernel(x),
            OperatorKind::SmoothMollified(m) => m.kernel(x),
            OperatorKind::Annular(o, j) => {
                let r = x[..o.dim()].iter().map(|v| v * v).sum::<f64>().sqrt();
                let p = RadialCutoff.eval(r * pow2(-*j));
                if p == 0.0 {
                    0.0
                } else {
                    p * kernel_value_unchecked(o, x)
                }
            }
            OperatorKind::IdentityTest(_) => 0.0,
        }
    }

    /// Matrix weight `K(d h) h^n` for a displacement of `d` cells.
    pub fn weight(&self, d: [i64; 2], k: i32) -> f64 {
        let h = pow2(-k);
        if d == [0, 0] {
            return if matches!(self.kind, OperatorKind::IdentityTest(_)) { 1.0 } else { 0.0 };
        }
        let x = [d[0] as f64 * h, d[1] as f64 * h];
        self.kernel_at(&x[..self.dim()]) * h.powi(self.dim() as i32)
    }
}

/// Weights `w(d)` tabulated for `|d_a| ≤ reach_a`, falling back to direct
/// evaluation outside.
pub struct KernelTable {
    op: OperatorHandle,
    k: i32,
    reach: [i64; 2],
    values: Arc<Vec<f64>>,
    flipped: bool,
}

impl KernelTable {
    pub fn new(op: &OperatorHandle, k: i32, reach: [i64; 2]) -> Self {
        let reach = if op.dim() == 1 { [reach[0], 0] } else { reach };
        let wx = (2 * reach[0] + 1) as usize;
        let wy = (2 * reach[1] + 1) as usize;
        let values = (0..wx * wy)
            .into_par_iter()
            .map(|i| {
                let dx = (i % wx) as i64 - reach[0];
                let dy = (i / wx) as i64 - reach[1];
                op.weight([dx, dy], k)
            })
            .collect();
        Self { op: op.clone(), k, reach, values: Arc::new(values), flipped: false }
    }

    /// Table large enough for any pair of cells within `margin` cells of `grid`.
    pub fn for_grid(op: &OperatorHandle, grid: &Grid, margin: i64) -> Self {
        let r = [grid.shape[0] as i64 + 2 * margin, grid.shape[1] as i64 + 2 * margin];
        Self::new(op, grid.k, r)
    }

    /// The adjoint table `w(-d)`, sharing storage.
    pub fn adjoint(&self) -> Self {
        Self {
            op: self.op.clone(),
            k: self.k,
            reach: self.reach,
            values: self.values.clone(),
            flipped: !self.flipped,
        }
    }

    #[inline]
    pub fn get(&self, d: [i64; 2]) -> f64 {
        let d = if self.flipped { [-d[0], -d[1]] } else { d };
        if d[0].abs() <= self.reach[0] && d[1].abs() <= self.reach[1] {
            let wx = 2 * self.reach[0] + 1;
            self.values[((d[1] + self.reach[1]) * wx + d[0] + self.reach[0]) as usize]
        } else {
            self.op.weight(d, self.k)
        }
    }

    pub fn op(&self) -> &OperatorHandle {
        &self.op
    }
}

/// Nonzero cells of `f` in storage order.
pub fn sources(f: &GridFunction) -> Vec<([i64; 2], f64)> {
    f.values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (f.grid.cell(i), *v))
        .collect()
}

/// `Σ_{y ∈ src, keep(y)} w(x - y) f(y)` at every target cell.
pub fn apply_to_cells(
    table: &KernelTable,
    src: &[([i64; 2], f64)],
    targets: &[[i64; 2]],
    keep: impl Fn([i64; 2]) -> bool + Sync,
) -> Vec<f64> {
    targets
        .par_iter()
        .map(|x| {
            let mut s = 0.0;
            for (y, v) in src {
                if keep(*y) {
                    s += table.get([x[0] - y[0], x[1] - y[1]]) * v;
                }
            }
            s
        })
        .collect()
}

fn grid_of_cube(f: &GridFunction, cc: &CellCube) -> Grid {
    f.grid.with_rect(cc.rect())
}

/// `T(f χ_{R^n \ 3Q}) χ_Q` as a grid function on the cells of `Q`.
pub fn apply_excluded(op: &OperatorHandle, f: &GridFunction, q: &Cube) -> Result<GridFunction> {
    let table = KernelTable::for_grid(op, &f.grid, 0);
    let cc = q.to_cells(f.grid.k)?;
    Ok(apply_excluded_cells(&table, f, &sources(f), &cc))
}

pub fn apply_excluded_cells(
    table: &KernelTable,
    f: &GridFunction,
    src: &[([i64; 2], f64)],
    cc: &CellCube,
) -> GridFunction {
    let triple = cc.triple().rect();
    let targets: Vec<[i64; 2]> = cc.rect().cells().collect();
    let values = apply_to_cells(table, src, &targets, |y| !triple.contains(y));
    GridFunction { grid: grid_of_cube(f, cc), values }
}

/// `T^{(δ)} f(x) = Σ_{|x-y| > δ} K(x-y) f(y) h^n` at every cell of the box.
pub fn apply_truncated(op: &OperatorHandle, f: &GridFunction, delta: f64) -> Result<GridFunction> {
    let h = f.grid.h();
    if delta < h {
        return Err(Error::Resolution { delta, h });
    }
    let table = KernelTable::for_grid(op, &f.grid, 0);
    let src = sources(f);
    let targets: Vec<[i64; 2]> = (0..f.grid.len()).map(|i| f.grid.cell(i)).collect();
    let r2 = (delta / h) * (delta / h);
    let values = targets
        .par_iter()
        .map(|x| {
            let mut s = 0.0;
            for (y, v) in &src {
                let d = [x[0] - y[0], x[1] - y[1]];
                if ((d[0] * d[0] + d[1] * d[1]) as f64) > r2 {
                    s += table.get(d) * v;
                }
            }
            s
        })
        .collect();
    Ok(GridFunction { grid: f.grid, values })
}

/// Dyadic radii `h, 2h, 4h, …` up to the box diameter.
pub fn default_delta_grid(grid: &Grid) -> Vec<f64> {
    let h = grid.h();
    let diam = (0..grid.dim).map(|a| grid.shape[a] as f64 * h).fold(0.0, f64::max) * (grid.dim as f64).sqrt();
    let mut out = vec![];
    let mut d = h;
    while d <= diam {
        out.push(d);
        d *= 2.0;
    }
    out
}

/// `max_{δ ∈ grid} |T^{(δ)} f|`, cellwise.
pub fn maximal_truncation(op: &OperatorHandle, f: &GridFunction, deltas: &[f64]) -> Result<GridFunction> {
    if deltas.is_empty() {
        return Err(Error::Parameter("empty truncation grid".into()));
    }
    let mut out = GridFunction::zeros(f.grid);
    for &d in deltas {
        let t = apply_truncated(op, f, d)?;
        for (o, v) in out.values.iter_mut().zip(&t.values) {
            *o = o.max(v.abs());
        }
    }
    Ok(out)
}

/// Linear convolution `out_i = Σ_j w(i - j) f_j` on a fixed grid, by FFT with
/// zero padding to at least `2M - 1` per axis.
pub struct FftConvolver {
    shape: [usize; 2],
    padded: [usize; 2],
    symbol: Vec<Complex64>,
}

impl FftConvolver {
    /// `w` gives the weight of displacement `d` (in cells).
    pub fn new(shape: [usize; 2], w: impl Fn([i64; 2]) -> f64) -> Self {
        let padded = [
            (2 * shape[0]).next_power_of_two(),
            if shape[1] > 1 { (2 * shape[1]).next_power_of_two() } else { 1 },
        ];
        let mut buf = vec![Complex64::new(0.0, 0.0); padded[0] * padded[1]];
        let (mx, my) = (shape[0] as i64, shape[1] as i64);
        for dy in -(my - 1)..my {
            for dx in -(mx - 1)..mx {
                let ix = dx.rem_euclid(padded[0] as i64) as usize;
                let iy = dy.rem_euclid(padded[1] as i64) as usize;
                buf[iy * padded[0] + ix] = Complex64::new(w([dx, dy]), 0.0);
            }
        }
        fft2(&mut buf, padded, false);
        Self { shape, padded, symbol: buf }
    }

    pub fn from_table(table: &KernelTable, grid: &Grid) -> Self {
        Self::new(grid.shape, |d| table.get(d))
    }

    /// Zero-padded FFT symbol values (the discrete multiplier).
    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.apply_with(f, false)
    }

    /// Convolution with the flipped kernel `w(-d)`, the adjoint.
    pub fn apply_adjoint(&self, f: &[f64]) -> Vec<f64> {
        self.apply_with(f, true)
    }

    fn apply_with(&self, f: &[f64], adjoint: bool) -> Vec<f64> {
        let [px, py] = self.padded;
        let [mx, my] = self.shape;
        let mut buf = vec![Complex64::new(0.0, 0.0); px * py];
        for y in 0..my {
            for x in 0..mx {
                buf[y * px + x] = Complex64::new(f[y * mx + x], 0.0);
            }
        }
        fft2(&mut buf, self.padded, false);
        for (b, s) in buf.iter_mut().zip(&self.symbol) {
            // Real kernels: the flipped kernel has the conjugate symbol.
            *b *= if adjoint { s.conj() } else { *s };
        }
        fft2(&mut buf, self.padded, true);
        let scale = 1.0 / (px * py) as f64;
        let mut out = vec![0.0; mx * my];
        for y in 0..my {
            for x in 0..mx {
                out[y * mx + x] = buf[y * px + x].re * scale;
            }
        }
        out
    }
}

fn fft2(buf: &mut [Complex64], padded: [usize; 2], inverse: bool) {
    let [px, py] = padded;
    let mut planner = FftPlanner::new();
    let fx = if inverse { planner.plan_fft_inverse(px) } else { planner.plan_fft_forward(px) };
    for row in buf.chunks_mut(px) {
        fx.process(row);
    }
    if py > 1 {
        let fy = if inverse { planner.plan_fft_inverse(py) } else { planner.plan_fft_forward(py) };
        let mut col = vec![Complex64::new(0.0, 0.0); py];
        for x in 0..px {
            for y in 0..py {
                col[y] = buf[y * px + x];
            }
            fy.process(&mut col);
            for y in 0..py {
                buf[y * px + x] = col[y];
            }
        }
    }
}

/// FFT evaluation of `apply_truncated`; agrees with the direct sum.
pub fn apply_truncated_fft(op: &OperatorHandle, f: &GridFunction, delta: f64) -> Result<GridFunction> {
    let h = f.grid.h();
    if delta < h {
        return Err(Error::Resolution { delta, h });
    }
    let r2 = (delta / h) * (delta / h);
    let k = f.grid.k;
    let conv = FftConvolver::new(f.grid.shape, |d| {
        if ((d[0] * d[0] + d[1] * d[1]) as f64) > r2 {
            op.weight(d, k)
        } else {
            0.0
        }
    });
    Ok(GridFunction { grid: f.grid, values: conv.apply(&f.values) })
}

pub const OPNORM_TOLERANCE: f64 = 1e-4;
pub const OPNORM_MAX_ITERATIONS: usize = 10_000;

/// Largest singular value of `T` restricted to functions on `grid` (zero
/// padding), by power iteration on `T* T`.
pub fn opnorm_l2(op: &OperatorHandle, grid: &Grid, seed: u64) -> Result<f64> {
    let table = KernelTable::for_grid(op, grid, 0);
    let conv = FftConvolver::from_table(&table, grid);
    opnorm_of_convolver(&conv, grid.len(), seed)
}

pub fn opnorm_of_convolver(conv: &FftConvolver, len: usize, seed: u64) -> Result<f64> {
    if conv.symbol().iter().all(|s| s.norm() == 0.0) {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut prev = 0.0;
    let mut prev_step = f64::INFINITY;
    for _ in 0..OPNORM_MAX_ITERATIONS {
        let tv = conv.apply(&v);
        let sigma2: f64 = tv.iter().map(|x| x * x).sum();
        let mut w = conv.apply_adjoint(&tv);
        if normalize(&mut w) == 0.0 {
            return Ok(0.0);
        }
        v = w;
        let sigma = sigma2.sqrt();
        let step = (sigma - prev).abs();
        // Geometric tail estimate of the remaining error.
        let ratio = if prev_step.is_finite() && prev_step > 0.0 { step / prev_step } else { 1.0 };
        let tail = if ratio < 1.0 { step * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if prev > 0.0 && step <= OPNORM_TOLERANCE * sigma && tail <= OPNORM_TOLERANCE * sigma {
            return Ok(sigma);
        }
        prev = sigma;
        prev_step = step;
    }
    Err(Error::Convergence { iterations: OPNORM_MAX_ITERATIONS })
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{preset_kernel, project_zero_mean, Preset};

    fn hilbert() -> OperatorHandle {
        OperatorHandle::rough(project_zero_mean(&[1.0, -1.0], 1).unwrap())
    }

    fn indicator(grid: Grid, a: f64, b: f64) -> GridFunction {
        GridFunction::from_fn(grid, |x| if x[0] >= a && x[0] < b { 1.0 } else { 0.0 })
    }

    #[test]
    fn excluded_vanishes_for_local_support() {
        let g = Grid::new(1, 6, &[-2.0], &[3.0]).unwrap();
        let f = indicator(g, -1.0, 2.0);
        let q = Cube::new(1, &[0.0], 1.0);
        let out = apply_excluded(&hilbert(), &f, &q).unwrap();
        assert!(out.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn excluded_hilbert_closed_form() {
        let g = Grid::new(1, 10, &[0.0], &[10.0]).unwrap();
        let f = indicator(g, 8.0, 9.0);
        let q = Cube::new(1, &[0.0], 1.0);
        let out = apply_excluded(&hilbert(), &f, &q).unwrap();
        for i in 0..out.grid.len() {
            let x = out.grid.center(i)[0];
            let exact = ((8.0 - x) / (9.0 - x)).ln();
            assert!((out.values[i] - exact).abs() < 1e-3);
        }
        assert!((out.values[0] - (8.0f64 / 9.0).ln()).abs() < 1e-3);
    }

    #[test]
    fn truncated_hilbert_at_two() {
        let g = Grid::new(1, 10, &[-4.0], &[4.0]).unwrap();
        let f = indicator(g, -1.0, 1.0);
        let t = apply_truncated(&hilbert(), &f, 0.5).unwrap();
        let i = g.index([2 * 1024, 0]).unwrap();
        assert!((t.values[i] - 3f64.ln()).abs() < 1e-3);
        assert!(apply_truncated(&hilbert(), &f, g.h() / 2.0).is_err());
        // Radius beyond the support: nothing left.
        let far = apply_truncated(&hilbert(), &f, 20.0).unwrap();
        assert!(far.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn odd_kernel_cancels_on_even_data() {
        let g = Grid::new(1, 6, &[-2.0], &[2.0]).unwrap();
        // Even about the center of cell 0 (x0 = h/2).
        let h = g.h();
        let f = GridFunction::from_fn(g, |x| {
            let y = x[0] - h / 2.0;
            if y.abs() < 1.0 { (-y * y).exp() } else { 0.0 }
        });
        let t = apply_truncated(&hilbert(), &f, h).unwrap();
        assert!(t.values[g.index([0, 0]).unwrap()].abs() < 1e-12);
    }

    #[test]
    fn fft_path_matches_direct() {
        let g = Grid::new(2, 4, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = GridFunction::from_fn(g, |_| rng.gen_range(-1.0..1.0));
        let op = OperatorHandle::rough(preset_kernel(Preset::SignBands, 2, 64, 0).unwrap());
        for delta in [g.h(), 0.2] {
            let a = apply_truncated(&op, &f, delta).unwrap();
            let b = apply_truncated_fft(&op, &f, delta).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn identity_norm_is_one() {
        let g = Grid::new(2, 4, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let n = opnorm_l2(&OperatorHandle::identity(2), &g, 1).unwrap();
        assert!((n - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_kernel_norm() {
        let zero = project_zero_mean(&[1.0; 8], 2).unwrap();
        let g = Grid::new(2, 3, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(opnorm_l2(&OperatorHandle::rough(zero), &g, 0).unwrap(), 0.0);
    }

    #[test]
    fn maximal_truncation_dominates() {
        let g = Grid::new(1, 6, &[-2.0], &[2.0]).unwrap();
        let f = indicator(g, -1.0, 1.0);
        assert!(maximal_truncation(&hilbert(), &f, &[]).is_err());
        let deltas = default_delta_grid(&g);
        let m = maximal_truncation(&hilbert(), &f, &deltas).unwrap();
        for &d in &deltas {
            let t = apply_truncated(&hilbert(), &f, d).unwrap();
            for (a, b) in m.values.iter().zip(&t.values) {
                assert!(*a >= b.abs());
            }
        }
        let single = maximal_truncation(&hilbert(), &f, &[0.25]).unwrap();
        let t = apply_truncated(&hilbert(), &f, 0.25).unwrap();
        assert_eq!(single, t.abs());
    }
}
