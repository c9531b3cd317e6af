//! Non-increasing rearrangements, cube quantiles, and weak quasinorms.
//!
//! With cell values `v_0 ≥ v_1 ≥ …` of `|f|` on a cell set of cell measure `c`,
//! the right-continuous rearrangement `f*(t) = inf{α : |{|f| > α}| ≤ t}` is the
//! step function `f*(t) = v_⌊t/c⌋` (zero past the last cell).

use crate::error::{Error, Result};
use crate::field::{Cube, GridFunction};

#[derive(Clone, Debug, PartialEq)]
pub struct Rearrangement {
    sorted: Vec<f64>,
    cell_measure: f64,
}

impl Rearrangement {
    /// Rearrangement of raw values, each carrying measure `cell_measure`.
    pub fn from_values(values: impl IntoIterator<Item = f64>, cell_measure: f64) -> Self {
        let mut sorted: Vec<f64> = values.into_iter().map(f64::abs).collect();
        sorted.sort_unstable_by(|a, b| b.total_cmp(a));
        Self { sorted, cell_measure }
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn cell_measure(&self) -> f64 {
        self.cell_measure
    }

    /// `|E|`.
    pub fn total(&self) -> f64 {
        self.sorted.len() as f64 * self.cell_measure
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::INFINITY;
        }
        let i = (t / self.cell_measure).floor();
        if i >= self.sorted.len() as f64 {
            0.0
        } else {
            self.sorted[i as usize]
        }
    }

    /// Jump points `t = m·c`, `m = 0..len`.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.sorted.len()).map(move |m| m as f64 * self.cell_measure)
    }

    /// `Σ (f*)^p · c`, equal to `∫_E |f|^p`.
    pub fn integral_pow(&self, p: f64) -> f64 {
        self.sorted.iter().map(|v| v.powf(p)).sum::<f64>() * self.cell_measure
    }

    /// Quantile at fraction `λ` of the total measure, clamped to the last cell
    /// so that `λ = 1` returns the smallest value.
    pub fn quantile_fraction(&self, lambda: f64) -> f64 {
        let n = self.sorted.len();
        if n == 0 {
            return 0.0;
        }
        let i = ((lambda * n as f64).floor() as usize).min(n - 1);
        self.sorted[i]
    }
}

/// Rearrangement of `|f|` over the cells where `mask` is true.
pub fn rearrange(f: &GridFunction, mask: &[bool]) -> Result<Rearrangement> {
    if mask.len() != f.values.len() {
        return Err(Error::InvalidInput("mask length differs from grid".into()));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::InvalidInput("empty cell set".into()));
    }
    let vals = f.values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| *v);
    Ok(Rearrangement::from_values(vals, f.grid.cell_measure()))
}

/// Cell values of `f` on a grid-aligned cube, zero outside the grid box.
pub fn cube_values(f: &GridFunction, q: &Cube) -> Result<Vec<f64>> {
    let cc = q.to_cells(f.grid.k)?;
    Ok(cc.rect().cells().map(|c| f.at(c)).collect())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::Parameter(format!("lambda = {lambda} not in (0,1]")));
    }
    Ok(())
}

/// `(f χ_Q)*(λ|Q|)`.
pub fn quantile(f: &GridFunction, q: &Cube, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let vals = cube_values(f, q)?;
    Ok(quantile_of_values(vals, lambda))
}

/// `λ`-quantile of a list of equal-measure cell values (by selection).
pub fn quantile_of_values(mut vals: Vec<f64>, lambda: f64) -> f64 {
    let n = vals.len();
    if n == 0 {
        return 0.0;
    }
    for v in vals.iter_mut() {
        *v = v.abs();
    }
    let i = ((lambda * n as f64).floor() as usize).min(n - 1);
    let (_, v, _) = vals.select_nth_unstable_by(i, |a, b| b.total_cmp(a));
    *v
}

/// `sup_α α |{|F| > α}|^{1/p}`, attained just below one of the cell values.
pub fn weak_quasinorm(f: &GridFunction, p: f64) -> f64 {
    let r = Rearrangement::from_values(f.values.iter().copied(), f.grid.cell_measure());
    weak_of_rearrangement(&r, p)
}

pub fn weak_of_rearrangement(r: &Rearrangement, p: f64) -> f64 {
    r.sorted
        .iter()
        .enumerate()
        .map(|(m, v)| v * ((m + 1) as f64 * r.cell_measure).powf(1.0 / p))
        .fold(0.0, f64::max)
}
