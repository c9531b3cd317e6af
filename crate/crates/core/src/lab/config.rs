use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid;
use crate::kernel::KernelSpec;
use crate::maximal::CubeFamily;
use crate::sparse::{Exponents, ThresholdMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    /// `h = 2^-k`.
    pub k: i32,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        if self.lo.len() != self.dimension || self.hi.len() != self.dimension {
            return Err(Error::InvalidInput("grid bounds do not match the dimension".into()));
        }
        Grid::new(self.dimension, self.k, &self.lo, &self.hi)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    #[default]
    Dyadic,
    Shifted,
    Dense,
}

/// Cube-family bounds; sides are in cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub min_side: i64,
    /// Defaults to half the longest box side.
    pub max_side: Option<i64>,
    pub per_octave: u32,
    pub shifts: i64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self { kind: FamilyKind::Dyadic, min_side: 4, max_side: None, per_octave: 4, shifts: 4 }
    }
}

impl FamilySpec {
    pub fn max_side_for(&self, grid: &Grid) -> i64 {
        let longest = (0..grid.dim).map(|a| grid.shape[a] as i64).max().unwrap_or(1);
        self.max_side.unwrap_or((longest / 2).max(self.min_side))
    }

    pub fn build(&self, grid: &Grid) -> Result<CubeFamily> {
        let max = self.max_side_for(grid);
        match self.kind {
            FamilyKind::Dyadic => CubeFamily::dyadic(grid, self.min_side, max),
            FamilyKind::Shifted => CubeFamily::shifted(grid, self.min_side, max),
            FamilyKind::Dense => CubeFamily::dense(grid, self.min_side, max, self.per_octave, self.shifts),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    /// One cell carrying unit mass.
    Spike,
    /// `±1` halves of a random dyadic cube, mean zero.
    Atom,
    /// Random signs on an evenly spaced set of cells.
    Comb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestFamilySpec {
    /// Functions per kind.
    pub count: usize,
    pub kinds: Vec<TestKind>,
}

impl Default for TestFamilySpec {
    fn default() -> Self {
        Self { count: 4, kinds: vec![TestKind::Spike, TestKind::Atom, TestKind::Comb] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakTarget {
    T,
    MT,
    MExpLT,
    #[default]
    MPT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakNormSpec {
    pub which: WeakTarget,
    pub p_grid: Vec<f64>,
}

impl Default for WeakNormSpec {
    fn default() -> Self {
        Self { which: WeakTarget::MPT, p_grid: vec![1.0, 2.0, 4.0, 8.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparseSpec {
    pub pairs: usize,
    pub exponents: Exponents,
    pub mode: ThresholdMode,
    /// Restrict the domain to the grid box (the default) or to a cell rectangle.
    pub domain_lo: Option<Vec<f64>>,
    pub domain_hi: Option<Vec<f64>>,
}

impl Default for SparseSpec {
    fn default() -> Self {
        Self { pairs: 10, exponents: Exponents::ONES, mode: ThresholdMode::Calibrated, domain_lo: None, domain_hi: None }
    }
}

fn default_lambdas() -> Vec<f64> {
    (1..=10).map(|i| 0.5f64.powi(i)).collect()
}

fn default_epsilons() -> Vec<f64> {
    (0..=8).map(|i| 0.5f64.powi(i)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    pub kernel: KernelSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub family: FamilySpec,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub tests: TestFamilySpec,
    #[serde(default)]
    pub weak_norm: WeakNormSpec,
    #[serde(default)]
    pub sparse: SparseSpec,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel.dimension != self.grid.dimension {
            return Err(Error::InvalidInput("kernel and grid dimensions differ".into()));
        }
        let dyadic = |v: f64| v > 0.0 && v.log2().fract() == 0.0;
        if let Some(l) = self.lambdas.iter().find(|&&l| !(l > 0.0 && l < 1.0 && dyadic(l))) {
            return Err(Error::Parameter(format!("lambda {l} is not a dyadic value in (0,1)")));
        }
        if let Some(e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e <= 1.0 && dyadic(e))) {
            return Err(Error::Parameter(format!("epsilon {e} is not a dyadic value in (0,1]")));
        }
        if let Some(p) = self.weak_norm.p_grid.iter().find(|&&p| !(p >= 1.0)) {
            return Err(Error::Parameter(format!("p = {p} below 1")));
        }
        self.sparse.exponents.validate()?;
        self.grid.build()?;
        Ok(())
    }
}
