//! Sparse families and the constructive sparse bound.
//!
//! The construction works one root cube `Q₀` at a time. It thresholds two
//! score functions on `Q₀`, runs a Calderón–Zygmund stopping procedure on
//! the union of the exceptional sets, and recurses into the stopping cubes.
//! Every processed cube keeps the part of itself not covered by its stopping
//! cubes as a witness set.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CellCube, CellRect, GridFunction};
use crate::sio::KernelTable;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl Exponents {
    pub const ONES: Exponents = Exponents { q: 1.0, r: 1.0, s: 1.0 };

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 1.0 && self.q <= self.r && self.s >= 1.0) {
            return Err(Error::Parameter(format!("exponents {self:?} need 1 ≤ q ≤ r, s ≥ 1")));
        }
        Ok(())
    }
}

/// Threshold selection for the exceptional sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum ThresholdMode {
    /// Smallest thresholds meeting the measure bounds, read off quantiles.
    Calibrated,
    /// Thresholds from supplied norm estimates with the explicit constants.
    ExplicitConstants { weak_norm: f64, bilinear_norm: f64 },
}

impl ThresholdMode {
    fn constants(&self, n: usize, e: &Exponents) -> Option<(f64, f64)> {
        match *self {
            ThresholdMode::Calibrated => None,
            ThresholdMode::ExplicitConstants { weak_norm, bilinear_norm } => {
                let a = (8.0 * 6f64.powi(n as i32)).powf(1.0 / e.q) * weak_norm;
                let inv_nu = 1.0 / e.r + 1.0 / e.s;
                let b = 2f64.powi(n as i32 + 3).powf(inv_nu) * 3f64.powf(n as f64 / e.r) * bilinear_norm;
                Some((a, b))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstructionTrace {
    pub cube: CellCube,
    pub depth: usize,
    pub a: f64,
    pub b: f64,
    pub cube_cells: usize,
    pub e1_cells: usize,
    pub e2_cells: usize,
    pub stopping: Vec<CellCube>,
}

impl ConstructionTrace {
    pub fn stopping_cells(&self) -> usize {
        self.stopping.iter().map(|p| p.count()).sum()
    }

    /// `max(|E₁|, |E₂|) ≤ 2^{-(n+3)} |Q₀|`.
    pub fn exceptional_bound_holds(&self) -> bool {
        let cap = self.cube_cells as f64 / 2f64.powi(self.cube.dim as i32 + 3);
        self.e1_cells as f64 <= cap && self.e2_cells as f64 <= cap
    }

    /// `Σ |P_j| ≤ |Q₀| / 2`.
    pub fn stopping_bound_holds(&self) -> bool {
        2 * self.stopping_cells() <= self.cube_cells
    }
}

/// Cubes with witness masks over their own cells (storage order).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFamily {
    pub dim: usize,
    pub k: i32,
    pub cubes: Vec<CellCube>,
    pub witnesses: Vec<Vec<bool>>,
    pub eta: f64,
}

impl SparseFamily {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `{3Q}` with the same witness sets, claimed sparse at `η / 3^n`.
    pub fn tripled(&self) -> SparseFamily {
        let (cubes, witnesses) = self
            .cubes
            .iter()
            .zip(&self.witnesses)
            .map(|(q, w)| {
                let t = q.triple();
                let inner = q.rect();
                let mut it = w.iter();
                let mask = t
                    .rect()
                    .cells()
                    .map(|c| if inner.contains(c) { *it.next().unwrap() } else { false })
                    .collect();
                (t, mask)
            })
            .unzip();
        SparseFamily {
            dim: self.dim,
            k: self.k,
            cubes,
            witnesses,
            eta: self.eta / 3f64.powi(self.dim as i32),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SparseEntry {
    lo: [i64; 2],
    side: i64,
    /// Alternating run lengths over the cube's cells, starting with a
    /// (possibly empty) run outside the witness.
    witness_rle: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SparseFile {
    dim: usize,
    k: i32,
    eta: f64,
    cubes: Vec<SparseEntry>,
}

pub fn rle_encode(mask: &[bool]) -> Vec<usize> {
    let mut runs = vec![];
    let mut cur = false;
    let mut len = 0;
    for &m in mask {
        if m == cur {
            len += 1;
        } else {
            runs.push(len);
            cur = m;
            len = 1;
        }
    }
    runs.push(len);
    runs
}

pub fn rle_decode(runs: &[usize]) -> Vec<bool> {
    runs.iter()
        .enumerate()
        .flat_map(|(i, &n)| std::iter::repeat_n(i % 2 == 1, n))
        .collect()
}

impl SparseFamily {
    pub fn to_json(&self) -> Result<String> {
        let file = SparseFile {
            dim: self.dim,
            k: self.k,
            eta: self.eta,
            cubes: self
                .cubes
                .iter()
                .zip(&self.witnesses)
                .map(|(q, w)| SparseEntry { lo: q.lo, side: q.side, witness_rle: rle_encode(w) })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: SparseFile = serde_json::from_str(s)?;
        let (cubes, witnesses) = file
            .cubes
            .into_iter()
            .map(|e| (CellCube { dim: file.dim, lo: e.lo, side: e.side }, rle_decode(&e.witness_rle)))
            .unzip();
        Ok(Self { dim: file.dim, k: file.k, cubes, witnesses, eta: file.eta })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparsenessReport {
    pub passed: bool,
    pub eta: f64,
    pub cubes: usize,
    pub subset_violations: usize,
    pub overlapping_cells: usize,
    pub measure_violations: usize,
    pub worst_ratio: f64,
}

pub fn verify_sparseness(s: &SparseFamily, eta: f64) -> SparsenessReport {
    let mut seen = HashSet::new();
    let mut subset_violations = 0;
    let mut overlapping_cells = 0;
    let mut measure_violations = 0;
    let mut worst = f64::INFINITY;
    for (q, w) in s.cubes.iter().zip(&s.witnesses) {
        if w.len() != q.count() {
            subset_violations += 1;
            continue;
        }
        let mut size = 0usize;
        for (c, &m) in q.rect().cells().zip(w) {
            if m {
                size += 1;
                if !seen.insert(c) {
                    overlapping_cells += 1;
                }
            }
        }
        let ratio = size as f64 / q.count() as f64;
        worst = worst.min(ratio);
        if ratio < eta {
            measure_violations += 1;
        }
    }
    SparsenessReport {
        passed: subset_violations == 0 && overlapping_cells == 0 && measure_violations == 0,
        eta,
        cubes: s.cubes.len(),
        subset_violations,
        overlapping_cells,
        measure_violations,
        worst_ratio: if s.cubes.is_empty() { 1.0 } else { worst },
    }
}

fn pow_sum(f: &GridFunction, r: &CellRect, p: f64) -> f64 {
    r.cells().map(|c| f.at(c).abs().powf(p)).sum()
}

/// `⟨f⟩_{p,Q}` with zero extension outside the grid box.
pub fn cell_average(f: &GridFunction, q: &CellCube, p: f64) -> f64 {
    (pow_sum(f, &q.rect(), p) / q.count() as f64).powf(1.0 / p)
}

/// `Λ_{r,s}(S; f, g) = Σ_Q ⟨f⟩_{r,Q} ⟨g⟩_{s,Q} |Q|`.
pub fn sparse_form(s: &SparseFamily, f: &GridFunction, g: &GridFunction, r: f64, s_exp: f64) -> f64 {
    let cm = f.grid.cell_measure();
    let terms: Vec<f64> = s
        .cubes
        .par_iter()
        .map(|q| cell_average(f, q, r) * cell_average(g, q, s_exp) * q.count() as f64 * cm)
        .collect();
    terms.iter().sum()
}

/// Root cubes: a cube `Q₀` around the support of `f`, then rings of
/// `3^n - 1` cubes congruent to `3^{m}Q₀` tiling `3^{m+1}Q₀ \ 3^m Q₀`, until
/// the rings leave `domain`. A square power-of-two domain holding the
/// support is itself `Q₀`.
pub fn partition_support(f: &GridFunction, domain: &CellRect) -> Result<Vec<CellCube>> {
    let n = f.grid.dim;
    let Some(supp) = f.support() else {
        return Err(Error::Domain("f vanishes identically".into()));
    };
    if supp.intersect(domain) != Some(supp) {
        return Err(Error::Domain("support of f leaves the domain".into()));
    }
    let ext = |r: &CellRect| (0..n).map(|a| r.hi[a] - r.lo[a]).max().unwrap_or(1);
    let dom_side = ext(domain);
    let square = (0..n).all(|a| domain.hi[a] - domain.lo[a] == dom_side);
    let q0 = if square && (dom_side as u64).is_power_of_two() {
        CellCube { dim: n, lo: domain.lo, side: dom_side }
    } else {
        let side = (ext(&supp) as u64).next_power_of_two() as i64;
        let mut lo = supp.lo;
        if n == 1 {
            lo[1] = 0;
        }
        CellCube { dim: n, lo, side }
    };
    let mut roots = vec![q0];
    let mut inner = q0;
    loop {
        let outer = inner.triple();
        if contains_rect(&inner.rect(), domain) {
            break;
        }
        let offsets: Vec<[i64; 2]> = if n == 1 {
            vec![[0, 0], [2, 0]]
        } else {
            (0..3).flat_map(|y| (0..3).map(move |x| [x, y])).filter(|o| *o != [1, 1]).collect()
        };
        for o in offsets {
            let r = CellCube {
                dim: n,
                lo: [outer.lo[0] + o[0] * inner.side, outer.lo[1] + o[1] * inner.side],
                side: inner.side,
            };
            if r.rect().intersect(domain).is_some() {
                roots.push(r);
            }
        }
        inner = outer;
    }
    Ok(roots)
}

fn contains_rect(outer: &CellRect, inner: &CellRect) -> bool {
    (0..2).all(|a| outer.lo[a] <= inner.lo[a] && inner.hi[a] <= outer.hi[a])
}

/// Dyadic children when the side is even.
fn children(q: &CellCube) -> Option<Vec<CellCube>> {
    q.children()
}

/// All cubes of `D(Q₀)` reachable by halving, `Q₀` included.
fn dyadic_subcubes(q0: &CellCube) -> Vec<CellCube> {
    let mut out = vec![*q0];
    let mut i = 0;
    while i < out.len() {
        if let Some(kids) = children(&out[i]) {
            out.extend(kids);
        }
        i += 1;
    }
    out
}

struct Ctx<'a> {
    table: &'a KernelTable,
    f: &'a GridFunction,
    g: &'a GridFunction,
    exps: Exponents,
    mode: ThresholdMode,
}

/// `T(f χ_R)` on the cells of `target`.
fn apply_restricted(ctx: &Ctx, src: &CellRect, target: &CellRect) -> Vec<f64> {
    let sources: Vec<([i64; 2], f64)> =
        src.cells().map(|c| (c, ctx.f.at(c))).filter(|(_, v)| *v != 0.0).collect();
    target
        .cells()
        .map(|x| sources.iter().map(|(y, v)| ctx.table.get([x[0] - y[0], x[1] - y[1]]) * v).sum())
        .collect()
}

/// Threshold `τ` with `#{v > τ} ≤ allowed`: the `(allowed+1)`-th largest value.
fn calibrated_threshold(values: &[f64], allowed: usize) -> f64 {
    let mut v = values.to_vec();
    let i = allowed.min(v.len() - 1);
    let (_, t, _) = v.select_nth_unstable_by(i, |a, b| b.total_cmp(a));
    *t
}

fn local_scores(ctx: &Ctx, q0: &CellCube) -> (Vec<f64>, Vec<f64>) {
    let r0 = q0.rect();
    let full = apply_restricted(ctx, &q0.triple().rect(), &r0);
    let score1: Vec<f64> = full.iter().map(|v| v.abs()).collect();
    let subs = dyadic_subcubes(q0);
    let per_cube: Vec<(CellCube, f64)> = subs
        .par_iter()
        .filter(|q| *q != q0)
        .map(|q| {
            let inner = apply_restricted(ctx, &q.triple().rect(), &q.rect());
            let mut acc = 0.0;
            for (c, t) in q.rect().cells().zip(inner) {
                let i = local_index(&r0, c);
                acc += (full[i] - t).abs() * ctx.g.at(c).abs();
            }
            (*q, acc / q.count() as f64)
        })
        .collect();
    let mut score2 = vec![0.0; r0.count()];
    for (q, v) in per_cube {
        for c in q.rect().cells() {
            let i = local_index(&r0, c);
            if v > score2[i] {
                score2[i] = v;
            }
        }
    }
    (score1, score2)
}

fn local_index(r: &CellRect, c: [i64; 2]) -> usize {
    let w = r.hi[0] - r.lo[0];
    ((c[1] - r.lo[1]) * w + c[0] - r.lo[0]) as usize
}

/// Stopping cubes of `χ_E` at height `2^{-(n+1)}` inside `D(Q₀) \ {Q₀}`.
/// A cube that cannot be halved but meets `E` is kept as a stopping cube.
fn stopping_of_set(q0: &CellCube, e: &[bool]) -> Vec<CellCube> {
    let r0 = q0.rect();
    let height = 0.5f64.powi(q0.dim as i32 + 1);
    let mut out = vec![];
    let mut stack = children(q0).unwrap_or_default();
    stack.reverse();
    while let Some(q) = stack.pop() {
        let hits = q.rect().cells().filter(|c| e[local_index(&r0, *c)]).count();
        if hits == 0 {
            continue;
        }
        if hits as f64 > height * q.count() as f64 {
            out.push(q);
        } else if let Some(mut kids) = children(&q) {
            kids.reverse();
            stack.extend(kids);
        } else {
            out.push(q);
        }
    }
    out
}

/// One step of the construction on `Q₀`: thresholds, exceptional sets and
/// stopping cubes.
pub fn local_stopping(
    q0: &CellCube,
    f: &GridFunction,
    g: &GridFunction,
    table: &KernelTable,
    exps: Exponents,
    mode: ThresholdMode,
) -> Result<ConstructionTrace> {
    exps.validate()?;
    let ctx = Ctx { table, f, g, exps, mode };
    Ok(local_step(&ctx, q0, 0))
}

fn local_step(ctx: &Ctx, q0: &CellCube, depth: usize) -> ConstructionTrace {
    let n = q0.dim;
    let e = ctx.exps;
    let t3 = q0.triple();
    let f_q = cell_average(ctx.f, &t3, e.q);
    let f_r = cell_average(ctx.f, &t3, e.r);
    let g_s = cell_average(ctx.g, q0, e.s);
    let cells = q0.count();
    let (score1, score2) = local_scores(ctx, q0);
    let splittable = children(q0).is_some();
    let allowed = if splittable { cells >> (n + 3) } else { 0 };
    let norm1 = f_q;
    let norm2 = f_r * g_s;
    let (t1, t2) = match ctx.mode.constants(n, &e) {
        Some((a, b)) if splittable => (a * norm1, b * norm2),
        _ => (calibrated_threshold(&score1, allowed), calibrated_threshold(&score2, allowed)),
    };
    let (a, b) = (ratio(t1, norm1), ratio(t2, norm2));
    let e1: Vec<bool> = score1.iter().map(|&v| v > t1).collect();
    let e2: Vec<bool> = score2.iter().map(|&v| v > t2).collect();
    let union: Vec<bool> = e1.iter().zip(&e2).map(|(x, y)| *x || *y).collect();
    let stopping = if splittable { stopping_of_set(q0, &union) } else { vec![] };
    ConstructionTrace {
        cube: *q0,
        depth,
        a,
        b,
        cube_cells: cells,
        e1_cells: e1.iter().filter(|&&x| x).count(),
        e2_cells: e2.iter().filter(|&&x| x).count(),
        stopping,
    }
}

fn ratio(t: f64, norm: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t / norm
    }
}

#[derive(Clone, Debug)]
pub struct SparseBound {
    /// The processed cubes with witnesses `Q \ ∪P_j`, 1/2-sparse.
    pub family: SparseFamily,
    /// `{3Q}`, sparse at `1/(2·3^n)`.
    pub sparse: SparseFamily,
    pub constant: f64,
    pub traces: Vec<ConstructionTrace>,
    pub roots: Vec<CellCube>,
}

/// Runs the recursive construction from every root of `partition_support`.
pub fn sparse_dominate(
    f: &GridFunction,
    g: &GridFunction,
    table: &KernelTable,
    exps: Exponents,
    mode: ThresholdMode,
    domain: &CellRect,
) -> Result<SparseBound> {
    exps.validate()?;
    if f.grid != g.grid {
        return Err(Error::Alignment("f and g live on different grids".into()));
    }
    let n = f.grid.dim;
    let roots = match partition_support(f, domain) {
        Ok(r) => r,
        Err(_) if f.support().is_none() => {
            let side = (0..n).map(|a| domain.hi[a] - domain.lo[a]).max().unwrap_or(1);
            vec![CellCube { dim: n, lo: domain.lo, side }]
        }
        Err(e) => return Err(e),
    };
    let ctx = Ctx { table, f, g, exps, mode };
    let per_root: Vec<Vec<ConstructionTrace>> = roots
        .par_iter()
        .map(|r| {
            let mut traces = vec![];
            let mut stack = vec![(*r, 0usize)];
            while let Some((q, d)) = stack.pop() {
                let t = local_step(&ctx, &q, d);
                for p in t.stopping.iter().rev() {
                    stack.push((*p, d + 1));
                }
                traces.push(t);
            }
            traces
        })
        .collect();
    let traces: Vec<ConstructionTrace> = per_root.into_iter().flatten().collect();
    let constant = traces.iter().map(|t| t.a + t.b).fold(0.0, f64::max);
    let (cubes, witnesses) = traces
        .iter()
        .map(|t| {
            let covered: HashSet<[i64; 2]> = t.stopping.iter().flat_map(|p| p.rect().cells().collect::<Vec<_>>()).collect();
            let mask = t.cube.rect().cells().map(|c| !covered.contains(&c)).collect();
            (t.cube, mask)
        })
        .unzip();
    let family = SparseFamily { dim: n, k: f.grid.k, cubes, witnesses, eta: 0.5 };
    let sparse = family.tripled();
    Ok(SparseBound { family, sparse, constant, traces, roots })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationCheck {
    pub lhs: f64,
    pub form: f64,
    pub constant: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// `∫ |Tf| |g|` over the grid box, by direct summation.
pub fn bilinear_abs(table: &KernelTable, f: &GridFunction, g: &GridFunction) -> f64 {
    let tf = apply_full(table, f, g);
    tf.iter().zip(&g.values).map(|(t, v)| t.abs() * v.abs()).sum::<f64>() * f.grid.cell_measure()
}

/// `Tf` at the cells of `g.grid`.
fn apply_full(table: &KernelTable, f: &GridFunction, g: &GridFunction) -> Vec<f64> {
    let src = crate::sio::sources(f);
    let targets: Vec<[i64; 2]> = (0..g.grid.len()).map(|i| g.grid.cell(i)).collect();
    crate::sio::apply_to_cells(table, &src, &targets, |_| true)
}

/// `⟨Tf, g⟩` and `⟨f, T* g⟩`, summed in different orders.
pub fn duality_pair(table: &KernelTable, f: &GridFunction, g: &GridFunction) -> (f64, f64) {
    let cm = f.grid.cell_measure();
    let tf = apply_full(table, f, g);
    let lhs = tf.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>() * cm;
    let tg = apply_full(&table.adjoint(), g, f);
    let rhs = tg.iter().zip(&f.values).map(|(a, b)| a * b).sum::<f64>() * cm;
    (lhs, rhs)
}

pub fn check_domination(
    bound: &SparseBound,
    table: &KernelTable,
    f: &GridFunction,
    g: &GridFunction,
    exps: Exponents,
) -> DominationCheck {
    let lhs = bilinear_abs(table, f, g);
    let form = sparse_form(&bound.sparse, f, g, exps.r, exps.s);
    let rhs = bound.constant * form;
    let ratio = if rhs > 0.0 { lhs / rhs } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
    DominationCheck { lhs, form, constant: bound.constant, rhs, ratio, holds: lhs <= rhs }
}
