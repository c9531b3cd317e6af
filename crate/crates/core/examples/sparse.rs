//! Sparse domination of a bilinear form of the planar Hilbert-type kernel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rough_sparse::field::Grid;
use rough_sparse::kernel::{KernelSpec, Preset, SphereKernel};
use rough_sparse::lab::families::random_on;
use rough_sparse::sio::{KernelTable, OperatorHandle};
use rough_sparse::sparse::{check_domination, sparse_dominate, verify_sparseness, Exponents, ThresholdMode};

fn main() -> rough_sparse::Result<()> {
    let grid = Grid::new(2, 5, &[0.0, 0.0], &[1.0, 1.0])?;
    let op = OperatorHandle::rough(SphereKernel::from_spec(&KernelSpec::preset(2, Preset::Hilbert))?);
    let table = KernelTable::for_grid(&op, &grid, 128);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let domain = grid.cell_rect();
    let f = random_on(&grid, &domain, &mut rng);
    let g = random_on(&grid, &domain, &mut rng);

    let bound = sparse_dominate(&f, &g, &table, Exponents::ONES, ThresholdMode::Calibrated, &domain)?;
    let report = verify_sparseness(&bound.sparse, 1.0 / 18.0);
    let check = check_domination(&bound, &table, &f, &g, Exponents::ONES);
    println!("{} cubes, sparse at 1/18: {}", bound.sparse.len(), report.passed);
    println!("int |Tf||g| = {:.4} <= K * form = {:.4} * {:.4}: {}", check.lhs, check.constant, check.form, check.holds);
    Ok(())
}
