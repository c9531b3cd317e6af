//! The three-lattice system and a Calderon-Zygmund decomposition.

use rough_sparse::dyadic::{cz_decompose, three_lattice, DyadicLattice};
use rough_sparse::field::{Grid, GridFunction};

fn main() -> rough_sparse::Result<()> {
    let base = DyadicLattice::standard(1, -6, 6)?;
    let system = three_lattice(&base)?;
    let report = system.verify(64);
    println!("n = 1 three-lattice check: {report:?}");

    let base2 = DyadicLattice::standard(2, -3, 2)?;
    let system2 = three_lattice(&base2)?;
    println!("n = 2 uses {} derived lattices, passed = {}", system2.derived.len(), system2.verify(8).passed());

    let grid = Grid::new(2, 5, &[0.0, 0.0], &[2.0, 2.0])?;
    let f = GridFunction::from_fn(grid, |x| if x[0] + x[1] < 0.25 { 16.0 } else { 0.0 });
    let lattice = DyadicLattice::standard(2, -5, 2)?;
    let cz = cz_decompose(&f, &lattice, 1.0)?;
    println!(
        "CZ at height 1: {} atoms, total measure {:.4} (bound {:.4}), sup |g| = {:.4}",
        cz.atoms.len(),
        cz.total_measure(),
        f.l1_norm(),
        cz.good.sup_norm()
    );
    Ok(())
}
