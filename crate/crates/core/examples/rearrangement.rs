//! Decreasing rearrangement, cube quantiles and the weak L^1 quasinorm.

use rough_sparse::field::{Cube, Grid, GridFunction};
use rough_sparse::rearrange::{quantile, rearrange, weak_quasinorm};

fn main() -> rough_sparse::Result<()> {
    let grid = Grid::new(1, 6, &[-4.0], &[4.0])?;
    let f = GridFunction::from_fn(grid, |x| 1.0 / x[0].abs().max(grid.h()));

    let r = rearrange(&f, &vec![true; grid.len()])?;
    for t in [0.01, 0.1, 1.0, 4.0] {
        println!("f*({t}) = {:.4}", r.eval(t));
    }

    let q = Cube::new(1, &[0.0], 2.0);
    for lambda in [0.5, 0.25, 0.125] {
        println!("quantile on [0,2) at lambda = {lambda}: {:.4}", quantile(&f, &q, lambda)?);
    }
    println!("||1/|x| ||_(L^1,inf) on the box = {:.4}", weak_quasinorm(&f, 1.0));
    Ok(())
}
