//! Truncated discrete Hilbert transform of an indicator and its L^2 operator norm.

use rough_sparse::field::{Grid, GridFunction};
use rough_sparse::kernel::{preset_kernel, Preset};
use rough_sparse::sio::{apply_truncated, opnorm_l2, OperatorHandle};

fn main() -> rough_sparse::Result<()> {
    let grid = Grid::new(1, 8, &[-4.0], &[4.0])?;
    let op = OperatorHandle::rough(preset_kernel(Preset::Hilbert, 1, 2, 0)?);
    let f = GridFunction::from_fn(grid, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 });
    let tf = apply_truncated(&op, &f, grid.h())?;

    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let x = grid.center(i)[0];
        if (1.5..=4.0).contains(&x.abs()) {
            let exact = ((x + 1.0).abs() / (x - 1.0).abs()).ln();
            worst = worst.max((tf.values[i] - exact).abs());
        }
    }
    println!("sup error against log|x+1| - log|x-1| on 1.5 <= |x| <= 4: {worst:.2e}");
    println!("L^2 operator norm estimate: {:.5} (pi = {:.5})", opnorm_l2(&op, &grid, 1)?, std::f64::consts::PI);
    Ok(())
}
