//! Rearrangement maximal operators of the Hilbert transform next to the
//! Hardy-Littlewood maximal function.

use rough_sparse::field::{Grid, GridFunction};
use rough_sparse::kernel::{preset_kernel, Preset};
use rough_sparse::maximal::{hl_maximal, CubeFamily, ExcludedApplications};
use rough_sparse::rearrange::weak_quasinorm;
use rough_sparse::sio::OperatorHandle;

fn main() -> rough_sparse::Result<()> {
    let grid = Grid::new(1, 6, &[-4.0], &[4.0])?;
    let op = OperatorHandle::rough(preset_kernel(Preset::Hilbert, 1, 2, 0)?);
    let f = GridFunction::from_fn(grid, |x| if (0.0..0.5).contains(&x[0]) { 1.0 } else { 0.0 });
    let family = CubeFamily::default_for(&grid)?;

    let ex = ExcludedApplications::compute(&op, &f, &family)?;
    for lambda in [0.5, 0.125, 0.03125] {
        let m = ex.m_lambda(lambda);
        println!("lambda = {lambda}: ||M_lambda Hf||_(1,inf) = {:.4}", weak_quasinorm(&m, 1.0));
    }
    for p in [1.0, 2.0, 4.0] {
        println!("p = {p}: ||M_p Hf||_(1,inf) = {:.4}", weak_quasinorm(&ex.m_p(p), 1.0));
    }
    let m = hl_maximal(&f, 1.0, &family)?;
    println!("||Mf||_(1,inf) = {:.4}, ||f||_1 = {:.4}", weak_quasinorm(&m, 1.0), f.l1_norm());
    Ok(())
}
