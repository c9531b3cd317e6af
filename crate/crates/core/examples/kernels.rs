//! Builds the preset angular profiles and the mollified kernel of one of them.

use rough_sparse::kernel::{dini_of_mollified, preset_kernel, MollifiedOmega, MollifierSpec, Preset, QuadratureConfig};

fn main() -> rough_sparse::Result<()> {
    for preset in [Preset::Hilbert, Preset::Cos, Preset::SignBands, Preset::RandomRademacher] {
        let omega = preset_kernel(preset, 2, 64, 7)?;
        println!("{preset:?}: sup = {:.3}, mean = {:+.2e}", omega.sup_norm(), omega.mean());
    }

    let omega = preset_kernel(Preset::Cos, 2, 64, 0)?;
    let quad = QuadratureConfig::default();
    for eps in [0.5, 0.125, 0.03125] {
        let smooth = MollifiedOmega::new(&omega, MollifierSpec::new(eps)?, &quad)?;
        let dini = dini_of_mollified(eps)?;
        println!(
            "eps = {eps}: omega_eps(0) = {:.4}, omega(0) = {:.4}, Dini constant = {:.4}",
            smooth.at_angle(0.0),
            omega.omega_angle(0.0),
            dini.dini_constant
        );
    }
    Ok(())
}
