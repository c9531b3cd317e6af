use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rough_sparse::field::{CellRect, Grid, GridFunction};
use rough_sparse::kernel::{preset_kernel, Preset};
use rough_sparse::lab::families::random_on;
use rough_sparse::sio::{KernelTable, OperatorHandle};
use rough_sparse::sparse::{
    check_domination, duality_pair, sparse_dominate, sparse_form, verify_sparseness, Exponents, SparseFamily,
    ThresholdMode,
};

fn setup() -> (Grid, OperatorHandle, KernelTable) {
    let grid = Grid::new(2, 4, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
    let op = OperatorHandle::rough(preset_kernel(Preset::Cos, 2, 64, 0).unwrap());
    let table = KernelTable::for_grid(&op, &grid, 64);
    (grid, op, table)
}

/// `∫ |Tf| |g|` from the continuous kernel at cell centers.
fn bilinear_oracle(op: &OperatorHandle, f: &GridFunction, g: &GridFunction) -> f64 {
    let grid = f.grid;
    let vol = grid.cell_measure();
    (0..grid.len())
        .map(|i| {
            let x = grid.center(i);
            let tf: f64 = (0..grid.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let y = grid.center(j);
                    op.kernel_at(&[x[0] - y[0], x[1] - y[1]]) * f.values[j] * vol
                })
                .sum();
            tf.abs() * g.values[i].abs() * vol
        })
        .sum()
}

/// `Σ_S ⟨|f|⟩_{S} ⟨|g|⟩_{S} |S|` with averages over all cells of each cube.
fn form_oracle(s: &SparseFamily, f: &GridFunction, g: &GridFunction) -> f64 {
    let vol = f.grid.cell_measure();
    s.cubes
        .iter()
        .map(|q| {
            let cells: Vec<_> = q.rect().cells().collect();
            let n = cells.len() as f64;
            let af = cells.iter().map(|&c| f.at(c).abs()).sum::<f64>() / n;
            let ag = cells.iter().map(|&c| g.at(c).abs()).sum::<f64>() / n;
            af * ag * n * vol
        })
        .sum()
}

#[test]
fn random_pairs_are_dominated() {
    let (grid, op, table) = setup();
    let domain = grid.cell_rect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..6 {
        let f = random_on(&grid, &domain, &mut rng);
        let g = random_on(&grid, &domain, &mut rng);
        let bound = sparse_dominate(&f, &g, &table, Exponents::ONES, ThresholdMode::Calibrated, &domain).unwrap();
        assert!(verify_sparseness(&bound.sparse, 1.0 / 18.0).passed);
        assert!(verify_sparseness(&bound.family, 0.5).passed);
        for t in &bound.traces {
            assert!(t.exceptional_bound_holds(), "{t:?}");
            assert!(t.stopping_bound_holds(), "{t:?}");
        }
        let check = check_domination(&bound, &table, &f, &g, Exponents::ONES);
        let lhs = bilinear_oracle(&op, &f, &g);
        assert!((check.lhs - lhs).abs() <= 1e-10 * lhs);
        let form = form_oracle(&bound.sparse, &f, &g);
        assert!((check.form - form).abs() <= 1e-10 * form);
        assert!(lhs <= bound.constant * form);
        let (a, b) = duality_pair(&table, &f, &g);
        assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
    }
}

#[test]
fn zero_function_is_trivial() {
    let (grid, _, table) = setup();
    let domain = grid.cell_rect();
    let f = GridFunction::zeros(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = random_on(&grid, &domain, &mut rng);
    let bound = sparse_dominate(&f, &g, &table, Exponents::ONES, ThresholdMode::Calibrated, &domain).unwrap();
    let check = check_domination(&bound, &table, &f, &g, Exponents::ONES);
    assert_eq!(check.lhs, 0.0);
    assert!(check.holds);
    assert!(verify_sparseness(&bound.sparse, 1.0 / 18.0).passed);
}

#[test]
fn supplied_norm_constants_dominate() {
    let (grid, _, table) = setup();
    let domain = grid.cell_rect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f = random_on(&grid, &domain, &mut rng);
    let g = random_on(&grid, &domain, &mut rng);
    let mode = ThresholdMode::ExplicitConstants { weak_norm: 4.0, bilinear_norm: 4.0 };
    let bound = sparse_dominate(&f, &g, &table, Exponents::ONES, mode, &domain).unwrap();
    let check = check_domination(&bound, &table, &f, &g, Exponents::ONES);
    assert!(check.holds);
    assert!(verify_sparseness(&bound.sparse, 1.0 / 18.0).passed);
}

#[test]
fn subdomain_and_json_round_trip() {
    let (grid, _, table) = setup();
    let domain = CellRect { lo: [0, 0], hi: [8, 8] };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = random_on(&grid, &domain, &mut rng);
    let g = random_on(&grid, &domain, &mut rng);
    let bound = sparse_dominate(&f, &g, &table, Exponents::ONES, ThresholdMode::Calibrated, &domain).unwrap();
    let back = SparseFamily::from_json(&bound.sparse.to_json().unwrap()).unwrap();
    assert_eq!(back, bound.sparse);
    assert_eq!(sparse_form(&back, &f, &g, 1.0, 1.0), sparse_form(&bound.sparse, &f, &g, 1.0, 1.0));
}

#[test]
fn higher_exponents_still_dominate() {
    let (grid, _, table) = setup();
    let domain = grid.cell_rect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f = random_on(&grid, &domain, &mut rng);
    let g = random_on(&grid, &domain, &mut rng);
    let exps = Exponents { q: 1.0, r: 2.0, s: 2.0 };
    let bound = sparse_dominate(&f, &g, &table, exps, ThresholdMode::Calibrated, &domain).unwrap();
    assert!(check_domination(&bound, &table, &f, &g, exps).holds);
    assert!(sparse_dominate(&f, &g, &table, Exponents { q: 2.0, r: 1.0, s: 1.0 }, ThresholdMode::Calibrated, &domain).is_err());
}
