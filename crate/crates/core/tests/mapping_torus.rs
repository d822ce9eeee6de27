use collapse_spectra::intlat::{betti1_mapping_torus, IntegerMatrix};
use collapse_spectra::lie::{change_frame, spectrum};
use collapse_spectra::mapping_torus::{
    collapse_family, invariants_dd, laplacian1_fast, run_collapse, solvable_algebra, small_threshold,
    DoubleJordanFamily, RandomFrame, MappingTorusBundle,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn nilpotent(sizes: &[usize]) -> DMatrix<f64> {
    let n: usize = sizes.iter().sum();
    let mut b = DMatrix::zeros(n, n);
    let mut off = 0;
    for &s in sizes {
        for i in 0..s.saturating_sub(1) {
            b[(off + i, off + i + 1)] = 1.0;
        }
        off += s;
    }
    b
}

fn dyadic_grid() -> Vec<f64> {
    (1..=10).map(|j| 0.5f64.powi(j)).collect()
}

#[test]
fn collapse_counts_follow_k() {
    for sizes in [vec![2], vec![3], vec![2, 2]] {
        let b = nilpotent(&sizes);
        let (d, dp) = invariants_dd(&b, 1e-9).unwrap();
        for k in 0..=(d - dp) {
            let fam = collapse_family(&b, k, 1e-9).unwrap();
            let trace1 = fam.c_eps(1.0).norm_squared();
            let table = run_collapse(&b, k, &dyadic_grid(), 1e-9).unwrap();
            let mut previous: Option<Vec<f64>> = None;
            for row in &table.rows {
                let nz = row.spectrum.nonzero();
                let eps = row.eps;
                assert!(nz[..k].iter().all(|&v| v < 10.0 * eps * eps), "{sizes:?} k={k} eps={eps}");
                if k < nz.len() {
                    assert!(nz[k] >= 1e-2, "{sizes:?} k={k} eps={eps} floor {}", nz[k]);
                }
                if let Some(prev) = &previous {
                    assert!(nz[..k].iter().zip(prev).all(|(a, b)| a < b));
                }
                previous = Some(nz[..k].to_vec());
                assert!(row.trace <= trace1 + 1e-9);
            }
            let last = table.rows.last().unwrap();
            assert_eq!(last.small_count, k, "{sizes:?} k={k}");
            if k == 0 {
                let first = &table.rows[0].spectrum;
                assert!(table.rows.iter().all(|r| r.spectrum == *first));
            }
        }
    }
}

#[test]
fn kernel_dimension_over_random_frames() {
    let two_pi = 2.0 * std::f64::consts::PI;
    let cases = [
        nilpotent(&[2]),
        nilpotent(&[3]),
        nilpotent(&[2, 1]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, two_pi, -two_pi, 0.0]),
    ];
    for (case, b) in cases.iter().enumerate() {
        let n = b.nrows();
        let (_, dp) = invariants_dd(b, 1e-9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(case as u64);
        for _ in 0..50 {
            let frame = RandomFrame::<f64>::sample(n, &mut rng).matrix(0.5);
            let mut p = DMatrix::identity(n + 1, n + 1);
            p.view_mut((0, 0), (n, n)).copy_from(&frame);
            let l = change_frame(&solvable_algebra(b), &p).unwrap();
            let s = spectrum(&l, 1).unwrap();
            assert_eq!(s.kernel_dim, dp + 1);
            assert_eq!(s.nonzero().len(), n - dp);
        }
    }
}

#[test]
fn fast_laplacian_agrees_on_random_c() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for t in 0..20 {
        let n = 1 + t % 5;
        let c = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut rng, -2.0..2.0));
        let engine = collapse_spectra::lie::laplacian(&solvable_algebra(&c), 1).unwrap();
        assert!((engine - laplacian1_fast(&c)).amax() <= 1e-12);
    }
}

#[test]
fn double_jordan_small_eigenvalue_is_quadratic() {
    let fam = DoubleJordanFamily::<f64>::new(1.0).unwrap();
    let grid: Vec<f64> = (4..=10).map(|j| 0.5f64.powi(j)).collect();
    let ratios: Vec<f64> = grid
        .iter()
        .map(|&eps| {
            let s = spectrum(&solvable_algebra(&fam.c_eps_closed_form(eps)), 2).unwrap();
            s.smallest_nonzero().unwrap() / (eps * eps)
        })
        .collect();
    for w in ratios.windows(2) {
        assert!(((w[1] - w[0]) / w[0]).abs() <= 0.05, "{ratios:?}");
    }
    assert_eq!(small_threshold(0.5), 1e-3);
    assert_eq!(small_threshold(0.001), 1e-5);
}

#[test]
fn betti_matches_kernel_when_log_is_nilpotent_or_zero() {
    for (a, b) in [
        (IntegerMatrix::from_rows(&[[1, 1], [0, 1]]), nilpotent(&[2])),
        (IntegerMatrix::identity(3), DMatrix::zeros(3, 3)),
    ] {
        let bundle = MappingTorusBundle::new(a.clone(), b).unwrap();
        let k = spectrum(&bundle.algebra(), 1).unwrap().kernel_dim;
        assert_eq!(k, betti1_mapping_torus(&a).unwrap().b1);
    }
}
