use proptest::prelude::*;

use etais::model::RosenbrockDensity;
use etais::rng::substream;
use etais::transport::{fit_map, objective, BasisMatrices, FitOptions, Preconditioner};

fn rosenbrock_basis(n: usize, seed: u64) -> BasisMatrices {
    let mut rng = substream(seed, 0, 0);
    let states: Vec<Vec<f64>> = (0..n)
        .map(|_| RosenbrockDensity.sample(&mut rng).to_vec())
        .collect();
    let mut basis = BasisMatrices::new(2, 3, Preconditioner::None).unwrap();
    basis.append(&states, &vec![1.0; n]).unwrap();
    basis
}

fn dot(row: nalgebra::DMatrixView<'_, f64>, gamma: &[f64]) -> f64 {
    row.iter().zip(gamma).map(|(a, b)| a * b).sum()
}

#[test]
fn fitted_map_is_monotone_at_samples_and_consistent() {
    let basis = rosenbrock_basis(5000, 1);
    let (map, _) = fit_map(&basis, &FitOptions::default(), None).unwrap();
    for i in 0..2 {
        let g = basis.g_matrix(i);
        let gamma = &map.coefficients()[i];
        let min = (0..g.nrows())
            .map(|k| dot(g.row(k).as_view(), gamma))
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.0, "dimension {i}: min derivative {min}");
    }

    // pullback density from the basis matrices of fresh points
    let fresh = rosenbrock_basis(1000, 2);
    let (f, g) = (
        [fresh.f_matrix(0), fresh.f_matrix(1)],
        [fresh.g_matrix(0), fresh.g_matrix(1)],
    );
    let log_phi = |r: &[f64]| -> f64 {
        r.iter()
            .map(|x| -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln())
            .sum()
    };
    for k in 0..fresh.len() {
        let theta = fresh.point(k);
        let (r, log_jac) = map.evaluate_with_log_jacobian(theta).unwrap();
        let direct = (log_phi(&r) + log_jac).exp();
        let r_alt: Vec<f64> = (0..2)
            .map(|i| dot(f[i].row(k).as_view(), &map.coefficients()[i]))
            .collect();
        let jac_alt: f64 = (0..2)
            .map(|i| dot(g[i].row(k).as_view(), &map.coefficients()[i]).ln())
            .sum();
        let composed = (log_phi(&r_alt) + jac_alt).exp();
        assert!(
            (direct - composed).abs() <= 1e-12 * composed.abs(),
            "{direct} vs {composed}"
        );
        let back = map.invert(&r).unwrap();
        assert!((back[0] - theta[0]).abs() < 1e-8 && (back[1] - theta[1]).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn objective_is_convex(
        seed in 0u64..1000,
        t in 0.01f64..0.99,
        beta in 0.0f64..2.0,
        component in 0usize..2,
    ) {
        let basis = rosenbrock_basis(60, seed);
        let f = basis.f_matrix(component);
        let g = basis.g_matrix(component);
        let iota = basis.index_sets()[component].identity_coefficients();
        let w = basis.weights().to_vec();
        let mut rng = substream(seed, 1, 0);
        let mut perturbed = || -> Vec<f64> {
            use rand_distr::{Distribution, Normal};
            let n = Normal::new(0.0, 0.05).unwrap();
            iota.iter().map(|c| c + n.sample(&mut rng)).collect()
        };
        let a = perturbed();
        let b = perturbed();
        let fa = objective(&a, &f, &g, &w, beta, &iota).unwrap();
        let fb = objective(&b, &f, &g, &w, beta, &iota).unwrap();
        prop_assume!(fa.is_finite() && fb.is_finite());
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let fm = objective(&mid, &f, &g, &w, beta, &iota).unwrap();
        prop_assert!(fm <= t * fa + (1.0 - t) * fb + 1e-10);
    }
}
