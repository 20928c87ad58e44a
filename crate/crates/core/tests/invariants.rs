use std::collections::HashSet;

use nalgebra::DMatrix;
use proptest::prelude::*;
use trotterforge::circuit::{circuit_to_unitary, unitarity_residual};
use trotterforge::compilers::{compile_sequential_step, CompileConfig, Mode};
use trotterforge::decomp::{bisection_decompose, lowrank_decompose};
use trotterforge::hamlib::{build_power_law, CoeffMatrix, HamiltonianSpec, PauliKind, SignRule};
use trotterforge::lowrank::{truncated_svd, DenseMatrix};

fn spectral(m: &DenseMatrix<f64>) -> f64 {
    let d = DMatrix::from_fn(m.rows, m.cols, |r, c| m.get(r, c));
    d.singular_values().iter().cloned().fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lowrank_listing_is_exact_cover(log_n in 2u32..7, log_cut in 0u32..5) {
        let n = 1usize << log_n;
        prop_assume!((1usize << log_cut) <= n / 4);
        let d = lowrank_decompose(n, 1 << log_cut).unwrap();
        let mut seen = HashSet::new();
        for r in d.listing() {
            for p in r.index_pairs() {
                prop_assert!(seen.insert(p), "pair {p:?} covered twice");
            }
        }
        prop_assert_eq!(seen.len(), n * (n - 1) / 2);
        for b in &d.far {
            prop_assert!(b.gap() >= b.left.len());
        }
    }

    #[test]
    fn bisection_has_n_minus_one_blocks(log_n in 1u32..9) {
        let n = 1usize << log_n;
        prop_assert_eq!(bisection_decompose(n).unwrap().pairs.len(), n - 1);
    }

    #[test]
    fn truncation_error_is_first_dropped_singular_value(
        rows in 1usize..7,
        cols in 1usize..7,
        seed in proptest::collection::vec(-1.0f64..1.0, 36),
        tol_exp in -8i32..0,
    ) {
        let block = DenseMatrix::from_fn(rows, cols, |r, c| seed[r * 6 + c]);
        let tol = 10f64.powi(tol_exp);
        let f = truncated_svd(&block, tol).unwrap();
        prop_assert!(f.residual <= tol);
        let rec = f.reconstruct();
        let diff = DenseMatrix::from_fn(rows, cols, |r, c| rec.get(r, c) - block.get(r, c));
        prop_assert!(spectral(&diff) <= f.residual + 1e-10);
    }

    #[test]
    fn compiled_steps_are_unitary(
        n in 2usize..5,
        alpha in 0.5f64..3.0,
        t in 0.01f64..1.0,
        p in prop::sample::select(vec![1u32, 2, 4]),
        field in -1.0f64..1.0,
    ) {
        let spec: HamiltonianSpec<f64> = build_power_law(n, 1, alpha, (PauliKind::X, PauliKind::Y), SignRule::Alternating)
            .unwrap()
            .with_two_local((PauliKind::Z, PauliKind::Z), CoeffMatrix::from_upper_fn(n, |j, k| 0.3 / (k - j) as f64))
            .unwrap()
            .with_on_site(PauliKind::X, vec![field; n])
            .unwrap();
        let cfg = CompileConfig::new(t, p, Mode::Verify).unwrap();
        let step = compile_sequential_step(&spec, &cfg).unwrap();
        let u = circuit_to_unitary(step.circuit.as_ref().unwrap()).unwrap();
        prop_assert!(unitarity_residual(&u) < 1e-10);
    }
}
