//! Property tests for the structural invariants: spectrum orthonormality
//! and reconstruction, projector idempotency, Fisher-weighted norm bounds,
//! projection linearity, and flatten round trips.

mod common;

use driftlab::geometry::{
    eigendecompose, fisher_half_norm, op_norm_sym, top_projector, FisherHalf, SymMatrix,
};
use driftlab::mat::{dot, norm, Mat};
use driftlab::policy::FlattenedParams;
use driftlab::sketch::RademacherProjection;
use proptest::prelude::*;

fn sym_matrix_strategy(max_n: usize) -> impl Strategy<Value = SymMatrix<f64>> {
    (2..=max_n)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(-5.0f64..5.0, n * (n + 1) / 2),
            )
        })
        .prop_map(|(n, upper)| {
            let mut it = upper.into_iter();
            let mut m = Mat::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = it.next().unwrap();
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            SymMatrix::new(m).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn spectrum_orthonormal_and_reconstructs(a in sym_matrix_strategy(7)) {
        let s = eigendecompose(&a);
        prop_assert!(s.orthonormality_defect() <= 1e-10);
        let recon = op_norm_sym(&s.reconstruct().mat().sub(a.mat()));
        prop_assert!(recon <= 1e-8 * a.op_norm().max(1e-300));
    }

    #[test]
    fn projector_idempotent_symmetric_trace(a in sym_matrix_strategy(7), d_frac in 0.01f64..0.99) {
        let s = eigendecompose(&a);
        let n = s.n();
        let d = ((n as f64 * d_frac) as usize).clamp(1, n);
        let p = top_projector(&s, d).unwrap();
        let pm = p.matrix().mat();
        let idem = op_norm_sym(&pm.matmul(pm).sub(pm));
        prop_assert!(idem <= 1e-10, "idempotency defect {idem:e}");
        prop_assert!((p.trace() - d as f64).abs() <= 1e-8);
    }

    #[test]
    fn fisher_half_norm_dominated_by_top_eigenvalue(
        seed in 0u64..1_000,
        coords in prop::collection::vec(-3.0f64..3.0, 6)
    ) {
        let a = common::random_psd(6, seed);
        let s = eigendecompose(&a);
        let lambda_1 = s.lambda_max();
        let p = top_projector(&s, 2).unwrap();
        let f = FisherHalf::new(s).unwrap();
        let v = coords;
        let value = fisher_half_norm(&f, &p, &v).unwrap();
        let n2: f64 = dot(&v, &v);
        prop_assert!(value * value <= lambda_1 * n2 + 1e-9);
    }

    #[test]
    fn rademacher_projection_linear(
        a in prop::collection::vec(-2.0f64..2.0, 24),
        b in prop::collection::vec(-2.0f64..2.0, 24),
        alpha in -3.0f64..3.0,
    ) {
        let proj = RademacherProjection::new(5, 8, 24);
        let combo: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| alpha * x + y).collect();
        let pa = proj.project_vec(&a).unwrap();
        let pb = proj.project_vec(&b).unwrap();
        let pc = proj.project_vec(&combo).unwrap();
        for i in 0..8 {
            prop_assert!((pc[i] - (alpha * pa[i] + pb[i])).abs() <= 1e-12);
        }
    }

    #[test]
    fn flatten_unflatten_identity(
        nx in 1usize..5,
        ny in 1usize..5,
        values in prop::collection::vec(-10.0f64..10.0, 16),
    ) {
        let map = FlattenedParams { n_contexts: nx, n_outcomes: ny };
        let m = Mat::from_fn(nx, ny, |i, j| values[(i * ny + j) % values.len()]);
        let flat = map.flatten(&m);
        prop_assert_eq!(map.unflatten(&flat), m);
    }

    #[test]
    fn unit_draws_have_unit_norm(n in 1usize..30, seed in 0u64..500, counter in 0u64..1_000) {
        let sampler = driftlab::nullmodel::SphereSampler::<f64>::new(n, seed);
        let g = sampler.unit_at(counter);
        prop_assert!((norm(&g) - 1.0).abs() <= 1e-12);
    }
}
