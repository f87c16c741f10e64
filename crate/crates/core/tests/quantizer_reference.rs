//! Step-by-step comparison of the alternating minimization against a
//! reference loop written directly on nalgebra's SVD.

use binquant::linalg::{mean_center, random_orthogonal};
use binquant::quantizer::minimize_quantization_from;
use binquant::Matrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_na(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn sgn(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| if v >= 0.0 { 1.0 } else { -1.0 })
}

/// Returns per-iteration losses and the final codes.
fn reference_loop(
    x: &DMatrix<f64>,
    r0: DMatrix<f64>,
    iterations: usize,
) -> (Vec<f64>, DMatrix<f64>) {
    let mut r = r0;
    let mut losses = Vec::new();
    for _ in 0..iterations {
        let u = x * &r;
        let b = sgn(&u);
        losses.push((&b - &u).norm_squared());
        // BᵀX = S Ω Ŝᵀ, R = Ŝ Sᵀ
        let svd = (b.transpose() * x).svd(true, true);
        let s = svd.u.unwrap();
        let s_hat = svd.v_t.unwrap().transpose();
        r = s_hat * s.transpose();
    }
    (losses, sgn(&(x * &r)))
}

#[test]
fn alternating_loop_matches_reference() {
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(40 + seed);
        let raw = Matrix::from_fn(128, 16, |_, _| rng.random_range(-1.0..1.0));
        let (x, _) = mean_center(&raw).unwrap();
        let r0 = random_orthogonal::<f64>(16, seed).unwrap();

        let (codes, trace) = minimize_quantization_from(&x, 50, r0.clone()).unwrap();
        let (expected, expected_codes) = reference_loop(&to_na(&x), to_na(r0.as_matrix()), 50);

        assert_eq!(trace.losses.len(), 50);
        for (i, (got, want)) in trace.losses.iter().zip(&expected).enumerate() {
            assert!(
                (got - want).abs() <= 1e-8 * want.abs().max(1.0),
                "seed {seed} iteration {}: {got} vs {want}",
                i + 1
            );
        }
        assert_eq!(to_na(&codes), expected_codes, "seed {seed}");
    }
}
