//! Gaussian fits of feature sets and the Fréchet distance between them.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Mean and covariance of a feature set, the operand of the Fréchet
/// distance.
#[derive(Debug, Clone)]
pub struct FeatureGaussian {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub sample_count: usize,
}

/// Sample mean plus covariance with N−1 denominator, explicitly symmetrized.
pub fn fit_feature_gaussian(features: &DMatrix<f64>) -> Result<FeatureGaussian> {
    let n = features.nrows();
    let d = features.ncols();
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n });
    }
    let mut mean = DVector::zeros(d);
    for i in 0..n {
        mean += features.row(i).transpose();
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..n {
        let centered = features.row(i).transpose() - &mean;
        cov += &centered * centered.transpose();
    }
    cov /= (n - 1) as f64;
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(FeatureGaussian {
        mean,
        covariance: cov,
        sample_count: n,
    })
}

/// Principal square root of a symmetric PSD matrix via eigendecomposition
/// with eigenvalue clamping at zero. Errors when the input is not symmetric
/// within 1e-8 (relative to the largest entry).
pub fn sqrtm_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::AsymmetricMatrix);
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-8 * scale {
                return Err(Error::AsymmetricMatrix);
            }
        }
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    // eigenvalues at solver-noise level are rank noise; sqrt would amplify
    // them (sqrt(1e-13) ~ 3e-7), so cut them to zero along with negatives
    let lead = eig.eigenvalues.amax();
    let cutoff = 1e-12 * lead;
    let sqrt_vals = eig.eigenvalues.map(|v| if v > cutoff { v.sqrt() } else { 0.0 });
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&sqrt_vals) * v.transpose())
}

/// Total order on Gaussians so the symmetric formula is always evaluated in
/// one canonical orientation; swapping the arguments then returns bitwise
/// the same value.
fn canonical_order(g1: &FeatureGaussian, g2: &FeatureGaussian) -> std::cmp::Ordering {
    for (a, b) in g1.mean.iter().zip(g2.mean.iter()) {
        let ord = a.total_cmp(b);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    for (a, b) in g1.covariance.iter().zip(g2.covariance.iter()) {
        let ord = a.total_cmp(b);
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Fréchet distance between two Gaussians:
/// ||μ1−μ2||² + tr(Σ1 + Σ2 − 2·(Σ1^{1/2} Σ2 Σ1^{1/2})^{1/2}),
/// using the symmetric-product form of the cross term. Numerical noise that
/// would drive the result negative clamps to zero.
pub fn frechet_distance(g1: &FeatureGaussian, g2: &FeatureGaussian) -> Result<f64> {
    let d = g1.mean.len();
    if d != g2.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: g2.mean.len(),
            context: "feature Gaussian dimension",
        });
    }
    let (a, b) = if canonical_order(g1, g2) == std::cmp::Ordering::Greater {
        (g2, g1)
    } else {
        (g1, g2)
    };
    let diff = &a.mean - &b.mean;
    let mean_term = diff.dot(&diff);

    let s1_half = sqrtm_psd(&a.covariance)?;
    let inner = &s1_half * &b.covariance * &s1_half;
    let cross = sqrtm_psd(&inner)?;
    let trace_term = a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
    Ok((mean_term + trace_term).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_matrix(seed: u64, n: usize, d: usize) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.gen::<f64>() * 4.0 - 2.0)
    }

    #[test]
    fn two_point_fit() {
        let f = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 0.0]);
        let g = fit_feature_gaussian(&f).unwrap();
        assert_eq!(g.mean.as_slice(), &[1.0, 0.0]);
        assert_eq!(g.covariance[(0, 0)], 2.0);
        assert_eq!(g.covariance[(1, 1)], 0.0);
        assert_eq!(g.covariance[(0, 1)], 0.0);
    }

    #[test]
    fn identical_rows_have_zero_covariance() {
        let f = DMatrix::from_row_slice(3, 2, &[1.5, -0.5, 1.5, -0.5, 1.5, -0.5]);
        let g = fit_feature_gaussian(&f).unwrap();
        assert!(g.covariance.amax() < 1e-12);
    }

    #[test]
    fn fit_matches_two_pass_oracle() {
        let f = random_matrix(3, 100, 8);
        let g = fit_feature_gaussian(&f).unwrap();
        for c in 0..8 {
            let mean: f64 = (0..100).map(|r| f[(r, c)]).sum::<f64>() / 100.0;
            assert!((g.mean[c] - mean).abs() < 1e-10);
        }
        for a in 0..8 {
            for b in 0..8 {
                let ma: f64 = (0..100).map(|r| f[(r, a)]).sum::<f64>() / 100.0;
                let mb: f64 = (0..100).map(|r| f[(r, b)]).sum::<f64>() / 100.0;
                let cov: f64 = (0..100)
                    .map(|r| (f[(r, a)] - ma) * (f[(r, b)] - mb))
                    .sum::<f64>()
                    / 99.0;
                assert!((g.covariance[(a, b)] - cov).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fitted_covariance_is_psd() {
        for seed in 0..5 {
            let g = fit_feature_gaussian(&random_matrix(seed, 20, 10)).unwrap();
            let eig = nalgebra::SymmetricEigen::new(g.covariance.clone());
            assert!(
                eig.eigenvalues.iter().all(|&v| v >= -1e-8),
                "negative eigenvalue in fitted covariance: {:?}",
                eig.eigenvalues
            );
        }
    }

    #[test]
    fn single_sample_is_rejected() {
        let f = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        assert!(matches!(
            fit_feature_gaussian(&f),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn sqrt_of_identity_is_identity() {
        let i = DMatrix::<f64>::identity(5, 5);
        let r = sqrtm_psd(&i).unwrap();
        assert!((r - DMatrix::<f64>::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let r = sqrtm_psd(&m).unwrap();
        assert!((r[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((r[(1, 1)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_squares_back_to_input() {
        let a = random_matrix(7, 12, 12);
        let psd = &a.transpose() * &a;
        let r = sqrtm_psd(&psd).unwrap();
        let back = &r * &r;
        let rel = (&back - &psd).norm() / psd.norm();
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let mut m = DMatrix::<f64>::identity(3, 3);
        m[(0, 1)] = 0.5;
        assert!(matches!(sqrtm_psd(&m), Err(Error::AsymmetricMatrix)));
    }

    #[test]
    fn distance_to_self_is_zero() {
        let g = fit_feature_gaussian(&random_matrix(11, 50, 6)).unwrap();
        let d = frechet_distance(&g, &g).unwrap();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn one_dimensional_closed_form() {
        let make = |mu: f64, var: f64| FeatureGaussian {
            mean: DVector::from_vec(vec![mu]),
            covariance: DMatrix::from_vec(1, 1, vec![var]),
            sample_count: 10,
        };
        let g1 = make(1.0, 4.0);
        let g2 = make(-0.5, 9.0);
        let want = (1.0f64 + 0.5).powi(2) + (2.0f64 - 3.0).powi(2);
        let got = frechet_distance(&g1, &g2).unwrap();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn diagonal_closed_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let d = 6;
            let mu1 = DVector::from_fn(d, |_, _| rng.gen::<f64>());
            let mu2 = DVector::from_fn(d, |_, _| rng.gen::<f64>());
            let v1: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 3.0 + 0.01).collect();
            let v2: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 3.0 + 0.01).collect();
            let g1 = FeatureGaussian {
                mean: mu1.clone(),
                covariance: DMatrix::from_diagonal(&DVector::from_vec(v1.clone())),
                sample_count: 5,
            };
            let g2 = FeatureGaussian {
                mean: mu2.clone(),
                covariance: DMatrix::from_diagonal(&DVector::from_vec(v2.clone())),
                sample_count: 5,
            };
            let want: f64 = (0..d)
                .map(|i| (mu1[i] - mu2[i]).powi(2) + (v1[i].sqrt() - v2[i].sqrt()).powi(2))
                .sum();
            let got = frechet_distance(&g1, &g2).unwrap();
            let tol = 1e-6 * want.max(1.0);
            assert!((got - want).abs() < tol, "{got} vs {want}");
        }
    }

    #[test]
    fn symmetric_in_gaussians() {
        let g1 = fit_feature_gaussian(&random_matrix(21, 40, 5)).unwrap();
        let g2 = fit_feature_gaussian(&random_matrix(22, 40, 5)).unwrap();
        let a = frechet_distance(&g1, &g2).unwrap();
        let b = frechet_distance(&g2, &g1).unwrap();
        assert!((a - b).abs() < 1e-9 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn invariant_under_shared_rotation() {
        // a Householder reflection is orthogonal and cheap to build
        let d = 5;
        let mut v = DVector::from_fn(d, |i, _| (i as f64 + 1.0).sin());
        v /= v.norm();
        let q = DMatrix::<f64>::identity(d, d) - 2.0 * &v * v.transpose();

        let g1 = fit_feature_gaussian(&random_matrix(31, 60, d)).unwrap();
        let g2 = fit_feature_gaussian(&random_matrix(32, 60, d)).unwrap();
        let rot = |g: &FeatureGaussian| FeatureGaussian {
            mean: &q * &g.mean,
            covariance: &q * &g.covariance * q.transpose(),
            sample_count: g.sample_count,
        };
        let a = frechet_distance(&g1, &g2).unwrap();
        let b = frechet_distance(&rot(&g1), &rot(&g2)).unwrap();
        assert!((a - b).abs() < 1e-6 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g1 = fit_feature_gaussian(&random_matrix(41, 10, 3)).unwrap();
        let g2 = fit_feature_gaussian(&random_matrix(42, 10, 4)).unwrap();
        assert!(frechet_distance(&g1, &g2).is_err());
    }
}
