//! Kernel-PCA support estimation.
//!
//! Fits the empirical kernel matrix of the training points, keeps the top
//! principal directions, and scores a query by how much of its feature-space
//! embedding falls outside the retained subspace: zero on the training
//! support, approaching one far away from it. Scoring uses the spectral
//! pseudoinverse `K_x' U diag(1/lambda) U' K_x` with a ridge cutoff guarding
//! the small eigenvalues.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::SupportScorer;

/// Exponent convention for the exponential kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentForm {
    /// `exp(-||x - x'|| / sigma)` (default).
    #[default]
    EuclideanNorm,
    /// `exp(-||x - x'||^2 / sigma^2)`, the conventional Gaussian form.
    SquaredNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub bandwidth: f64,
    #[serde(default)]
    pub exponent_form: ExponentForm,
}

impl KernelSpec {
    pub fn new(bandwidth: f64, exponent_form: ExponentForm) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidSpec("bandwidth must be positive".into()));
        }
        Ok(KernelSpec {
            bandwidth,
            exponent_form,
        })
    }
}

/// Number of principal directions to retain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentCount {
    /// Smallest m capturing >= 99.9% of the kernel-matrix trace.
    Auto,
    Fixed(usize),
}

/// Fitted kernel support model. Immutable; scoring is thread-safe.
///
/// Persists as `{"spec", "x", "m", "eigvals", "eigvecs", "ridge",
/// "format_version"}` where `eigvecs` holds N rows of m coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSupportModel {
    pub spec: KernelSpec,
    pub x: Vec<Vec<f64>>,
    pub m: usize,
    pub eigvals: Vec<f64>,
    pub eigvecs: Vec<Vec<f64>>,
    pub ridge: f64,
    #[serde(default = "format_version_one")]
    pub format_version: u32,
}

fn format_version_one() -> u32 {
    1
}

fn squared_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch {
            what: "kernel input",
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Exponential kernel value in (0, 1]; `k(x, x) = 1`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    let d2 = squared_distance(x, y)?;
    Ok(match spec.exponent_form {
        ExponentForm::EuclideanNorm => (-d2.sqrt() / spec.bandwidth).exp(),
        ExponentForm::SquaredNorm => (-d2 / (spec.bandwidth * spec.bandwidth)).exp(),
    })
}

/// Median of all pairwise Euclidean distances; the usual bandwidth heuristic.
pub fn median_bandwidth(points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DegenerateData);
    }
    let mut dists = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            dists.push(squared_distance(&points[i], &points[j])?.sqrt());
        }
    }
    let med = crate::stats::median(&dists);
    if med == 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(med)
}

/// Fit the support model: eigendecompose the kernel matrix and retain the
/// leading eigenpairs above `ridge` (`None` defaults to `1e-10 * lambda_max`).
pub fn fit_kernel_support(
    points: &[Vec<f64>],
    spec: &KernelSpec,
    m: ComponentCount,
    ridge: Option<f64>,
) -> Result<KernelSupportModel> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = points.len();
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(Error::ShapeMismatch {
                what: "training point",
                expected: dim,
                got: p.len(),
            });
        }
    }
    if let Some(r) = ridge {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidSpec("ridge must be >= 0".into()));
        }
    }
    if let ComponentCount::Fixed(m) = m {
        if m == 0 || m > n {
            return Err(Error::InvalidSpec(format!(
                "m must be in 1..={n}, got {m}"
            )));
        }
    }

    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = gaussian_kernel(&points[i], &points[j], spec)?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }

    let eig = k.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });

    let lambda_max = eig.eigenvalues[order[0]];
    let ridge = ridge.unwrap_or(1e-10 * lambda_max.max(0.0));

    let above: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eig.eigenvalues[i] > ridge)
        .collect();
    if above.is_empty() {
        return Err(Error::NoComponents);
    }

    let keep = match m {
        ComponentCount::Fixed(m) => m.min(above.len()),
        ComponentCount::Auto => {
            let total: f64 = eig.eigenvalues.iter().sum();
            let target = 0.999 * total;
            let mut cum = 0.0;
            let mut capture = above.len();
            for (count, &i) in above.iter().enumerate() {
                cum += eig.eigenvalues[i];
                if cum >= target {
                    capture = count + 1;
                    break;
                }
            }
            capture
        }
    };

    let eigvals: Vec<f64> = above[..keep].iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigvecs: Vec<Vec<f64>> = (0..n)
        .map(|row| above[..keep].iter().map(|&i| eig.eigenvectors[(row, i)]).collect())
        .collect();

    Ok(KernelSupportModel {
        spec: spec.clone(),
        x: points.to_vec(),
        m: keep,
        eigvals,
        eigvecs,
        ridge,
        format_version: 1,
    })
}

/// Support score `k(x,x) - K_x' U diag(1/lambda) U' K_x`, clamped at 0.
/// Zero on the training support, at most `k(x,x) = 1`.
pub fn kernel_score(model: &KernelSupportModel, query: &[f64]) -> Result<f64> {
    let n = model.x.len();
    let mut kx = Vec::with_capacity(n);
    for p in &model.x {
        kx.push(gaussian_kernel(p, query, &model.spec)?);
    }
    let mut projected = 0.0;
    for (c, &lambda) in model.eigvals.iter().enumerate() {
        let coeff: f64 = model
            .eigvecs
            .iter()
            .zip(&kx)
            .map(|(row, &kxi)| row[c] * kxi)
            .sum();
        projected += coeff * coeff / lambda;
    }
    Ok((1.0 - projected).max(0.0))
}

/// Threshold test: on-support iff the score does not exceed `tau`.
pub fn membership(model: &KernelSupportModel, query: &[f64], tau: f64) -> Result<bool> {
    if !(tau > 0.0) {
        return Err(Error::InvalidThreshold);
    }
    Ok(kernel_score(model, query)? <= tau)
}

impl SupportScorer for KernelSupportModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        kernel_score(self, x)
    }

    fn input_dim(&self) -> usize {
        self.x[0].len()
    }

    fn descriptor(&self) -> String {
        format!(
            "kernel(bandwidth={:.6}, m={}, n={})",
            self.spec.bandwidth,
            self.m,
            self.x.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(bw: f64) -> KernelSpec {
        KernelSpec::new(bw, ExponentForm::EuclideanNorm).unwrap()
    }

    #[test]
    fn kernel_values() {
        let s = spec(1.0);
        let x = [0.3, -0.4];
        assert_eq!(gaussian_kernel(&x, &x, &s).unwrap(), 1.0);
        let v = gaussian_kernel(&[0.0], &[1.0], &s).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
        let v2 = gaussian_kernel(&[0.0], &[2.0], &spec(2.0)).unwrap();
        assert!((v2 - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn kernel_rejects_dim_mismatch() {
        let err = gaussian_kernel(&[0.0], &[0.0, 1.0], &spec(1.0)).unwrap_err();
        assert_eq!(err.kind(), "ShapeMismatch");
    }

    #[test]
    fn median_bandwidth_cases() {
        assert_eq!(median_bandwidth(&[vec![0.0], vec![1.0]]).unwrap(), 1.0);
        assert_eq!(
            median_bandwidth(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap(),
            2.0
        );
        let err = median_bandwidth(&[vec![0.0], vec![0.0]]).unwrap_err();
        assert_eq!(err.kind(), "DegenerateData");
    }

    #[test]
    fn fit_single_point() {
        let m = fit_kernel_support(&[vec![0.5]], &spec(1.0), ComponentCount::Fixed(1), None)
            .unwrap();
        assert_eq!(m.m, 1);
        assert!((m.eigvals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_two_identical_points_keeps_one_component() {
        let pts = vec![vec![0.2, 0.2], vec![0.2, 0.2]];
        let m = fit_kernel_support(&pts, &spec(1.0), ComponentCount::Auto, Some(1e-10)).unwrap();
        assert_eq!(m.m, 1);
        assert!((m.eigvals[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn single_point_score_is_one_minus_c_squared() {
        let model =
            fit_kernel_support(&[vec![0.0]], &spec(1.0), ComponentCount::Fixed(1), None).unwrap();
        let q = [0.7];
        let c = gaussian_kernel(&[0.0], &q, &model.spec).unwrap();
        let score = kernel_score(&model, &q).unwrap();
        assert!((score - (1.0 - c * c)).abs() < 1e-12);
    }

    #[test]
    fn training_points_score_near_zero_and_far_points_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let bw = median_bandwidth(&pts).unwrap();
        let model = fit_kernel_support(
            &pts,
            &spec(bw),
            ComponentCount::Fixed(pts.len()),
            Some(1e-10),
        )
        .unwrap();
        for p in &pts {
            let s = kernel_score(&model, p).unwrap();
            assert!(s <= 1e-6, "training-point score {s}");
        }
        let far = vec![50.0 * bw, 50.0 * bw];
        assert!(kernel_score(&model, &far).unwrap() >= 0.99);
    }

    #[test]
    fn auto_component_count_reconstructs_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let bw = median_bandwidth(&pts).unwrap();
        let model = fit_kernel_support(&pts, &spec(bw), ComponentCount::Auto, None).unwrap();
        for p in &pts {
            assert!(kernel_score(&model, p).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn membership_threshold() {
        let pts = vec![vec![0.0], vec![0.5], vec![-0.5]];
        let model =
            fit_kernel_support(&pts, &spec(1.0), ComponentCount::Fixed(3), Some(1e-10)).unwrap();
        assert!(membership(&model, &[0.5], 1e-4).unwrap());
        assert!(!membership(&model, &[100.0], 0.5).unwrap());
        assert_eq!(
            membership(&model, &[0.0], 0.0).unwrap_err().kind(),
            "InvalidThreshold"
        );
    }

    #[test]
    fn eigenpairs_satisfy_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.random_range(-1.0..1.0)])
            .collect();
        let bw = median_bandwidth(&pts).unwrap();
        let model = fit_kernel_support(&pts, &spec(bw), ComponentCount::Auto, None).unwrap();

        // Rebuild K and check ||K u - lambda u|| <= 1e-8 ||K|| per eigenpair,
        // and column orthonormality to 1e-10.
        let n = pts.len();
        let mut k = vec![vec![0.0; n]; n];
        let mut k_norm = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                k[i][j] = gaussian_kernel(&pts[i], &pts[j], &model.spec).unwrap();
                k_norm += k[i][j] * k[i][j];
            }
        }
        let k_norm = k_norm.sqrt();
        for c in 0..model.m {
            let u: Vec<f64> = model.eigvecs.iter().map(|r| r[c]).collect();
            let mut resid = 0.0;
            for i in 0..n {
                let ku: f64 = (0..n).map(|j| k[i][j] * u[j]).sum();
                let r = ku - model.eigvals[c] * u[i];
                resid += r * r;
            }
            assert!(resid.sqrt() <= 1e-8 * k_norm);
            for c2 in 0..model.m {
                let dot: f64 = model
                    .eigvecs
                    .iter()
                    .map(|r| r[c] * r[c2])
                    .sum();
                let expect = if c == c2 { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn no_components_above_huge_ridge() {
        let err = fit_kernel_support(
            &[vec![0.0], vec![1.0]],
            &spec(1.0),
            ComponentCount::Auto,
            Some(1e9),
        )
        .unwrap_err();
        assert_eq!(err.kind(), "NoComponents");
    }

    #[test]
    fn model_json_round_trip() {
        let pts = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let model =
            fit_kernel_support(&pts, &spec(1.3), ComponentCount::Auto, None).unwrap();
        let s = crate::jsonio::to_json_string(&model).unwrap();
        let back: KernelSupportModel = serde_json::from_str(&s).unwrap();
        assert_eq!(model, back);
    }
}
