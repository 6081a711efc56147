//! Smooth objectives with exact gradients and calibrated stochastic
//! gradient samplers.
//!
//! Every objective carries the constants the convergence machinery consumes:
//! the smoothness constant `L`, the gradient-noise variance `sigma2` at
//! batch size 1 (variance at batch `m` is `sigma2 / m`), the relative-noise
//! coefficient `omega` when it is known, and the lower bound `f_inf`.
//! Samplers are unbiased and take an explicit RNG stream; there is no
//! hidden randomness.
//!
//! Two instances:
//! - [`Quadratic`]: diagonal quadratic with additive Gaussian noise. All
//!   constants are closed-form and `omega = 0` exactly.
//! - [`LogisticSynthetic`]: finite-sum ridge logistic regression on
//!   generated separable data, where minibatch subsampling provides the
//!   stochasticity. `sigma2` is a cached Monte Carlo estimate and `omega`
//!   is unknown.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg;
use crate::rng::stream_for;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("point has dimension {got}, objective expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("batch size {batch} exceeds the {samples} available samples")]
    BatchExceedsSamples { batch: usize, samples: usize },
    #[error("invalid objective spec: {0}")]
    InvalidSpec(String),
    #[error("variance estimation needs at least one probe point")]
    EmptyProbeSet,
    #[error("variance estimation needs at least 100 draws, got {0}")]
    TooFewDraws(usize),
    #[error("minimizer search did not converge within {0} gradient steps")]
    MinimizerNotConverged(usize),
}

/// A smooth objective with exact value/gradient and an unbiased stochastic
/// gradient sampler.
///
/// Contracts (enforced by the test suite, not the type system):
/// - `E[stochastic_gradient(x, m)] = full_gradient(x)`
/// - `||full_gradient(x) - full_gradient(y)|| <= smoothness() * ||x - y||`
/// - `value(x) >= f_inf()` everywhere
/// - `E||g - full_gradient(x)||^2 <= omega * ||full_gradient(x)||^2
///    + sigma2() / m`
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: ArrayView1<f64>) -> Result<f64, ObjectiveError>;

    fn full_gradient(&self, x: ArrayView1<f64>) -> Result<Array1<f64>, ObjectiveError>;

    fn stochastic_gradient(
        &self,
        x: ArrayView1<f64>,
        batch: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Array1<f64>, ObjectiveError>;

    /// Smoothness (Lipschitz) constant of the gradient.
    fn smoothness(&self) -> f64;

    /// Gradient-noise variance at batch size 1.
    fn sigma2(&self) -> f64;

    /// Relative-variance coefficient, `None` when no analytic value exists.
    fn omega(&self) -> Option<f64>;

    /// Lower bound on the objective value.
    fn f_inf(&self) -> f64;
}

fn check_dim(expected: usize, x: &ArrayView1<f64>) -> Result<(), ObjectiveError> {
    if x.len() != expected {
        return Err(ObjectiveError::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Quadratic
// ---------------------------------------------------------------------------

/// Recipe for a diagonal quadratic `F(x) = 1/2 sum_i diag_i x_i^2 - b.x`
/// with additive isotropic Gaussian gradient noise.
#[derive(Debug, Clone)]
pub struct QuadraticSpec {
    /// Positive curvature per coordinate (the eigenvalues of the Hessian).
    pub diag: Array1<f64>,
    /// Linear term; the minimizer is `b / diag` componentwise.
    pub linear: Array1<f64>,
    /// Noise variance at batch size 1.
    pub noise_sigma2: f64,
}

impl QuadraticSpec {
    /// Isotropic quadratic `1/2 ||x||^2` in `dim` dimensions.
    pub fn isotropic(dim: usize, noise_sigma2: f64) -> Self {
        QuadraticSpec {
            diag: Array1::ones(dim),
            linear: Array1::zeros(dim),
            noise_sigma2,
        }
    }

    /// Curvatures evenly spaced over `[lo, hi]` (endpoints exact), zero
    /// linear term.
    pub fn linspace(dim: usize, lo: f64, hi: f64, noise_sigma2: f64) -> Self {
        QuadraticSpec {
            diag: linspace(lo, hi, dim),
            linear: Array1::zeros(dim),
            noise_sigma2,
        }
    }
}

/// Evenly spaced values over `[lo, hi]`; the last point is pinned to `hi`
/// exactly so constants derived from it (like the smoothness) are exact.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Array1<f64> {
    if count == 1 {
        return Array1::from_elem(1, lo);
    }
    let step = (hi - lo) / (count - 1) as f64;
    Array1::from_shape_fn(count, |i| {
        if i == count - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    })
}

/// Diagonal quadratic objective. `L = max(diag)`, `omega = 0`, and
/// `f_inf` is the value at the closed-form minimizer.
#[derive(Debug, Clone)]
pub struct Quadratic {
    diag: Array1<f64>,
    linear: Array1<f64>,
    noise_sigma2: f64,
    smoothness: f64,
    f_inf: f64,
}

impl Quadratic {
    pub fn new(spec: QuadraticSpec) -> Result<Self, ObjectiveError> {
        let d = spec.diag.len();
        if d == 0 {
            return Err(ObjectiveError::InvalidSpec("empty curvature vector".into()));
        }
        if spec.linear.len() != d {
            return Err(ObjectiveError::InvalidSpec(format!(
                "linear term has length {}, curvature has length {d}",
                spec.linear.len()
            )));
        }
        if let Some(bad) = spec.diag.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(ObjectiveError::InvalidSpec(format!(
                "curvatures must be positive and finite, got {bad}"
            )));
        }
        if !(spec.noise_sigma2 >= 0.0) || !spec.noise_sigma2.is_finite() {
            return Err(ObjectiveError::InvalidSpec(format!(
                "noise variance must be nonnegative, got {}",
                spec.noise_sigma2
            )));
        }
        let smoothness = spec.diag.iter().cloned().fold(0.0, f64::max);
        // F at the minimizer b/diag: -1/2 sum b_i^2 / diag_i.
        let f_inf = -0.5
            * spec
                .linear
                .iter()
                .zip(spec.diag.iter())
                .map(|(b, d)| b * b / d)
                .sum::<f64>();
        Ok(Quadratic {
            diag: spec.diag,
            linear: spec.linear,
            noise_sigma2: spec.noise_sigma2,
            smoothness,
            f_inf,
        })
    }

    pub fn minimizer(&self) -> Array1<f64> {
        &self.linear / &self.diag
    }

    /// Exact value and gradient in one pass.
    pub fn value_grad(&self, x: ArrayView1<f64>) -> Result<(f64, Array1<f64>), ObjectiveError> {
        check_dim(self.diag.len(), &x)?;
        let mut value = 0.0;
        let mut grad = Array1::zeros(self.diag.len());
        for i in 0..self.diag.len() {
            value += 0.5 * self.diag[i] * x[i] * x[i] - self.linear[i] * x[i];
            grad[i] = self.diag[i] * x[i] - self.linear[i];
        }
        Ok((value, grad))
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn value(&self, x: ArrayView1<f64>) -> Result<f64, ObjectiveError> {
        Ok(self.value_grad(x)?.0)
    }

    fn full_gradient(&self, x: ArrayView1<f64>) -> Result<Array1<f64>, ObjectiveError> {
        Ok(self.value_grad(x)?.1)
    }

    fn stochastic_gradient(
        &self,
        x: ArrayView1<f64>,
        batch: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Array1<f64>, ObjectiveError> {
        if batch == 0 {
            return Err(ObjectiveError::ZeroBatch);
        }
        let mut grad = self.full_gradient(x)?;
        if self.noise_sigma2 > 0.0 {
            // Isotropic noise scaled so E||z||^2 = sigma2 / batch.
            let d = self.diag.len();
            let scale = (self.noise_sigma2 / (batch as f64 * d as f64)).sqrt();
            for g in grad.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *g += scale * z;
            }
        }
        Ok(grad)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn sigma2(&self) -> f64 {
        self.noise_sigma2
    }

    fn omega(&self) -> Option<f64> {
        // Noise is additive and independent of the gradient.
        Some(0.0)
    }

    fn f_inf(&self) -> f64 {
        self.f_inf
    }
}

// ---------------------------------------------------------------------------
// Synthetic logistic regression
// ---------------------------------------------------------------------------

/// Recipe for a synthetic separable logistic-regression problem.
#[derive(Debug, Clone)]
pub struct LogisticSyntheticSpec {
    pub samples: usize,
    pub dim: usize,
    /// Seed for feature and label generation.
    pub seed: u64,
    /// Ridge coefficient; must be positive so the problem is strongly
    /// convex and the minimizer search terminates.
    pub ridge: f64,
}

const FEATURE_STREAM: u64 = 0xfea7;
const SIGMA_STREAM: u64 = 0x51f3;
const MINIMIZER_MAX_STEPS: usize = 200_000;

/// Finite-sum ridge logistic regression
/// `F(t) = mean_i softplus(-y_i t.x_i) + ridge/2 ||t||^2`
/// on generated Gaussian features with labels from a random hyperplane
/// (linearly separable by construction).
///
/// - `smoothness` is the standard upper bound
///   `lambda_max(X^T X) / (4 n) + ridge`.
/// - `f_inf` is the value at a numerically converged minimizer
///   (full-gradient descent to `||grad|| <= 1e-10`), cached.
/// - `sigma2` is a cached Monte Carlo estimate of the batch-1 gradient
///   variance, maximized over a fixed probe set.
/// - Minibatches are drawn uniformly without replacement, so the full
///   batch reproduces the exact gradient.
#[derive(Debug, Clone)]
pub struct LogisticSynthetic {
    features: Array2<f64>,
    labels: Array1<f64>,
    ground_truth: Array1<f64>,
    ridge: f64,
    smoothness: f64,
    f_inf: f64,
    sigma2: f64,
}

impl LogisticSynthetic {
    pub fn new(spec: LogisticSyntheticSpec) -> Result<Self, ObjectiveError> {
        if spec.samples == 0 {
            return Err(ObjectiveError::InvalidSpec("sample count is zero".into()));
        }
        if spec.dim == 0 {
            return Err(ObjectiveError::InvalidSpec("dimension is zero".into()));
        }
        if !(spec.ridge > 0.0) || !spec.ridge.is_finite() {
            return Err(ObjectiveError::InvalidSpec(format!(
                "ridge must be positive, got {}",
                spec.ridge
            )));
        }

        let mut rng = stream_for(spec.seed, FEATURE_STREAM, 0);
        let features = Array2::from_shape_fn((spec.samples, spec.dim), |_| {
            rng.sample::<f64, _>(StandardNormal)
        });
        let mut ground_truth =
            Array1::from_shape_fn(spec.dim, |_| rng.sample::<f64, _>(StandardNormal));
        let norm = ground_truth.dot(&ground_truth).sqrt();
        if norm > 0.0 {
            ground_truth.mapv_inplace(|v| 3.0 * v / norm);
        } else {
            ground_truth[0] = 3.0;
        }
        let labels = Array1::from_shape_fn(spec.samples, |i| {
            if features.row(i).dot(&ground_truth) >= 0.0 {
                1.0
            } else {
                -1.0
            }
        });

        // L <= lambda_max(X^T X) / (4 n) + ridge.
        let gram = features.t().dot(&features);
        let lam_max = linalg::symmetric_eigenvalues(&gram)
            .map_err(|e| ObjectiveError::InvalidSpec(format!("gram spectrum failed: {e}")))?
            .into_iter()
            .fold(0.0, f64::max);
        let smoothness = lam_max / (4.0 * spec.samples as f64) + spec.ridge;

        let mut obj = LogisticSynthetic {
            features,
            labels,
            ground_truth,
            ridge: spec.ridge,
            smoothness,
            f_inf: f64::NEG_INFINITY,
            sigma2: 0.0,
        };

        // Cache f_inf at a converged minimizer.
        let minimizer = obj.solve_minimizer()?;
        obj.f_inf = obj.value(minimizer.view())?;

        // Cache sigma2 from a fixed probe set: origin, minimizer, and one
        // random point.
        let mut probe_rng = stream_for(spec.seed, SIGMA_STREAM, 0);
        let random_probe =
            Array1::from_shape_fn(spec.dim, |_| probe_rng.sample::<f64, _>(StandardNormal));
        let probes = vec![Array1::zeros(spec.dim), minimizer, random_probe];
        obj.sigma2 = estimate_sigma2(&obj, &probes, 10_000, &mut probe_rng)?;

        Ok(obj)
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    /// Labels in {-1, +1}.
    pub fn labels(&self) -> &Array1<f64> {
        &self.labels
    }

    /// The hyperplane normal used to generate the labels; handy for
    /// building matched held-out test sets.
    pub fn ground_truth(&self) -> &Array1<f64> {
        &self.ground_truth
    }

    fn solve_minimizer(&self) -> Result<Array1<f64>, ObjectiveError> {
        let mut x = Array1::zeros(self.dim());
        let step = 1.0 / self.smoothness;
        for _ in 0..MINIMIZER_MAX_STEPS {
            let grad = self.full_gradient(x.view())?;
            let norm = grad.dot(&grad).sqrt();
            if norm <= 1e-10 {
                return Ok(x);
            }
            x.scaled_add(-step, &grad);
        }
        Err(ObjectiveError::MinimizerNotConverged(MINIMIZER_MAX_STEPS))
    }

    /// Mean loss gradient over `indices` plus the ridge term.
    fn gradient_over(&self, indices: &[usize], x: ArrayView1<f64>) -> Array1<f64> {
        let mut grad = Array1::zeros(self.dim());
        for &i in indices {
            let row = self.features.row(i);
            let y = self.labels[i];
            let margin = -y * row.dot(&x);
            let weight = -y * sigmoid(margin);
            grad.scaled_add(weight, &row);
        }
        grad /= indices.len() as f64;
        grad.scaled_add(self.ridge, &x.to_owned());
        grad
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln(1 + exp(z))`.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Objective for LogisticSynthetic {
    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: ArrayView1<f64>) -> Result<f64, ObjectiveError> {
        check_dim(self.dim(), &x)?;
        let n = self.features.nrows();
        let mut total = 0.0;
        for i in 0..n {
            let margin = -self.labels[i] * self.features.row(i).dot(&x);
            total += softplus(margin);
        }
        Ok(total / n as f64 + 0.5 * self.ridge * x.dot(&x))
    }

    fn full_gradient(&self, x: ArrayView1<f64>) -> Result<Array1<f64>, ObjectiveError> {
        check_dim(self.dim(), &x)?;
        let all: Vec<usize> = (0..self.features.nrows()).collect();
        Ok(self.gradient_over(&all, x))
    }

    fn stochastic_gradient(
        &self,
        x: ArrayView1<f64>,
        batch: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Array1<f64>, ObjectiveError> {
        check_dim(self.dim(), &x)?;
        if batch == 0 {
            return Err(ObjectiveError::ZeroBatch);
        }
        let n = self.features.nrows();
        if batch > n {
            return Err(ObjectiveError::BatchExceedsSamples { batch, samples: n });
        }
        // Sorted so the full batch reproduces full_gradient bit for bit and
        // the accumulation order never depends on the draw order.
        let mut indices = rand::seq::index::sample(rng, n, batch).into_vec();
        indices.sort_unstable();
        Ok(self.gradient_over(&indices, x))
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn sigma2(&self) -> f64 {
        self.sigma2
    }

    fn omega(&self) -> Option<f64> {
        // Subsampling noise scales with the gradient spread; no analytic
        // coefficient is available.
        None
    }

    fn f_inf(&self) -> f64 {
        self.f_inf
    }
}

// ---------------------------------------------------------------------------
// Empirical variance estimation
// ---------------------------------------------------------------------------

/// Monte Carlo estimate of the batch-1 gradient variance
/// `E||g(x) - grad F(x)||^2`, maximized over the probe points.
///
/// Used as `sigma2` for the bound machinery when no closed form exists.
pub fn estimate_sigma2(
    obj: &dyn Objective,
    probes: &[Array1<f64>],
    draws: usize,
    rng: &mut dyn RngCore,
) -> Result<f64, ObjectiveError> {
    if probes.is_empty() {
        return Err(ObjectiveError::EmptyProbeSet);
    }
    if draws < 100 {
        return Err(ObjectiveError::TooFewDraws(draws));
    }
    let mut worst = 0.0f64;
    for probe in probes {
        let exact = obj.full_gradient(probe.view())?;
        let mut acc = 0.0;
        for _ in 0..draws {
            let g = obj.stochastic_gradient(probe.view(), 1, rng)?;
            let mut sq = 0.0;
            for (a, b) in g.iter().zip(exact.iter()) {
                let r = a - b;
                sq += r * r;
            }
            acc += sq;
        }
        worst = worst.max(acc / draws as f64);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn quad(diag: Vec<f64>, linear: Vec<f64>, sigma2: f64) -> Quadratic {
        Quadratic::new(QuadraticSpec {
            diag: Array1::from_vec(diag),
            linear: Array1::from_vec(linear),
            noise_sigma2: sigma2,
        })
        .unwrap()
    }

    #[test]
    fn quadratic_hand_values() {
        // 1/2 ||x||^2 at (3, 4): value 12.5, gradient (3, 4).
        let q = quad(vec![1.0, 1.0], vec![0.0, 0.0], 0.0);
        let (f, g) = q.value_grad(array![3.0, 4.0].view()).unwrap();
        assert_eq!(f, 12.5);
        assert_eq!(g, array![3.0, 4.0]);
    }

    #[test]
    fn quadratic_at_origin() {
        let q = quad(vec![1.0, 2.0], vec![0.0, 0.0], 0.0);
        let (f, g) = q.value_grad(array![0.0, 0.0].view()).unwrap();
        assert_eq!(f, 0.0);
        assert_eq!(g, array![0.0, 0.0]);
        assert_eq!(q.f_inf(), 0.0);
    }

    #[test]
    fn quadratic_with_linear_term() {
        // diag (1,2), b (1,2): minimizer (1,1), value there -1.5.
        let q = quad(vec![1.0, 2.0], vec![1.0, 2.0], 0.0);
        let (f, g) = q.value_grad(array![1.0, 1.0].view()).unwrap();
        assert!((f + 1.5).abs() < 1e-15);
        assert_eq!(g, array![0.0, 0.0]);
        assert!((q.f_inf() + 1.5).abs() < 1e-15);
        assert_eq!(q.minimizer(), array![1.0, 1.0]);
    }

    #[test]
    fn quadratic_dimension_mismatch() {
        let q = quad(vec![1.0, 1.0], vec![0.0, 0.0], 0.0);
        assert!(matches!(
            q.value(array![1.0].view()),
            Err(ObjectiveError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn quadratic_rejects_bad_specs() {
        assert!(Quadratic::new(QuadraticSpec {
            diag: array![1.0, 0.0],
            linear: array![0.0, 0.0],
            noise_sigma2: 0.0,
        })
        .is_err());
        assert!(Quadratic::new(QuadraticSpec {
            diag: array![1.0],
            linear: array![0.0],
            noise_sigma2: -1.0,
        })
        .is_err());
        assert!(Quadratic::new(QuadraticSpec {
            diag: array![],
            linear: array![],
            noise_sigma2: 0.0,
        })
        .is_err());
    }

    #[test]
    fn noiseless_sampler_is_exact() {
        let q = quad(vec![2.0, 3.0], vec![0.5, 0.0], 0.0);
        let x = array![1.0, -2.0];
        let mut rng = stream_for(1, 0, 0);
        let g = q.stochastic_gradient(x.view(), 4, &mut rng).unwrap();
        assert_eq!(g, q.full_gradient(x.view()).unwrap());
    }

    #[test]
    fn zero_batch_rejected() {
        let q = quad(vec![1.0], vec![0.0], 1.0);
        let mut rng = stream_for(1, 0, 0);
        assert!(matches!(
            q.stochastic_gradient(array![0.0].view(), 0, &mut rng),
            Err(ObjectiveError::ZeroBatch)
        ));
    }

    #[test]
    fn noise_variance_matches_sigma2_over_m() {
        // sigma2 = 4, m = 4: E||g - grad||^2 = 1.0; Monte Carlo mean over
        // 1e5 draws within [0.97, 1.03] (about 3 standard errors).
        let q = quad(vec![1.0, 1.0, 1.0], vec![0.0, 0.0, 0.0], 4.0);
        let x = array![0.3, -0.7, 1.1];
        let exact = q.full_gradient(x.view()).unwrap();
        let mut rng = stream_for(7, 0, 0);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let g = q.stochastic_gradient(x.view(), 4, &mut rng).unwrap();
            acc += (&g - &exact).dot(&(&g - &exact));
        }
        let mean = acc / draws as f64;
        assert!(
            (0.97..=1.03).contains(&mean),
            "variance estimate {mean} outside [0.97, 1.03]"
        );
    }

    #[test]
    fn sampler_unbiased_within_standard_error() {
        // Componentwise sample mean within 4 standard errors of the exact
        // gradient at 3 points.
        let q = quad(vec![0.5, 2.0], vec![0.2, -0.4], 2.0);
        let draws = 100_000;
        // Per-component noise std: sqrt(sigma2 / d).
        let comp_std = (2.0f64 / 2.0).sqrt();
        let se = comp_std / (draws as f64).sqrt();
        for (pi, point) in [array![0.0, 0.0], array![1.0, -1.0], array![3.0, 2.0]]
            .into_iter()
            .enumerate()
        {
            let exact = q.full_gradient(point.view()).unwrap();
            let mut rng = stream_for(11, pi as u64, 0);
            let mut sum = Array1::<f64>::zeros(2);
            for _ in 0..draws {
                sum += &q.stochastic_gradient(point.view(), 1, &mut rng).unwrap();
            }
            let mean = sum / draws as f64;
            for c in 0..2 {
                assert!(
                    (mean[c] - exact[c]).abs() <= 4.0 * se,
                    "point {pi} component {c}: |{} - {}| > 4se",
                    mean[c],
                    exact[c]
                );
            }
        }
    }

    #[test]
    fn variance_scales_inversely_with_batch() {
        let q = quad(vec![1.0, 1.0, 1.0, 1.0], vec![0.0; 4], 3.0);
        let x = array![1.0, 2.0, -1.0, 0.5];
        let exact = q.full_gradient(x.view()).unwrap();
        let draws = 40_000;
        let mut estimates = Vec::new();
        for (mi, m) in [1usize, 4, 16].into_iter().enumerate() {
            let mut rng = stream_for(13, mi as u64, 0);
            let mut acc = 0.0;
            for _ in 0..draws {
                let g = q.stochastic_gradient(x.view(), m, &mut rng).unwrap();
                acc += (&g - &exact).dot(&(&g - &exact));
            }
            estimates.push(acc / draws as f64);
        }
        // estimate(m) should be estimate(1)/m. The relative standard error
        // at these draw counts is ~0.4%, so a 5% band is generous.
        for (mi, m) in [1.0f64, 4.0, 16.0].into_iter().enumerate() {
            let expected = estimates[0] / m;
            let rel = (estimates[mi] - expected).abs() / expected;
            assert!(
                rel <= 0.05,
                "batch {m}: {} deviates {rel:.4} from expected {expected}",
                estimates[mi]
            );
        }
    }

    #[test]
    fn smoothness_witness_is_exact_for_quadratics() {
        let q = quad(vec![0.3, 1.7, 0.9], vec![0.0; 3], 0.0);
        let mut rng = stream_for(17, 0, 0);
        for _ in 0..100 {
            let a = Array1::from_shape_fn(3, |_| rng.random_range(-5.0..5.0));
            let b = Array1::from_shape_fn(3, |_| rng.random_range(-5.0..5.0));
            let ga = q.full_gradient(a.view()).unwrap();
            let gb = q.full_gradient(b.view()).unwrap();
            let lhs = (&ga - &gb).dot(&(&ga - &gb)).sqrt();
            let rhs = q.smoothness() * (&a - &b).dot(&(&a - &b)).sqrt();
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lower_bound_holds_on_random_points() {
        let q = quad(vec![1.0, 2.0], vec![1.0, 2.0], 0.0);
        let mut rng = stream_for(19, 0, 0);
        for _ in 0..10_000 {
            let x = Array1::from_shape_fn(2, |_| rng.random_range(-10.0..10.0));
            assert!(q.value(x.view()).unwrap() >= q.f_inf() - 1e-12);
        }
    }

    fn logistic(seed: u64) -> LogisticSynthetic {
        LogisticSynthetic::new(LogisticSyntheticSpec {
            samples: 60,
            dim: 4,
            seed,
            ridge: 0.1,
        })
        .unwrap()
    }

    #[test]
    fn logistic_full_batch_equals_full_gradient() {
        let obj = logistic(3);
        let x = array![0.2, -0.4, 0.1, 0.9];
        let mut rng = stream_for(23, 0, 0);
        let g = obj.stochastic_gradient(x.view(), 60, &mut rng).unwrap();
        let exact = obj.full_gradient(x.view()).unwrap();
        assert_eq!(g, exact, "full batch must reproduce the exact gradient");
    }

    #[test]
    fn logistic_batch_too_large_rejected() {
        let obj = logistic(3);
        let mut rng = stream_for(23, 0, 0);
        assert!(matches!(
            obj.stochastic_gradient(Array1::zeros(4).view(), 61, &mut rng),
            Err(ObjectiveError::BatchExceedsSamples { .. })
        ));
    }

    #[test]
    fn logistic_minibatch_unbiased() {
        let obj = logistic(5);
        let x = array![0.5, 0.0, -0.3, 0.2];
        let exact = obj.full_gradient(x.view()).unwrap();
        let mut rng = stream_for(29, 0, 0);
        let draws = 60_000;
        let mut sum = Array1::<f64>::zeros(4);
        for _ in 0..draws {
            sum += &obj.stochastic_gradient(x.view(), 4, &mut rng).unwrap();
        }
        let mean = sum / draws as f64;
        for c in 0..4 {
            assert!(
                (mean[c] - exact[c]).abs() < 0.02,
                "component {c}: {} vs {}",
                mean[c],
                exact[c]
            );
        }
    }

    #[test]
    fn logistic_value_lower_bounded_and_constants_sane() {
        let obj = logistic(7);
        assert!(obj.f_inf() >= 0.0, "ridge logistic loss is nonnegative");
        assert!(obj.smoothness() > 0.0);
        assert!(obj.sigma2() >= 0.0 && obj.sigma2().is_finite());
        assert!(obj.omega().is_none());
        let mut rng = stream_for(31, 0, 0);
        for _ in 0..2000 {
            let x = Array1::from_shape_fn(4, |_| rng.random_range(-4.0..4.0));
            assert!(obj.value(x.view()).unwrap() >= obj.f_inf() - 1e-10);
        }
    }

    #[test]
    fn logistic_gradient_norm_small_at_cached_minimizer() {
        let obj = logistic(11);
        let x = obj.solve_minimizer().unwrap();
        let g = obj.full_gradient(x.view()).unwrap();
        assert!(g.dot(&g).sqrt() <= 1e-10);
        assert!((obj.value(x.view()).unwrap() - obj.f_inf()).abs() < 1e-12);
    }

    #[test]
    fn estimate_sigma2_recovers_quadratic_noise() {
        let q = quad(vec![1.0, 1.0, 1.0], vec![0.0; 3], 2.0);
        let probes = vec![array![0.0, 0.0, 0.0], array![1.0, -1.0, 0.5]];
        let mut rng = stream_for(37, 0, 0);
        let est = estimate_sigma2(&q, &probes, 10_000, &mut rng).unwrap();
        assert!(
            (est - 2.0).abs() <= 0.2,
            "estimate {est} not within 10% of 2.0"
        );
    }

    #[test]
    fn estimate_sigma2_zero_noise_is_zero() {
        let q = quad(vec![1.0, 2.0], vec![0.0, 0.0], 0.0);
        let probes = vec![array![1.0, 1.0]];
        let mut rng = stream_for(41, 0, 0);
        assert_eq!(estimate_sigma2(&q, &probes, 100, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn estimate_sigma2_logistic_stable_across_seeds() {
        let obj = logistic(13);
        let probes = vec![Array1::zeros(4), array![0.4, -0.2, 0.8, 0.1]];
        let mut rng_a = stream_for(43, 0, 0);
        let mut rng_b = stream_for(44, 0, 0);
        let a = estimate_sigma2(&obj, &probes, 10_000, &mut rng_a).unwrap();
        let b = estimate_sigma2(&obj, &probes, 10_000, &mut rng_b).unwrap();
        assert!(a.is_finite() && a >= 0.0);
        assert!(
            (a - b).abs() <= 0.15 * a.max(b),
            "estimates {a} and {b} differ by more than 15%"
        );
    }

    #[test]
    fn estimate_sigma2_rejects_bad_arguments() {
        let q = quad(vec![1.0], vec![0.0], 1.0);
        let mut rng = stream_for(47, 0, 0);
        assert!(matches!(
            estimate_sigma2(&q, &[], 1000, &mut rng),
            Err(ObjectiveError::EmptyProbeSet)
        ));
        assert!(matches!(
            estimate_sigma2(&q, &[array![0.0]], 99, &mut rng),
            Err(ObjectiveError::TooFewDraws(99))
        ));
    }

    #[test]
    fn linspace_endpoints_exact() {
        let v = linspace(0.1, 1.0, 10);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[9], 1.0);
        assert_eq!(v.len(), 10);
        for i in 1..10 {
            assert!((v[i] - v[i - 1] - 0.1).abs() < 1e-12);
        }
    }
}
