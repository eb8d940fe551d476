use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::GesturalError;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Diagonal Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl GaussianSpec {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self, GesturalError> {
        if mu.len() != sigma.len() {
            return Err(GesturalError::InvalidSigma(format!("{} means for {} sigmas", mu.len(), sigma.len())));
        }
        if let Some(s) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(GesturalError::InvalidSigma(format!("sigma {s} is not positive")));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(GesturalError::InvalidSigma("non-finite mean".into()));
        }
        Ok(GaussianSpec { mu, sigma })
    }

    pub fn standard(dim: usize) -> Self {
        GaussianSpec { mu: vec![0.0; dim], sigma: vec![1.0; dim] }
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Log density of a point. For unnormalized models (unit normalizers) this is
/// an energy; KL estimates built on it are then offset by the log normalizer.
pub trait Density {
    fn logpdf(&self, x: &[f64]) -> f64;
}

pub trait Sample {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64>;
}

impl Density for GaussianSpec {
    fn logpdf(&self, x: &[f64]) -> f64 {
        self.mu
            .iter()
            .zip(&self.sigma)
            .zip(x)
            .map(|((m, s), v)| {
                let z = (v - m) / s;
                -0.5 * (LN_2PI + z * z) - s.ln()
            })
            .sum()
    }
}

impl Sample for GaussianSpec {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.mu.iter().zip(&self.sigma).map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// Closed-form `KL(q ‖ p)` between diagonal Gaussians, summed over dimensions.
pub fn gaussian_kl(q: &GaussianSpec, p: &GaussianSpec) -> Result<f64, GesturalError> {
    if q.dim() != p.dim() {
        return Err(GesturalError::DimensionMismatch(format!("{} vs {} dimensions", q.dim(), p.dim())));
    }
    let kl: f64 = (0..q.dim())
        .map(|j| {
            let (mq, sq, mp, sp) = (q.mu[j], q.sigma[j], p.mu[j], p.sigma[j]);
            (sp / sq).ln() + (sq * sq + (mq - mp) * (mq - mp)) / (2.0 * sp * sp) - 0.5
        })
        .sum();
    Ok(kl.max(0.0))
}

pub fn kl_to_standard_normal(q: &GaussianSpec) -> f64 {
    let kl: f64 = q.mu.iter().zip(&q.sigma).map(|(m, s)| 0.5 * (s * s + m * m - 1.0) - s.ln()).sum();
    kl.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlTerms {
    pub kl_z: f64,
    pub kl_d: f64,
    pub kl_i: f64,
}

impl KlTerms {
    pub fn total(&self) -> f64 {
        self.kl_z + self.kl_d + self.kl_i
    }
}

/// Latent, duration and intensity KL terms against `N(0, I)`, the uniform
/// duration prior, and `N(0, I)` on pre-sigmoid intensity.
pub fn elbo_kl_terms(
    z_post: &GaussianSpec,
    dur_post: &[f64],
    int_post: &GaussianSpec,
) -> Result<KlTerms, GesturalError> {
    if dur_post.is_empty() {
        return Err(GesturalError::InvalidSimplex("empty".into()));
    }
    if dur_post.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(GesturalError::InvalidSimplex("negative or non-finite entry".into()));
    }
    let total: f64 = dur_post.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(GesturalError::InvalidSimplex(format!("sums to {total}")));
    }
    let entropy: f64 = dur_post.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
    let kl_d = ((dur_post.len() as f64).ln() - entropy).max(0.0);
    Ok(KlTerms { kl_z: kl_to_standard_normal(z_post), kl_d, kl_i: kl_to_standard_normal(int_post) })
}

fn to_dmatrix(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    let (r, c) = a.dim();
    DMatrix::from_fn(r, c, |i, j| a[[i, j]])
}

fn factorize(a: ArrayView2<'_, f64>, dim: usize) -> Result<(DMatrix<f64>, f64), GesturalError> {
    if a.nrows() != a.ncols() || a.nrows() != dim {
        return Err(GesturalError::DimensionMismatch(format!("map {:?} for dimension {dim}", a.dim())));
    }
    let m = to_dmatrix(a);
    let lu = m.clone().lu();
    let det = lu.determinant();
    if det == 0.0 || !det.is_finite() || !lu.is_invertible() {
        return Err(GesturalError::SingularMap);
    }
    Ok((m, det.abs().ln()))
}

/// `log p_base(A·x) + log |det A|`.
pub fn cov_logdensity(
    base: &GaussianSpec,
    a: ArrayView2<'_, f64>,
    x: ArrayView1<'_, f64>,
) -> Result<f64, GesturalError> {
    if x.len() != base.dim() {
        return Err(GesturalError::DimensionMismatch(format!(
            "point of length {} for dimension {}",
            x.len(),
            base.dim()
        )));
    }
    let (m, log_det) = factorize(a, base.dim())?;
    let z = &m * DVector::from_iterator(x.len(), x.iter().copied());
    Ok(base.logpdf(z.as_slice()) + log_det)
}

/// Density of `x = A⁻¹ z` with `z` drawn from `base`.
#[derive(Debug, Clone)]
pub struct LinearFlow {
    base: GaussianSpec,
    map: DMatrix<f64>,
    inverse: DMatrix<f64>,
    log_abs_det: f64,
}

impl LinearFlow {
    pub fn new(base: GaussianSpec, a: ArrayView2<'_, f64>) -> Result<Self, GesturalError> {
        let (map, log_abs_det) = factorize(a, base.dim())?;
        let inverse = map.clone().try_inverse().ok_or(GesturalError::SingularMap)?;
        Ok(LinearFlow { base, map, inverse, log_abs_det })
    }

    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }
}

impl Density for LinearFlow {
    fn logpdf(&self, x: &[f64]) -> f64 {
        let z = &self.map * DVector::from_column_slice(x);
        self.base.logpdf(z.as_slice()) + self.log_abs_det
    }
}

impl Sample for LinearFlow {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_vec(self.base.sample(rng));
        (&self.inverse * z).as_slice().to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`.
    pub std_err: f64,
    pub n: usize,
}

/// Monte-Carlo `KL(q ‖ p) ≈ (1/n) Σ [log q(x) − log p(x)]` with `x ~ q`.
pub fn mc_kl<Q, P>(q: &Q, p: &P, n_samples: usize, seed: u64) -> Result<McEstimate, GesturalError>
where
    Q: Density + Sample,
    P: Density,
{
    if n_samples == 0 {
        return Err(GesturalError::BadConfig("n_samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for s in 0..n_samples {
        let x = q.sample(&mut rng);
        let v = q.logpdf(&x) - p.logpdf(&x);
        let delta = v - mean;
        mean += delta / (s + 1) as f64;
        m2 += delta * (v - mean);
    }
    let std_err =
        if n_samples > 1 { (m2 / (n_samples - 1) as f64).sqrt() / (n_samples as f64).sqrt() } else { f64::INFINITY };
    Ok(McEstimate { mean, std_err, n: n_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn standard_normal_has_zero_kl() {
        assert_eq!(kl_to_standard_normal(&GaussianSpec::standard(4)), 0.0);
    }

    #[test]
    fn duration_kl_extremes() {
        let z = GaussianSpec::standard(1);
        let uniform = vec![1.0 / 50.0; 50];
        assert_abs_diff_eq!(elbo_kl_terms(&z, &uniform, &z).unwrap().kl_d, 0.0, epsilon = 1e-12);
        let mut one_hot = vec![0.0; 50];
        one_hot[7] = 1.0;
        assert_abs_diff_eq!(elbo_kl_terms(&z, &one_hot, &z).unwrap().kl_d, 50f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn bad_specs() {
        assert!(matches!(GaussianSpec::new(vec![0.0], vec![0.0]), Err(GesturalError::InvalidSigma(_))));
        let z = GaussianSpec::standard(1);
        assert!(matches!(elbo_kl_terms(&z, &[0.5, 0.6], &z), Err(GesturalError::InvalidSimplex(_))));
    }

    #[test]
    fn pairwise_kl_against_standard() {
        let q = GaussianSpec::new(vec![0.3, -1.0], vec![0.5, 2.0]).unwrap();
        let a = gaussian_kl(&q, &GaussianSpec::standard(2)).unwrap();
        assert_abs_diff_eq!(a, kl_to_standard_normal(&q), epsilon = 1e-14);
    }

    #[test]
    fn scaled_density_at_origin() {
        let base = GaussianSpec::standard(1);
        let lp = cov_logdensity(&base, array![[2.0]].view(), array![0.0].view()).unwrap();
        assert_abs_diff_eq!(lp.exp(), 2.0 / (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(lp, -0.2257913526447274, epsilon = 1e-12);
    }

    #[test]
    fn identity_map_is_base_density() {
        let base = GaussianSpec::new(vec![1.0, -2.0], vec![0.5, 3.0]).unwrap();
        let id = array![[1.0, 0.0], [0.0, 1.0]];
        for x in [[0.0, 0.0], [1.5, -4.0], [10.0, 3.0]] {
            let lp = cov_logdensity(&base, id.view(), ArrayView1::from(&x)).unwrap();
            assert_abs_diff_eq!(lp, base.logpdf(&x), epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_map_rejected() {
        let base = GaussianSpec::standard(2);
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(cov_logdensity(&base, a.view(), array![0.0, 0.0].view()), Err(GesturalError::SingularMap)));
    }

    #[test]
    fn mc_kl_of_identical_is_small() {
        let q = GaussianSpec::new(vec![0.2], vec![1.3]).unwrap();
        let est = mc_kl(&q, &q, 1000, 1).unwrap();
        assert_eq!(est.mean, 0.0);
    }

    #[test]
    fn mc_kl_shifted_gaussian() {
        let q = GaussianSpec::new(vec![1.0], vec![1.0]).unwrap();
        let p = GaussianSpec::standard(1);
        let est = mc_kl(&q, &p, 20_000, 7).unwrap();
        assert!((est.mean - 0.5).abs() < 4.0 * est.std_err, "{est:?}");
    }
}
