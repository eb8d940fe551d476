use ndarray::{s, Array2, Array3, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GesturalError, GesturalScore, GestureDict};

/// `X̂ = Σ_i G(i) · shift(H, i)`, where `shift(H, i)` moves columns right by
/// `i` frames and zero-fills. Result is `[d x t]`.
pub fn cmf_apply(dict: &GestureDict, activations: ArrayView2<'_, f64>) -> Result<Array2<f64>, GesturalError> {
    let g = dict.kernels();
    let (window, d, k) = g.dim();
    if activations.nrows() != k {
        return Err(GesturalError::DimensionMismatch(format!(
            "{} activation rows for {} gestures",
            activations.nrows(),
            k
        )));
    }
    Ok(apply_raw(g, activations, window, d))
}

fn apply_raw(g: &Array3<f64>, h: ArrayView2<'_, f64>, window: usize, d: usize) -> Array2<f64> {
    let t = h.ncols();
    let mut x = Array2::zeros((d, t));
    for i in 0..window.min(t) {
        let gi = g.index_axis(Axis(0), i);
        let contrib = gi.dot(&h.slice(s![.., ..t - i]));
        let mut dst = x.slice_mut(s![.., i..]);
        dst += &contrib;
    }
    x
}

pub fn relative_error(x: ArrayView2<'_, f64>, x_hat: ArrayView2<'_, f64>) -> f64 {
    let diff: f64 = Zip::from(&x).and(&x_hat).fold(0.0, |acc, a, b| acc + (a - b) * (a - b));
    let norm: f64 = x.iter().map(|v| v * v).sum();
    if norm == 0.0 {
        diff.sqrt()
    } else {
        (diff / norm).sqrt()
    }
}

/// Convolutive NMF settings.
///
/// Each iteration runs `inner_updates` multiplicative updates of `H`
/// followed by as many of `G`, then tries an extrapolated step along the
/// last change and keeps it only if the error drops. The first
/// `restarts * warmup` iterations of
/// the budget are spent on independent random starts; the best one keeps
/// running for the rest of `iters`.
#[derive(Debug, Clone, PartialEq)]
pub struct CnmfConfig {
    pub gestures: usize,
    pub window: usize,
    pub iters: usize,
    pub seed: u64,
    pub inner_updates: usize,
    pub restarts: usize,
    pub warmup: usize,
}

impl Default for CnmfConfig {
    fn default() -> Self {
        CnmfConfig {
            gestures: super::DEFAULT_GESTURES,
            window: 10,
            iters: 500,
            seed: 0,
            inner_updates: 20,
            restarts: 8,
            warmup: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CnmfFit {
    pub dict: GestureDict,
    pub score: GesturalScore,
    /// Relative Frobenius error after each iteration of the returned run.
    pub errors: Vec<f64>,
}

impl CnmfFit {
    pub fn final_error(&self) -> f64 {
        self.errors.last().copied().unwrap_or(f64::NAN)
    }
}

struct Run {
    g: Array3<f64>,
    h: Array2<f64>,
    errors: Vec<f64>,
    beta: f64,
}

// Guards 0/0 when a whole row or kernel has collapsed to zero.
const TINY: f64 = f64::MIN_POSITIVE;
// Extrapolated entries are floored here so multiplicative updates can revive them.
const FLOOR: f64 = 1e-16;
const BETA_START: f64 = 0.5;
const BETA_MAX: f64 = 4.0;

impl Run {
    fn init(x: ArrayView2<'_, f64>, cfg: &CnmfConfig, rng: &mut ChaCha8Rng) -> Run {
        let (d, t) = x.dim();
        let mut g = Array3::from_shape_fn((cfg.window, d, cfg.gestures), |_| rng.random::<f64>());
        let mut h = Array2::from_shape_fn((cfg.gestures, t), |_| rng.random::<f64>());
        let x_hat = apply_raw(&g, h.view(), cfg.window, d);
        let (mx, mh) = (x.mean().unwrap_or(0.0), x_hat.mean().unwrap_or(0.0));
        let scale = if mh > 0.0 { (mx / mh).sqrt() } else { 0.0 };
        g.mapv_inplace(|v| v * scale);
        h.mapv_inplace(|v| v * scale);
        Run { g, h, errors: Vec::new(), beta: BETA_START }
    }

    fn step(&mut self, x: ArrayView2<'_, f64>, inner: usize) {
        let (g_prev, h_prev) = (self.g.clone(), self.h.clone());
        self.update(x, inner);
        let (window, d, _) = self.g.dim();
        let x_hat = apply_raw(&self.g, self.h.view(), window, d);
        let err = relative_error(x, x_hat.view());

        // Momentum along the last step, kept only if it lowers the error.
        let extrapolate = |cur: f64, prev: f64, beta: f64| (cur + beta * (cur - prev)).max(FLOOR);
        let mut g_c = self.g.clone();
        Zip::from(&mut g_c).and(&g_prev).for_each(|c, &p| *c = extrapolate(*c, p, self.beta));
        let mut h_c = self.h.clone();
        Zip::from(&mut h_c).and(&h_prev).for_each(|c, &p| *c = extrapolate(*c, p, self.beta));
        let x_c = apply_raw(&g_c, h_c.view(), window, d);
        let err_c = relative_error(x, x_c.view());
        if err_c < err {
            self.g = g_c;
            self.h = h_c;
            self.errors.push(err_c);
            self.beta = (self.beta * 1.2).min(BETA_MAX);
        } else {
            self.errors.push(err);
            self.beta = (self.beta * 0.5).max(0.05);
        }
    }

    fn update(&mut self, x: ArrayView2<'_, f64>, inner: usize) {
        let (window, d, _) = self.g.dim();
        let t = x.ncols();
        let span = window.min(t);

        // H: numerator Σ_i G(i)ᵀ X[:, i..] is fixed across inner updates
        let mut num = Array2::<f64>::zeros(self.h.dim());
        for i in 0..span {
            let gi_t = self.g.index_axis(Axis(0), i).t().to_owned();
            let mut dst = num.slice_mut(s![.., ..t - i]);
            dst += &gi_t.dot(&x.slice(s![.., i..]));
        }
        for _ in 0..inner {
            let x_hat = apply_raw(&self.g, self.h.view(), window, d);
            let mut den = Array2::<f64>::zeros(self.h.dim());
            for i in 0..span {
                let gi_t = self.g.index_axis(Axis(0), i).t().to_owned();
                let mut dst = den.slice_mut(s![.., ..t - i]);
                dst += &gi_t.dot(&x_hat.slice(s![.., i..]));
            }
            Zip::from(&mut self.h).and(&num).and(&den).for_each(|h, &n, &dd| {
                *h *= n / dd.max(TINY);
            });
        }

        // G: all lags updated together against the same reconstruction
        for _ in 0..inner {
            let x_hat = apply_raw(&self.g, self.h.view(), window, d);
            for i in 0..span {
                let h_shift = self.h.slice(s![.., ..t - i]);
                let n = x.slice(s![.., i..]).dot(&h_shift.t());
                let dd = x_hat.slice(s![.., i..]).dot(&h_shift.t());
                let mut gi = self.g.index_axis_mut(Axis(0), i);
                Zip::from(&mut gi).and(&n).and(&dd).for_each(|g, &n, &dd| {
                    *g *= n / dd.max(TINY);
                });
            }
        }
    }
}

/// Nonnegative convolutive factorization `X ≈ Σ_i G(i)·shift(H, i)` by
/// multiplicative updates on the Frobenius error. Within one run the error
/// never increases from one iteration to the next.
pub fn cnmf_fit(x: ArrayView2<'_, f64>, cfg: &CnmfConfig) -> Result<CnmfFit, GesturalError> {
    if cfg.gestures == 0 || cfg.window == 0 {
        return Err(GesturalError::BadConfig("gestures and window must be at least 1".into()));
    }
    if cfg.inner_updates == 0 {
        return Err(GesturalError::BadConfig("inner_updates must be at least 1".into()));
    }
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(GesturalError::DimensionMismatch("empty data matrix".into()));
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(GesturalError::NegativeInput);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (restarts, warmup) =
        if cfg.restarts > 1 && cfg.restarts * cfg.warmup < cfg.iters { (cfg.restarts, cfg.warmup) } else { (1, 0) };

    let mut best: Option<Run> = None;
    for _ in 0..restarts {
        let mut run = Run::init(x, cfg, &mut rng);
        for _ in 0..warmup {
            run.step(x, cfg.inner_updates);
        }
        let better = match &best {
            None => true,
            Some(b) => run.errors.last() < b.errors.last(),
        };
        if better {
            best = Some(run);
        }
    }
    let mut run = best.expect("at least one start");
    let remaining = cfg.iters - restarts * warmup;
    for _ in 0..remaining {
        run.step(x, cfg.inner_updates);
    }
    if run.errors.is_empty() {
        let x_hat = apply_raw(&run.g, run.h.view(), cfg.window, x.nrows());
        run.errors.push(relative_error(x, x_hat.view()));
    }

    Ok(CnmfFit { dict: GestureDict::new(run.g)?, score: GesturalScore::new(run.h), errors: run.errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn window_one_is_matrix_product() {
        let g = Array3::from_shape_vec((1, 2, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let h = array![[1.0, 0.0, 2.0], [0.5, 1.0, 0.0]];
        let dict = GestureDict::new(g.clone()).unwrap();
        let x = cmf_apply(&dict, h.view()).unwrap();
        assert_eq!(x, g.index_axis(Axis(0), 0).dot(&h));
    }

    #[test]
    fn hand_convolution() {
        let dict = GestureDict::new(Array3::from_shape_vec((2, 1, 1), vec![1.0, 2.0]).unwrap()).unwrap();
        let x = cmf_apply(&dict, array![[1.0, 0.0, 1.0]].view()).unwrap();
        assert_eq!(x, array![[1.0, 2.0, 1.0]]);
    }

    #[test]
    fn zero_activations() {
        let dict = GestureDict::new(Array3::from_elem((3, 2, 2), 0.7)).unwrap();
        let x = cmf_apply(&dict, Array2::zeros((2, 5)).view()).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn window_longer_than_signal() {
        let dict = GestureDict::new(Array3::from_shape_vec((4, 1, 1), vec![1.0, 1.0, 1.0, 1.0]).unwrap()).unwrap();
        let x = cmf_apply(&dict, array![[1.0, 1.0]].view()).unwrap();
        assert_eq!(x, array![[1.0, 2.0]]);
    }

    #[test]
    fn gesture_count_mismatch() {
        let dict = GestureDict::new(Array3::zeros((1, 1, 2))).unwrap();
        assert!(cmf_apply(&dict, Array2::zeros((3, 4)).view()).is_err());
    }

    #[test]
    fn zero_data_is_fixed_point() {
        let cfg = CnmfConfig { gestures: 2, window: 3, iters: 20, ..CnmfConfig::default() };
        let fit = cnmf_fit(Array2::zeros((4, 10)).view(), &cfg).unwrap();
        assert_eq!(fit.final_error(), 0.0);
        assert!(fit.score.activations.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn negative_input_rejected() {
        let cfg = CnmfConfig { gestures: 1, window: 1, iters: 1, ..CnmfConfig::default() };
        assert!(matches!(cnmf_fit(array![[1.0, -0.1]].view(), &cfg), Err(GesturalError::NegativeInput)));
    }

    #[test]
    fn error_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Array2::from_shape_fn((5, 40), |_| rng.random::<f64>());
        let cfg = CnmfConfig { gestures: 3, window: 4, iters: 100, seed: 3, inner_updates: 1, restarts: 1, warmup: 0 };
        let fit = cnmf_fit(x.view(), &cfg).unwrap();
        assert_eq!(fit.errors.len(), 100);
        for w in fit.errors.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "{} -> {}", w[0], w[1]);
        }
        assert!(fit.dict.kernels().iter().all(|v| *v >= 0.0));
        assert!(fit.score.activations.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn same_seed_same_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((3, 20), |_| rng.random::<f64>());
        let cfg = CnmfConfig { gestures: 2, window: 2, iters: 30, seed: 9, ..CnmfConfig::default() };
        let a = cnmf_fit(x.view(), &cfg).unwrap();
        let b = cnmf_fit(x.view(), &cfg).unwrap();
        assert_eq!(a.errors, b.errors);
        assert_eq!(a.dict, b.dict);
    }
}
