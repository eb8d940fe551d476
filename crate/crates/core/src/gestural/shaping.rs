use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::{GesturalError, GesturalScore};

/// Number of duration classes ℂ.
pub const DEFAULT_DURATION_CLASSES: usize = 50;
pub const DEFAULT_GUMBEL_TAU: f64 = 2.0;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `n` draws from the open interval (0, 1).
pub fn sample_gumbel_uniforms<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                break u;
            }
        })
        .collect()
}

/// Gumbel-softmax relaxation: `softmax((ln π + ε) / τ)` with
/// `ε = −ln(−ln U)`. `noise = None` gives the deterministic `ε = 0` output.
pub fn gumbel_duration(logits: &[f64], tau: f64, noise: Option<&[f64]>) -> Result<Vec<f64>, GesturalError> {
    if logits.is_empty() {
        return Err(GesturalError::DimensionMismatch("no duration classes".into()));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(GesturalError::BadTemperature(tau));
    }
    if logits.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(GesturalError::NonPositiveLogit);
    }
    if let Some(u) = noise {
        if u.len() != logits.len() {
            return Err(GesturalError::DimensionMismatch(format!(
                "{} noise values for {} classes",
                u.len(),
                logits.len()
            )));
        }
        if u.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(GesturalError::BadNoise);
        }
    }
    let scaled: Vec<f64> = logits
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let eps = noise.map_or(0.0, |u| -(-u[j].ln()).ln());
            (p.ln() + eps) / tau
        })
        .collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// `w(n) = sigmoid(I)·(1 − cos(2πn/(D−1)))` for `n = 0..D`.
pub fn hann_window(intensity_pre: f64, duration: usize) -> Result<Vec<f64>, GesturalError> {
    if duration < 2 {
        return Err(GesturalError::BadDuration(duration));
    }
    let amp = sigmoid(intensity_pre);
    let denom = (duration - 1) as f64;
    Ok((0..duration)
        .map(|n| {
            if n == 0 || n == duration - 1 {
                0.0
            } else {
                amp * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / denom).cos())
            }
        })
        .collect())
}

/// Adds the intensity window for patch `(k, i)` to row `k`. The window covers
/// frames `i − D/2 .. i − D/2 + D` (0-based, integer division) and is clipped
/// at both ends of the score.
pub fn hann_apply(
    score: &GesturalScore,
    k: usize,
    i: usize,
    intensity_pre: f64,
    duration: usize,
) -> Result<GesturalScore, GesturalError> {
    let (rows, t) = score.activations.dim();
    if k >= rows || i >= t {
        return Err(GesturalError::IndexOutOfRange(k, i));
    }
    let window = hann_window(intensity_pre, duration)?;
    let mut out = score.clone();
    let start = i as isize - (duration / 2) as isize;
    for (n, w) in window.into_iter().enumerate() {
        let col = start + n as isize;
        if col >= 0 && (col as usize) < t {
            out.activations[[k, col as usize]] += w;
        }
    }
    Ok(out)
}

/// Combined-score weights `S = a·I + b·D` and the kept cells per row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseWeights {
    pub a: f64,
    pub b: f64,
    pub m_row: usize,
}

impl Default for SparseWeights {
    fn default() -> Self {
        SparseWeights { a: 1.0, b: 1.0, m_row: 3 }
    }
}

impl SparseWeights {
    /// Intensity-weighted preset, `a = 10`, `b = 1`.
    pub fn intensity_weighted() -> Self {
        SparseWeights { a: 10.0, ..SparseWeights::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMask {
    pub mask: Array2<bool>,
    pub weights: SparseWeights,
}

impl SparseMask {
    pub fn kept_in_row(&self, k: usize) -> usize {
        self.mask.row(k).iter().filter(|&&m| m).count()
    }
}

/// Keeps the `m_row` highest-scoring cells per row; equal scores prefer the
/// smaller column.
pub fn sparse_mask(
    intensity: ArrayView2<'_, f64>,
    duration: ArrayView2<'_, f64>,
    weights: SparseWeights,
) -> Result<SparseMask, GesturalError> {
    if intensity.dim() != duration.dim() {
        return Err(GesturalError::DimensionMismatch(format!(
            "intensity {:?} vs duration {:?}",
            intensity.dim(),
            duration.dim()
        )));
    }
    if weights.m_row == 0 {
        return Err(GesturalError::BadConfig("m_row must be at least 1".into()));
    }
    let (rows, t) = intensity.dim();
    let mut mask = Array2::from_elem((rows, t), false);
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(t);
    for k in 0..rows {
        order.clear();
        order.extend((0..t).map(|i| (weights.a * intensity[[k, i]] + weights.b * duration[[k, i]], i)));
        order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        for &(_, i) in order.iter().take(weights.m_row) {
            mask[[k, i]] = true;
        }
    }
    Ok(SparseMask { mask, weights })
}

pub fn apply_mask(h: ArrayView2<'_, f64>, mask: &SparseMask) -> Result<Array2<f64>, GesturalError> {
    if h.dim() != mask.mask.dim() {
        return Err(GesturalError::DimensionMismatch(format!("scores {:?} vs mask {:?}", h.dim(), mask.mask.dim())));
    }
    let mut out = h.to_owned();
    out.zip_mut_with(&mask.mask, |v, &m| {
        if !m {
            *v = 0.0;
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn deterministic_gumbel() {
        let e = std::f64::consts::E;
        let out = gumbel_duration(&[e * e, 1.0], 2.0, None).unwrap();
        assert_abs_diff_eq!(out[0], e / (e + 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 1.0 / (e + 1.0), epsilon = 1e-12);
    }

    #[test]
    fn uniform_logits_stay_uniform() {
        let out = gumbel_duration(&[0.3; 50], 0.7, None).unwrap();
        for v in out {
            assert_abs_diff_eq!(v, 1.0 / 50.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn low_temperature_is_one_hot() {
        let logits = [1.0, 2.0, 1.5];
        let noise = [0.5, 0.2, 0.9];
        let out = gumbel_duration(&logits, 1e-4, Some(&noise)).unwrap();
        let scores: Vec<f64> = logits.iter().zip(noise).map(|(p, u)| p.ln() - (-u.ln()).ln()).collect();
        let arg = (0..3).max_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
        assert_abs_diff_eq!(out[arg], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn gumbel_errors() {
        assert!(matches!(gumbel_duration(&[1.0, 0.0], 1.0, None), Err(GesturalError::NonPositiveLogit)));
        assert!(matches!(gumbel_duration(&[1.0], 0.0, None), Err(GesturalError::BadTemperature(_))));
        assert!(matches!(gumbel_duration(&[1.0], 1.0, Some(&[1.0])), Err(GesturalError::BadNoise)));
    }

    #[test]
    fn hann_three_and_five() {
        let h = GesturalScore::zeros(1, 7);
        let out = hann_apply(&h, 0, 3, 0.0, 3).unwrap();
        let row: Vec<f64> = out.activations.row(0).to_vec();
        assert_abs_diff_eq!(row[3], 1.0, epsilon = 1e-15);
        assert_eq!(row[2], 0.0);
        assert_eq!(row[4], 0.0);

        let w = hann_window(0.0, 5).unwrap();
        let expected = [0.0, 0.5, 1.0, 0.5, 0.0];
        for (a, b) in w.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn hann_clips_at_edges() {
        let h = GesturalScore::zeros(2, 3);
        let out = hann_apply(&h, 1, 0, 0.0, 5).unwrap();
        assert_abs_diff_eq!(out.activations[[1, 0]], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.activations[[1, 1]], 0.5, epsilon = 1e-15);
        assert_eq!(out.activations.row(0).sum(), 0.0);
        assert!(matches!(hann_apply(&h, 0, 3, 0.0, 3), Err(GesturalError::IndexOutOfRange(0, 3))));
    }

    #[test]
    fn very_negative_intensity_is_noop() {
        let h = GesturalScore::zeros(1, 5);
        let out = hann_apply(&h, 0, 2, -800.0, 5).unwrap();
        assert!(out.activations.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mask_argmax_and_ties() {
        let w = SparseWeights { a: 1.0, b: 0.0, m_row: 1 };
        let m = sparse_mask(array![[1.0, 5.0, 3.0]].view(), Array2::zeros((1, 3)).view(), w).unwrap();
        assert_eq!(m.mask, array![[false, true, false]]);
        let m = sparse_mask(array![[2.0, 2.0]].view(), Array2::zeros((1, 2)).view(), w).unwrap();
        assert_eq!(m.mask, array![[true, false]]);
    }

    #[test]
    fn large_m_row_keeps_everything() {
        let h = array![[0.1, 0.2], [0.3, 0.4]];
        let w = SparseWeights { m_row: 5, ..SparseWeights::default() };
        let m = sparse_mask(h.view(), h.view(), w).unwrap();
        assert_eq!(apply_mask(h.view(), &m).unwrap(), h);
    }

    #[test]
    fn mask_shape_mismatch() {
        let w = SparseWeights::default();
        assert!(sparse_mask(Array2::zeros((1, 2)).view(), Array2::zeros((2, 1)).view(), w).is_err());
    }
}
