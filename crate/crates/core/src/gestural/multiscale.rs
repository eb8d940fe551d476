use ndarray::{s, Array2, ArrayView2};

use super::{cmf_apply, GesturalError, GestureDict};

/// Temporal downsampling factors of the decoder branches.
pub const SCALES: [usize; 3] = [1, 2, 4];

/// Sum over scales `r` of `up_r(cmf_apply(G, down_r(H)))`.
pub fn multiscale_reconstruct(dict: &GestureDict, h: ArrayView2<'_, f64>) -> Result<Array2<f64>, GesturalError> {
    multiscale_reconstruct_with(dict, h, |_, x| x)
}

/// Like [`multiscale_reconstruct`] with a per-scale transform applied to each
/// low-resolution reconstruction before upsampling. The transform receives the
/// scale factor and must preserve the shape.
///
/// `H` is zero-padded on the right to a multiple of 4 frames; the result is
/// cropped back to the input length.
pub fn multiscale_reconstruct_with<F>(
    dict: &GestureDict,
    h: ArrayView2<'_, f64>,
    transform: F,
) -> Result<Array2<f64>, GesturalError>
where
    F: Fn(usize, Array2<f64>) -> Array2<f64>,
{
    let (k, t) = h.dim();
    if k != dict.gestures() {
        return Err(GesturalError::DimensionMismatch(format!("{k} activation rows for {} gestures", dict.gestures())));
    }
    if t == 0 {
        return Ok(Array2::zeros((dict.channels(), 0)));
    }
    let max_scale = SCALES[SCALES.len() - 1];
    let padded_len = t.div_ceil(max_scale) * max_scale;
    let mut padded = Array2::zeros((k, padded_len));
    padded.slice_mut(s![.., ..t]).assign(&h);

    let mut out = Array2::zeros((dict.channels(), padded_len));
    for r in SCALES {
        let low = cmf_apply(dict, mean_pool(padded.view(), r).view())?;
        let low = transform(r, low);
        if low.dim() != (dict.channels(), padded_len / r) {
            return Err(GesturalError::DimensionMismatch(format!("transform changed shape at scale {r}")));
        }
        out += &upsample_linear(low.view(), r);
    }
    Ok(out.slice(s![.., ..t]).to_owned())
}

fn mean_pool(x: ArrayView2<'_, f64>, r: usize) -> Array2<f64> {
    if r == 1 {
        return x.to_owned();
    }
    let (rows, t) = x.dim();
    Array2::from_shape_fn((rows, t / r), |(row, j)| x.slice(s![row, j * r..(j + 1) * r]).sum() / r as f64)
}

/// Interpolates between low-resolution sample centers; positions outside the
/// first and last centers take the edge value.
fn upsample_linear(x: ArrayView2<'_, f64>, r: usize) -> Array2<f64> {
    if r == 1 {
        return x.to_owned();
    }
    let (rows, n) = x.dim();
    let mut out = Array2::zeros((rows, n * r));
    for j in 0..n * r {
        let pos = ((j as f64 + 0.5) / r as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = pos - lo as f64;
        for row in 0..rows {
            out[[row, j]] = (1.0 - frac) * x[[row, lo]] + frac * x[[row, hi]];
        }
    }
    out
}
