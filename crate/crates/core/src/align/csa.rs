//! Connectionist subsequence aligner: an LCS-constrained forward/backward
//! lattice over emissions `y[i][j] = p(C_j | τ_i)`.
//!
//! Moving from row `i-1` to row `i` either stays on the same reference
//! column (weight 1, "emission copy") or jumps forward by `k >= 1` columns
//! with weight `δ^k · y[i][j]`, times the transition `trans[j-1]` when
//! `k = 1`. Tables are stored 0-based internally; the public contract is
//! linear-space values.

use ndarray::{Array2, ArrayView2};

use super::AlignError;

/// Default jump discount.
pub const DEFAULT_DELTA: f64 = 0.9;

/// Row-stochastic emission probabilities, shape `[t'' x L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix(Array2<f64>);

impl EmissionMatrix {
    /// Validates entries in `[0, 1]` and rows summing to 1 within 1e-9.
    pub fn new(y: Array2<f64>) -> Result<Self, AlignError> {
        if y.nrows() == 0 || y.ncols() == 0 {
            return Err(AlignError::DimensionMismatch("empty emission matrix".into()));
        }
        for (i, row) in y.rows().into_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
                return Err(AlignError::BadEmission(format!("row {} has entries outside [0, 1]", i + 1)));
            }
            let s: f64 = row.sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(AlignError::BadEmission(format!("row {} sums to {s}", i + 1)));
            }
        }
        Ok(EmissionMatrix(y))
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// 1-based lookup.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i - 1, j - 1]]
    }
}

/// `trans[j]` is the probability of moving from `C_j` to `C_{j+1}`; length `L - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable(Vec<f64>);

impl TransitionTable {
    pub fn new(trans: Vec<f64>) -> Result<Self, AlignError> {
        if trans.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(AlignError::BadTransition);
        }
        Ok(TransitionTable(trans))
    }

    /// All-ones table for `ref_len` reference tokens.
    pub fn ones(ref_len: usize) -> Self {
        TransitionTable(vec![1.0; ref_len.saturating_sub(1)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Forward and backward tables of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeTables {
    pub alpha: Array2<f64>,
    pub beta: Array2<f64>,
    pub delta: f64,
}

impl LatticeTables {
    pub fn compute(y: ArrayView2<'_, f64>, trans: &TransitionTable, delta: f64) -> Result<Self, AlignError> {
        Ok(LatticeTables { alpha: csa_forward(y, trans, delta)?, beta: csa_backward(y, trans, delta)?, delta })
    }

    pub fn loss(&self, y: ArrayView2<'_, f64>) -> Result<f64, AlignError> {
        csa_loss(self.alpha.view(), self.beta.view(), y)
    }
}

fn check_inputs(y: ArrayView2<'_, f64>, trans: &TransitionTable, delta: f64) -> Result<(usize, usize), AlignError> {
    let (t, l) = y.dim();
    if t == 0 || l == 0 {
        return Err(AlignError::DimensionMismatch("empty emission matrix".into()));
    }
    if trans.len() + 1 != l {
        return Err(AlignError::DimensionMismatch(format!("{} transitions for {} reference tokens", trans.len(), l)));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(AlignError::BadDiscount(delta));
    }
    if y.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(AlignError::BadEmission("entries must be finite and nonnegative".into()));
    }
    Ok((t, l))
}

fn discount_powers(delta: f64, n: usize) -> Vec<f64> {
    let mut pw = Vec::with_capacity(n + 1);
    let mut acc = 1.0;
    for _ in 0..=n {
        pw.push(acc);
        acc *= delta;
    }
    pw
}

/// α, shape `[t'' x L]`, with α[1][1] = 1 and α[1][j>1] = 0.
pub fn csa_forward(y: ArrayView2<'_, f64>, trans: &TransitionTable, delta: f64) -> Result<Array2<f64>, AlignError> {
    let (t, l) = check_inputs(y, trans, delta)?;
    let pw = discount_powers(delta, l);
    let tr = trans.as_slice();
    let mut alpha = Array2::zeros((t, l));
    alpha[[0, 0]] = 1.0;
    for i in 1..t {
        for j in 0..l {
            let mut jump = 0.0;
            for k in 1..=j {
                let w = if k == 1 { pw[1] * tr[j - 1] } else { pw[k] };
                jump += w * alpha[[i - 1, j - k]];
            }
            alpha[[i, j]] = alpha[[i - 1, j]] + jump * y[[i, j]];
        }
    }
    Ok(alpha)
}

/// β, shape `[t'' x L]`, with β[t''][L] = 1 and β[t''][j<L] = 0.
/// Jumps are bounded by `L - j` so that `j + k` stays a reference index.
pub fn csa_backward(y: ArrayView2<'_, f64>, trans: &TransitionTable, delta: f64) -> Result<Array2<f64>, AlignError> {
    let (t, l) = check_inputs(y, trans, delta)?;
    let pw = discount_powers(delta, l);
    let tr = trans.as_slice();
    let mut beta = Array2::zeros((t, l));
    beta[[t - 1, l - 1]] = 1.0;
    for i in (0..t - 1).rev() {
        for j in 0..l {
            let mut acc = beta[[i + 1, j]];
            for k in 1..l - j {
                let w = if k == 1 { pw[1] * tr[j] } else { pw[k] };
                acc += w * beta[[i + 1, j + k]] * y[[i + 1, j + k]];
            }
            beta[[i, j]] = acc;
        }
    }
    Ok(beta)
}

/// `-Σ α·β / y` over all cells. Cells with `α·β = 0` contribute nothing.
pub fn csa_loss(
    alpha: ArrayView2<'_, f64>,
    beta: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<f64, AlignError> {
    if alpha.dim() != y.dim() || beta.dim() != y.dim() {
        return Err(AlignError::DimensionMismatch("α, β and y must share a shape".into()));
    }
    let mut total = 0.0;
    for ((idx, &e), (&a, &b)) in y.indexed_iter().zip(alpha.iter().zip(beta.iter())) {
        let ab = a * b;
        if ab == 0.0 {
            continue;
        }
        if e == 0.0 {
            return Err(AlignError::ZeroEmission(idx.0 + 1, idx.1 + 1));
        }
        total += ab / e;
    }
    Ok(-total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsaGradient {
    pub loss: f64,
    /// ∂L/∂y, same shape as `y`.
    pub d_y: Array2<f64>,
    /// ∂L/∂trans, length `L - 1`.
    pub d_trans: Vec<f64>,
}

/// Exact reverse-mode derivative of the CSA loss through both recursions.
pub fn csa_grad(y: ArrayView2<'_, f64>, trans: &TransitionTable, delta: f64) -> Result<CsaGradient, AlignError> {
    let (t, l) = check_inputs(y, trans, delta)?;
    let alpha = csa_forward(y, trans, delta)?;
    let beta = csa_backward(y, trans, delta)?;
    let loss = csa_loss(alpha.view(), beta.view(), y)?;
    let pw = discount_powers(delta, l);
    let tr = trans.as_slice();

    let mut d_y = Array2::<f64>::zeros((t, l));
    let mut d_trans = vec![0.0; tr.len()];
    let mut d_alpha = Array2::<f64>::zeros((t, l));
    let mut d_beta = Array2::<f64>::zeros((t, l));

    // loss terms
    for i in 0..t {
        for j in 0..l {
            let (a, b, e) = (alpha[[i, j]], beta[[i, j]], y[[i, j]]);
            if a * b == 0.0 && e == 0.0 {
                continue;
            }
            d_alpha[[i, j]] = -b / e;
            d_beta[[i, j]] = -a / e;
            d_y[[i, j]] += a * b / (e * e);
        }
    }

    // backward recursion, reversed: row i feeds row i+1, so sweep downwards
    for i in 0..t - 1 {
        for j in 0..l {
            let g = d_beta[[i, j]];
            if g == 0.0 {
                continue;
            }
            d_beta[[i + 1, j]] += g;
            for k in 1..l - j {
                let w = if k == 1 { pw[1] * tr[j] } else { pw[k] };
                let (b, e) = (beta[[i + 1, j + k]], y[[i + 1, j + k]]);
                d_beta[[i + 1, j + k]] += g * w * e;
                d_y[[i + 1, j + k]] += g * w * b;
                if k == 1 {
                    d_trans[j] += g * pw[1] * b * e;
                }
            }
        }
    }

    // forward recursion, reversed: row i feeds row i-1, so sweep upwards
    for i in (1..t).rev() {
        for j in 0..l {
            let g = d_alpha[[i, j]];
            if g == 0.0 {
                continue;
            }
            d_alpha[[i - 1, j]] += g;
            let e = y[[i, j]];
            let mut jump = 0.0;
            for k in 1..=j {
                let w = if k == 1 { pw[1] * tr[j - 1] } else { pw[k] };
                let a = alpha[[i - 1, j - k]];
                jump += w * a;
                d_alpha[[i - 1, j - k]] += g * e * w;
                if k == 1 {
                    d_trans[j - 1] += g * e * pw[1] * a;
                }
            }
            d_y[[i, j]] += g * jump;
        }
    }

    Ok(CsaGradient { loss, d_y, d_trans })
}

/// Softmax over dot products: `y[i][j] ∝ exp(τ_i · C_j)`, computed with
/// max-subtraction per row.
pub fn emission_matrix(tau_emb: &[Vec<f64>], ref_emb: &[Vec<f64>]) -> Result<EmissionMatrix, AlignError> {
    if tau_emb.is_empty() || ref_emb.is_empty() {
        return Err(AlignError::DimensionMismatch("no embeddings".into()));
    }
    let d = tau_emb[0].len();
    if d == 0 {
        return Err(AlignError::DimensionMismatch("embedding dimension is 0".into()));
    }
    if let Some(v) = tau_emb.iter().chain(ref_emb).find(|v| v.len() != d) {
        return Err(AlignError::DimensionMismatch(format!("expected dimension {d}, found {}", v.len())));
    }
    let mut y = Array2::zeros((tau_emb.len(), ref_emb.len()));
    for (i, tau) in tau_emb.iter().enumerate() {
        let logits: Vec<f64> = ref_emb.iter().map(|c| c.iter().zip(tau).map(|(a, b)| a * b).sum()).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let norm: f64 = exps.iter().sum();
        for (j, e) in exps.iter().enumerate() {
            y[[i, j]] = e / norm;
        }
    }
    EmissionMatrix::new(y)
}
