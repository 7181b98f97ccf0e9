//! Quantized kernel recursive least squares.
//!
//! The learner maintains a codebook of frozen input-space centers built by
//! online vector quantization: an input merges into the nearest center when
//! it lies within `eps_u` of it and becomes a new center otherwise. Targets
//! are accumulated per center, and the multi-output weight matrix solves the
//! count-weighted regularized least-squares system
//!
//! ```text
//! (Λ Ψ + α I) β = d̄
//! ```
//!
//! where `Ψ` is the Gram matrix of the centers, `Λ = diag(M_1, ..., M_n)`
//! holds the per-center sample counts, and `d̄` stacks the accumulated
//! targets. [`QkrlsModel::update`] keeps the inverse of the system matrix
//! incrementally (Sherman–Morrison on a merge, bordered growth on an append)
//! so one update costs `O(n²)`; [`batch_solve`] is the direct dense solve of
//! the same system and serves as the independent reference.

use nalgebra::DMatrix;
use thiserror::Error;

/// Pivot threshold below which the incremental inverse update is refused.
const SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum QkrlsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel width must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("regularization factor must be nonnegative and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("quantization size must be nonnegative and finite, got {0}")]
    InvalidEpsU(f64),
    #[error("untrained predictor")]
    Untrained,
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),
}

/// Gaussian kernel width. Values are in input-space units, so pick it
/// relative to the normalization applied upstream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    sigma: f64,
}

impl KernelParams {
    pub fn new(sigma: f64) -> Result<Self, QkrlsError> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(QkrlsError::InvalidSigma(sigma));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// `exp(-‖x - y‖² / (2σ²))`, in `(0, 1]` with equality iff `x == y`.
pub fn gaussian_kernel(x: &[f64], y: &[f64], params: KernelParams) -> Result<f64, QkrlsError> {
    if x.len() != y.len() {
        return Err(QkrlsError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let sq = squared_distance(x, y);
    Ok((-sq / (2.0 * params.sigma * params.sigma)).exp())
}

fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Online vector-quantization codebook.
///
/// Centers are frozen at their first-occurrence values and stored in
/// chronological order of first assignment; merged samples only bump the
/// center's count and accumulated target. Center indices in the public API
/// are 1-based, matching the usual "state n of n_L" reading, and the last
/// index `n_L` is the failure state in the prognostics layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    input_dim: usize,
    output_dim: usize,
    eps_u: f64,
    centers: Vec<Vec<f64>>,
    counts: Vec<u64>,
    dbar: Vec<Vec<f64>>,
}

impl Codebook {
    pub fn new(input_dim: usize, output_dim: usize, eps_u: f64) -> Result<Self, QkrlsError> {
        if !eps_u.is_finite() || eps_u < 0.0 {
            return Err(QkrlsError::InvalidEpsU(eps_u));
        }
        Ok(Self {
            input_dim,
            output_dim,
            eps_u,
            centers: Vec::new(),
            counts: Vec::new(),
            dbar: Vec::new(),
        })
    }

    /// Rebuild a codebook from persisted state.
    pub fn from_parts(
        input_dim: usize,
        output_dim: usize,
        eps_u: f64,
        centers: Vec<Vec<f64>>,
        counts: Vec<u64>,
        dbar: Vec<Vec<f64>>,
    ) -> Result<Self, QkrlsError> {
        if counts.len() != centers.len() {
            return Err(QkrlsError::DimensionMismatch {
                expected: centers.len(),
                got: counts.len(),
            });
        }
        if dbar.len() != centers.len() {
            return Err(QkrlsError::DimensionMismatch {
                expected: centers.len(),
                got: dbar.len(),
            });
        }
        for c in &centers {
            if c.len() != input_dim {
                return Err(QkrlsError::DimensionMismatch {
                    expected: input_dim,
                    got: c.len(),
                });
            }
        }
        for d in &dbar {
            if d.len() != output_dim {
                return Err(QkrlsError::DimensionMismatch {
                    expected: output_dim,
                    got: d.len(),
                });
            }
        }
        let mut book = Self::new(input_dim, output_dim, eps_u)?;
        book.centers = centers;
        book.counts = counts;
        book.dbar = dbar;
        Ok(book)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn eps_u(&self) -> f64 {
        self.eps_u
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Accumulated targets, one row per center.
    pub fn dbar(&self) -> &[Vec<f64>] {
        &self.dbar
    }

    /// Total number of samples folded into the codebook.
    pub fn samples(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// 1-based index of the nearest center and the distance to it.
    /// Ties break to the smallest index. `None` on an empty codebook.
    pub fn nearest(&self, x: &[f64]) -> Result<Option<(usize, f64)>, QkrlsError> {
        if x.len() != self.input_dim {
            return Err(QkrlsError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.centers.iter().enumerate() {
            let dist = squared_distance(x, c).sqrt();
            match best {
                Some((_, d)) if dist >= d => {}
                _ => best = Some((i + 1, dist)),
            }
        }
        Ok(best)
    }

    /// Map an input to a center: merge into the nearest center when its
    /// distance is at most `eps_u`, append a new center otherwise. Returns
    /// the 1-based center index and whether a center was created.
    pub fn quantize(&mut self, x: &[f64]) -> Result<(usize, bool), QkrlsError> {
        match self.nearest(x)? {
            Some((idx, dist)) if dist <= self.eps_u => {
                self.counts[idx - 1] += 1;
                Ok((idx, false))
            }
            _ => {
                self.centers.push(x.to_vec());
                self.counts.push(1);
                self.dbar.push(vec![0.0; self.output_dim]);
                Ok((self.centers.len(), true))
            }
        }
    }

    fn accumulate(&mut self, idx: usize, d: &[f64]) {
        for (acc, v) in self.dbar[idx - 1].iter_mut().zip(d.iter()) {
            *acc += *v;
        }
    }
}

/// Multi-output kernel least-squares model over a quantization codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct QkrlsModel {
    kernel: KernelParams,
    alpha: f64,
    codebook: Codebook,
    /// Weights, one row per center, one column per output.
    beta: DMatrix<f64>,
    /// Cached Gram matrix Ψ of the centers; symmetric, unit diagonal.
    gram: DMatrix<f64>,
    /// Cached inverse of `Λ Ψ + α I`, maintained incrementally.
    inv: DMatrix<f64>,
}

impl QkrlsModel {
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        kernel: KernelParams,
        alpha: f64,
        eps_u: f64,
    ) -> Result<Self, QkrlsError> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(QkrlsError::InvalidAlpha(alpha));
        }
        Ok(Self {
            kernel,
            alpha,
            codebook: Codebook::new(input_dim, output_dim, eps_u)?,
            beta: DMatrix::zeros(0, output_dim),
            gram: DMatrix::zeros(0, 0),
            inv: DMatrix::zeros(0, 0),
        })
    }

    /// Rebuild a model from persisted state. The stored weights are kept
    /// verbatim; the Gram matrix and the cached inverse are recomputed from
    /// the centers so further updates remain possible.
    pub fn from_parts(
        kernel: KernelParams,
        alpha: f64,
        codebook: Codebook,
        beta_rows: Vec<Vec<f64>>,
    ) -> Result<Self, QkrlsError> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(QkrlsError::InvalidAlpha(alpha));
        }
        let n = codebook.len();
        let s = codebook.output_dim();
        if beta_rows.len() != n {
            return Err(QkrlsError::DimensionMismatch {
                expected: n,
                got: beta_rows.len(),
            });
        }
        for row in &beta_rows {
            if row.len() != s {
                return Err(QkrlsError::DimensionMismatch {
                    expected: s,
                    got: row.len(),
                });
            }
        }
        let gram = build_gram(codebook.centers(), kernel)?;
        let inv = if n == 0 {
            DMatrix::zeros(0, 0)
        } else {
            system_matrix(&gram, codebook.counts(), alpha)
                .lu()
                .try_inverse()
                .ok_or_else(|| {
                    QkrlsError::IllConditioned("system matrix is not invertible".into())
                })?
        };
        let beta = DMatrix::from_fn(n, s, |i, o| beta_rows[i][o]);
        Ok(Self {
            kernel,
            alpha,
            codebook,
            beta,
            gram,
            inv,
        })
    }

    pub fn kernel(&self) -> KernelParams {
        self.kernel
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn n_centers(&self) -> usize {
        self.codebook.len()
    }

    pub fn input_dim(&self) -> usize {
        self.codebook.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.codebook.output_dim()
    }

    /// Fold one sample into the model and refresh the weights so that
    /// `beta == (Λ Ψ + α I)⁻¹ d̄` holds for the new state. Returns the
    /// 1-based center index the sample mapped to and whether it created a
    /// new center.
    pub fn update(&mut self, x: &[f64], d: &[f64]) -> Result<(usize, bool), QkrlsError> {
        if d.len() != self.codebook.output_dim() {
            return Err(QkrlsError::DimensionMismatch {
                expected: self.codebook.output_dim(),
                got: d.len(),
            });
        }
        let (idx, was_new) = self.codebook.quantize(x)?;
        self.codebook.accumulate(idx, d);
        if was_new {
            self.grow_inverse(x)?;
        } else {
            self.merge_inverse(idx)?;
        }
        self.refresh_beta();
        Ok((idx, was_new))
    }

    /// Bordered growth of the cached inverse when center `n+1` is appended.
    fn grow_inverse(&mut self, x: &[f64]) -> Result<(), QkrlsError> {
        let n = self.codebook.len() - 1; // previous size
        let counts = self.codebook.counts();

        let mut kvec = Vec::with_capacity(n);
        for c in &self.codebook.centers()[..n] {
            kvec.push(gaussian_kernel(x, c, self.kernel)?);
        }

        // Gram gains a symmetric row/column with unit diagonal.
        let mut gram = DMatrix::zeros(n + 1, n + 1);
        gram.view_mut((0, 0), (n, n)).copy_from(&self.gram);
        for i in 0..n {
            gram[(i, n)] = kvec[i];
            gram[(n, i)] = kvec[i];
        }
        gram[(n, n)] = 1.0;

        // New system column b_i = M_i κ(c_i, x); new row is κ(x, c_j) since
        // the fresh center has count 1; corner is 1 + α.
        let delta = 1.0 + self.alpha;
        // u = P b, v = (new row) P.
        let u: Vec<f64> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.inv[(i, j)] * counts[j] as f64 * kvec[j])
                    .sum()
            })
            .collect();
        let v: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| kvec[i] * self.inv[(i, j)]).sum())
            .collect();
        let schur = delta
            - kvec
                .iter()
                .zip(u.iter())
                .map(|(kv, ui)| kv * ui)
                .sum::<f64>();
        if schur.abs() <= SINGULAR_EPS {
            return Err(QkrlsError::IllConditioned(
                "vanishing pivot while appending a center".into(),
            ));
        }

        let mut inv = DMatrix::zeros(n + 1, n + 1);
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                inv[(i, j)] = self.inv[(i, j)] + ui * vj / schur;
            }
            inv[(i, n)] = -ui / schur;
        }
        for (j, vj) in v.iter().enumerate() {
            inv[(n, j)] = -vj / schur;
        }
        inv[(n, n)] = 1.0 / schur;

        self.gram = gram;
        self.inv = inv;
        Ok(())
    }

    /// Sherman–Morrison update of the cached inverse when a sample merges
    /// into center `idx`: the system matrix gains `e_idx ψ_idxᵀ`.
    fn merge_inverse(&mut self, idx: usize) -> Result<(), QkrlsError> {
        let n = self.codebook.len();
        let i0 = idx - 1;
        // w = ψᵀ P
        let w: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|k| self.gram[(i0, k)] * self.inv[(k, j)]).sum())
            .collect();
        let denom = 1.0 + w[i0];
        if denom.abs() <= SINGULAR_EPS {
            return Err(QkrlsError::IllConditioned(
                "vanishing pivot while merging a sample".into(),
            ));
        }
        let pcol: Vec<f64> = (0..n).map(|i| self.inv[(i, i0)]).collect();
        for (i, pi) in pcol.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                self.inv[(i, j)] -= pi * wj / denom;
            }
        }
        Ok(())
    }

    /// `β = P d̄` plus one iterative-refinement pass against the true
    /// system. The rank-one inverse updates drift by a few ulps per step;
    /// the refinement keeps the weights within the direct-solve contract
    /// over long streams without ever factorizing.
    fn refresh_beta(&mut self) {
        let n = self.codebook.len();
        let s = self.codebook.output_dim();
        let dbar = self.codebook.dbar();
        let counts = self.codebook.counts();

        let mut beta = DMatrix::from_fn(n, s, |i, o| {
            dbar.iter()
                .enumerate()
                .map(|(j, row)| self.inv[(i, j)] * row[o])
                .sum()
        });

        // r = d̄ − (Λ Ψ + α I) β, then β += P r.
        let mut residual = DMatrix::zeros(n, s);
        for i in 0..n {
            let m_i = counts[i] as f64;
            for o in 0..s {
                let mut acc = dbar[i][o] - self.alpha * beta[(i, o)];
                for j in 0..n {
                    acc -= m_i * self.gram[(i, j)] * beta[(j, o)];
                }
                residual[(i, o)] = acc;
            }
        }
        for i in 0..n {
            for o in 0..s {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += self.inv[(i, j)] * residual[(j, o)];
                }
                beta[(i, o)] += acc;
            }
        }
        self.beta = beta;
    }

    /// Kernel expansion over the codebook centers:
    /// `ŷ_o = Σ_n β_{n,o} κ(x, c_n)`.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, QkrlsError> {
        if self.codebook.is_empty() {
            return Err(QkrlsError::Untrained);
        }
        if x.len() != self.codebook.input_dim() {
            return Err(QkrlsError::DimensionMismatch {
                expected: self.codebook.input_dim(),
                got: x.len(),
            });
        }
        let s = self.codebook.output_dim();
        let mut out = vec![0.0; s];
        for (n, c) in self.codebook.centers().iter().enumerate() {
            let k = gaussian_kernel(x, c, self.kernel)?;
            for (o, acc) in out.iter_mut().enumerate() {
                *acc += self.beta[(n, o)] * k;
            }
        }
        Ok(out)
    }

    /// 1-based index of the nearest center; ties break to the smallest
    /// index. The index is the discrete state of the input.
    pub fn assign_state(&self, x: &[f64]) -> Result<usize, QkrlsError> {
        match self.codebook.nearest(x)? {
            Some((idx, _)) => Ok(idx),
            None => Err(QkrlsError::Untrained),
        }
    }
}

fn build_gram(centers: &[Vec<f64>], kernel: KernelParams) -> Result<DMatrix<f64>, QkrlsError> {
    let n = centers.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        gram[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let k = gaussian_kernel(&centers[i], &centers[j], kernel)?;
            gram[(i, j)] = k;
            gram[(j, i)] = k;
        }
    }
    Ok(gram)
}

fn system_matrix(gram: &DMatrix<f64>, counts: &[u64], alpha: f64) -> DMatrix<f64> {
    let n = counts.len();
    DMatrix::from_fn(n, n, |i, j| {
        let v = counts[i] as f64 * gram[(i, j)];
        if i == j {
            v + alpha
        } else {
            v
        }
    })
}

/// Direct dense solve of `(Λ Ψ + α I) β = d̄` with LU and partial pivoting.
/// Reference route for [`QkrlsModel::update`], and the solver used when a
/// model is finalized from persisted state.
pub fn batch_solve(
    codebook: &Codebook,
    alpha: f64,
    kernel: KernelParams,
) -> Result<DMatrix<f64>, QkrlsError> {
    if codebook.is_empty() {
        return Err(QkrlsError::Untrained);
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(QkrlsError::InvalidAlpha(alpha));
    }
    let gram = build_gram(codebook.centers(), kernel)?;
    let a = system_matrix(&gram, codebook.counts(), alpha);
    let n = codebook.len();
    let s = codebook.output_dim();
    let rhs = DMatrix::from_fn(n, s, |i, o| codebook.dbar()[i][o]);
    a.lu()
        .solve(&rhs)
        .ok_or_else(|| QkrlsError::IllConditioned("singular system matrix".into()))
}
