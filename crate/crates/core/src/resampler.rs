//! Query-based spatiotemporal token resampler, in f64.
//!
//! A fixed set of learnable queries cross-attends to a `T x H x W` grid of
//! patch tokens, so the output always has `n_queries` rows however large the
//! grid is. Keys see the tokens plus a factorized sinusoidal 3-D position
//! code; values see the raw tokens. There is no normalization layer and no
//! query projection (the queries are free parameters already).
//!
//! The module also carries a tiny training objective (mean-pool, fixed linear
//! probe, cross-entropy) with a hand-written backward pass, and a central
//! finite-difference check of that backward pass.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResamplerConfig {
    pub n_queries: usize,
    pub d_in: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_llm: usize,
    pub seed: u64,
}

impl Default for ResamplerConfig {
    fn default() -> Self {
        ResamplerConfig {
            n_queries: 64,
            d_in: 24,
            d_model: 32,
            n_heads: 4,
            d_llm: 16,
            seed: 0,
        }
    }
}

impl ResamplerConfig {
    /// Four queries, width 8, two heads: small enough for exhaustive checks.
    pub fn toy() -> Self {
        ResamplerConfig {
            n_queries: 4,
            d_in: 12,
            d_model: 8,
            n_heads: 2,
            d_llm: 6,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("n_queries", self.n_queries),
            ("d_in", self.d_in),
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("d_llm", self.d_llm),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Dimensions(format!("{name} must be at least 1")));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::Dimensions(format!(
                "n_heads = {} does not divide d_model = {}",
                self.n_heads, self.d_model
            )));
        }
        if self.d_in < 6 {
            return Err(Error::Dimensions(format!(
                "d_in = {} leaves no room for a 3-D position code (need >= 6)",
                self.d_in
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl GridDims {
    pub const fn new(t: usize, h: usize, w: usize) -> Self {
        GridDims { t, h, w }
    }

    pub fn len(&self) -> usize {
        self.t * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Patch tokens in `(t, h, w)` row-major order, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchTokenGrid {
    dims: GridDims,
    tokens: Array2<f64>,
}

impl PatchTokenGrid {
    pub fn new(dims: GridDims, tokens: Array2<f64>) -> Result<Self> {
        if tokens.nrows() != dims.len() {
            return Err(Error::LengthMismatch {
                what: "token rows vs T*H*W",
                left: tokens.nrows(),
                right: dims.len(),
            });
        }
        if dims.is_empty() {
            return Err(Error::Empty("patch grid"));
        }
        if tokens.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("patch token".into()));
        }
        Ok(PatchTokenGrid { dims, tokens })
    }

    pub fn zeros(dims: GridDims, width: usize) -> Result<Self> {
        Self::new(dims, Array2::zeros((dims.len(), width)))
    }

    /// Standard-normal tokens from a seeded generator.
    pub fn random(dims: GridDims, width: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tokens = Array2::from_shape_simple_fn((dims.len(), width), || rng.sample(StandardNormal));
        Self::new(dims, tokens)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn tokens(&self) -> &Array2<f64> {
        &self.tokens
    }
}

/// Factorized sinusoidal code over `(t, h, w)`.
///
/// The width is split into three equal axis blocks of `2 * (width / 6)`
/// columns each, holding `sin, cos` pairs at frequencies
/// `10000^(-2k / block)`; leftover columns are zero.
pub fn positional_embedding_3d(dims: GridDims, width: usize) -> Result<Array2<f64>> {
    if dims.is_empty() {
        return Err(Error::Dimensions(format!(
            "grid {}x{}x{} has a zero dimension",
            dims.t, dims.h, dims.w
        )));
    }
    let pairs = width / 6;
    if pairs == 0 {
        return Err(Error::Dimensions(format!("width {width} < 6")));
    }
    let block = 2 * pairs;
    let freqs: Vec<f64> = (0..pairs)
        .map(|k| 10000f64.powf(-(2.0 * k as f64) / block as f64))
        .collect();
    let mut out = Array2::zeros((dims.len(), width));
    let mut row = 0;
    for t in 0..dims.t {
        for h in 0..dims.h {
            for w in 0..dims.w {
                for (axis, pos) in [t, h, w].into_iter().enumerate() {
                    for (k, f) in freqs.iter().enumerate() {
                        let col = axis * block + 2 * k;
                        out[[row, col]] = (pos as f64 * f).sin();
                        out[[row, col + 1]] = (pos as f64 * f).cos();
                    }
                }
                row += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResamplerParams {
    pub n_heads: usize,
    /// `n_queries x d_model`
    pub queries: Array2<f64>,
    /// `d_in x d_model`
    pub w_k: Array2<f64>,
    pub b_k: Array1<f64>,
    /// `d_in x d_model`
    pub w_v: Array2<f64>,
    pub b_v: Array1<f64>,
    /// `d_model x d_llm`
    pub w_o: Array2<f64>,
    pub b_o: Array1<f64>,
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn init_resampler(config: &ResamplerConfig) -> Result<ResamplerParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let c = config;
    Ok(ResamplerParams {
        n_heads: c.n_heads,
        queries: normal_matrix(&mut rng, c.n_queries, c.d_model, 0.02),
        w_k: normal_matrix(&mut rng, c.d_in, c.d_model, 1.0 / (c.d_in as f64).sqrt()),
        b_k: Array1::zeros(c.d_model),
        w_v: normal_matrix(&mut rng, c.d_in, c.d_model, 1.0 / (c.d_in as f64).sqrt()),
        b_v: Array1::zeros(c.d_model),
        w_o: normal_matrix(&mut rng, c.d_model, c.d_llm, 1.0 / (c.d_model as f64).sqrt()),
        b_o: Array1::zeros(c.d_llm),
    })
}

pub const TENSOR_NAMES: [&str; 7] = ["queries", "w_k", "b_k", "w_v", "b_v", "w_o", "b_o"];

impl ResamplerParams {
    pub fn n_queries(&self) -> usize {
        self.queries.nrows()
    }

    pub fn d_in(&self) -> usize {
        self.w_k.nrows()
    }

    pub fn d_model(&self) -> usize {
        self.queries.ncols()
    }

    pub fn d_llm(&self) -> usize {
        self.w_o.ncols()
    }

    fn head_dim(&self) -> usize {
        self.d_model() / self.n_heads
    }

    /// Flat views of every tensor, in [`TENSOR_NAMES`] order.
    pub fn tensors(&self) -> [&[f64]; 7] {
        [
            self.queries.as_slice().expect("standard layout"),
            self.w_k.as_slice().expect("standard layout"),
            self.b_k.as_slice().expect("standard layout"),
            self.w_v.as_slice().expect("standard layout"),
            self.b_v.as_slice().expect("standard layout"),
            self.w_o.as_slice().expect("standard layout"),
            self.b_o.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 7] {
        [
            self.queries.as_slice_mut().expect("standard layout"),
            self.w_k.as_slice_mut().expect("standard layout"),
            self.b_k.as_slice_mut().expect("standard layout"),
            self.w_v.as_slice_mut().expect("standard layout"),
            self.b_v.as_slice_mut().expect("standard layout"),
            self.w_o.as_slice_mut().expect("standard layout"),
            self.b_o.as_slice_mut().expect("standard layout"),
        ]
    }

    fn zeros_like(&self) -> ResamplerParams {
        ResamplerParams {
            n_heads: self.n_heads,
            queries: Array2::zeros(self.queries.raw_dim()),
            w_k: Array2::zeros(self.w_k.raw_dim()),
            b_k: Array1::zeros(self.b_k.raw_dim()),
            w_v: Array2::zeros(self.w_v.raw_dim()),
            b_v: Array1::zeros(self.b_v.raw_dim()),
            w_o: Array2::zeros(self.w_o.raw_dim()),
            b_o: Array1::zeros(self.b_o.raw_dim()),
        }
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(scores: &Array2<f64>) -> Array2<f64> {
    let mut out = scores.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Intermediate values of one forward pass.
struct Forward {
    keys_in: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    o: Array2<f64>,
    y: Array2<f64>,
}

fn forward(params: &ResamplerParams, tokens: ArrayView2<f64>, positions: ArrayView2<f64>) -> Result<Forward> {
    if tokens.nrows() == 0 {
        return Err(Error::Empty("token sequence"));
    }
    if tokens.ncols() != params.d_in() || positions.dim() != tokens.dim() {
        return Err(Error::Dimensions(format!(
            "tokens are {:?}, positions {:?}, resampler expects width {}",
            tokens.dim(),
            positions.dim(),
            params.d_in()
        )));
    }
    let keys_in = &tokens + &positions;
    let k = keys_in.dot(&params.w_k) + &params.b_k;
    let v = tokens.dot(&params.w_v) + &params.b_v;
    let dh = params.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut o = Array2::zeros((params.n_queries(), params.d_model()));
    let mut attn = Vec::with_capacity(params.n_heads);
    for h in 0..params.n_heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let scores = params.queries.slice(cols).dot(&k.slice(cols).t()) * scale;
        let a = softmax_rows(&scores);
        o.slice_mut(cols).assign(&a.dot(&v.slice(cols)));
        attn.push(a);
    }
    let y = o.dot(&params.w_o) + &params.b_o;
    Ok(Forward {
        keys_in,
        k,
        v,
        attn,
        o,
        y,
    })
}

fn grid_positions(params: &ResamplerParams, grid: &PatchTokenGrid) -> Result<Array2<f64>> {
    if grid.tokens.ncols() != params.d_in() {
        return Err(Error::Dimensions(format!(
            "grid token width {} does not match d_in {}",
            grid.tokens.ncols(),
            params.d_in()
        )));
    }
    positional_embedding_3d(grid.dims, params.d_in())
}

/// Resamples `grid` to `n_queries x d_llm`.
pub fn resample(params: &ResamplerParams, grid: &PatchTokenGrid) -> Result<Array2<f64>> {
    let pos = grid_positions(params, grid)?;
    Ok(forward(params, grid.tokens.view(), pos.view())?.y)
}

/// Resamples an explicit token sequence with caller-supplied position codes.
pub fn resample_tokens(
    params: &ResamplerParams,
    tokens: ArrayView2<f64>,
    positions: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    Ok(forward(params, tokens, positions)?.y)
}

/// Post-softmax attention of every head, each `n_queries x L`.
pub fn attention_weights_per_head(params: &ResamplerParams, grid: &PatchTokenGrid) -> Result<Vec<Array2<f64>>> {
    let pos = grid_positions(params, grid)?;
    Ok(forward(params, grid.tokens.view(), pos.view())?.attn)
}

/// Head-averaged attention, `n_queries x L`.
pub fn attention_weights(params: &ResamplerParams, grid: &PatchTokenGrid) -> Result<Array2<f64>> {
    let heads = attention_weights_per_head(params, grid)?;
    let n = heads.len() as f64;
    let mut sum = Array2::zeros(heads[0].raw_dim());
    for a in &heads {
        sum += a;
    }
    Ok(sum / n)
}

/// Mean over rows of `-log softmax(row)[target]`, via log-sum-exp.
pub fn cross_entropy(logits: ArrayView2<f64>, targets: &[usize]) -> Result<f64> {
    check_targets(logits, targets)?;
    let total: f64 = logits
        .rows()
        .into_iter()
        .zip(targets)
        .map(|(row, &t)| log_sum_exp(row) - row[t])
        .sum();
    Ok(total / targets.len() as f64)
}

/// Gradient of [`cross_entropy`] with respect to `logits`.
pub fn cross_entropy_grad(logits: ArrayView2<f64>, targets: &[usize]) -> Result<Array2<f64>> {
    check_targets(logits, targets)?;
    let mut grad = softmax_rows(&logits.to_owned());
    for (mut row, &t) in grad.rows_mut().into_iter().zip(targets) {
        row[t] -= 1.0;
    }
    Ok(grad / targets.len() as f64)
}

fn check_targets(logits: ArrayView2<f64>, targets: &[usize]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::Empty("cross-entropy targets"));
    }
    if logits.nrows() != targets.len() {
        return Err(Error::LengthMismatch {
            what: "logit rows vs targets",
            left: logits.nrows(),
            right: targets.len(),
        });
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= logits.ncols()) {
        return Err(Error::OutOfRange(format!(
            "target class {t} with {} classes",
            logits.ncols()
        )));
    }
    Ok(())
}

fn log_sum_exp(row: ArrayView1<f64>) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Fixed linear classifier on the mean-pooled resampler output.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeHead {
    /// `d_llm x classes`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl ProbeHead {
    pub fn new(d_llm: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5052_4f42_4548_4541);
        ProbeHead {
            weight: normal_matrix(&mut rng, d_llm, classes, 1.0 / (d_llm as f64).sqrt()),
            bias: Array1::from_shape_simple_fn(classes, || 0.1 * rng.sample::<f64, _>(StandardNormal)),
        }
    }

    pub fn classes(&self) -> usize {
        self.weight.ncols()
    }
}

/// Loss of the probe objective: mean over `targets` of the cross-entropy of
/// the pooled logits (so several targets act as a soft label).
pub fn probe_loss(
    params: &ResamplerParams,
    grid: &PatchTokenGrid,
    probe: &ProbeHead,
    targets: &[usize],
) -> Result<f64> {
    let pos = grid_positions(params, grid)?;
    let fwd = forward(params, grid.tokens.view(), pos.view())?;
    let logits = probe_logits(&fwd.y, probe, targets.len());
    cross_entropy(logits.view(), targets)
}

fn probe_logits(y: &Array2<f64>, probe: &ProbeHead, rows: usize) -> Array2<f64> {
    let pooled = y.mean_axis(Axis(0)).expect("resampler output has rows");
    let logits = pooled.dot(&probe.weight) + &probe.bias;
    logits
        .broadcast((rows, probe.classes()))
        .expect("row broadcast")
        .to_owned()
}

/// Loss and analytic parameter gradients of the probe objective.
pub fn probe_loss_and_grads(
    params: &ResamplerParams,
    grid: &PatchTokenGrid,
    probe: &ProbeHead,
    targets: &[usize],
) -> Result<(f64, ResamplerParams)> {
    let pos = grid_positions(params, grid)?;
    let fwd = forward(params, grid.tokens.view(), pos.view())?;
    let logits = probe_logits(&fwd.y, probe, targets.len());
    let loss = cross_entropy(logits.view(), targets)?;

    // All logit rows are the same pooled logits, so their gradients add.
    let d_logits = cross_entropy_grad(logits.view(), targets)?.sum_axis(Axis(0));
    let d_pooled = probe.weight.dot(&d_logits);
    let nq = params.n_queries();
    let d_y = d_pooled
        .broadcast((nq, params.d_llm()))
        .expect("row broadcast")
        .to_owned()
        / nq as f64;

    let mut g = params.zeros_like();
    g.w_o = fwd.o.t().dot(&d_y);
    g.b_o = d_y.sum_axis(Axis(0));
    let d_o = d_y.dot(&params.w_o.t());

    let dh = params.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut d_k = Array2::zeros(fwd.k.raw_dim());
    let mut d_v = Array2::zeros(fwd.v.raw_dim());
    for (h, a) in fwd.attn.iter().enumerate() {
        let cols = s![.., h * dh..(h + 1) * dh];
        let d_oh = d_o.slice(cols);
        let d_a = d_oh.dot(&fwd.v.slice(cols).t());
        d_v.slice_mut(cols).assign(&a.t().dot(&d_oh));
        // Softmax backward per row: a * (d_a - <d_a, a>).
        let inner = (&d_a * a).sum_axis(Axis(1)).insert_axis(Axis(1));
        let d_s = a * &(&d_a - &inner) * scale;
        g.queries.slice_mut(cols).assign(&d_s.dot(&fwd.k.slice(cols)));
        d_k.slice_mut(cols).assign(&d_s.t().dot(&params.queries.slice(cols)));
    }
    g.w_k = fwd.keys_in.t().dot(&d_k);
    g.b_k = d_k.sum_axis(Axis(0));
    g.w_v = grid.tokens.t().dot(&d_v);
    g.b_v = d_v.sum_axis(Axis(0));
    Ok((loss, g))
}

/// Coordinates probed per tensor (all of them for smaller tensors).
pub const GRADCHECK_COORDS: usize = 50;

/// Denominator floor for relative error, so coordinates whose true gradient
/// is ~0 are judged on absolute error instead.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorCheck {
    pub tensor: String,
    pub coords_checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub epsilon: f64,
    pub loss: f64,
    pub max_rel_error: f64,
    pub tensors: Vec<TensorCheck>,
}

/// Compares analytic gradients with central differences
/// `(L(p + eps) - L(p - eps)) / (2 eps)` on up to [`GRADCHECK_COORDS`]
/// random coordinates of every tensor.
///
/// Relative error is `|analytic - numeric| / max(|analytic|, |numeric|, GRADCHECK_FLOOR)`.
pub fn gradient_check(
    params: &ResamplerParams,
    grid: &PatchTokenGrid,
    probe: &ProbeHead,
    targets: &[usize],
    epsilon: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "finite-difference step must be positive, got {epsilon}"
        )));
    }
    let (loss, grads) = probe_loss_and_grads(params, grid, probe, targets)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss = {loss}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = params.clone();
    let analytic = grads.tensors();
    let mut tensors = Vec::with_capacity(TENSOR_NAMES.len());
    for (t, name) in TENSOR_NAMES.iter().enumerate() {
        let len = analytic[t].len();
        let coords: Vec<usize> = if len <= GRADCHECK_COORDS {
            (0..len).collect()
        } else {
            rand::seq::index::sample(&mut rng, len, GRADCHECK_COORDS).into_vec()
        };
        let mut worst: f64 = 0.0;
        for &i in &coords {
            let orig = work.tensors()[t][i];
            work.tensors_mut()[t][i] = orig + epsilon;
            let plus = probe_loss(&work, grid, probe, targets)?;
            work.tensors_mut()[t][i] = orig - epsilon;
            let minus = probe_loss(&work, grid, probe, targets)?;
            work.tensors_mut()[t][i] = orig;
            if !(plus.is_finite() && minus.is_finite()) {
                return Err(Error::NonFinite(format!("perturbed loss for {name}[{i}]")));
            }
            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic[t][i];
            let denom = a.abs().max(numeric.abs()).max(GRADCHECK_FLOOR);
            worst = worst.max((a - numeric).abs() / denom);
        }
        tensors.push(TensorCheck {
            tensor: name.to_string(),
            coords_checked: coords.len(),
            max_rel_error: worst,
        });
    }
    let max_rel_error = tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        epsilon,
        loss,
        max_rel_error,
        tensors,
    })
}

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCheck {
    pub grid: GridDims,
    pub tokens: usize,
    pub output: [usize; 2],
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResamplerCheckReport {
    pub config: ResamplerConfig,
    pub shape_checks: Vec<ShapeCheck>,
    pub max_row_sum_residual: f64,
    pub gradient: GradCheckReport,
    pub passed: bool,
}

/// Grids of 1, 8, 64 and 512 tokens.
pub const CHECK_GRIDS: [GridDims; 4] = [
    GridDims::new(1, 1, 1),
    GridDims::new(2, 2, 2),
    GridDims::new(4, 4, 4),
    GridDims::new(8, 8, 8),
];

/// Shape, attention-normalization and gradient checks for one config.
/// The gradient check runs on a `2 x 2 x 2` grid.
pub fn run_check(config: &ResamplerConfig, epsilon: f64) -> Result<ResamplerCheckReport> {
    let params = init_resampler(config)?;
    let mut shape_checks = Vec::new();
    let mut max_row_sum_residual: f64 = 0.0;
    for (i, dims) in CHECK_GRIDS.iter().enumerate() {
        let grid = PatchTokenGrid::random(*dims, config.d_in, config.seed.wrapping_add(i as u64 + 1))?;
        let y = resample(&params, &grid)?;
        shape_checks.push(ShapeCheck {
            grid: *dims,
            tokens: dims.len(),
            output: [y.nrows(), y.ncols()],
            ok: y.dim() == (config.n_queries, config.d_llm),
        });
        for a in attention_weights_per_head(&params, &grid)? {
            for row in a.rows() {
                max_row_sum_residual = max_row_sum_residual.max((row.sum() - 1.0).abs());
            }
        }
    }
    let grid = PatchTokenGrid::random(GridDims::new(2, 2, 2), config.d_in, config.seed.wrapping_add(100))?;
    let probe = ProbeHead::new(config.d_llm, 5, config.seed);
    let gradient = gradient_check(&params, &grid, &probe, &[1, 3], epsilon, config.seed)?;
    let passed = shape_checks.iter().all(|c| c.ok)
        && max_row_sum_residual <= ROW_SUM_TOLERANCE
        && gradient.max_rel_error < GRADCHECK_TOLERANCE;
    Ok(ResamplerCheckReport {
        config: *config,
        shape_checks,
        max_row_sum_residual,
        gradient,
        passed,
    })
}
