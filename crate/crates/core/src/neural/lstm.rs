//! LSTM cell, masked bidirectional layer, and their exact BPTT.
//!
//! Gate pre-activations are packed as `[i | f | o | g]` along the last axis of
//! `W` (`input × 4h`), `U` (`h × 4h`) and `b` (`4h`).

use rand::Rng as _;

use super::init::glorot_uniform;
use super::tensor::{mat_vec_acc, outer_acc, sigmoid, vec_mat_acc};
use super::{Mode, NeuralError, Rng, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Sigmoid,
    Tanh,
}

impl OutputActivation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Sigmoid => sigmoid(x),
            Self::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation value `a = act(x)`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Self::Sigmoid => a * (1.0 - a),
            Self::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Tensor::zeros(&[input, 4 * hidden]),
            u: Tensor::zeros(&[hidden, 4 * hidden]),
            b: Tensor::zeros(&[4 * hidden]),
        }
    }

    /// Glorot-uniform `W` and `U`, zero biases except the forget gate at 1.
    pub fn glorot(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let w = glorot_uniform(input, 4 * hidden, rng);
        let u = glorot_uniform(hidden, 4 * hidden, rng);
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data_mut()[hidden..2 * hidden].fill(1.0);
        Self { w, u, b }
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn hidden(&self) -> usize {
        self.u.shape()[0]
    }
}

/// Everything the backward pass of one cell step needs.
#[derive(Debug, Clone)]
pub struct CellCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    act_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CellOutput {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub cache: CellCache,
}

/// `i,f,o = σ(xW+hU+b)`, `g = tanh(·)`, `c = f⊙c_prev + i⊙g`, `h = o⊙act(c)`.
pub fn lstm_cell(x: &[f64], h_prev: &[f64], c_prev: &[f64], params: &LstmParams, act: OutputActivation) -> CellOutput {
    let h = params.hidden();
    let mut z = params.b.data().to_vec();
    vec_mat_acc(x, params.w.data(), &mut z);
    vec_mat_acc(h_prev, params.u.data(), &mut z);
    let i: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
    let o: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<f64> = z[3 * h..].iter().map(|v| v.tanh()).collect();
    let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let act_c: Vec<f64> = c.iter().map(|&v| act.apply(v)).collect();
    let h_out: Vec<f64> = (0..h).map(|k| o[k] * act_c[k]).collect();
    CellOutput {
        h: h_out,
        c: c.clone(),
        cache: CellCache { x: x.to_vec(), h_prev: h_prev.to_vec(), c_prev: c_prev.to_vec(), i, f, o, g, act_c },
    }
}

/// Given `∂L/∂h_t` and `∂L/∂c_t` (from the future), accumulates parameter
/// gradients and returns `(∂L/∂x_t, ∂L/∂h_prev, ∂L/∂c_prev)`.
pub fn lstm_cell_backward(
    cache: &CellCache,
    params: &LstmParams,
    act: OutputActivation,
    dh: &[f64],
    dc_next: &[f64],
    grads: &mut LstmParams,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = params.hidden();
    let mut dz = vec![0.0; 4 * h];
    let mut dc_prev = vec![0.0; h];
    for k in 0..h {
        let (i, f, o, g, a) = (cache.i[k], cache.f[k], cache.o[k], cache.g[k], cache.act_c[k]);
        let d_o = dh[k] * a;
        let dc = dc_next[k] + dh[k] * o * act.derivative(a);
        dz[k] = dc * g * i * (1.0 - i);
        dz[h + k] = dc * cache.c_prev[k] * f * (1.0 - f);
        dz[2 * h + k] = d_o * o * (1.0 - o);
        dz[3 * h + k] = dc * i * (1.0 - g * g);
        dc_prev[k] = dc * f;
    }
    outer_acc(&cache.x, &dz, grads.w.data_mut());
    outer_acc(&cache.h_prev, &dz, grads.u.data_mut());
    for (acc, d) in grads.b.data_mut().iter_mut().zip(&dz) {
        *acc += d;
    }
    let mut dx = vec![0.0; params.input_dim()];
    mat_vec_acc(params.w.data(), &dz, &mut dx);
    let mut dh_prev = vec![0.0; h];
    mat_vec_acc(params.u.data(), &dz, &mut dh_prev);
    (dx, dh_prev, dc_prev)
}

/// Inverted-dropout mask: 0 with probability `p`, otherwise `1/(1−p)`.
pub fn dropout_mask(n: usize, p: f64, rng: &mut Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..n).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect()
}

/// Input and recurrent dropout rates. One mask per sequence and direction is
/// reused at every time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dropout {
    pub input: f64,
    pub recurrent: f64,
}

impl Dropout {
    pub const NONE: Dropout = Dropout { input: 0.0, recurrent: 0.0 };
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl BiLstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self { fwd: LstmParams::zeros(input, hidden), bwd: LstmParams::zeros(input, hidden) }
    }

    pub fn glorot(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let fwd = LstmParams::glorot(input, hidden, rng);
        let bwd = LstmParams::glorot(input, hidden, rng);
        Self { fwd, bwd }
    }

    pub fn hidden(&self) -> usize {
        self.fwd.hidden()
    }
}

#[derive(Debug, Clone)]
struct DirectionCache {
    steps: Vec<CellCache>,
    x_mask: Option<Vec<f64>>,
    h_mask: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct BiLstmCache {
    seq_len: usize,
    input_dim: usize,
    hidden: usize,
    lengths: Vec<usize>,
    dirs: Vec<[DirectionCache; 2]>,
}

fn position(step: usize, len: usize, reverse: bool) -> usize {
    if reverse {
        len - 1 - step
    } else {
        step
    }
}

fn apply_mask(v: &[f64], mask: Option<&Vec<f64>>) -> Vec<f64> {
    match mask {
        Some(m) => v.iter().zip(m).map(|(a, b)| a * b).collect(),
        None => v.to_vec(),
    }
}

/// Runs both directions over the first `lengths[b]` positions of each row and
/// writes `[h_fwd | h_bwd]` per position; positions past the length stay zero.
pub fn bilstm_forward(
    x: &Tensor,
    lengths: &[usize],
    params: &BiLstmParams,
    act: OutputActivation,
    dropout: Dropout,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(Tensor, BiLstmCache), NeuralError> {
    let (batch, seq_len, input_dim) = match *x.shape() {
        [b, l, d] => (b, l, d),
        _ => {
            return Err(NeuralError::ShapeMismatch { what: "bilstm input".into(), expected: vec![lengths.len(), 0, 0], found: x.shape().to_vec() })
        }
    };
    x.expect_shape("bilstm input", &[lengths.len(), seq_len, params.fwd.input_dim()])?;
    let h = params.hidden();
    let mut out = Tensor::zeros(&[batch, seq_len, 2 * h]);
    let mut dirs = Vec::with_capacity(batch);
    for (b, &len) in lengths.iter().enumerate() {
        let len = len.min(seq_len);
        let mut pair = Vec::with_capacity(2);
        for (d, dir_params) in [&params.fwd, &params.bwd].into_iter().enumerate() {
            let (x_mask, h_mask) = match mode {
                Mode::Train => (
                    (dropout.input > 0.0).then(|| dropout_mask(input_dim, dropout.input, rng)),
                    (dropout.recurrent > 0.0).then(|| dropout_mask(h, dropout.recurrent, rng)),
                ),
                Mode::Infer => (None, None),
            };
            let mut h_prev = vec![0.0; h];
            let mut c_prev = vec![0.0; h];
            let mut steps = Vec::with_capacity(len);
            for s in 0..len {
                let p = position(s, len, d == 1);
                let x_t = apply_mask(x.row(b * seq_len + p), x_mask.as_ref());
                let h_in = apply_mask(&h_prev, h_mask.as_ref());
                let cell = lstm_cell(&x_t, &h_in, &c_prev, dir_params, act);
                out.row_mut(b * seq_len + p)[d * h..(d + 1) * h].copy_from_slice(&cell.h);
                h_prev = cell.h;
                c_prev = cell.c;
                steps.push(cell.cache);
            }
            pair.push(DirectionCache { steps, x_mask, h_mask });
        }
        let [fwd, bwd]: [DirectionCache; 2] = pair.try_into().expect("two directions");
        dirs.push([fwd, bwd]);
    }
    let lengths = lengths.iter().map(|&l| l.min(seq_len)).collect();
    Ok((out, BiLstmCache { seq_len, input_dim, hidden: h, lengths, dirs }))
}

/// BPTT through both directions. Returns `∂L/∂x` with the input's shape.
pub fn bilstm_backward(
    cache: &BiLstmCache,
    params: &BiLstmParams,
    act: OutputActivation,
    grad_out: &Tensor,
    grads: &mut BiLstmParams,
) -> Result<Tensor, NeuralError> {
    let h = cache.hidden;
    let batch = cache.lengths.len();
    grad_out.expect_shape("bilstm output gradient", &[batch, cache.seq_len, 2 * h])?;
    let mut dx = Tensor::zeros(&[batch, cache.seq_len, cache.input_dim]);
    for (b, (&len, pair)) in cache.lengths.iter().zip(&cache.dirs).enumerate() {
        for (d, dir) in pair.iter().enumerate() {
            let (p_dir, g_dir) = if d == 0 { (&params.fwd, &mut grads.fwd) } else { (&params.bwd, &mut grads.bwd) };
            let mut dh_next = vec![0.0; h];
            let mut dc_next = vec![0.0; h];
            for s in (0..len).rev() {
                let p = position(s, len, d == 1);
                let row = b * cache.seq_len + p;
                let dh: Vec<f64> = grad_out.row(row)[d * h..(d + 1) * h].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
                let (dx_t, dh_prev, dc_prev) = lstm_cell_backward(&dir.steps[s], p_dir, act, &dh, &dc_next, g_dir);
                for (acc, v) in dx.row_mut(row).iter_mut().zip(apply_mask(&dx_t, dir.x_mask.as_ref())) {
                    *acc += v;
                }
                dh_next = apply_mask(&dh_prev, dir.h_mask.as_ref());
                dc_next = dc_prev;
            }
        }
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::fd;
    use rand::SeedableRng;

    fn wave(n: usize, phase: f64) -> Vec<f64> {
        (0..n).map(|i| ((i as f64 + phase) * 0.713).sin() * 0.8).collect()
    }

    fn random_params(input: usize, hidden: usize, seed: u64) -> LstmParams {
        let mut rng = Rng::seed_from_u64(seed);
        let mut p = LstmParams::glorot(input, hidden, &mut rng);
        p.b = crate::neural::uniform(&[4 * hidden], 0.5, &mut rng);
        p
    }

    #[test]
    fn zero_weights() {
        let p = LstmParams::zeros(3, 2);
        let out = lstm_cell(&[1.0, -2.0, 0.5], &[0.3, 0.1], &[0.0, 0.0], &p, OutputActivation::Tanh);
        assert_eq!(out.c, [0.0, 0.0]);
        assert_eq!(out.h, [0.0, 0.0]);
        let out = lstm_cell(&[1.0, -2.0, 0.5], &[0.3, 0.1], &[0.0, 0.0], &p, OutputActivation::Sigmoid);
        assert_eq!(out.h, [0.25, 0.25]);
    }

    #[test]
    fn saturated_forget_gate_keeps_memory() {
        let mut p = LstmParams::zeros(2, 2);
        let b = p.b.data_mut();
        b[..2].fill(-40.0); // i → 0
        b[2..4].fill(40.0); // f → 1
        let c_prev = [0.7, -1.3];
        let out = lstm_cell(&[5.0, -5.0], &[0.2, 0.9], &c_prev, &p, OutputActivation::Tanh);
        for (c, cp) in out.c.iter().zip(c_prev) {
            assert!((c - cp).abs() < 1e-6);
        }
    }

    fn cell_loss(x: &[f64], h: &[f64], c: &[f64], p: &LstmParams, act: OutputActivation, wh: &[f64], wc: &[f64]) -> f64 {
        let out = lstm_cell(x, h, c, p, act);
        out.h.iter().zip(wh).map(|(a, b)| a * b).sum::<f64>() + out.c.iter().zip(wc).map(|(a, b)| a * b).sum::<f64>()
    }

    #[test]
    fn cell_gradients() {
        for act in [OutputActivation::Sigmoid, OutputActivation::Tanh] {
            let p = random_params(3, 2, 11);
            let (x, h, c) = (wave(3, 0.0), wave(2, 1.0), wave(2, 2.0));
            let (wh, wc) = (wave(2, 3.0), wave(2, 4.0));
            let out = lstm_cell(&x, &h, &c, &p, act);
            let mut g = LstmParams::zeros(3, 2);
            let (dx, dh, dc) = lstm_cell_backward(&out.cache, &p, act, &wh, &wc, &mut g);

            let mut worst = 0.0_f64;
            let mut xv = x.clone();
            worst = worst.max(fd::check(&mut xv, &dx, |v| cell_loss(v, &h, &c, &p, act, &wh, &wc)));
            let mut hv = h.clone();
            worst = worst.max(fd::check(&mut hv, &dh, |v| cell_loss(&x, v, &c, &p, act, &wh, &wc)));
            let mut cv = c.clone();
            worst = worst.max(fd::check(&mut cv, &dc, |v| cell_loss(&x, &h, v, &p, act, &wh, &wc)));
            for (name, analytic) in [("w", &g.w), ("u", &g.u), ("b", &g.b)] {
                let mut q = p.clone();
                let mut values = match name {
                    "w" => p.w.data().to_vec(),
                    "u" => p.u.data().to_vec(),
                    _ => p.b.data().to_vec(),
                };
                worst = worst.max(fd::check(&mut values, analytic.data(), |v| {
                    let t = match name {
                        "w" => &mut q.w,
                        "u" => &mut q.u,
                        _ => &mut q.b,
                    };
                    t.data_mut().copy_from_slice(v);
                    cell_loss(&x, &h, &c, &q, act, &wh, &wc)
                }));
            }
            assert!(worst < fd::TOL, "{act:?}: {worst}");
        }
    }

    #[test]
    fn dropout_mask_expectation() {
        let mut rng = Rng::seed_from_u64(5);
        let n = 10_000;
        let mean = dropout_mask(n, 0.4, &mut rng).iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    fn input(batch: usize, seq_len: usize, dim: usize, seed: f64) -> Tensor {
        Tensor::from_vec(&[batch, seq_len, dim], wave(batch * seq_len * dim, seed)).unwrap()
    }

    #[test]
    fn single_step() {
        let params = BiLstmParams { fwd: random_params(2, 3, 1), bwd: random_params(2, 3, 2) };
        let x = input(1, 1, 2, 0.0);
        let (out, _) = bilstm_forward(&x, &[1], &params, OutputActivation::Tanh, Dropout::NONE, Mode::Infer, &mut Rng::seed_from_u64(0)).unwrap();
        let f = lstm_cell(x.data(), &[0.0; 3], &[0.0; 3], &params.fwd, OutputActivation::Tanh);
        let b = lstm_cell(x.data(), &[0.0; 3], &[0.0; 3], &params.bwd, OutputActivation::Tanh);
        assert_eq!(out.data(), [f.h, b.h].concat());
    }

    #[test]
    fn palindrome_symmetry() {
        let p = random_params(2, 3, 4);
        let params = BiLstmParams { fwd: p.clone(), bwd: p };
        let rows = [[0.1, -0.5], [0.9, 0.2], [-0.4, 0.7], [0.9, 0.2], [0.1, -0.5]];
        let x = Tensor::from_vec(&[1, 5, 2], rows.concat()).unwrap();
        let (out, _) = bilstm_forward(&x, &[5], &params, OutputActivation::Sigmoid, Dropout::NONE, Mode::Infer, &mut Rng::seed_from_u64(0)).unwrap();
        for t in 0..5 {
            let a = out.row(t);
            let b = out.row(4 - t);
            assert_eq!(a[..3], b[3..]);
        }
    }

    #[test]
    fn infer_ignores_dropout() {
        let params = BiLstmParams { fwd: random_params(2, 3, 1), bwd: random_params(2, 3, 2) };
        let x = input(2, 4, 2, 0.5);
        let drop = Dropout { input: 0.4, recurrent: 0.4 };
        let (a, _) = bilstm_forward(&x, &[4, 2], &params, OutputActivation::Sigmoid, drop, Mode::Infer, &mut Rng::seed_from_u64(1)).unwrap();
        let (b, _) = bilstm_forward(&x, &[4, 2], &params, OutputActivation::Sigmoid, Dropout::NONE, Mode::Train, &mut Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn padding_outputs_zero() {
        let params = BiLstmParams { fwd: random_params(2, 3, 1), bwd: random_params(2, 3, 2) };
        let x = input(1, 4, 2, 0.5);
        let (out, _) = bilstm_forward(&x, &[2], &params, OutputActivation::Tanh, Dropout::NONE, Mode::Infer, &mut Rng::seed_from_u64(1)).unwrap();
        assert!(out.row(2).iter().chain(out.row(3)).all(|v| *v == 0.0));
        assert!(out.row(1).iter().all(|v| *v != 0.0));
    }

    #[test]
    fn bilstm_gradients_with_dropout() {
        let params = BiLstmParams { fwd: random_params(2, 3, 7), bwd: random_params(2, 3, 8) };
        let x = input(2, 4, 2, 0.3);
        let lengths = [4, 3];
        let coef = input(2, 4, 6, 2.0);
        let drop = Dropout { input: 0.3, recurrent: 0.3 };
        let loss = |x: &Tensor, p: &BiLstmParams| -> f64 {
            let (out, _) = bilstm_forward(x, &lengths, p, OutputActivation::Sigmoid, drop, Mode::Train, &mut Rng::seed_from_u64(99)).unwrap();
            out.data().iter().zip(coef.data()).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = bilstm_forward(&x, &lengths, &params, OutputActivation::Sigmoid, drop, Mode::Train, &mut Rng::seed_from_u64(99)).unwrap();
        let mut grads = BiLstmParams::zeros(2, 3);
        let dx = bilstm_backward(&cache, &params, OutputActivation::Sigmoid, &coef, &mut grads).unwrap();

        let mut xv = x.data().to_vec();
        let mut worst = fd::check(&mut xv, dx.data(), |v| loss(&Tensor::from_vec(x.shape(), v.to_vec()).unwrap(), &params));
        let mut p = params.clone();
        let mut values = params.bwd.u.data().to_vec();
        worst = worst.max(fd::check(&mut values, grads.bwd.u.data(), |v| {
            p.bwd.u.data_mut().copy_from_slice(v);
            loss(&x, &p)
        }));
        let mut p = params.clone();
        let mut values = params.fwd.w.data().to_vec();
        worst = worst.max(fd::check(&mut values, grads.fwd.w.data(), |v| {
            p.fwd.w.data_mut().copy_from_slice(v);
            loss(&x, &p)
        }));
        assert!(worst < fd::TOL, "{worst}");
    }
}
