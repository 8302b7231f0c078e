use super::NeuralError;

/// Dense row-major `f64` array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Self { shape: shape.to_vec(), data: vec![value; shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NeuralError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NeuralError::ShapeMismatch {
                what: "tensor data".into(),
                expected: shape.to_vec(),
                found: vec![data.len()],
            });
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Self::zeros(&other.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Size of the last axis.
    pub fn row_len(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }

    /// Row `r` when the tensor is viewed as `[len / row_len, row_len]`.
    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.row_len();
        &self.data[r * n..(r + 1) * n]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let n = self.row_len();
        &mut self.data[r * n..(r + 1) * n]
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Tensor, scale: f64) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub(crate) fn expect_shape(&self, what: &str, expected: &[usize]) -> Result<(), NeuralError> {
        if self.shape == expected {
            Ok(())
        } else {
            Err(NeuralError::ShapeMismatch { what: what.to_string(), expected: expected.to_vec(), found: self.shape.clone() })
        }
    }
}

/// `out += x · W` for `x` of length `rows` and `W` of shape `rows × cols`.
pub(crate) fn vec_mat_acc(x: &[f64], w: &[f64], out: &mut [f64]) {
    let cols = out.len();
    debug_assert_eq!(w.len(), x.len() * cols);
    for (xi, w_row) in x.iter().zip(w.chunks_exact(cols)) {
        if *xi == 0.0 {
            continue;
        }
        for (o, wv) in out.iter_mut().zip(w_row) {
            *o += xi * wv;
        }
    }
}

/// `out += W · dz` for `W` of shape `out.len() × dz.len()`.
pub(crate) fn mat_vec_acc(w: &[f64], dz: &[f64], out: &mut [f64]) {
    let cols = dz.len();
    debug_assert_eq!(w.len(), out.len() * cols);
    for (o, w_row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += dot(w_row, dz);
    }
}

/// `out += x ⊗ dz` (outer product) with `out` of shape `x.len() × dz.len()`.
pub(crate) fn outer_acc(x: &[f64], dz: &[f64], out: &mut [f64]) {
    let cols = dz.len();
    debug_assert_eq!(out.len(), x.len() * cols);
    for (xi, o_row) in x.iter().zip(out.chunks_exact_mut(cols)) {
        if *xi == 0.0 {
            continue;
        }
        for (o, d) in o_row.iter_mut().zip(dz) {
            *o += xi * d;
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax, in place.
pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_len() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn products() {
        // x = [1, 2], W = [[1, 2, 3], [4, 5, 6]]
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut out = [0.0; 3];
        vec_mat_acc(&[1.0, 2.0], &w, &mut out);
        assert_eq!(out, [9.0, 12.0, 15.0]);

        let mut back = [0.0; 2];
        mat_vec_acc(&w, &[1.0, 0.0, -1.0], &mut back);
        assert_eq!(back, [-2.0, -2.0]);

        let mut o = [0.0; 6];
        outer_acc(&[1.0, 2.0], &[1.0, 0.0, -1.0], &mut o);
        assert_eq!(o, [1.0, 0.0, -1.0, 2.0, 0.0, -2.0]);
    }

    #[test]
    fn softmax_is_stable() {
        let mut z = [1000.0, 1000.0];
        softmax_in_place(&mut z);
        assert_eq!(z, [0.5, 0.5]);
        assert!((sigmoid(-800.0)).abs() < 1e-300 && sigmoid(800.0) == 1.0);
    }
}
