use rand::Rng as _;

use super::{Rng, Tensor};

/// I.i.d. uniform on `[-√(6/(fan_in+fan_out)), +√(6/(fan_in+fan_out))]`
/// for a `fan_in × fan_out` matrix.
pub fn glorot_uniform(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(&[fan_in, fan_out], limit, rng)
}

pub fn uniform(shape: &[usize], limit: f64, rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-limit..=limit)).collect();
    Tensor::from_vec(shape, data).expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn bound() {
        let t = glorot_uniform(3, 3, &mut Rng::seed_from_u64(1));
        assert!(t.data().iter().all(|v| v.abs() <= 1.0));
        assert_eq!(t.shape(), [3, 3]);
    }

    #[test]
    fn deterministic() {
        let a = glorot_uniform(4, 7, &mut Rng::seed_from_u64(9));
        let b = glorot_uniform(4, 7, &mut Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn mean_near_zero() {
        // Var = limit²/3 = 0.01 for (100, 100); the standard error of the mean
        // over 10⁴ draws is 0.001, so 0.02 is a 20σ bound.
        let t = glorot_uniform(100, 100, &mut Rng::seed_from_u64(3));
        let mean = t.data().iter().sum::<f64>() / t.len() as f64;
        assert!(mean.abs() < 0.02, "{mean}");
        let limit = (6.0f64 / 200.0).sqrt();
        assert!(t.max_abs() <= limit);
    }
}
