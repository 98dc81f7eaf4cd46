//! Seeded parameter initializers.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::tensor::Tensor;

/// Glorot-uniform init for a conv kernel of shape `(c_out, c_in, kh, kw)`.
pub(crate) fn glorot_uniform<R: Rng>(rng: &mut R, shape: Vec<usize>) -> Tensor {
    let (c_out, c_in, kh, kw) = (shape[0], shape[1], shape[2], shape[3]);
    let fan_in = (c_in * kh * kw) as f64;
    let fan_out = (c_out * kh * kw) as f64;
    let limit = (6.0 / (fan_in + fan_out)).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    let count: usize = shape.iter().product();
    let data = (0..count).map(|_| dist.sample(rng)).collect();
    Tensor::new(shape, data).expect("finite init")
}

/// I.i.d. Gaussian entries with the given mean and standard deviation.
pub(crate) fn gaussian<R: Rng>(rng: &mut R, shape: Vec<usize>, mean: f64, std: f64) -> Tensor {
    let dist = Normal::new(mean, std).expect("valid normal");
    let count: usize = shape.iter().product();
    let data = (0..count).map(|_| dist.sample(rng)).collect();
    Tensor::new(shape, data).expect("finite init")
}

/// Random kernel whose flattening to `(c_out, c_in*kh*kw)` has orthonormal
/// rows (modified Gram-Schmidt on a Gaussian draw). Requires
/// `c_out <= c_in*kh*kw`.
pub(crate) fn orthogonal_rows<R: Rng>(rng: &mut R, shape: Vec<usize>) -> Tensor {
    let rows = shape[0];
    let cols: usize = shape[1..].iter().product();
    assert!(rows <= cols, "cannot orthonormalize {rows} rows of dim {cols}");
    let dist = Normal::new(0.0, 1.0).unwrap();
    loop {
        let mut m: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| dist.sample(rng)).collect())
            .collect();
        let mut ok = true;
        for i in 0..rows {
            for j in 0..i {
                let dot: f64 = (0..cols).map(|k| m[i][k] * m[j][k]).sum();
                for k in 0..cols {
                    m[i][k] -= dot * m[j][k];
                }
            }
            let norm: f64 = m[i].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false; // astronomically unlikely degenerate draw; redraw
                break;
            }
            for v in m[i].iter_mut() {
                *v /= norm;
            }
        }
        if ok {
            let data: Vec<f64> = m.into_iter().flatten().collect();
            return Tensor::new(shape, data).expect("finite init");
        }
    }
}
