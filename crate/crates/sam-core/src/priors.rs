//! Learnable Gaussian center-bias priors.
//!
//! Each prior is a 2-d Gaussian with diagonal covariance evaluated over a
//! normalized `[0,1] x [0,1]` coordinate frame, so learned parameters
//! transfer across resolutions. Prior maps are concatenated with the feature
//! stack and pushed through two replicated dilated convolutions with a
//! 17 x 17 receptive field (kernel 5, holes 3).

use crate::error::{Result, SamError};
use crate::tensor::{
    activation, concat_channels, conv2d, Activation, Padding, Tensor,
};

/// Minimum standard deviation; learning clamps at this floor so the
/// `1 / (sigma_x sigma_y)` peak cannot diverge.
pub const SIGMA_FLOOR: f64 = 1e-3;

/// Kernel size of the prior-refinement convolutions.
pub const PRIOR_KERNEL: usize = 5;
/// Hole count of the prior-refinement convolutions (dilation 4, receptive
/// field 17).
pub const PRIOR_HOLES: usize = 3;

/// One Gaussian prior: center and per-axis standard deviation in normalized
/// coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPrior {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl GaussianPrior {
    /// Density at a normalized coordinate.
    #[inline]
    pub fn density(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.mu_x;
        let dy = y - self.mu_y;
        let expo = dx * dx / (2.0 * self.sigma_x * self.sigma_x)
            + dy * dy / (2.0 * self.sigma_y * self.sigma_y);
        (-expo).exp() / (2.0 * std::f64::consts::PI * self.sigma_x * self.sigma_y)
    }
}

/// An ordered bank of N priors.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorBank {
    pub priors: Vec<GaussianPrior>,
}

impl PriorBank {
    pub fn len(&self) -> usize {
        self.priors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priors.is_empty()
    }

    /// Default bank: a 4x4 grid of centers with sigma 0.25 on both axes.
    pub fn grid_init(n: usize) -> Self {
        let side = (n as f64).sqrt().ceil() as usize;
        let mut priors = Vec::with_capacity(n);
        'outer: for gy in 0..side {
            for gx in 0..side {
                if priors.len() == n {
                    break 'outer;
                }
                priors.push(GaussianPrior {
                    mu_x: (gx as f64 + 0.5) / side as f64,
                    mu_y: (gy as f64 + 0.5) / side as f64,
                    sigma_x: 0.25,
                    sigma_y: 0.25,
                });
            }
        }
        PriorBank { priors }
    }

    /// Flatten to an `N x 4` tensor with rows `(mu_x, mu_y, sigma_x, sigma_y)`.
    pub fn to_tensor(&self) -> Tensor {
        let mut data = Vec::with_capacity(self.priors.len() * 4);
        for p in &self.priors {
            data.extend_from_slice(&[p.mu_x, p.mu_y, p.sigma_x, p.sigma_y]);
        }
        Tensor::new(vec![self.priors.len(), 4], data).expect("finite prior params")
    }

    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        match t.shape() {
            [n, 4] => {
                let mut priors = Vec::with_capacity(*n);
                for row in t.data().chunks(4) {
                    priors.push(GaussianPrior {
                        mu_x: row[0],
                        mu_y: row[1],
                        sigma_x: row[2],
                        sigma_y: row[3],
                    });
                }
                Ok(PriorBank { priors })
            }
            other => Err(SamError::Shape(format!(
                "prior bank tensor must be N x 4, got {other:?}"
            ))),
        }
    }
}

/// Parameters of one prior-refinement replica.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorStage {
    /// `C_out x (C_in + N) x 5 x 5` kernel, applied with holes 3.
    pub kernel: Tensor,
    pub bias: Tensor,
}

/// The two replicated refinement convolutions (each followed by ReLU).
#[derive(Clone, Debug, PartialEq)]
pub struct PriorModuleParams {
    pub stages: [PriorStage; 2],
}

/// Sample one prior over a `1 x H x W` grid at cell centers of the
/// normalized frame.
pub fn gaussian_prior_map(p: &GaussianPrior, width: usize, height: usize) -> Result<Tensor> {
    if width == 0 || height == 0 {
        return Err(SamError::Config("prior map extents must be positive".into()));
    }
    if p.sigma_x <= 0.0 || p.sigma_y <= 0.0 {
        return Err(SamError::Config(format!(
            "prior sigmas must be positive, got ({}, {})",
            p.sigma_x, p.sigma_y
        )));
    }
    let mut data = Vec::with_capacity(width * height);
    for i in 0..height {
        let y = (i as f64 + 0.5) / height as f64;
        for j in 0..width {
            let x = (j as f64 + 0.5) / width as f64;
            data.push(p.density(x, y));
        }
    }
    Tensor::new(vec![1, height, width], data)
}

/// Stack the bank's maps into an `N x H x W` tensor in bank order.
pub fn prior_bank_maps(bank: &PriorBank, width: usize, height: usize) -> Result<Tensor> {
    if bank.is_empty() {
        return Err(SamError::Config("prior bank is empty".into()));
    }
    let mut out = Tensor::zeros(vec![0, height, width]);
    for p in &bank.priors {
        let map = gaussian_prior_map(p, width, height)?;
        out = concat_channels(&out, &map)?;
    }
    Ok(out)
}

fn stage(features: &Tensor, bank: &PriorBank, stage: &PriorStage) -> Result<Tensor> {
    let (_, h, w) = features.dims3()?;
    let maps = prior_bank_maps(bank, w, h)?;
    let stacked = concat_channels(features, &maps)?;
    let conv = conv2d(
        &stacked,
        &stage.kernel,
        stage.bias.data(),
        1,
        crate::tensor::dilation_from_holes(PRIOR_HOLES),
        Padding::Same,
    )?;
    activation(&conv, Activation::Relu)
}

/// Concatenate prior maps with the features and refine, twice; the second
/// replica owns its own bank. Spatial extent and channel count are preserved.
pub fn apply_priors(
    features: &Tensor,
    banks: &[PriorBank; 2],
    params: &PriorModuleParams,
) -> Result<Tensor> {
    let first = stage(features, &banks[0], &params.stages[0])?;
    stage(&first, &banks[1], &params.stages[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_value_matches_closed_form() {
        // place the center exactly on a cell center: 8x8 grid, cell (4,4)
        // has center (0.5625, 0.5625)
        let p = GaussianPrior {
            mu_x: 0.5625,
            mu_y: 0.5625,
            sigma_x: 0.25,
            sigma_y: 0.25,
        };
        let map = gaussian_prior_map(&p, 8, 8).unwrap();
        let peak = 1.0 / (2.0 * std::f64::consts::PI * 0.25 * 0.25);
        assert!((peak - 2.546_479_089_470_325_4).abs() < 1e-12);
        assert!((map.at3(0, 4, 4) - peak).abs() < 1e-12);
        // the peak cell dominates
        let max = map.data().iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(max, map.at3(0, 4, 4));
    }

    #[test]
    fn axis_symmetry_around_center() {
        let p = GaussianPrior {
            mu_x: 0.5,
            mu_y: 0.5,
            sigma_x: 0.13,
            sigma_y: 0.21,
        };
        for d in [0.05, 0.11, 0.3] {
            let left = p.density(0.5 - d, 0.5);
            let right = p.density(0.5 + d, 0.5);
            assert!((left - right).abs() < 1e-12 * left.abs());
            let up = p.density(0.5, 0.5 - d);
            let down = p.density(0.5, 0.5 + d);
            assert!((up - down).abs() < 1e-12 * up.abs());
        }
    }

    #[test]
    fn one_sigma_falloff() {
        let p = GaussianPrior {
            mu_x: 0.5,
            mu_y: 0.5,
            sigma_x: 0.1,
            sigma_y: 0.2,
        };
        let peak = p.density(0.5, 0.5);
        let at_sigma = p.density(0.5 + 0.1, 0.5);
        assert!((at_sigma / peak - (-0.5f64).exp()).abs() < 1e-12);
        assert!(((-0.5f64).exp() - 0.606_530_659_712_633_4).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_sigma() {
        let p = GaussianPrior {
            mu_x: 0.5,
            mu_y: 0.5,
            sigma_x: 0.0,
            sigma_y: 0.2,
        };
        assert!(gaussian_prior_map(&p, 4, 4).is_err());
    }

    #[test]
    fn discrete_mass_close_to_one() {
        // 3 sigma fits inside the domain on both axes
        let p = GaussianPrior {
            mu_x: 0.5,
            mu_y: 0.5,
            sigma_x: 0.12,
            sigma_y: 0.15,
        };
        let (w, h) = (64, 48);
        let map = gaussian_prior_map(&p, w, h).unwrap();
        let mass: f64 = map.data().iter().sum::<f64>() / (w as f64 * h as f64);
        assert!((mass - 1.0).abs() < 0.02, "mass = {mass}");
    }

    #[test]
    fn strictly_positive_and_unimodal_slices() {
        let p = GaussianPrior {
            mu_x: 0.4,
            mu_y: 0.6,
            sigma_x: 0.2,
            sigma_y: 0.1,
        };
        let map = gaussian_prior_map(&p, 16, 16).unwrap();
        assert!(map.data().iter().all(|&v| v > 0.0));
        // row through the center: increases to the peak then decreases
        let peak_row = 9; // cell center closest to mu_y = 0.6
        let row: Vec<f64> = (0..16).map(|j| map.at3(0, peak_row, j)).collect();
        let peak_col = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        for j in 1..=peak_col {
            assert!(row[j] >= row[j - 1]);
        }
        for j in peak_col + 1..16 {
            assert!(row[j] <= row[j - 1]);
        }
    }

    #[test]
    fn bank_stacking() {
        let bank = PriorBank::grid_init(16);
        assert_eq!(bank.len(), 16);
        let maps = prior_bank_maps(&bank, 10, 8).unwrap();
        assert_eq!(maps.shape(), &[16, 8, 10]);

        // duplicate priors give identical channels
        let dup = PriorBank {
            priors: vec![bank.priors[3]; 2],
        };
        let m = prior_bank_maps(&dup, 6, 6).unwrap();
        assert_eq!(&m.data()[..36], &m.data()[36..]);

        // single prior equals gaussian_prior_map
        let single = PriorBank {
            priors: vec![bank.priors[5]],
        };
        let one = prior_bank_maps(&single, 7, 5).unwrap();
        assert_eq!(one, gaussian_prior_map(&bank.priors[5], 7, 5).unwrap());

        assert!(prior_bank_maps(&PriorBank { priors: vec![] }, 4, 4).is_err());
    }

    #[test]
    fn bank_tensor_roundtrip() {
        let bank = PriorBank::grid_init(5);
        let t = bank.to_tensor();
        assert_eq!(t.shape(), &[5, 4]);
        assert_eq!(PriorBank::from_tensor(&t).unwrap(), bank);
    }

    #[test]
    fn apply_priors_channel_counts_and_zero_kernels() {
        // C=6, N=4: intermediate 10 channels, output back to 6
        let c = 6;
        let n = 4;
        let banks = [PriorBank::grid_init(n), PriorBank::grid_init(n)];
        let zero_stage = || PriorStage {
            kernel: Tensor::zeros(vec![c, c + n, PRIOR_KERNEL, PRIOR_KERNEL]),
            bias: Tensor::zeros(vec![c]),
        };
        let params = PriorModuleParams {
            stages: [zero_stage(), zero_stage()],
        };
        let features = Tensor::filled(vec![c, 6, 8], 0.5).unwrap();
        let out = apply_priors(&features, &banks, &params).unwrap();
        assert_eq!(out.shape(), features.shape());
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn apply_priors_matches_manual_composition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(77);
        let (c, n, h, w) = (3, 2, 5, 6);
        let banks = [PriorBank::grid_init(n), PriorBank::grid_init(n)];
        let mut rand_t = |shape: Vec<usize>| {
            let count: usize = shape.iter().product();
            Tensor::new(shape, (0..count).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap()
        };
        let params = PriorModuleParams {
            stages: [
                PriorStage {
                    kernel: rand_t(vec![c, c + n, PRIOR_KERNEL, PRIOR_KERNEL]),
                    bias: rand_t(vec![c]),
                },
                PriorStage {
                    kernel: rand_t(vec![c, c + n, PRIOR_KERNEL, PRIOR_KERNEL]),
                    bias: rand_t(vec![c]),
                },
            ],
        };
        let features = rand_t(vec![c, h, w]);
        let got = apply_priors(&features, &banks, &params).unwrap();

        // oracle: manual concat + dilated conv + relu, twice
        let manual_stage = |f: &Tensor, bank: &PriorBank, st: &PriorStage| {
            let maps = prior_bank_maps(bank, w, h).unwrap();
            let stacked = concat_channels(f, &maps).unwrap();
            assert_eq!(stacked.shape()[0], c + n);
            let conv = conv2d(&stacked, &st.kernel, st.bias.data(), 1, 4, Padding::Same).unwrap();
            activation(&conv, Activation::Relu).unwrap()
        };
        let manual = manual_stage(
            &manual_stage(&features, &banks[0], &params.stages[0]),
            &banks[1],
            &params.stages[1],
        );
        assert_eq!(got, manual);
    }

    #[test]
    fn effective_receptive_field_is_17() {
        assert_eq!(
            crate::backbone::effective_kernel(PRIOR_KERNEL, PRIOR_HOLES),
            17
        );
    }
}
