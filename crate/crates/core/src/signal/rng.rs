use std::f64::consts::PI;

use crate::error::{Error, Result};

/// SplitMix64 generator with Box–Muller normal deviates.
///
/// The algorithm is fixed so that noise streams are reproducible on any
/// platform from the seed alone.
#[derive(Clone, Debug)]
pub struct SeededRng {
    state: u64,
    gaussian_spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng {
            state: seed,
            gaussian_spare: None,
        }
    }

    /// Independent stream for worker `index` of a parallel job.
    pub fn for_stream(base_seed: u64, index: u64) -> Self {
        SeededRng::new(base_seed.wrapping_add(index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.gaussian_spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping ln finite
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        self.gaussian_spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normal(&mut self, mean: f64, sigma: f64) -> Result<f64> {
        if !(sigma >= 0.0) {
            return Err(Error::Param(format!("normal sigma must be >= 0, got {sigma}")));
        }
        Ok(mean + sigma * self.standard_normal())
    }
}
