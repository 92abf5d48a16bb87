//! Adaptive noise cancellation with primary and reference inputs.
//!
//! The reference noise passes through an adaptive FIR filter to produce a
//! noise estimate, which is subtracted from the corrupted primary signal.
//! Weights adapt by normalized least-mean-squares; with a silent reference
//! the filter never updates and the primary passes through untouched.

#[derive(Debug, thiserror::Error)]
pub enum AncError {
    #[error("primary has {primary} samples but reference has {reference}")]
    LengthMismatch { primary: usize, reference: usize },

    #[error("invalid config: {0}")]
    ConfigInvalid(String),
}

/// Adaptive filter parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AncConfig {
    /// Filter order (number of taps).
    pub taps: usize,
    /// NLMS adaptation rate, in (0, 2).
    pub step: f64,
    /// Added to the normalization denominator so silent reference frames
    /// cannot blow up the update.
    pub regularizer: f64,
}

impl Default for AncConfig {
    fn default() -> Self {
        Self {
            taps: 32,
            step: 0.1,
            regularizer: 1e-6,
        }
    }
}

impl AncConfig {
    fn validate(&self, len: usize) -> Result<(), AncError> {
        if self.taps < 1 {
            return Err(AncError::ConfigInvalid("taps must be >= 1".into()));
        }
        if !(self.step > 0.0 && self.step < 2.0) {
            return Err(AncError::ConfigInvalid(format!(
                "step {} must be in (0, 2)",
                self.step
            )));
        }
        if !(self.regularizer > 0.0) {
            return Err(AncError::ConfigInvalid(format!(
                "regularizer {} must be > 0",
                self.regularizer
            )));
        }
        if len <= self.taps {
            return Err(AncError::ConfigInvalid(format!(
                "signal of {} samples must be longer than the {}-tap filter",
                len, self.taps
            )));
        }
        Ok(())
    }
}

/// Cancels reference-correlated noise from the primary signal.
///
/// At each step the filter output over the most recent reference window is
/// subtracted from the primary sample, and the weights move along the
/// normalized error gradient: `w += step * e * x / (reg + |x|^2)`.
/// Output length equals input length. With `step` approaching zero the
/// weights stay at their zero initialization and the output reduces to the
/// primary signal. The recurrence is sequential and deterministic.
pub fn nlms_cancel(
    primary: &[f32],
    reference: &[f32],
    cfg: &AncConfig,
) -> Result<Vec<f32>, AncError> {
    if primary.len() != reference.len() {
        return Err(AncError::LengthMismatch {
            primary: primary.len(),
            reference: reference.len(),
        });
    }
    cfg.validate(primary.len())?;

    let taps = cfg.taps;
    let mut weights = vec![0.0f64; taps];
    // history[0] is the newest reference sample.
    let mut history = vec![0.0f64; taps];
    let mut output = Vec::with_capacity(primary.len());

    for (&d, &x) in primary.iter().zip(reference) {
        history.rotate_right(1);
        history[0] = x as f64;

        let mut estimate = 0.0f64;
        let mut power = 0.0f64;
        for (w, h) in weights.iter().zip(&history) {
            estimate += w * h;
            power += h * h;
        }

        let error = d as f64 - estimate;
        let gain = cfg.step * error / (cfg.regularizer + power);
        for (w, h) in weights.iter_mut().zip(&history) {
            *w += gain * h;
        }
        output.push(error as f32);
    }
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn power(signal: &[f32]) -> f64 {
        signal.iter().map(|&v| v as f64 * v as f64).sum::<f64>() / signal.len() as f64
    }

    #[test]
    fn silent_reference_passes_primary_through() {
        let primary: Vec<f32> = (0..1000).map(|i| (i as f32 * 0.01).sin() * 0.5).collect();
        let reference = vec![0.0f32; 1000];
        let out = nlms_cancel(&primary, &reference, &AncConfig::default()).unwrap();
        assert_eq!(out, primary);
    }

    #[test]
    fn near_zero_step_behaves_like_passthrough() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let primary: Vec<f32> = (0..500).map(|_| rng.random_range(-0.5..0.5)).collect();
        let reference: Vec<f32> = (0..500).map(|_| rng.random_range(-0.5..0.5)).collect();
        let cfg = AncConfig {
            step: 1e-12,
            ..AncConfig::default()
        };
        let out = nlms_cancel(&primary, &reference, &cfg).unwrap();
        for (o, p) in out.iter().zip(&primary) {
            assert!((o - p).abs() < 1e-6);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let err = nlms_cancel(&[0.0; 10], &[0.0; 9], &AncConfig::default()).unwrap_err();
        assert!(matches!(err, AncError::LengthMismatch { .. }));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = AncConfig::default();
        let signal = vec![0.0f32; 100];
        for cfg in [
            AncConfig { taps: 0, ..base },
            AncConfig { step: 0.0, ..base },
            AncConfig { step: 2.0, ..base },
            AncConfig {
                regularizer: 0.0,
                ..base
            },
            AncConfig { taps: 100, ..base },
        ] {
            assert!(matches!(
                nlms_cancel(&signal, &signal, &cfg),
                Err(AncError::ConfigInvalid(_))
            ));
        }
    }

    #[test]
    fn output_is_deterministic_and_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let primary: Vec<f32> = (0..4000).map(|_| rng.random_range(-1.0..1.0)).collect();
        // Reference with long silent stretches to stress the regularizer.
        let reference: Vec<f32> = (0..4000)
            .map(|i| {
                if (i / 500) % 2 == 0 {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let a = nlms_cancel(&primary, &reference, &AncConfig::default()).unwrap();
        let b = nlms_cancel(&primary, &reference, &AncConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| v.is_finite()));
    }

    /// Simulation oracle: known clean signal, FIR-correlated noise at 0 dB
    /// SNR; measure the residual noise power on the second half.
    #[test]
    fn converges_on_fir_correlated_noise() {
        let rate = 48_000usize;
        let n = 2 * rate;
        let mut rng = ChaCha8Rng::seed_from_u64(3);

        let clean: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / rate as f64;
                0.3 * (2.0 * std::f64::consts::PI * 310.0 * t).sin()
                    + 0.15 * (2.0 * std::f64::consts::PI * 1150.0 * t).sin()
            })
            .collect();
        let reference: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fir = [0.6, -0.3, 0.2, 0.15, -0.1, 0.05, 0.08, -0.04];
        let mut noise: Vec<f64> = (0..n)
            .map(|t| {
                fir.iter()
                    .enumerate()
                    .filter(|(k, _)| t >= *k)
                    .map(|(k, &h)| h * reference[t - k])
                    .sum()
            })
            .collect();

        // Scale to 0 dB SNR.
        let p_clean = clean.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let p_noise = noise.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let scale = (p_clean / p_noise).sqrt();
        for v in &mut noise {
            *v *= scale;
        }

        let primary: Vec<f32> = clean
            .iter()
            .zip(&noise)
            .map(|(s, w)| (s + w) as f32)
            .collect();
        let reference_f32: Vec<f32> = reference.iter().map(|&v| v as f32).collect();

        let out = nlms_cancel(&primary, &reference_f32, &AncConfig::default()).unwrap();

        let half = n / 2;
        let residual: Vec<f32> = out[half..]
            .iter()
            .zip(&clean[half..])
            .map(|(o, s)| o - *s as f32)
            .collect();
        let input_noise: Vec<f32> = noise[half..].iter().map(|&v| v as f32).collect();
        let reduction_db = 10.0 * (power(&input_noise) / power(&residual)).log10();
        assert!(reduction_db >= 10.0, "only {reduction_db:.2} dB reduction");
    }
}
