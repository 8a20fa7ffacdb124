//! Datapoint packaging: windowing modulated signals, the complex-to-2-channel
//! transform, and full labeled dataset generation.

use super::modulate::modulate;
use super::ModulationScheme;
use crate::error::{Result, RfError};
use crate::neuralcore::Tensor;
use crate::seeding::{item_seed, rng_from, stage_seed};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

/// Datapoint length in IQ samples.
pub const N_SAMPLES: usize = 1024;

/// Extra valid samples generated beyond the window so the start offset can be
/// drawn at random.
const OFFSET_MARGIN: usize = 256;

/// One labeled 2-channel sample: 1024 in-phase and 1024 quadrature values,
/// jointly peak-normalized to magnitude 1.
#[derive(Debug, Clone, PartialEq)]
pub struct IqDatapoint {
    pub i: Vec<f32>,
    pub q: Vec<f32>,
    pub label: u8,
}

impl IqDatapoint {
    pub fn scheme(&self) -> ModulationScheme {
        ModulationScheme::from_label(self.label).expect("stored label is valid")
    }

    /// Peak magnitude over the recombined complex samples.
    pub fn peak_magnitude(&self) -> f32 {
        self.i
            .iter()
            .zip(&self.q)
            .map(|(&i, &q)| (i * i + q * q).sqrt())
            .fold(0.0, f32::max)
    }
}

/// Transforms a 1024-sample complex window into a normalized 2-channel
/// datapoint: channel 1 holds real parts, channel 2 imaginary parts, both
/// jointly scaled by the reciprocal of the peak magnitude.
pub fn complex_to_2d(window: &[Complex64], label: u8) -> Result<IqDatapoint> {
    if window.len() != N_SAMPLES {
        return Err(RfError::Shape(format!(
            "window must have {N_SAMPLES} samples, got {}",
            window.len()
        )));
    }
    let peak = window.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if peak == 0.0 {
        return Err(RfError::Degenerate(
            "all-zero window cannot be peak-normalized".into(),
        ));
    }
    let scale = peak.recip();
    Ok(IqDatapoint {
        i: window.iter().map(|c| (c.re * scale) as f32).collect(),
        q: window.iter().map(|c| (c.im * scale) as f32).collect(),
        label,
    })
}

/// Generation request: `per_class_count` datapoints for each of the six
/// classes, split into train/test fractions that must sum to 1.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub per_class_count: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub test_fraction: f64,
}

impl DatasetSpec {
    pub fn new(per_class_count: usize, seed: u64) -> Self {
        DatasetSpec {
            per_class_count,
            seed,
            train_fraction: 5.0 / 6.0,
            test_fraction: 1.0 / 6.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_class_count == 0 {
            return Err(RfError::InvalidArg("per_class_count must be >= 1".into()));
        }
        if (self.train_fraction + self.test_fraction - 1.0).abs() > 1e-9 {
            return Err(RfError::InvalidArg(format!(
                "split fractions must sum to 1, got {} + {}",
                self.train_fraction, self.test_fraction
            )));
        }
        if self.train_fraction < 0.0 || self.test_fraction < 0.0 {
            return Err(RfError::InvalidArg("split fractions must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A labeled dataset, class-major order as generated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub points: Vec<IqDatapoint>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.label as usize).collect()
    }

    pub fn count_for_label(&self, label: u8) -> usize {
        self.points.iter().filter(|p| p.label == label).count()
    }

    /// Standard deviation over every I and Q value in the dataset.
    pub fn std(&self) -> f64 {
        let n = (self.points.len() * 2 * N_SAMPLES) as f64;
        if n == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for p in &self.points {
            for &v in p.i.iter().chain(&p.q) {
                sum += v as f64;
                sum_sq += (v as f64) * (v as f64);
            }
        }
        let mean = sum / n;
        (sum_sq / n - mean * mean).max(0.0).sqrt()
    }

    /// Stratified split by the spec's fractions: for each class the first
    /// `round(train_fraction * count)` points go to train, the rest to test.
    pub fn split(&self, train_fraction: f64) -> (Dataset, Dataset) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for scheme in ModulationScheme::ALL {
            let class: Vec<&IqDatapoint> = self
                .points
                .iter()
                .filter(|p| p.label == scheme.label())
                .collect();
            let n_train = (train_fraction * class.len() as f64).round() as usize;
            for (i, p) in class.into_iter().enumerate() {
                if i < n_train {
                    train.push(p.clone());
                } else {
                    test.push(p.clone());
                }
            }
        }
        (Dataset { points: train }, Dataset { points: test })
    }

    /// Packs the dataset into a `(N, 2, 1024)` activation tensor.
    pub fn to_tensor(&self) -> Tensor<f32> {
        let mut data = Vec::with_capacity(self.points.len() * 2 * N_SAMPLES);
        for p in &self.points {
            data.extend_from_slice(&p.i);
            data.extend_from_slice(&p.q);
        }
        Tensor::from_vec(&[self.points.len(), 2, N_SAMPLES], data).expect("consistent lengths")
    }

    /// Inverse of `to_tensor` given labels.
    pub fn from_tensor(t: &Tensor<f32>, labels: &[u8]) -> Result<Dataset> {
        if t.shape().len() != 3 || t.shape()[1] != 2 || t.shape()[2] != N_SAMPLES {
            return Err(RfError::Shape(format!(
                "expected (N, 2, {N_SAMPLES}), got {:?}",
                t.shape()
            )));
        }
        if t.shape()[0] != labels.len() {
            return Err(RfError::Shape("label count mismatch".into()));
        }
        let points = labels
            .iter()
            .enumerate()
            .map(|(n, &label)| {
                let base = n * 2 * N_SAMPLES;
                IqDatapoint {
                    i: t.data()[base..base + N_SAMPLES].to_vec(),
                    q: t.data()[base + N_SAMPLES..base + 2 * N_SAMPLES].to_vec(),
                    label,
                }
            })
            .collect();
        Ok(Dataset { points })
    }
}

/// Draws one datapoint: an independent random bit sequence, modulated, then
/// windowed at a random offset inside the transient-free region.
fn generate_datapoint(scheme: ModulationScheme, seed: u64) -> Result<IqDatapoint> {
    let mut rng = rng_from(seed);
    let sps = scheme.samples_per_symbol();
    let bps = scheme.bits_per_symbol();
    let needed_samples = N_SAMPLES + OFFSET_MARGIN;
    let samples_per_unit = match scheme {
        ModulationScheme::Ofdm256 => super::modulate::OFDM_FFT_LEN + super::modulate::OFDM_CP_LEN,
        _ => sps,
    };
    let units = needed_samples.div_ceil(samples_per_unit);
    let bits: Vec<u8> = (0..units * bps).map(|_| rng.random_range(0..2u8)).collect();
    let seq = modulate(scheme, &bits, sps)?;
    let valid = seq.valid();
    debug_assert!(valid.len() >= N_SAMPLES);
    let max_start = valid.len() - N_SAMPLES;
    let start = if max_start == 0 { 0 } else { rng.random_range(0..=max_start) };
    complex_to_2d(&valid[start..start + N_SAMPLES], scheme.label())
}

/// Generates `per_class_count` datapoints per class, deterministically from
/// the spec seed. Points are class-major; use [`Dataset::split`] afterwards.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    generate_dataset_for(spec, &ModulationScheme::ALL)
}

/// Same as [`generate_dataset`] but restricted to a class subset.
pub fn generate_dataset_for(spec: &DatasetSpec, schemes: &[ModulationScheme]) -> Result<Dataset> {
    spec.validate()?;
    if schemes.is_empty() {
        return Err(RfError::InvalidArg("no modulation schemes requested".into()));
    }
    let mut points = Vec::with_capacity(schemes.len() * spec.per_class_count);
    for &scheme in schemes {
        let class_seed = stage_seed(spec.seed, scheme.name());
        let class_points: Vec<Result<IqDatapoint>> = (0..spec.per_class_count)
            .into_par_iter()
            .map(|idx| generate_datapoint(scheme, item_seed(class_seed, idx as u64)))
            .collect();
        for p in class_points {
            points.push(p?);
        }
    }
    Ok(Dataset { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn purely_real_window_has_zero_q() {
        let window: Vec<Complex64> = (0..N_SAMPLES)
            .map(|i| Complex64::new((i as f64 * 0.1).sin() + 2.0, 0.0))
            .collect();
        let p = complex_to_2d(&window, 0).unwrap();
        assert!(p.q.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn peak_of_four_normalizes_to_exactly_one() {
        let mut window = vec![Complex64::new(0.5, 0.0); N_SAMPLES];
        window[37] = Complex64::new(4.0, 0.0);
        let p = complex_to_2d(&window, 0).unwrap();
        assert_eq!(p.i[37], 1.0);
        assert_eq!(p.peak_magnitude(), 1.0);
    }

    #[test]
    fn wrong_length_and_zero_windows_error() {
        assert!(matches!(
            complex_to_2d(&vec![Complex64::new(1.0, 0.0); 100], 0),
            Err(RfError::Shape(_))
        ));
        assert!(matches!(
            complex_to_2d(&vec![Complex64::new(0.0, 0.0); N_SAMPLES], 0),
            Err(RfError::Degenerate(_))
        ));
    }

    #[test]
    fn dataset_counts_and_determinism() {
        let spec = DatasetSpec::new(10, 99);
        let d1 = generate_dataset(&spec).unwrap();
        let d2 = generate_dataset(&spec).unwrap();
        assert_eq!(d1.len(), 60);
        for scheme in ModulationScheme::ALL {
            assert_eq!(d1.count_for_label(scheme.label()), 10);
        }
        assert_eq!(d1, d2);
        let other = generate_dataset(&DatasetSpec::new(10, 100)).unwrap();
        assert_ne!(d1, other);
    }

    #[test]
    fn dataset_std_is_positive_and_recorded() {
        let d = generate_dataset(&DatasetSpec::new(4, 7)).unwrap();
        let std = d.std();
        assert!(std > 0.05 && std < 1.0, "std = {std}");
    }

    #[test]
    fn split_is_stratified() {
        let d = generate_dataset(&DatasetSpec::new(12, 3)).unwrap();
        let (train, test) = d.split(5.0 / 6.0);
        assert_eq!(train.len(), 60);
        assert_eq!(test.len(), 12);
        for scheme in ModulationScheme::ALL {
            assert_eq!(train.count_for_label(scheme.label()), 10);
            assert_eq!(test.count_for_label(scheme.label()), 2);
        }
    }

    #[test]
    fn tensor_roundtrip() {
        let d = generate_dataset(&DatasetSpec::new(3, 5)).unwrap();
        let t = d.to_tensor();
        assert_eq!(t.shape(), &[18, 2, N_SAMPLES]);
        let labels: Vec<u8> = d.points.iter().map(|p| p.label).collect();
        let back = Dataset::from_tensor(&t, &labels).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn fsk_datapoints_keep_constant_envelope() {
        let spec = DatasetSpec::new(3, 11);
        let d = generate_dataset_for(&spec, &[ModulationScheme::Fsk2]).unwrap();
        for p in &d.points {
            for (i, q) in p.i.iter().zip(&p.q) {
                let mag = (i * i + q * q).sqrt();
                assert!((mag - 1.0).abs() < 1e-5);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// recombining i + j*q reproduces the window up to the scalar factor
        #[test]
        fn recombination_matches_scaled_input(seed in 0u64..1000) {
            let mut rng = crate::seeding::rng_from(seed);
            let window: Vec<Complex64> = (0..N_SAMPLES)
                .map(|_| Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
                .collect();
            let p = complex_to_2d(&window, 0).unwrap();
            let peak = window.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
            for ((&i, &q), c) in p.i.iter().zip(&p.q).zip(&window) {
                let rec = Complex64::new(i as f64, q as f64) * peak;
                prop_assert!((rec - c).norm() < 1e-6 * peak.max(1.0));
            }
            prop_assert!(p.peak_magnitude() <= 1.0 + 1e-6);
        }
    }
}
