//! Modulators: RRC-shaped linear modulations, continuous-phase 2FSK, and
//! cyclic-prefixed OFDM.

use super::constellation::constellation;
use super::ModulationScheme;
use crate::error::{Result, RfError};
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Root-raised-cosine roll-off used for all linear modulations.
pub const RRC_ROLLOFF: f64 = 0.35;
/// RRC filter span in symbols (each side of the peak spans half of this).
pub const RRC_SPAN_SYMBOLS: usize = 8;
pub const OFDM_FFT_LEN: usize = 256;
pub const OFDM_CP_LEN: usize = 64;
/// 2FSK modulation index (MSK-like).
pub const FSK_MOD_INDEX: f64 = 0.5;

/// A modulated baseband signal `u`.
#[derive(Debug, Clone)]
pub struct ComplexSequence {
    pub samples: Vec<Complex64>,
    /// Samples to discard at each end before windowing (filter transients).
    pub transient: usize,
}

impl ComplexSequence {
    /// The portion safe to window datapoints from.
    pub fn valid(&self) -> &[Complex64] {
        &self.samples[self.transient..self.samples.len() - self.transient]
    }
}

/// Unit-energy root-raised-cosine taps; `span * sps + 1` of them.
pub fn rrc_taps(rolloff: f64, sps: usize, span: usize) -> Vec<f64> {
    let n = span * sps + 1;
    let center = (n - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 - center) / sps as f64; // in symbol periods
            let pi = std::f64::consts::PI;
            let four_bt = 4.0 * rolloff * t;
            if t.abs() < 1e-12 {
                1.0 + rolloff * (4.0 / pi - 1.0)
            } else if (four_bt.abs() - 1.0).abs() < 1e-9 {
                (rolloff / 2.0f64.sqrt())
                    * ((1.0 + 2.0 / pi) * (pi / (4.0 * rolloff)).sin()
                        + (1.0 - 2.0 / pi) * (pi / (4.0 * rolloff)).cos())
            } else {
                ((pi * t * (1.0 - rolloff)).sin() + four_bt * (pi * t * (1.0 + rolloff)).cos())
                    / (pi * t * (1.0 - four_bt * four_bt))
            }
        })
        .collect();
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let scale = energy.sqrt().recip();
    for h in &mut taps {
        *h *= scale;
    }
    taps
}

/// Upsample symbols by `sps` and convolve with the RRC taps (full overlap,
/// so the output carries `span * sps` transient samples at each end).
fn pulse_shape(symbols: &[Complex64], sps: usize) -> ComplexSequence {
    let taps = rrc_taps(RRC_ROLLOFF, sps, RRC_SPAN_SYMBOLS);
    let up_len = symbols.len() * sps;
    let out_len = up_len + taps.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    for (si, &sym) in symbols.iter().enumerate() {
        let base = si * sps;
        for (ti, &h) in taps.iter().enumerate() {
            out[base + ti] += sym * h;
        }
    }
    ComplexSequence {
        samples: out,
        transient: RRC_SPAN_SYMBOLS * sps,
    }
}

/// Continuous-phase binary FSK with modulation index 0.5, constant envelope.
fn fsk2(bits: &[u8], sps: usize) -> ComplexSequence {
    let step = std::f64::consts::PI * FSK_MOD_INDEX / sps as f64;
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(bits.len() * sps);
    for &b in bits {
        let inc = if b & 1 == 1 { step } else { -step };
        for _ in 0..sps {
            phase += inc;
            out.push(Complex64::from_polar(1.0, phase));
        }
    }
    ComplexSequence {
        samples: out,
        transient: 0,
    }
}

/// OFDM: per 2048-bit block, 256 subcarriers of 256-QAM, 256-point inverse
/// DFT, 64-sample cyclic prefix.
fn ofdm256(bits: &[u8]) -> Result<ComplexSequence> {
    let qam = constellation(ModulationScheme::Ofdm256)?;
    let bits_per_block = 8 * OFDM_FFT_LEN;
    if bits.is_empty() || bits.len() % bits_per_block != 0 {
        return Err(RfError::InvalidArg(format!(
            "ofdm256 needs a positive multiple of {bits_per_block} bits, got {}",
            bits.len()
        )));
    }
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(OFDM_FFT_LEN);
    let scale = 1.0 / (OFDM_FFT_LEN as f64).sqrt();
    let mut out = Vec::with_capacity(bits.len() / bits_per_block * (OFDM_FFT_LEN + OFDM_CP_LEN));
    for block in bits.chunks(bits_per_block) {
        let mut freq = qam.map_bits(block)?;
        ifft.process(&mut freq);
        for v in &mut freq {
            *v *= scale;
        }
        out.extend_from_slice(&freq[OFDM_FFT_LEN - OFDM_CP_LEN..]);
        out.extend_from_slice(&freq);
    }
    Ok(ComplexSequence {
        samples: out,
        transient: 0,
    })
}

/// Modulates a bit sequence. `sps` must be 2 for every scheme except 2FSK,
/// which uses 8; OFDM's time axis runs at the inverse-DFT rate.
pub fn modulate(scheme: ModulationScheme, bits: &[u8], sps: usize) -> Result<ComplexSequence> {
    let expected_sps = scheme.samples_per_symbol();
    if sps != expected_sps {
        return Err(RfError::InvalidArg(format!(
            "{scheme} requires {expected_sps} samples per symbol, got {sps}"
        )));
    }
    match scheme {
        ModulationScheme::Fsk2 => {
            if bits.is_empty() {
                return Err(RfError::InvalidArg("2fsk needs at least one bit".into()));
            }
            Ok(fsk2(bits, sps))
        }
        ModulationScheme::Ofdm256 => ofdm256(bits),
        _ => {
            let c = constellation(scheme)?;
            let symbols = c.map_bits(bits)?;
            if symbols.is_empty() {
                return Err(RfError::InvalidArg(format!("{scheme} got an empty bit sequence")));
            }
            Ok(pulse_shape(&symbols, sps))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rrc_taps_are_symmetric_unit_energy() {
        let taps = rrc_taps(RRC_ROLLOFF, 2, RRC_SPAN_SYMBOLS);
        assert_eq!(taps.len(), 17);
        let energy: f64 = taps.iter().map(|h| h * h).sum();
        assert!((energy - 1.0).abs() < 1e-12);
        for i in 0..taps.len() / 2 {
            assert!((taps[i] - taps[taps.len() - 1 - i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fsk_envelope_is_constant() {
        let bits: Vec<u8> = (0..64).map(|i| (i * 7 % 3 == 0) as u8).collect();
        let seq = modulate(ModulationScheme::Fsk2, &bits, 8).unwrap();
        assert_eq!(seq.samples.len(), 512);
        for s in &seq.samples {
            assert!((s.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn psk16_all_zero_bits_is_periodic_after_transient() {
        // all-zero bits pick a single constellation point; the shaped output
        // must repeat with period sps once filter edges are excluded
        let bits = vec![0u8; 4 * 64];
        let seq = modulate(ModulationScheme::Psk16, &bits, 2).unwrap();
        let v = seq.valid();
        for i in 0..v.len() - 2 {
            assert!((v[i] - v[i + 2]).norm() < 1e-9, "index {i}");
        }
    }

    #[test]
    fn ofdm_symbol_length_is_fft_plus_cp() {
        let bits = vec![0u8; 8 * OFDM_FFT_LEN];
        let seq = modulate(ModulationScheme::Ofdm256, &bits, 2).unwrap();
        assert_eq!(seq.samples.len(), OFDM_FFT_LEN + OFDM_CP_LEN);
        let two = modulate(ModulationScheme::Ofdm256, &vec![1u8; 2 * 8 * OFDM_FFT_LEN], 2).unwrap();
        assert_eq!(two.samples.len(), 2 * (OFDM_FFT_LEN + OFDM_CP_LEN));
    }

    #[test]
    fn ragged_bit_counts_are_rejected() {
        assert!(modulate(ModulationScheme::Psk16, &[0, 1, 1], 2).is_err());
        assert!(modulate(ModulationScheme::Qam32X, &[0, 1, 1, 0], 2).is_err());
        assert!(modulate(ModulationScheme::Ofdm256, &[0; 100], 2).is_err());
    }

    #[test]
    fn wrong_sps_is_rejected() {
        assert!(modulate(ModulationScheme::Psk16, &[0; 8], 8).is_err());
        assert!(modulate(ModulationScheme::Fsk2, &[0; 8], 2).is_err());
    }

    #[test]
    fn cyclic_prefix_matches_symbol_tail() {
        let bits: Vec<u8> = (0..8 * OFDM_FFT_LEN).map(|i| (i % 5 == 0) as u8).collect();
        let seq = modulate(ModulationScheme::Ofdm256, &bits, 2).unwrap();
        let cp = &seq.samples[..OFDM_CP_LEN];
        let tail = &seq.samples[OFDM_FFT_LEN..];
        assert_eq!(cp.len(), tail.len());
        for (a, b) in cp.iter().zip(tail) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
