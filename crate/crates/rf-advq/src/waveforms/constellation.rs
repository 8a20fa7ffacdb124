//! Static constellations, all scaled to unit mean power.

use super::ModulationScheme;
use crate::error::{Result, RfError};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

impl Constellation {
    fn new(raw: Vec<Complex64>) -> Self {
        let bits = raw.len().trailing_zeros() as usize;
        assert_eq!(1 << bits, raw.len(), "constellation size must be a power of two");
        let power: f64 = raw.iter().map(|c| c.norm_sqr()).sum::<f64>() / raw.len() as f64;
        let scale = power.sqrt().recip();
        Constellation {
            points: raw.into_iter().map(|c| c * scale).collect(),
            bits_per_symbol: bits,
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn mean(&self) -> Complex64 {
        self.points.iter().sum::<Complex64>() / self.points.len() as f64
    }

    /// Maps a bit sequence (MSB-first groups of `bits_per_symbol`) to points.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(RfError::InvalidArg(format!(
                "{} bits is not a multiple of {} bits per symbol",
                bits.len(),
                self.bits_per_symbol
            )));
        }
        Ok(bits
            .chunks(self.bits_per_symbol)
            .map(|group| {
                let idx = group.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1));
                self.points[idx]
            })
            .collect())
    }
}

/// Bipolar 4-level ASK: {-3,-1,+1,+3} scaled to unit power.
fn ask4() -> Constellation {
    Constellation::new(
        [-3.0, -1.0, 1.0, 3.0]
            .iter()
            .map(|&l| Complex64::new(l, 0.0))
            .collect(),
    )
}

/// 8-PAM: levels 0..7 shifted to zero mean, then power-normalized.
fn pam8() -> Constellation {
    Constellation::new(
        (0..8)
            .map(|l| Complex64::new(l as f64 - 3.5, 0.0))
            .collect(),
    )
}

fn psk16() -> Constellation {
    Constellation::new(
        (0..16)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 16.0))
            .collect(),
    )
}

/// Cross 32-QAM: the 6x6 odd-integer grid with the four corners removed.
fn qam32_cross() -> Constellation {
    let levels = [-5.0, -3.0, -1.0, 1.0, 3.0, 5.0];
    let mut pts = Vec::with_capacity(32);
    for &re in &levels {
        for &im in &levels {
            if re.abs() == 5.0 && im.abs() == 5.0 {
                continue;
            }
            pts.push(Complex64::new(re, im));
        }
    }
    Constellation::new(pts)
}

/// Square 256-QAM on the 16x16 odd-integer grid; carried by OFDM subcarriers.
fn qam256() -> Constellation {
    let levels: Vec<f64> = (0..16).map(|l| 2.0 * l as f64 - 15.0).collect();
    let mut pts = Vec::with_capacity(256);
    for &re in &levels {
        for &im in &levels {
            pts.push(Complex64::new(re, im));
        }
    }
    Constellation::new(pts)
}

/// Static constellation for a scheme. 2FSK has no static constellation and
/// is reported as unsupported; OFDM256 returns the per-subcarrier 256-QAM.
pub fn constellation(scheme: ModulationScheme) -> Result<Constellation> {
    match scheme {
        ModulationScheme::Ask4 => Ok(ask4()),
        ModulationScheme::Pam8 => Ok(pam8()),
        ModulationScheme::Psk16 => Ok(psk16()),
        ModulationScheme::Qam32X => Ok(qam32_cross()),
        ModulationScheme::Ofdm256 => Ok(qam256()),
        ModulationScheme::Fsk2 => Err(RfError::UnsupportedScheme(
            "2fsk is a continuous-phase modulation with no static constellation".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POWER_TOL: f64 = 1e-9;

    #[test]
    fn every_constellation_has_unit_power_and_documented_size() {
        for (scheme, size) in [
            (ModulationScheme::Ask4, 4),
            (ModulationScheme::Pam8, 8),
            (ModulationScheme::Psk16, 16),
            (ModulationScheme::Qam32X, 32),
            (ModulationScheme::Ofdm256, 256),
        ] {
            let c = constellation(scheme).unwrap();
            assert_eq!(c.points().len(), size, "{scheme}");
            assert!((c.mean_power() - 1.0).abs() < POWER_TOL, "{scheme}");
            assert!(c.mean().norm() < POWER_TOL, "{scheme} mean");
        }
    }

    #[test]
    fn fsk_has_no_constellation() {
        match constellation(ModulationScheme::Fsk2) {
            Err(RfError::UnsupportedScheme(_)) => {}
            other => panic!("expected unsupported-scheme, got {other:?}"),
        }
    }

    #[test]
    fn ask4_levels_scaled_by_sqrt5() {
        // mean power of {-3,-1,1,3} is 5, so levels become {-3,-1,1,3}/sqrt(5)
        let c = constellation(ModulationScheme::Ask4).unwrap();
        let mut res: Vec<f64> = c.points().iter().map(|p| p.re).collect();
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let s = 5.0f64.sqrt();
        let want = [-3.0 / s, -1.0 / s, 1.0 / s, 3.0 / s];
        for (got, want) in res.iter().zip(want) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(c.points().iter().all(|p| p.im == 0.0));
    }

    #[test]
    fn psk16_points_are_unit_roots() {
        let c = constellation(ModulationScheme::Psk16).unwrap();
        for (k, p) in c.points().iter().enumerate() {
            assert!((p.norm() - 1.0).abs() < 1e-12);
            let want = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
            let got = p.arg().rem_euclid(2.0 * std::f64::consts::PI);
            assert!((got - want).abs() < 1e-12, "point {k}");
        }
    }

    #[test]
    fn qam32_cross_has_no_corners() {
        let c = constellation(ModulationScheme::Qam32X).unwrap();
        assert_eq!(c.points().len(), 32);
        let max_re = c.points().iter().map(|p| p.re.abs()).fold(0.0, f64::max);
        for p in c.points() {
            // corners of the 6x6 grid were removed before scaling
            assert!(!(((p.re.abs() - max_re).abs() < 1e-12) && ((p.im.abs() - max_re).abs() < 1e-12)));
        }
    }

    #[test]
    fn bit_mapping_rejects_ragged_input() {
        let c = constellation(ModulationScheme::Psk16).unwrap();
        assert!(c.map_bits(&[0, 1, 0]).is_err());
        let pts = c.map_bits(&[0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0], c.points()[0]);
        assert_eq!(pts[1], c.points()[15]);
    }
}
