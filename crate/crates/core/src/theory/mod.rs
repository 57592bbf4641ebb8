//! Closed-form error probabilities of non-coherent orthogonal MFSK and the
//! SNR-domain conversions used to compare simulated curves against them.

mod dd;

use thiserror::Error;

use crate::signal::ModemProfile;
use dd::DoubleDouble;

/// Largest alphabet for which the alternating binomial sum is evaluated.
///
/// Binomial coefficients for M = 64 reach 9.2e17 and fit the double-double
/// accumulator with room to spare; beyond that the cancellation outgrows it.
pub const MAX_ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("alphabet size {0} must be a power of two >= 2")]
    InvalidOrder(usize),
    #[error("alphabet size {0} exceeds the supported maximum of {MAX_ORDER}")]
    UnsupportedOrder(usize),
    #[error("SNR must be finite (got {0})")]
    NonFinite(f64),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
}

/// A probability in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ErrorProbability(f64);

impl ErrorProbability {
    pub fn new(value: f64) -> Result<Self, TheoryError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(TheoryError::InvalidProbability(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Symbol energy to noise density, either in dB or the `gamma = 0` limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SymbolSnr {
    Db(f64),
    /// No signal energy: every decision is a uniform guess.
    Chance,
}

impl SymbolSnr {
    fn linear(self) -> Result<f64, TheoryError> {
        match self {
            SymbolSnr::Db(db) if db.is_finite() => Ok(10f64.powf(db / 10.0)),
            SymbolSnr::Db(db) => Err(TheoryError::NonFinite(db)),
            SymbolSnr::Chance => Ok(0.0),
        }
    }
}

fn bits_for(order: usize) -> Result<u32, TheoryError> {
    if order < 2 || !order.is_power_of_two() {
        return Err(TheoryError::InvalidOrder(order));
    }
    Ok(order.trailing_zeros())
}

fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Symbol error probability of non-coherent detection of M orthogonal tones:
///
/// `P_s = sum_{j=1}^{M-1} (-1)^{j+1} C(M-1, j) / (j+1) exp(-j gamma / (j+1))`
///
/// with `gamma = Es/N0`. Terms and exponentials are carried in double-double
/// precision so the alternating sum survives its cancellation.
pub fn ser_noncoherent_mfsk(order: usize, es_n0: SymbolSnr) -> Result<ErrorProbability, TheoryError> {
    bits_for(order)?;
    if order > MAX_ORDER {
        return Err(TheoryError::UnsupportedOrder(order));
    }
    let gamma = es_n0.linear()?;
    ser_from_linear(order, gamma)
}

/// [`ser_noncoherent_mfsk`] with Es/N0 given in dB.
pub fn ser_noncoherent_mfsk_db(order: usize, es_n0_db: f64) -> Result<ErrorProbability, TheoryError> {
    ser_noncoherent_mfsk(order, SymbolSnr::Db(es_n0_db))
}

/// [`ser_noncoherent_mfsk`] at a linear Es/N0.
pub fn ser_from_linear(order: usize, gamma: f64) -> Result<ErrorProbability, TheoryError> {
    bits_for(order)?;
    if order > MAX_ORDER {
        return Err(TheoryError::UnsupportedOrder(order));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(TheoryError::NonFinite(gamma));
    }
    let n = (order - 1) as u32;
    let mut sum = DoubleDouble::ZERO;
    for j in 1..=n {
        let jf = j as f64;
        let arg = DoubleDouble::from_f64(gamma).mul_f64(-jf).div_f64(jf + 1.0);
        let term = DoubleDouble::from_u128(binomial(n, j)).div_f64(jf + 1.0) * arg.exp();
        sum = if j % 2 == 1 { sum + term } else { sum - term };
    }
    ErrorProbability::new(sum.to_f64().clamp(0.0, 1.0))
}

/// Bit error probability of orthogonal signaling under natural binary
/// labels: `P_b = P_s 2^(k-1) / (2^k - 1)`.
pub fn ser_to_ber(order: usize, p_s: ErrorProbability) -> Result<ErrorProbability, TheoryError> {
    let k = bits_for(order)?;
    let half = (1u64 << (k - 1)) as f64;
    let full = ((1u64 << k) - 1) as f64;
    ErrorProbability::new(p_s.value() * half / full)
}

/// Theoretical non-coherent BER at a given Eb/N0.
pub fn ber_noncoherent_mfsk(order: usize, eb_n0: SymbolSnr) -> Result<ErrorProbability, TheoryError> {
    let es = match eb_n0 {
        SymbolSnr::Db(db) => SymbolSnr::Db(ebn0_to_esn0(order, db)?),
        SymbolSnr::Chance => SymbolSnr::Chance,
    };
    ser_to_ber(order, ser_noncoherent_mfsk(order, es)?)
}

/// `10 log10(B T / k)`: the dB offset from reference-bandwidth SNR to Eb/N0.
pub fn ebn0_offset_db(profile: &ModemProfile) -> f64 {
    10.0 * (profile.ref_bandwidth_hz * profile.symbol_duration_s() / profile.bits_per_symbol() as f64).log10()
}

pub fn snr_to_ebn0(profile: &ModemProfile, snr_db: f64) -> f64 {
    snr_db + ebn0_offset_db(profile)
}

pub fn ebn0_to_snr(profile: &ModemProfile, ebn0_db: f64) -> f64 {
    ebn0_db - ebn0_offset_db(profile)
}

/// Es/N0 = Eb/N0 + 10 log10 k.
pub fn ebn0_to_esn0(order: usize, ebn0_db: f64) -> Result<f64, TheoryError> {
    let k = bits_for(order)?;
    Ok(ebn0_db + 10.0 * (k as f64).log10())
}

pub fn esn0_to_ebn0(order: usize, esn0_db: f64) -> Result<f64, TheoryError> {
    let k = bits_for(order)?;
    Ok(esn0_db - 10.0 * (k as f64).log10())
}

/// Es/N0 in dB seen by a detector at the given reference-bandwidth SNR.
pub fn snr_to_esn0(profile: &ModemProfile, snr_db: f64) -> f64 {
    snr_db + 10.0 * (profile.ref_bandwidth_hz * profile.symbol_duration_s()).log10()
}

pub fn esn0_to_snr(profile: &ModemProfile, esn0_db: f64) -> f64 {
    esn0_db - 10.0 * (profile.ref_bandwidth_hz * profile.symbol_duration_s()).log10()
}

/// Es/N0 in dB at which the theoretical SER equals `target`, by bisection.
pub fn esn0_for_ser(order: usize, target: f64) -> Result<f64, TheoryError> {
    let chance = (order - 1) as f64 / order as f64;
    if !(target > 0.0 && target < chance) {
        return Err(TheoryError::InvalidProbability(target));
    }
    let (mut lo, mut hi) = (-20.0, 30.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ser_noncoherent_mfsk_db(order, mid)?.value() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn chance_level() {
        let p = ser_noncoherent_mfsk(64, SymbolSnr::Chance).unwrap().value();
        assert!((p - 63.0 / 64.0).abs() < 1e-12);
        for m in [2usize, 4, 8, 16, 32] {
            let p = ser_noncoherent_mfsk(m, SymbolSnr::Chance).unwrap().value();
            assert!((p - (m - 1) as f64 / m as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn binary_closed_form() {
        let p = ser_from_linear(2, 2.0 * 2f64.ln()).unwrap().value();
        assert_relative_eq!(p, 0.25, max_relative = 1e-14);
        for i in 0..50 {
            let gamma = i as f64 * 0.8;
            let p = ser_from_linear(2, gamma).unwrap().value();
            assert_relative_eq!(p, 0.5 * (-gamma / 2.0).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn ber_conversion() {
        let half = ser_to_ber(64, ErrorProbability::new(63.0 / 64.0).unwrap()).unwrap();
        assert_eq!(half.value(), 0.5);
        assert_eq!(ser_to_ber(64, ErrorProbability::new(0.0).unwrap()).unwrap().value(), 0.0);
        assert_eq!(ser_to_ber(2, ErrorProbability::new(0.37).unwrap()).unwrap().value(), 0.37);
        assert_eq!(
            ber_noncoherent_mfsk(64, SymbolSnr::Chance).unwrap().value(),
            0.5
        );
    }

    #[test]
    fn order_validation() {
        assert_eq!(ser_noncoherent_mfsk_db(1, 0.0), Err(TheoryError::InvalidOrder(1)));
        assert_eq!(ser_noncoherent_mfsk_db(12, 0.0), Err(TheoryError::InvalidOrder(12)));
        assert_eq!(ser_noncoherent_mfsk_db(128, 0.0), Err(TheoryError::UnsupportedOrder(128)));
        assert!(ser_noncoherent_mfsk_db(64, f64::NAN).is_err());
        assert!(ErrorProbability::new(1.5).is_err());
    }

    #[test]
    fn monotone_on_dense_grid() {
        for m in [2usize, 8, 64] {
            let mut prev = 1.0;
            for i in 0..=800 {
                let db = -20.0 + i as f64 * 0.05;
                let p = ser_noncoherent_mfsk_db(m, db).unwrap().value();
                assert!(p <= prev, "M={m} at {db} dB");
                prev = p;
            }
        }
    }

    #[test]
    fn ebn0_offsets() {
        let p = ModemProfile::jt65a_full();
        assert!((ebn0_offset_db(&p) - 21.898).abs() < 5e-4);
        assert!((snr_to_ebn0(&p, -25.0) - (-3.10)).abs() < 0.01);
        assert!(snr_to_ebn0(&p, -ebn0_offset_db(&p)).abs() < 1e-12);
        assert!((snr_to_ebn0(&p, -21.898)).abs() < 1e-3);
        assert!((ebn0_to_esn0(64, 0.0).unwrap() - 7.7815).abs() < 1e-4);
        assert!(ebn0_to_esn0(64, -10.0 * 6f64.log10()).unwrap().abs() < 1e-12);
        assert_eq!(ebn0_to_esn0(2, 3.3).unwrap(), 3.3);
    }

    #[test]
    fn unit_offset_profile_is_identity() {
        // B T = k: 4 tones (k = 2), N = 16 at 8 Hz gives T = 2 s, B = 1 Hz.
        let p = ModemProfile::new(8.0, 16, 4, 1, 1, 1.0).unwrap();
        assert!(ebn0_offset_db(&p).abs() < 1e-15);
        assert_eq!(snr_to_ebn0(&p, -7.0), -7.0);
    }

    #[test]
    fn conversions_compose_and_invert() {
        let p = ModemProfile::jt65a_full();
        for i in 0..40 {
            let snr = -30.0 + i as f64;
            let eb = snr_to_ebn0(&p, snr);
            let es = ebn0_to_esn0(64, eb).unwrap();
            assert!((es - snr_to_esn0(&p, snr)).abs() < 1e-12);
            assert!((ebn0_to_snr(&p, esn0_to_ebn0(64, es).unwrap()) - snr).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_ser_lookup() {
        let es = esn0_for_ser(8, 0.01).unwrap();
        let p = ser_noncoherent_mfsk_db(8, es).unwrap().value();
        assert_relative_eq!(p, 0.01, max_relative = 1e-9);
    }
}
