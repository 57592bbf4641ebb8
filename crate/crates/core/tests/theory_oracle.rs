//! Closed-form error rates against two independent references: the same
//! alternating sum in exact big-integer fixed point, and direct numerical
//! integration of the non-coherent decision statistic.

use mfsk_core::theory::{
    ber_noncoherent_mfsk, ser_from_linear, ser_noncoherent_mfsk, ser_noncoherent_mfsk_db, ser_to_ber,
    ErrorProbability, SymbolSnr,
};
use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

/// Fractional bits of the fixed-point reference.
const FRAC: u64 = 640;

fn one() -> BigInt {
    BigInt::one() << FRAC
}

fn from_f64(x: f64) -> BigInt {
    // Every finite double is m * 2^e exactly.
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = if exp == 0 { (bits & ((1 << 52) - 1)) << 1 } else { (bits & ((1 << 52) - 1)) | (1 << 52) };
    let e = exp - 1075;
    let mut v = BigInt::from(mant);
    let shift = e + FRAC as i64;
    v = if shift >= 0 { v << shift as u64 } else { v >> (-shift) as u64 };
    if x.is_sign_negative() {
        -v
    } else {
        v
    }
}

fn to_f64(v: &BigInt) -> f64 {
    let neg = v.is_negative();
    let mag = v.abs();
    let bits = mag.bits();
    let out = if bits <= 64 {
        mag.to_u64().unwrap() as f64 * 2f64.powi(-(FRAC as i32))
    } else {
        let drop = bits - 64;
        (&mag >> drop).to_u64().unwrap() as f64 * 2f64.powi(drop as i32 - FRAC as i32)
    };
    if neg {
        -out
    } else {
        out
    }
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> FRAC
}

/// exp(-a) for a >= 0 in fixed point: Taylor series of exp(a / 2^s), squared
/// s times, then inverted.
fn exp_neg(a: &BigInt) -> BigInt {
    let s = 8u64;
    let r = a >> s;
    let mut term = one();
    let mut sum = one();
    let mut n = 1u64;
    while !term.is_zero() {
        term = mul(&term, &r) / BigInt::from(n);
        sum += &term;
        n += 1;
    }
    for _ in 0..s {
        sum = mul(&sum, &sum);
    }
    (one() << FRAC) / sum
}

fn binomial(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// Reference SER: sum_{k=1}^{M-1} (-1)^{k+1} C(M-1,k)/(k+1) exp(-k g/(k+1)).
fn ser_reference(order: u64, gamma: f64) -> f64 {
    let g = from_f64(gamma);
    let mut total = BigInt::zero();
    for k in 1..order {
        let arg = (&g * BigInt::from(k)).div_floor(&BigInt::from(k + 1));
        let term = binomial(order - 1, k) * exp_neg(&arg) / BigInt::from(k + 1);
        if k % 2 == 1 {
            total += term;
        } else {
            total -= term;
        }
    }
    assert_ne!(total.sign(), Sign::Minus);
    to_f64(&total)
}

/// exp(-z) I0(z) by the trapezoid rule on (1/pi) int_0^pi e^{z(cos t - 1)} dt,
/// which converges geometrically for this smooth periodic integrand.
fn i0e(z: f64) -> f64 {
    let n = 400;
    let h = std::f64::consts::PI / n as f64;
    let mut s = 0.5 * (1.0 + (-2.0 * z).exp());
    for j in 1..n {
        s += (z * ((j as f64 * h).cos() - 1.0)).exp();
    }
    s / n as f64
}

/// SER as P(some wrong bin beats the signal bin), integrating over the
/// signal-bin energy x (in units of N0). With x = u^2 the Rice density is
/// 2u exp(-(u - sqrt g)^2) I0e(2 u sqrt g).
fn ser_quadrature(order: u32, gamma: f64) -> f64 {
    let sg = gamma.sqrt();
    let hi = sg + 12.0;
    let n = 40_000;
    let h = hi / n as f64;
    let f = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        let x = u * u;
        let density = 2.0 * u * (-(u - sg).powi(2)).exp() * i0e(2.0 * u * sg);
        let miss = -((order - 1) as f64 * (-(-x).exp()).ln_1p()).exp_m1();
        density * miss
    };
    let mut s = f(0.0) + f(hi);
    for j in 1..n {
        s += f(j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

#[test]
fn matches_exact_sum_on_grid() {
    for order in [2u64, 4, 8, 16, 32, 64] {
        for tenth_db in (-100..=160).step_by(5) {
            let gamma = db(tenth_db as f64 / 10.0);
            let got = ser_from_linear(order as usize, gamma).unwrap().value();
            let want = ser_reference(order, gamma);
            let rel = (got - want).abs() / want;
            assert!(rel < 1e-12, "M={order} gamma={gamma}: {got} vs {want} ({rel:e})");
        }
    }
}

#[test]
fn matches_numerical_integration() {
    for order in [2u32, 8, 64] {
        for es_n0_db in [-3.0, 0.0, 4.0, 8.0, 10.0, 12.0] {
            let gamma = db(es_n0_db);
            let got = ser_from_linear(order as usize, gamma).unwrap().value();
            let want = ser_quadrature(order, gamma);
            let rel = (got - want).abs() / want;
            assert!(rel < 1e-7, "M={order} {es_n0_db} dB: {got} vs {want} ({rel:e})");
        }
    }
}

// 60-digit evaluations of the same sum, frozen.
const FROZEN: [(usize, f64, f64); 7] = [
    (64, 8.0, 0.269_569_561_499_704_85),
    (64, 10.0, 0.074_991_282_225_687_72),
    (64, 12.0, 0.006_788_767_374_853_813),
    (8, 10.0, 0.017_837_286_738_771_312),
    (2, 10.0, 0.003_368_973_499_542_733_5),
    (64, 15.0, 4.006_054_766_003_464_5e-6),
    (32, -3.0, 0.914_035_168_625_536_5),
];

#[test]
fn frozen_values() {
    for (order, es_n0_db, want) in FROZEN {
        let got = ser_noncoherent_mfsk_db(order, es_n0_db).unwrap().value();
        assert!(((got - want) / want).abs() < 1e-12, "M={order} {es_n0_db} dB: {got} vs {want}");
    }
}

#[test]
fn binary_closed_form() {
    for i in 0..50 {
        let gamma = 0.05 + i as f64 * 0.6;
        let got = ser_from_linear(2, gamma).unwrap().value();
        let want = 0.5 * (-gamma / 2.0).exp();
        assert!(((got - want) / want).abs() < 1e-12);
    }
}

#[test]
fn chance_level() {
    let p = ser_noncoherent_mfsk(64, SymbolSnr::Chance).unwrap().value();
    assert!((p - 63.0 / 64.0).abs() < 1e-12);
    let b = ser_to_ber(64, ErrorProbability::new(63.0 / 64.0).unwrap()).unwrap().value();
    assert_eq!(b, 0.5);
    assert_eq!(ber_noncoherent_mfsk(64, SymbolSnr::Chance).unwrap().value(), 0.5);
}

proptest! {
    #[test]
    fn ser_is_bounded_and_decreasing(order_log in 1u32..=6, a in -10.0f64..20.0, step in 0.01f64..3.0) {
        let order = 1usize << order_log;
        let lo = ser_noncoherent_mfsk_db(order, a).unwrap().value();
        let hi = ser_noncoherent_mfsk_db(order, a + step).unwrap().value();
        let ceiling = (order - 1) as f64 / order as f64;
        prop_assert!(lo >= 0.0 && lo <= ceiling + 1e-15);
        prop_assert!(hi <= lo);
    }

    #[test]
    fn ber_never_exceeds_ser(order_log in 1u32..=6, snr in -10.0f64..20.0) {
        let order = 1usize << order_log;
        let ser = ser_noncoherent_mfsk_db(order, snr).unwrap();
        let ber = ser_to_ber(order, ser).unwrap();
        prop_assert!(ber.value() <= ser.value());
        prop_assert!(ser.value() <= order_log as f64 * ber.value() + 1e-15);
    }
}
