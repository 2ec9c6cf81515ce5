//! Exact scalar arithmetic: conversions between `f64` and arbitrary-precision
//! rationals, dyadic helpers, and the evaluation-mode switch.
//!
//! Every finite `f64` is a dyadic rational, so the conversion into [`Rat`] is
//! exact. Rational evaluation therefore treats the stored weights as ground
//! truth and introduces no rounding of its own.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar used by the equality-grade evaluator.
pub type Rat = BigRational;

/// Arithmetic mode selected by the harness (`SINET_MODE` env var in the CLI).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Float,
    Rational,
}

impl Mode {
    /// Reads `SINET_MODE` ({float|rational}); unknown values fall back to float.
    pub fn from_env() -> Mode {
        match std::env::var("SINET_MODE").as_deref() {
            Ok("rational") | Ok("RATIONAL") => Mode::Rational,
            _ => Mode::Float,
        }
    }
}

/// Exact conversion; panics on NaN/inf, which never enter a valid network.
pub fn rat_from_f64(x: f64) -> Rat {
    BigRational::from_float(x).unwrap_or_else(|| panic!("non-finite scalar {x} has no rational value"))
}

/// Nearest-f64 view of an exact rational (rounds once).
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational out of f64 range")
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// 2^e as an exact rational, e may be negative.
pub fn pow2(e: i32) -> Rat {
    let two = BigInt::from(2);
    if e >= 0 {
        Rat::from_integer(two.pow(e as u32))
    } else {
        Rat::new(BigInt::one(), two.pow((-e) as u32))
    }
}

/// ReLU on exact rationals.
pub fn relu(r: &Rat) -> Rat {
    if r.is_negative() {
        Rat::zero()
    } else {
        r.clone()
    }
}

/// Floor of an exact rational as i64.
pub fn rat_floor(r: &Rat) -> i64 {
    r.floor().to_integer().to_i64().expect("floor out of i64 range")
}

/// First `depth` binary digits of a rational in [0,1): q = Bin 0.b_1 b_2 ...
pub fn binary_digits(q: &Rat, depth: usize) -> Vec<u8> {
    assert!(!q.is_negative() && *q < Rat::one(), "binary_digits needs q in [0,1)");
    let mut rem = q.clone();
    let mut bits = Vec::with_capacity(depth);
    let half = ratio(1, 2);
    for _ in 0..depth {
        if rem >= half {
            bits.push(1);
            rem -= &half;
        } else {
            bits.push(0);
        }
        rem *= rat_int(2);
    }
    bits
}

/// Value of a finite bit string under Bin 0.b_1 b_2 ... as an exact rational.
pub fn bits_value(bits: &[u8]) -> Rat {
    let mut v = Rat::zero();
    for (i, &b) in bits.iter().enumerate() {
        if b != 0 {
            v += pow2(-((i + 1) as i32));
        }
    }
    v
}
