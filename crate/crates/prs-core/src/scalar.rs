//! Floating-point scalar abstraction: every numeric kernel in this crate is
//! generic over [`Real`], instantiated as `f32` or `f64`.

use std::fmt::{Debug, Display};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Scalar type for all core math (f32 or f64).
///
/// The bound set is what the fading synthesizer, the recurrent engine and the
/// predictor jointly need: `Float` for transcendentals, `LinalgScalar` so
/// `ndarray::dot` dispatches to its fast matmul kernels, and primitive
/// conversions so constants and RNG draws can be produced in f64 and cast.
pub trait Real:
    Float
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from f64 (never fails for finite inputs).
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    /// Widening conversion to f64.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// Branch-free tanh used in the network hot loops (see [`fast_tanh64`]).
    fn fast_tanh(self) -> Self {
        Self::from_f64_lossy(fast_tanh64(self.to_f64_lossy()))
    }

    /// Branch-free logistic sigmoid used in the network hot loops.
    fn fast_sigmoid(self) -> Self {
        Self::from_f64_lossy(fast_sigmoid64(self.to_f64_lossy()))
    }
}

impl Real for f32 {}
impl Real for f64 {}

const LOG2_E: f64 = std::f64::consts::LOG2_E;
// ln(2) split for exact argument reduction
const LN2_HI: f64 = 0.693_147_180_369_123_8;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;

/// exp(x) for |x| <= ~700 by range reduction to [-ln2/2, ln2/2] and a
/// degree-13 Taylor polynomial (relative error ~1e-16). Branch-free so the
/// compiler can vectorize callers; inputs must be pre-clamped (no NaN/inf
/// handling).
#[inline(always)]
pub fn fast_exp64(x: f64) -> f64 {
    let n = (x * LOG2_E).round();
    let r = x - n * LN2_HI - n * LN2_LO;
    // Horner over 1/k!
    let mut p = 1.605_904_383_682_161_4e-10; // 1/13!
    p = p * r + 2.087_675_698_786_810_0e-9; // 1/12!
    p = p * r + 2.505_210_838_544_171_9e-8;
    p = p * r + 2.755_731_922_398_589_1e-7;
    p = p * r + 2.755_731_922_398_589_1e-6;
    p = p * r + 2.480_158_730_158_730_1e-5;
    p = p * r + 1.984_126_984_126_984_1e-4;
    p = p * r + 1.388_888_888_888_888_9e-3;
    p = p * r + 8.333_333_333_333_333_3e-3;
    p = p * r + 4.166_666_666_666_666_4e-2;
    p = p * r + 1.666_666_666_666_666_6e-1;
    p = p * r + 5e-1;
    p = p * r + 1.0;
    p = p * r + 1.0;
    // scale by 2^n through the exponent bits
    p * f64::from_bits(((n as i64).wrapping_add(1023) as u64) << 52)
}

/// tanh via `(e^{2x} - 1) / (e^{2x} + 1)`; the backward identities
/// `d tanh = 1 - tanh^2` and `d sigmoid = s (1 - s)` hold for these
/// definitions to within ~1e-15, which keeps finite-difference gradient
/// checks meaningful.
#[inline(always)]
pub fn fast_tanh64(x: f64) -> f64 {
    let t = x.clamp(-20.0, 20.0);
    let e = fast_exp64(2.0 * t);
    (e - 1.0) / (e + 1.0)
}

#[inline(always)]
pub fn fast_sigmoid64(x: f64) -> f64 {
    let t = x.clamp(-40.0, 40.0);
    1.0 / (1.0 + fast_exp64(-t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_exp_matches_libm() {
        let mut x = -40.0;
        while x <= 40.0 {
            let got = fast_exp64(x);
            let expect = x.exp();
            assert!(
                ((got - expect) / expect).abs() < 1e-14,
                "exp({x}): {got} vs {expect}"
            );
            x += 0.0173;
        }
    }

    #[test]
    fn fast_tanh_matches_libm() {
        let mut x = -25.0;
        while x <= 25.0 {
            let got = fast_tanh64(x);
            let expect = x.tanh();
            assert!((got - expect).abs() < 1e-14, "tanh({x}): {got} vs {expect}");
            x += 0.0091;
        }
        assert_eq!(fast_tanh64(0.0), 0.0);
        assert_eq!(fast_tanh64(1e3), 1.0);
        assert_eq!(fast_tanh64(-1e3), -1.0);
    }

    #[test]
    fn fast_sigmoid_matches_libm() {
        let mut x = -45.0;
        while x <= 45.0 {
            let got = fast_sigmoid64(x);
            let expect = 1.0 / (1.0 + (-x).exp());
            assert!((got - expect).abs() < 1e-14, "sigmoid({x}): {got} vs {expect}");
            x += 0.0127;
        }
        assert_eq!(fast_sigmoid64(0.0), 0.5);
    }
}
