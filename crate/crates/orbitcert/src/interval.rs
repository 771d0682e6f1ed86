//! Directed-rounding interval arithmetic over binary64.
//!
//! Every operation returns an interval that encloses the exact real result.
//! Outward rounding is done in software: each native float operation is
//! followed by an error-free residual test (two-sum / fused multiply-add)
//! and the affected endpoint is moved one ulp outward only when the native
//! result actually rounded in the wrong direction. Operations are pure and
//! never touch the FPU rounding mode, so they are safe to call from any
//! thread.
//!
//! Infinite endpoints are allowed as overflow sentinels; they propagate and
//! make strict-inclusion tests fail, so an overflowed computation can never
//! certify anything.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntervalError {
    #[error("division by an interval containing zero")]
    DivisionByZero,
    #[error("malformed decimal literal: {0}")]
    BadDecimal(String),
    #[error("empty interval constructed: lo > hi")]
    Empty,
}

/// A closed interval `[lo, hi]` of binary64 numbers, `lo <= hi`.
#[derive(Copy, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Sum and exact residual of `a + b` (two-sum).
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Product and exact residual of `a * b` (via fused multiply-add).
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

/// Round `v` down iff the residual says the exact result is below `v`.
#[inline]
fn round_down(v: f64, err: f64) -> f64 {
    if err < 0.0 || v.is_nan() {
        v.next_down()
    } else {
        v
    }
}

/// Round `v` up iff the residual says the exact result is above `v`.
#[inline]
fn round_up(v: f64, err: f64) -> f64 {
    if err > 0.0 || v.is_nan() {
        v.next_up()
    } else {
        v
    }
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    /// The whole real line; also the poisoned result of an overflow.
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// Interval from endpoints. NaN endpoints poison to [-inf, inf].
    #[inline]
    pub fn new(lo: f64, hi: f64) -> Interval {
        if lo.is_nan() || hi.is_nan() {
            return Interval::ENTIRE;
        }
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// Degenerate point interval.
    #[inline]
    pub fn point(x: f64) -> Interval {
        Interval::new(x, x)
    }

    /// Interval spanning two values in either order.
    #[inline]
    pub fn from_pair(a: f64, b: f64) -> Interval {
        Interval::new(a.min(b), a.max(b))
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn width(&self) -> f64 {
        // upper bound of the true width
        round_up_sub(self.hi, self.lo)
    }

    /// Midpoint, clamped to a finite value inside the interval.
    pub fn mid(&self) -> f64 {
        if self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY {
            return 0.0;
        }
        let m = 0.5 * (self.lo + self.hi);
        if m.is_finite() {
            m.clamp(self.lo, self.hi)
        } else {
            // endpoints to big to average; fall back to one of them
            let m = self.lo * 0.5 + self.hi * 0.5;
            if m.is_finite() {
                m.clamp(self.lo, self.hi)
            } else if self.lo.is_finite() {
                self.lo
            } else {
                self.hi
            }
        }
    }

    /// Magnitude: max |x| over the interval.
    #[inline]
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Mignitude: min |x| over the interval (0 if it contains 0).
    #[inline]
    pub fn mig(&self) -> f64 {
        if self.contains(0.0) {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `self` lies strictly inside `other`: `other.lo < self.lo && self.hi < other.hi`.
    #[inline]
    pub fn subset_interior(&self, other: &Interval) -> bool {
        other.lo < self.lo && self.hi < other.hi
    }

    /// Smallest distance from `self`'s endpoints to `other`'s, when
    /// `self` is strictly inside `other`; negative if it is not.
    pub fn interior_margin(&self, other: &Interval) -> f64 {
        let a = round_down_sub(self.lo, other.lo);
        let b = round_down_sub(other.hi, self.hi);
        a.min(b)
    }

    /// Convex hull.
    #[inline]
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    /// Intersection; `None` is the explicit empty marker.
    #[inline]
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(Interval::new(lo, hi))
        } else {
            None
        }
    }

    /// Midpoint bisection: two halves whose hull is exactly `self`.
    pub fn split(&self) -> (Interval, Interval) {
        let m = self.mid();
        (Interval::new(self.lo, m), Interval::new(m, self.hi))
    }

    /// Widen both endpoints by `delta >= 0`.
    pub fn inflate(&self, delta: f64) -> Interval {
        debug_assert!(delta >= 0.0);
        Interval::new(
            round_down_sub(self.lo, delta).min(self.lo),
            round_up_add(self.hi, delta).max(self.hi),
        )
    }

    /// Widen relatively: endpoints move away from the midpoint by `factor`
    /// times the half-width, plus `abs` in absolute terms.
    pub fn inflate_rel(&self, factor: f64, abs: f64) -> Interval {
        let m = self.mid();
        let half = (self.hi - m).max(m - self.lo);
        let d = half * factor + abs;
        Interval::new((m - d).min(self.lo), (m + d).max(self.hi))
    }

    #[inline]
    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    #[inline]
    pub fn add(&self, other: &Interval) -> Interval {
        let (lo, elo) = two_sum(self.lo, other.lo);
        let (hi, ehi) = two_sum(self.hi, other.hi);
        Interval::new(round_down(lo, elo), round_up(hi, ehi))
    }

    #[inline]
    pub fn sub(&self, other: &Interval) -> Interval {
        let (lo, elo) = two_sum(self.lo, -other.hi);
        let (hi, ehi) = two_sum(self.hi, -other.lo);
        Interval::new(round_down(lo, elo), round_up(hi, ehi))
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        // min/max over the four endpoint products, each rounded outward
        let (a, b) = (self.lo, self.hi);
        let (c, d) = (other.lo, other.hi);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(x, y) in &[(a, c), (a, d), (b, c), (b, d)] {
            // 0 * inf from an endpoint pair contributes 0 here: the other
            // pairs still bound the true range of the (poisoned) operand.
            if (x == 0.0 && y.is_infinite()) || (y == 0.0 && x.is_infinite()) {
                lo = lo.min(0.0);
                hi = hi.max(0.0);
                continue;
            }
            let (p, e) = two_prod(x, y);
            lo = lo.min(round_down(p, e));
            hi = hi.max(round_up(p, e));
        }
        Interval::new(lo, hi)
    }

    pub fn div(&self, other: &Interval) -> Result<Interval, IntervalError> {
        if other.contains(0.0) {
            return Err(IntervalError::DivisionByZero);
        }
        let (a, b) = (self.lo, self.hi);
        let (c, d) = (other.lo, other.hi);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(x, y) in &[(a, c), (a, d), (b, c), (b, d)] {
            let q = x / y;
            if q.is_nan() {
                // inf/inf: bound by sign conventions; poison conservatively
                return Ok(Interval::ENTIRE);
            }
            // residual of x - q*y tells which side q errs on
            let r = q.mul_add(y, -x); // one rounding of q*y - x
            let (exact_p, exact_e) = two_prod(q, y);
            let exact = exact_p == x && exact_e == 0.0;
            if exact {
                lo = lo.min(q);
                hi = hi.max(q);
            } else {
                // sign(r) = sign(q*y - x); q too big iff q*y > x for y>0
                let too_big = if y > 0.0 { r > 0.0 } else { r < 0.0 };
                if r == 0.0 {
                    // rounding hid the residual; widen both ways
                    lo = lo.min(q.next_down());
                    hi = hi.max(q.next_up());
                } else if too_big {
                    lo = lo.min(q.next_down());
                    hi = hi.max(q);
                } else {
                    lo = lo.min(q);
                    hi = hi.max(q.next_up());
                }
            }
        }
        Ok(Interval::new(lo, hi))
    }

    /// `self^k` with even-power sharpening (`x^2 >= 0`).
    pub fn powi(&self, k: u32) -> Interval {
        match k {
            0 => Interval::ONE,
            1 => *self,
            _ => {
                if k % 2 == 0 && self.contains(0.0) {
                    // |x| <= m, so x^k in [0, m^k]
                    let m = Interval::new(0.0, self.mag());
                    m.powi_pos(k)
                } else if self.hi < 0.0 {
                    let p = self.neg().powi_pos(k);
                    if k % 2 == 0 {
                        p
                    } else {
                        p.neg()
                    }
                } else if self.lo < 0.0 {
                    // odd power of a sign-changing interval is monotone
                    let a = Interval::point(self.lo).powi_pos_signed(k);
                    let b = Interval::point(self.hi).powi_pos_signed(k);
                    a.hull(&b)
                } else {
                    self.powi_pos(k)
                }
            }
        }
    }

    /// Power of a nonnegative interval by repeated multiplication.
    fn powi_pos(&self, k: u32) -> Interval {
        let mut acc = Interval::ONE;
        for _ in 0..k {
            acc = acc.mul(self);
        }
        Interval::new(acc.lo.max(0.0), acc.hi)
    }

    /// Power of a point interval, any sign (odd powers stay monotone).
    fn powi_pos_signed(&self, k: u32) -> Interval {
        let mut acc = Interval::ONE;
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Multiply by a point scalar.
    pub fn scale(&self, s: f64) -> Interval {
        self.mul(&Interval::point(s))
    }

    /// Exact rational enclosure check helpers for tests and oracles.
    pub fn to_rationals(&self) -> Option<(BigRational, BigRational)> {
        if !self.is_finite() {
            return None;
        }
        Some((rat_of_f64(self.lo), rat_of_f64(self.hi)))
    }

    /// Tightest interval enclosing an exact decimal literal such as
    /// `-7.448265140244187` or `2.5e-3`. The literal is never treated as
    /// an exact double unless it is one.
    pub fn from_decimal_str(s: &str) -> Result<Interval, IntervalError> {
        let exact = parse_decimal_rational(s)?;
        let approx: f64 = s
            .trim()
            .parse()
            .map_err(|_| IntervalError::BadDecimal(s.to_string()))?;
        if !approx.is_finite() {
            return Err(IntervalError::BadDecimal(s.to_string()));
        }
        let approx_rat = rat_of_f64(approx);
        let iv = match approx_rat.cmp(&exact) {
            std::cmp::Ordering::Equal => Interval::point(approx),
            std::cmp::Ordering::Less => Interval::new(approx, approx.next_up()),
            std::cmp::Ordering::Greater => Interval::new(approx.next_down(), approx),
        };
        debug_assert!(rat_of_f64(iv.lo) <= exact && exact <= rat_of_f64(iv.hi));
        Ok(iv)
    }

    /// Interval between two decimal literals (used by dataset files).
    pub fn from_decimal_bounds(lo: &str, hi: &str) -> Result<Interval, IntervalError> {
        let l = Interval::from_decimal_str(lo)?;
        let h = Interval::from_decimal_str(hi)?;
        if l.lo > h.hi {
            return Err(IntervalError::Empty);
        }
        Ok(Interval::new(l.lo, h.hi))
    }
}

#[inline]
fn round_down_sub(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, -b);
    round_down(s, e)
}

#[inline]
fn round_up_add(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    round_up(s, e)
}

#[inline]
fn round_up_sub(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, -b);
    round_up(s, e)
}

/// Exact rational value of a finite double.
pub fn rat_of_f64(x: f64) -> BigRational {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return BigRational::zero();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, e2) = if exp == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let m = BigInt::from(mantissa) * BigInt::from(sign);
    let two = BigInt::from(2);
    if e2 >= 0 {
        BigRational::from_integer(m * two.pow(e2 as u32))
    } else {
        BigRational::new(m, two.pow((-e2) as u32))
    }
}

/// Parse a decimal literal (optional sign, fraction, exponent) into an
/// exact rational.
pub fn parse_decimal_rational(s: &str) -> Result<BigRational, IntervalError> {
    let t = s.trim();
    let bad = || IntervalError::BadDecimal(s.to_string());
    let (mant, exp_str) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], Some(&t[i + 1..])),
        None => (t, None),
    };
    let exp10: i64 = match exp_str {
        Some(e) => e.parse().map_err(|_| bad())?,
        None => 0,
    };
    let (sign, digits_part) = match mant.strip_prefix('-') {
        Some(d) => (-1, d),
        None => (1, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = match digits_part.find('.') {
        Some(i) => (&digits_part[..i], &digits_part[i + 1..]),
        None => (digits_part, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let mut digits = String::with_capacity(int_part.len() + frac_part.len());
    digits.push_str(int_part);
    digits.push_str(frac_part);
    let value: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let shift = exp10 - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(value * BigInt::from(sign));
    if shift >= 0 {
        r *= BigRational::from_integer(ten.pow(shift as u32));
    } else {
        r /= BigRational::from_integer(ten.pow((-shift) as u32));
    }
    Ok(r)
}

/// A box: an interval vector of dimension >= 1.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct IBox(pub Vec<Interval>);

impl fmt::Debug for IBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl IBox {
    pub fn from_points(p: &[f64]) -> IBox {
        IBox(p.iter().map(|&x| Interval::point(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn zero(dim: usize) -> IBox {
        IBox(vec![Interval::ZERO; dim])
    }

    pub fn mid(&self) -> Vec<f64> {
        self.0.iter().map(|iv| iv.mid()).collect()
    }

    pub fn add(&self, other: &IBox) -> IBox {
        debug_assert_eq!(self.dim(), other.dim());
        IBox(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.add(b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &IBox) -> IBox {
        debug_assert_eq!(self.dim(), other.dim());
        IBox(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.sub(b))
                .collect(),
        )
    }

    pub fn sub_points(&self, p: &[f64]) -> IBox {
        IBox(
            self.0
                .iter()
                .zip(p)
                .map(|(a, &b)| a.sub(&Interval::point(b)))
                .collect(),
        )
    }

    pub fn scale(&self, s: &Interval) -> IBox {
        IBox(self.0.iter().map(|a| a.mul(s)).collect())
    }

    pub fn hull(&self, other: &IBox) -> IBox {
        debug_assert_eq!(self.dim(), other.dim());
        IBox(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.hull(b))
                .collect(),
        )
    }

    pub fn intersect(&self, other: &IBox) -> Option<IBox> {
        debug_assert_eq!(self.dim(), other.dim());
        let mut out = Vec::with_capacity(self.dim());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.intersect(b)?);
        }
        Some(IBox(out))
    }

    pub fn contains_box(&self, other: &IBox) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .all(|(a, b)| a.contains_interval(b))
    }

    /// Strict componentwise interior inclusion of `self` in `other`.
    pub fn subset_interior(&self, other: &IBox) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .all(|(a, b)| a.subset_interior(b))
    }

    /// Minimum componentwise interior margin of `self` inside `other`.
    pub fn interior_margin(&self, other: &IBox) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.interior_margin(b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_width(&self) -> f64 {
        self.0.iter().map(|iv| iv.width()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|iv| iv.is_finite())
    }

    pub fn inflate_rel(&self, factor: f64, abs: f64) -> IBox {
        IBox(self.0.iter().map(|iv| iv.inflate_rel(factor, abs)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{FromPrimitive, One};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b)
    }

    #[test]
    fn add_exact_rational_endpoints() {
        assert_eq!(iv(1.0, 2.0).add(&iv(3.0, 4.0)), iv(4.0, 6.0));
    }

    #[test]
    fn mul_exact_rational_endpoints() {
        assert_eq!(iv(-1.0, 2.0).mul(&iv(3.0, 4.0)), iv(-4.0, 8.0));
    }

    #[test]
    fn div_one_third_is_tight() {
        let r = iv(1.0, 1.0).div(&iv(3.0, 3.0)).unwrap();
        let third = BigRational::new(BigInt::one(), BigInt::from(3));
        let (lo, hi) = r.to_rationals().unwrap();
        assert!(lo <= third && third <= hi);
        // width at most 2 ulp of 1/3
        let ulp = (1.0f64 / 3.0).next_up() - 1.0 / 3.0;
        assert!(r.width() <= 2.0 * ulp, "width {} ulp {}", r.width(), ulp);
    }

    #[test]
    fn div_by_zero_interval_rejected() {
        assert_eq!(
            iv(1.0, 1.0).div(&iv(-1.0, 2.0)),
            Err(IntervalError::DivisionByZero)
        );
    }

    #[test]
    fn subset_interior_strictness() {
        assert!(iv(1.0, 2.0).subset_interior(&iv(0.0, 3.0)));
        assert!(!iv(0.0, 2.0).subset_interior(&iv(0.0, 3.0)));
        assert!(!iv(1.0, 3.0).subset_interior(&iv(0.0, 3.0)));
    }

    #[test]
    fn split_halves_partition() {
        let a = iv(0.0, 4.0);
        let (l, r) = a.split();
        assert_eq!(l, iv(0.0, 2.0));
        assert_eq!(r, iv(2.0, 4.0));
        assert_eq!(l.hull(&r), a);
    }

    #[test]
    fn intersect_empty_marker() {
        assert_eq!(iv(0.0, 1.0).intersect(&iv(2.0, 3.0)), None);
        assert_eq!(iv(0.0, 1.0).intersect(&iv(1.0, 3.0)), Some(iv(1.0, 1.0)));
    }

    #[test]
    fn decimal_parsing_tightest_enclosure() {
        // 0.5 is exact in binary
        let half = Interval::from_decimal_str("0.5").unwrap();
        assert_eq!(half, iv(0.5, 0.5));
        // 0.1 is not; enclosure must straddle the exact decimal with 1-ulp width
        let tenth = Interval::from_decimal_str("0.1").unwrap();
        let exact = BigRational::new(BigInt::one(), BigInt::from(10));
        let (lo, hi) = tenth.to_rationals().unwrap();
        assert!(lo < exact && exact < hi);
        assert_eq!(tenth.lo().next_up(), tenth.hi());
        // signs and exponents
        let neg = Interval::from_decimal_str("-7.448265140244187").unwrap();
        let exact = parse_decimal_rational("-7.448265140244187").unwrap();
        let (lo, hi) = neg.to_rationals().unwrap();
        assert!(lo <= exact && exact <= hi);
        let sci = Interval::from_decimal_str("2.5e-3").unwrap();
        let exact = parse_decimal_rational("0.0025").unwrap();
        let (lo, hi) = sci.to_rationals().unwrap();
        assert!(lo <= exact && exact <= hi);
    }

    fn rand_double(rng: &mut ChaCha8Rng) -> f64 {
        // mix of magnitudes, including negatives and small values
        let m: f64 = rng.gen_range(-1.0..1.0);
        let e: i32 = rng.gen_range(-30..30);
        m * 2f64.powi(e)
    }

    fn rand_interval(rng: &mut ChaCha8Rng) -> Interval {
        Interval::from_pair(rand_double(rng), rand_double(rng))
    }

    /// a ⊆ a', b ⊆ b' ⇒ op(a,b) ⊆ op(a',b'), randomized over 1e5 cases.
    #[test]
    fn enclosure_monotonicity_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100_000 {
            let a2 = rand_interval(&mut rng);
            let b2 = rand_interval(&mut rng);
            // sub-intervals
            let a = sub_interval(&mut rng, &a2);
            let b = sub_interval(&mut rng, &b2);
            assert!(a2.add(&b2).contains_interval(&a.add(&b)));
            assert!(a2.sub(&b2).contains_interval(&a.sub(&b)));
            assert!(a2.mul(&b2).contains_interval(&a.mul(&b)));
            if !b2.contains(0.0) {
                let q2 = a2.div(&b2).unwrap();
                let q = a.div(&b).unwrap();
                assert!(q2.contains_interval(&q));
            }
        }
    }

    fn sub_interval(rng: &mut ChaCha8Rng, outer: &Interval) -> Interval {
        let t1: f64 = rng.gen_range(0.0..1.0);
        let t2: f64 = rng.gen_range(0.0..1.0);
        let w = outer.hi() - outer.lo();
        let a = outer.lo() + t1.min(t2) * w;
        let b = outer.lo() + t1.max(t2) * w;
        Interval::from_pair(a.clamp(outer.lo(), outer.hi()), b.clamp(outer.lo(), outer.hi()))
    }

    /// Exact result of x ∘ y (rational arithmetic) lies in op([x,x],[y,y]).
    #[test]
    fn exact_real_containment_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let x = rand_double(&mut rng);
            let y = rand_double(&mut rng);
            let (rx, ry) = (rat_of_f64(x), rat_of_f64(y));
            let xi = Interval::point(x);
            let yi = Interval::point(y);

            let s = xi.add(&yi);
            let exact = &rx + &ry;
            let (lo, hi) = s.to_rationals().unwrap();
            assert!(lo <= exact && exact <= hi, "add {x} {y}");

            let d = xi.sub(&yi);
            let exact = &rx - &ry;
            let (lo, hi) = d.to_rationals().unwrap();
            assert!(lo <= exact && exact <= hi, "sub {x} {y}");

            let p = xi.mul(&yi);
            let exact = &rx * &ry;
            let (lo, hi) = p.to_rationals().unwrap();
            assert!(lo <= exact && exact <= hi, "mul {x} {y}");

            if y != 0.0 {
                let q = xi.div(&yi).unwrap();
                let exact = &rx / &ry;
                let (lo, hi) = q.to_rationals().unwrap();
                assert!(lo <= exact && exact <= hi, "div {x} {y}");
            }
        }
    }

    #[test]
    fn powi_even_sharpening() {
        let x = iv(-2.0, 1.0);
        let sq = x.powi(2);
        assert_eq!(sq.lo(), 0.0);
        assert!(sq.contains(4.0));
        let cube = x.powi(3);
        assert!(cube.contains(-8.0) && cube.contains(1.0));
        assert!(cube.lo() <= -8.0 && cube.hi() >= 1.0);
    }

    #[test]
    fn overflow_poisons() {
        let big = iv(f64::MAX, f64::MAX);
        let r = big.mul(&big);
        assert!(!r.is_finite());
        assert!(!r.subset_interior(&Interval::ENTIRE) || !r.is_finite());
    }

    #[test]
    fn rat_of_f64_roundtrip() {
        for x in [0.1, -3.5, 1e-300, 123456789.123, -0.0, 2.0f64.powi(-1074)] {
            let r = rat_of_f64(x);
            let back = BigRational::from_f64(x).unwrap();
            assert_eq!(r, back);
        }
    }
}
