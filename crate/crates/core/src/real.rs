//! Arbitrary-precision binary floating point.
//!
//! `Real` stores `mant * 2^exp` with a mantissa of roughly `prec` bits.
//! All orbit refinement and jet arithmetic runs on this type; the default
//! working precision of 256 bits gives about 77 decimal digits, enough to
//! resolve `lambda^n` scales far beyond what `f64` can reach.

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::Mutex;
use std::sync::OnceLock;

/// Default working precision in bits.
pub const DEFAULT_PREC: u32 = 256;

/// Guard bits used inside transcendental kernels.
const GUARD: u32 = 32;

#[derive(Clone)]
pub struct Real {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

impl Real {
    fn raw(mant: BigInt, exp: i64, prec: u32) -> Self {
        let mut r = Real { mant, exp, prec };
        r.normalize();
        r
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let bits = self.mant.magnitude().bits() as i64;
        let target = self.prec as i64;
        if bits > target {
            let shift = bits - target;
            // round to nearest (half away from zero)
            let half = BigInt::from(1) << (shift - 1) as usize;
            let neg = self.mant.sign() == Sign::Minus;
            let mut mag = BigInt::from_biguint(Sign::Plus, self.mant.magnitude().clone());
            mag += &half;
            mag >>= shift as usize;
            self.mant = if neg { -mag } else { mag };
            self.exp += shift;
            // rounding may have produced an extra bit
            if self.mant.magnitude().bits() as i64 > target {
                self.mant >>= 1usize;
                self.exp += 1;
            }
        }
    }

    pub fn zero(prec: u32) -> Self {
        Real { mant: BigInt::zero(), exp: 0, prec }
    }

    pub fn one(prec: u32) -> Self {
        Real::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Real::raw(BigInt::from(v), 0, prec)
    }

    pub fn from_bigint(v: BigInt, prec: u32) -> Self {
        Real::raw(v, 0, prec)
    }

    pub fn from_f64(v: f64, prec: u32) -> Self {
        assert!(v.is_finite(), "cannot build Real from non-finite f64");
        if v == 0.0 {
            return Real::zero(prec);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Real::raw(BigInt::from(sign) * BigInt::from(mant), exp, prec)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        Real::raw(self.mant.clone(), self.exp, prec)
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.sign() == Sign::Minus
    }

    pub fn is_positive(&self) -> bool {
        self.mant.sign() == Sign::Plus
    }

    pub fn signum(&self) -> i32 {
        match self.mant.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Self {
        Real {
            mant: self.mant.abs(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    /// Exponent of the leading bit: value magnitude is in [2^e, 2^(e+1)).
    /// Returns i64::MIN for zero.
    pub fn mag_exp(&self) -> i64 {
        if self.mant.is_zero() {
            return i64::MIN;
        }
        self.exp + self.mant.magnitude().bits() as i64 - 1
    }

    pub fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        let bits = self.mant.magnitude().bits() as i64;
        // keep the top 64 bits of the mantissa
        let shift = bits - 64;
        let top = if shift > 0 {
            (self.mant.magnitude() >> shift as u64).to_u64().unwrap()
        } else {
            self.mant.magnitude().to_u64().unwrap() << (-shift) as u64
        };
        let mut v = top as f64;
        let e = self.exp + shift.max(0) - if shift < 0 { -shift } else { 0 };
        v *= 2f64.powi(e.clamp(-2000, 2000) as i32);
        if self.mant.sign() == Sign::Minus {
            v = -v;
        }
        v
    }

    /// Multiply by 2^k exactly.
    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.mant.is_zero() {
            return self.clone();
        }
        Real {
            mant: self.mant.clone(),
            exp: self.exp + k,
            prec: self.prec,
        }
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        Real::raw(&self.mant * BigInt::from(k), self.exp, self.prec)
    }

    pub fn div_i64(&self, k: i64) -> Self {
        assert!(k != 0);
        let prec = self.prec;
        let shift = prec as i64 + GUARD as i64;
        let num = &self.mant << shift as usize;
        Real::raw(num / BigInt::from(k), self.exp - shift, prec)
    }

    pub fn recip(&self) -> Self {
        Real::one(self.prec) / self
    }

    /// Round to the nearest integer, returned as BigInt.
    pub fn round_bigint(&self) -> BigInt {
        if self.mant.is_zero() {
            return BigInt::zero();
        }
        if self.exp >= 0 {
            return &self.mant << self.exp as usize;
        }
        let shift = (-self.exp) as usize;
        let neg = self.mant.sign() == Sign::Minus;
        let mut mag = BigInt::from_biguint(Sign::Plus, self.mant.magnitude().clone());
        mag += BigInt::from(1) << (shift - 1);
        mag >>= shift;
        if neg {
            -mag
        } else {
            mag
        }
    }

    pub fn floor_i64(&self) -> i64 {
        let f = self.to_f64().floor();
        f as i64
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "sqrt of negative Real");
        if self.mant.is_zero() {
            return self.clone();
        }
        let prec = self.prec;
        let target_bits = 2 * (prec + GUARD) as i64;
        let bits = self.mant.magnitude().bits() as i64;
        let mut shift = target_bits - bits;
        // make mant * 2^shift have even exponent overall
        if (self.exp - shift) % 2 != 0 {
            shift += 1;
        }
        let mag = self.mant.magnitude() << shift as u64;
        let root = mag.sqrt();
        Real::raw(
            BigInt::from_biguint(Sign::Plus, root),
            (self.exp - shift) / 2,
            prec,
        )
    }

    pub fn powi(&self, n: i64) -> Self {
        if n == 0 {
            return Real::one(self.prec);
        }
        let wp = self.prec + GUARD + 64 - (64 - (n.unsigned_abs().leading_zeros())) ;
        let mut base = self.with_prec(self.prec + GUARD + 2 * (64 - n.unsigned_abs().leading_zeros()));
        let _ = wp;
        let mut e = n.unsigned_abs();
        let mut acc = Real::one(base.prec);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        let acc = acc.with_prec(self.prec);
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    pub fn max(&self, other: &Real) -> Real {
        if self >= other { self.clone() } else { other.clone() }
    }

    pub fn min(&self, other: &Real) -> Real {
        if self <= other { self.clone() } else { other.clone() }
    }

    // ---- transcendental functions ----

    pub fn pi(prec: u32) -> Real {
        cached_const(ConstKind::Pi, prec)
    }

    pub fn ln2(prec: u32) -> Real {
        cached_const(ConstKind::Ln2, prec)
    }

    pub fn exp(&self) -> Self {
        let prec = self.prec;
        let wp = prec + GUARD + 16;
        let x = self.with_prec(wp);
        if x.is_zero() {
            return Real::one(prec);
        }
        let ln2 = Real::ln2(wp);
        // x = k*ln2 + r with |r| <= ln2/2
        let k_big = (&x / &ln2).round_bigint();
        let k = k_big.to_i64().expect("exp argument out of range");
        let r = &x - &ln2.mul_i64(k);
        // further halve r to speed the series
        let halvings = 8i64;
        let r_small = r.mul_pow2(-halvings);
        let mut term = Real::one(wp);
        let mut sum = Real::one(wp);
        let mut n = 1i64;
        loop {
            term = (&term * &r_small).div_i64(n);
            sum += &term;
            if term.mag_exp() < sum.mag_exp() - wp as i64 - 4 {
                break;
            }
            n += 1;
        }
        let mut res = sum;
        for _ in 0..halvings {
            res = &res * &res;
        }
        res.mul_pow2(k).with_prec(prec)
    }

    pub fn ln(&self) -> Self {
        assert!(self.is_positive(), "ln of non-positive Real");
        let prec = self.prec;
        let wp = prec + GUARD + 16;
        // self = m * 2^e with m in [1,2)
        let e = self.mag_exp();
        let m = self.mul_pow2(-e).with_prec(wp);
        // ln m = 2 atanh((m-1)/(m+1)), argument in [0, 1/3)
        let one = Real::one(wp);
        let t = &(&m - &one) / &(&m + &one);
        let mut acc = atanh_small(&t, wp).mul_pow2(1);
        if e != 0 {
            acc = &acc + &Real::ln2(wp).mul_i64(e);
        }
        acc.with_prec(prec)
    }

    pub fn sin_cos(&self) -> (Self, Self) {
        let prec = self.prec;
        let wp = prec + GUARD + 32;
        let x = self.with_prec(wp);
        let half_pi = Real::pi(wp).mul_pow2(-1);
        let q_big = (&x / &half_pi).round_bigint();
        // quadrant reduction: r = x - q*pi/2, |r| <= pi/4
        let q_mod = ((&q_big % BigInt::from(4)) + BigInt::from(4)) % BigInt::from(4);
        let q = q_mod.to_i64().unwrap();
        let extra = q_big.magnitude().bits() as u32 + 8;
        let wq = wp + extra;
        let r = (&self.with_prec(wq) - &(&Real::pi(wq).mul_pow2(-1) * &Real::from_bigint(q_big.clone(), wq)))
            .with_prec(wp);
        let (s, c) = sin_cos_small(&r, wp);
        let (sin, cos) = match q {
            0 => (s.clone(), c.clone()),
            1 => (c.clone(), -&s),
            2 => (-&s, -&c),
            3 => (-&c, s.clone()),
            _ => unreachable!(),
        };
        (sin.with_prec(prec), cos.with_prec(prec))
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    pub fn atan(&self) -> Self {
        let prec = self.prec;
        let wp = prec + GUARD + 16;
        let x = self.with_prec(wp);
        if x.is_zero() {
            return Real::zero(prec);
        }
        if x.is_negative() {
            return -&(-&x).atan().with_prec(prec);
        }
        if x > Real::one(wp) {
            let res = &Real::pi(wp).mul_pow2(-1) - &x.recip().atan();
            return res.with_prec(prec);
        }
        // halving: atan(x) = 2 atan(x / (1 + sqrt(1+x^2)))
        let mut y = x;
        let mut doublings = 0;
        let one = Real::one(wp);
        while y.mag_exp() > -6 {
            let denom = &one + &(&one + &(&y * &y)).sqrt();
            y = &y / &denom;
            doublings += 1;
        }
        let mut acc = atan_small(&y, wp);
        acc = acc.mul_pow2(doublings);
        acc.with_prec(prec)
    }

    pub fn atan2(y: &Real, x: &Real) -> Real {
        let prec = y.prec.max(x.prec);
        if x.is_positive() {
            return (y / x).atan();
        }
        if x.is_zero() {
            assert!(!y.is_zero(), "atan2(0,0)");
            let h = Real::pi(prec).mul_pow2(-1);
            return if y.is_positive() { h } else { -&h };
        }
        let base = (y / x).atan();
        let pi = Real::pi(prec);
        if y.is_negative() {
            &base - &pi
        } else {
            &base + &pi
        }
    }

    pub fn cosh(&self) -> Self {
        let e = self.exp();
        (&e + &e.recip()).mul_pow2(-1)
    }

    pub fn sinh(&self) -> Self {
        let e = self.exp();
        (&e - &e.recip()).mul_pow2(-1)
    }

    // ---- decimal I/O ----

    /// Parse a decimal string like "-1.25e-3".
    pub fn parse(s: &str, prec: u32) -> Result<Real, String> {
        let s = s.trim();
        let (mant_str, exp10) = match s.find(['e', 'E']) {
            Some(i) => {
                let e: i64 = s[i + 1..]
                    .parse()
                    .map_err(|_| format!("bad exponent in {s:?}"))?;
                (&s[..i], e)
            }
            None => (s, 0),
        };
        let neg = mant_str.starts_with('-');
        let unsigned = mant_str.trim_start_matches(['-', '+']);
        let (int_part, frac_part) = match unsigned.find('.') {
            Some(i) => (&unsigned[..i], &unsigned[i + 1..]),
            None => (unsigned, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(format!("empty number {s:?}"));
        }
        let digits: String = format!("{int_part}{frac_part}");
        if !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad digits in {s:?}"));
        }
        let n: BigInt = digits.parse().map_err(|_| format!("bad number {s:?}"))?;
        let scale = exp10 - frac_part.len() as i64;
        let wp = prec + GUARD;
        let mut v = Real::from_bigint(n, wp);
        if scale != 0 {
            let ten = Real::from_i64(10, wp);
            let p = ten.powi(scale.abs());
            v = if scale > 0 { &v * &p } else { &v / &p };
        }
        if neg {
            v = -&v;
        }
        Ok(v.with_prec(prec))
    }

    /// Scientific-notation decimal string with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.mant.is_zero() {
            return "0".to_string();
        }
        let digits = digits.max(1);
        // decimal exponent estimate
        let e10 = (self.mag_exp() as f64 * std::f64::consts::LOG10_2).floor() as i64;
        let wp = self.prec + GUARD + 16;
        let ten = Real::from_i64(10, wp + 64);
        // scaled = self * 10^(digits-1-e10), should be an integer with `digits` digits
        let k = digits as i64 - 1 - e10;
        let p = ten.powi(k.abs());
        let x = self.with_prec(wp + 64);
        let scaled = if k >= 0 { &x * &p } else { &x / &p };
        let mut int = scaled.round_bigint();
        let mut e10 = e10;
        let bound: BigInt = BigInt::from(10).pow(digits as u32);
        let low: BigInt = BigInt::from(10).pow(digits as u32 - 1);
        if int.magnitude() >= bound.magnitude() {
            // estimate was off by one
            let half = BigInt::from(5);
            int = (&int + &half) / BigInt::from(10);
            e10 += 1;
        } else if int.magnitude() < low.magnitude() && digits > 1 {
            int *= BigInt::from(10);
            e10 -= 1;
        }
        let neg = int.sign() == Sign::Minus;
        let ds = int.magnitude().to_string();
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(&ds[..1]);
        if ds.len() > 1 {
            out.push('.');
            out.push_str(&ds[1..]);
        }
        out.push('e');
        out.push_str(&e10.to_string());
        out
    }
}

fn atanh_small(t: &Real, wp: u32) -> Real {
    // atanh(t) = sum t^(2n+1)/(2n+1), |t| < 1/2
    let t2 = t * t;
    let mut term = t.clone();
    let mut sum = t.clone();
    let mut n = 1i64;
    loop {
        term = &term * &t2;
        let add = term.div_i64(2 * n + 1);
        sum += &add;
        if add.is_zero() || add.mag_exp() < sum.mag_exp() - wp as i64 - 4 {
            break;
        }
        n += 1;
    }
    sum
}

fn atan_small(t: &Real, wp: u32) -> Real {
    // atan(t) = sum (-1)^n t^(2n+1)/(2n+1)
    let t2 = t * t;
    let mut term = t.clone();
    let mut sum = t.clone();
    let mut n = 1i64;
    loop {
        term = &term * &t2;
        let add = term.div_i64(2 * n + 1);
        if n % 2 == 1 {
            sum -= &add;
        } else {
            sum += &add;
        }
        if add.is_zero() || add.mag_exp() < sum.mag_exp() - wp as i64 - 4 {
            break;
        }
        n += 1;
    }
    sum
}

fn sin_cos_small(r: &Real, wp: u32) -> (Real, Real) {
    // Taylor around 0, |r| <= pi/4
    let r2 = r * r;
    let mut s = r.clone();
    let mut term = r.clone();
    let mut n = 1i64;
    loop {
        term = (&(&term * &r2)).div_i64(-(2 * n) * (2 * n + 1));
        s += &term;
        if term.is_zero() || term.mag_exp() < -(wp as i64) - 4 {
            break;
        }
        n += 1;
    }
    let mut c = Real::one(wp);
    let mut term = Real::one(wp);
    let mut n = 1i64;
    loop {
        term = (&(&term * &r2)).div_i64(-(2 * n - 1) * (2 * n));
        c += &term;
        if term.is_zero() || term.mag_exp() < -(wp as i64) - 4 {
            break;
        }
        n += 1;
    }
    (s, c)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum ConstKind {
    Pi,
    Ln2,
}

fn cached_const(kind: ConstKind, prec: u32) -> Real {
    static CACHE: OnceLock<Mutex<HashMap<(u8, u32), Real>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (
        match kind {
            ConstKind::Pi => 0u8,
            ConstKind::Ln2 => 1u8,
        },
        prec,
    );
    if let Some(v) = cache.lock().unwrap().get(&key) {
        return v.clone();
    }
    let wp = prec + GUARD + 16;
    let v = match kind {
        ConstKind::Pi => {
            // Machin: pi = 16 atan(1/5) - 4 atan(1/239)
            let a = atan_small(&Real::one(wp).div_i64(5), wp);
            let b = atan_small(&Real::one(wp).div_i64(239), wp);
            (&a.mul_pow2(4) - &b.mul_pow2(2)).with_prec(prec)
        }
        ConstKind::Ln2 => {
            // ln2 = 2 atanh(1/3)
            atanh_small(&Real::one(wp).div_i64(3), wp)
                .mul_pow2(1)
                .with_prec(prec)
        }
    };
    cache.lock().unwrap().insert(key, v.clone());
    v
}

// ---- operators ----

impl Add for &Real {
    type Output = Real;
    fn add(self, rhs: &Real) -> Real {
        let prec = self.prec.max(rhs.prec);
        if self.mant.is_zero() {
            return rhs.with_prec(prec);
        }
        if rhs.mant.is_zero() {
            return self.with_prec(prec);
        }
        let (a, b) = if self.exp >= rhs.exp {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = a.exp - b.exp;
        // if the shift dwarfs the precision, the small term only matters via rounding
        let limit = prec as i64 + GUARD as i64 + (a.mant.magnitude().bits() as i64);
        if shift > limit + (b.mant.magnitude().bits() as i64) {
            return a.with_prec(prec);
        }
        let mant = (&a.mant << shift as usize) + &b.mant;
        Real::raw(mant, b.exp, prec)
    }
}

impl Sub for &Real {
    type Output = Real;
    fn sub(self, rhs: &Real) -> Real {
        self + &(-rhs)
    }
}

impl Mul for &Real {
    type Output = Real;
    fn mul(self, rhs: &Real) -> Real {
        let prec = self.prec.max(rhs.prec);
        Real::raw(&self.mant * &rhs.mant, self.exp + rhs.exp, prec)
    }
}

impl Div for &Real {
    type Output = Real;
    fn div(self, rhs: &Real) -> Real {
        assert!(!rhs.mant.is_zero(), "division by zero Real");
        let prec = self.prec.max(rhs.prec);
        if self.mant.is_zero() {
            return Real::zero(prec);
        }
        let shift = prec as i64 + GUARD as i64 + rhs.mant.magnitude().bits() as i64
            - self.mant.magnitude().bits() as i64;
        let shift = shift.max(0);
        let num = &self.mant << shift as usize;
        Real::raw(num / &rhs.mant, self.exp - shift - rhs.exp, prec)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            mant: -&self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            mant: -self.mant,
            exp: self.exp,
            prec: self.prec,
        }
    }
}

impl AddAssign<&Real> for Real {
    fn add_assign(&mut self, rhs: &Real) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&Real> for Real {
    fn sub_assign(&mut self, rhs: &Real) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&Real> for Real {
    fn mul_assign(&mut self, rhs: &Real) {
        *self = &*self * rhs;
    }
}

macro_rules! forward_binop_owned {
    ($trait:ident, $method:ident) => {
        impl $trait for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &Real) -> Real {
                (&self).$method(rhs)
            }
        }
        impl $trait<Real> for &Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop_owned!(Add, add);
forward_binop_owned!(Sub, sub);
forward_binop_owned!(Mul, mul);
forward_binop_owned!(Div, div);

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
    }
}

impl Real {
    fn cmp_value(&self, other: &Real) -> Ordering {
        let d = self - other;
        match d.mant.sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({})", self.to_decimal(20))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (self.prec as f64 * std::f64::consts::LOG10_2).floor() as usize;
        write!(f, "{}", self.to_decimal(digits.max(17)))
    }
}
