//! Exact arithmetic for the dyadic-chain scales.
//!
//! Every scale produced by the admissible-tuple machinery is of the form
//! `2^(p/q)` with a small rational exponent: the chains mix plain dyadics
//! with terminal values like `(R d1^n ... d_{k-1}^{n+2-k})^{-1/(n+1-k)}`,
//! whose log2 is rational whenever `log2 R` is an integer. Carrying the
//! exponent exactly avoids drift across the chain construction and makes
//! identities like `rho_n = 1/R` hold without tolerance.

use std::cmp::Ordering;
use std::fmt;

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A positive real stored as an exact rational log2 exponent.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scale {
    /// numerator of log2(value)
    num: i64,
    /// denominator of log2(value), always > 0
    den: i64,
}

impl Scale {
    pub const ONE: Scale = Scale { num: 0, den: 1 };
    pub const HALF: Scale = Scale { num: -1, den: 1 };

    pub fn from_log2(num: i64, den: i64) -> Scale {
        assert!(den != 0, "zero denominator in scale exponent");
        let (mut num, mut den) = (num, den);
        if den < 0 {
            num = -num;
            den = -den;
        }
        let g = gcd(num, den).max(1);
        Scale { num: num / g, den: den / g }
    }

    /// 2^k for integer k.
    pub fn pow2(k: i64) -> Scale {
        Scale { num: k, den: 1 }
    }

    pub fn log2_num(&self) -> i64 {
        self.num
    }

    pub fn log2_den(&self) -> i64 {
        self.den
    }

    pub fn log2(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn value(&self) -> f64 {
        (self.num as f64 / self.den as f64).exp2()
    }

    pub fn recip(&self) -> Scale {
        Scale { num: -self.num, den: self.den }
    }

    pub fn mul(&self, other: &Scale) -> Scale {
        Scale::from_log2(
            self.num * other.den + other.num * self.den,
            self.den * other.den,
        )
    }

    pub fn div(&self, other: &Scale) -> Scale {
        self.mul(&other.recip())
    }

    /// Integer power.
    pub fn powi(&self, k: i64) -> Scale {
        Scale::from_log2(self.num * k, self.den)
    }

    /// Exact k-th root (k > 0). Always exact in log space.
    pub fn root(&self, k: i64) -> Scale {
        assert!(k > 0);
        Scale::from_log2(self.num, self.den * k)
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }

    /// True when the value is an integer power of two.
    pub fn is_dyadic(&self) -> bool {
        self.den == 1
    }

    /// Smallest dyadic value >= self.
    pub fn dyadic_ceil(&self) -> Scale {
        Scale::pow2(self.log2_ceil())
    }

    fn log2_ceil(&self) -> i64 {
        if self.num >= 0 {
            (self.num + self.den - 1) / self.den
        } else {
            -((-self.num) / self.den)
        }
    }

    pub fn min(self, other: Scale) -> Scale {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Scale) -> Scale {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for Scale {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scale {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Debug for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "2^{}", self.num)
        } else {
            write!(f, "2^({}/{})", self.num, self.den)
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A signed interval endpoint: zero or +-2^(p/q).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint {
    Neg(Scale),
    Zero,
    Pos(Scale),
}

impl Endpoint {
    pub fn value(&self) -> f64 {
        match self {
            Endpoint::Neg(s) => -s.value(),
            Endpoint::Zero => 0.0,
            Endpoint::Pos(s) => s.value(),
        }
    }

    pub fn neg(&self) -> Endpoint {
        match *self {
            Endpoint::Neg(s) => Endpoint::Pos(s),
            Endpoint::Zero => Endpoint::Zero,
            Endpoint::Pos(s) => Endpoint::Neg(s),
        }
    }

    pub fn scale_by(&self, c: &Scale) -> Endpoint {
        match *self {
            Endpoint::Neg(s) => Endpoint::Neg(s.mul(c)),
            Endpoint::Zero => Endpoint::Zero,
            Endpoint::Pos(s) => Endpoint::Pos(s.mul(c)),
        }
    }
}

impl PartialOrd for Endpoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use Endpoint::*;
        Some(match (self, other) {
            (Neg(a), Neg(b)) => b.cmp(a),
            (Neg(_), _) => Ordering::Less,
            (_, Neg(_)) => Ordering::Greater,
            (Zero, Zero) => Ordering::Equal,
            (Zero, Pos(_)) => Ordering::Less,
            (Pos(_), Zero) => Ordering::Greater,
            (Pos(a), Pos(b)) => a.cmp(b),
        })
    }
}

/// A closed interval with exact endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactInterval {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

impl ExactInterval {
    pub fn new(lo: Endpoint, hi: Endpoint) -> ExactInterval {
        ExactInterval { lo, hi }
    }

    pub fn symmetric(halfwidth: Scale) -> ExactInterval {
        ExactInterval { lo: Endpoint::Neg(halfwidth), hi: Endpoint::Pos(halfwidth) }
    }

    pub fn length(&self) -> f64 {
        self.hi.value() - self.lo.value()
    }

    /// Half-open membership [lo, hi); the hollow-box pieces tile exactly
    /// under this convention.
    pub fn contains_half_open(&self, x: f64) -> bool {
        x >= self.lo.value() && x < self.hi.value()
    }

    pub fn scale_by(&self, c: &Scale) -> ExactInterval {
        ExactInterval { lo: self.lo.scale_by(c), hi: self.hi.scale_by(c) }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo.value() + self.hi.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_chain_identities() {
        // D_2 for n=3, R=4096, d1=1/4: (4096/64)^(-1/2) = 1/8
        let r = Scale::pow2(12);
        let d1 = Scale::pow2(-2);
        let d2 = r.mul(&d1.powi(3)).root(2).recip();
        assert_eq!(d2, Scale::pow2(-3));
        // rho_3 = d1^3 d2^2 = 1/R exactly
        let rho3 = d1.powi(3).mul(&d2.powi(2));
        assert_eq!(rho3, r.recip());
    }

    #[test]
    fn fractional_roots_stay_exact() {
        // n=4, R=2^12, d1=d2=1/2: D_3 = (2^12 * 2^-4 * 2^-3)^(-1/2) = 2^(-5/2)
        let r = Scale::pow2(12);
        let d = Scale::HALF;
        let d3 = r.mul(&d.powi(4)).mul(&d.powi(3)).root(2).recip();
        assert_eq!(d3, Scale::from_log2(-5, 2));
        assert!(!d3.is_dyadic());
        assert_eq!(d3.dyadic_ceil(), Scale::pow2(-2));
    }

    #[test]
    fn ordering_crosses_denominators() {
        let a = Scale::from_log2(-5, 2); // 2^-2.5
        let b = Scale::pow2(-3);
        let c = Scale::pow2(-2);
        assert!(b < a && a < c);
        assert_eq!(a.max(b), a);
        assert_eq!(a.min(c), a);
    }

    #[test]
    fn endpoint_order_and_intervals() {
        let i = ExactInterval::symmetric(Scale::ONE);
        assert!(i.contains_half_open(-2.0_f64.powi(-1)));
        assert!(i.contains_half_open(0.0));
        assert!(!i.contains_half_open(2.0));
        assert_eq!(i.length(), 4.0 * 0.5);
        let j = i.scale_by(&Scale::pow2(3));
        assert_eq!(j.length(), 16.0);
    }
}
