//! Exact scalar coefficients: Gaussian rationals extended by the formal
//! parameters `zeta` (transcendental), `kappa` (with `kappa^4 = 1`) and
//! `eps2` (optionally involutive, `eps2 * eps2 = 1`).
//!
//! Every coefficient is a pair (rational real part, rational imaginary part)
//! attached to a parameter monomial. The involution rules keep parameter
//! monomials in a unique normal form, so structural equality of terms is
//! equality in the coefficient ring.

use num::{BigRational, One, Signed, Zero};
use std::fmt;

/// Gaussian rational `re + im * i` with `i^2 = -1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coeff {
    pub re: BigRational,
    pub im: BigRational,
}

impl Coeff {
    pub fn zero() -> Self {
        Coeff {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        Coeff {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    pub fn i() -> Self {
        Coeff {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Coeff {
            re: BigRational::from_integer(n.into()),
            im: BigRational::zero(),
        }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Coeff {
            re: BigRational::new(num.into(), den.into()),
            im: BigRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn neg(&self) -> Self {
        Coeff {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Coeff {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Coeff {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Coeff {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> Self {
        let n = &self.re * &self.re + &self.im * &self.im;
        assert!(!n.is_zero(), "division by zero coefficient");
        Coeff {
            re: &self.re / &n,
            im: -(&self.im / &n),
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.inv())
    }

    /// `|re| + |im|` as f64, used by the oracle for magnitude scaling.
    pub fn approx_norm(&self) -> f64 {
        rational_to_f64(&self.re).abs() + rational_to_f64(&self.im).abs()
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    // Good enough for oracle scaling; exact arithmetic never goes through here.
    let num = r.numer();
    let den = r.denom();
    let nf = num.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = den.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            return write!(f, "{}", self.re);
        }
        if self.re.is_zero() {
            if self.im.is_one() {
                return write!(f, "i");
            }
            if self.im == -BigRational::one() {
                return write!(f, "-i");
            }
            return write!(f, "{}*i", self.im);
        }
        if self.im.is_positive() {
            write!(f, "({}+{}*i)", self.re, self.im)
        } else {
            write!(f, "({}{}*i)", self.re, self.im)
        }
    }
}

/// Concrete or symbolic value of an involutive square parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SquareValue {
    /// Kept as a formal symbol with square-involution (`p^2` has order 2).
    Symbolic,
    Plus,
    Minus,
}

/// Parameter ring configuration for one problem.
///
/// `kappa` always satisfies `kappa^4 = 1` (so `kappa^2` is involutive);
/// `eps2` is involutive only when `eps2_involutive` is set. `zeta` is
/// transcendental.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamRing {
    pub kappa2: SquareValue,
    pub eps2: SquareValue,
    pub eps2_involutive: bool,
}

impl Default for ParamRing {
    fn default() -> Self {
        ParamRing {
            kappa2: SquareValue::Symbolic,
            eps2: SquareValue::Symbolic,
            eps2_involutive: true,
        }
    }
}

/// Normal-form parameter monomial `zeta^z * kappa^k * eps2^e`.
///
/// `kappa` exponent lives in 0..4 (kappa^4 = 1); when the ring pins
/// `kappa^2 = ±1` only exponents 0 and 1 survive. `eps2` exponent lives in
/// 0..2 under involution, unbounded otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ParamPow {
    pub zeta: u32,
    pub kappa: u32,
    pub eps2: u32,
}

impl ParamPow {
    pub fn unit() -> Self {
        ParamPow::default()
    }

    pub fn is_unit(&self) -> bool {
        self.zeta == 0 && self.kappa == 0 && self.eps2 == 0
    }

    pub fn degree_weight(&self) -> u32 {
        // parameters do not count toward the graded part of the term order
        0
    }
}

impl ParamRing {
    /// Multiply two parameter monomials and fold involutions; returns the
    /// normal-form monomial and a sign/unit correction.
    pub fn mul(&self, a: &ParamPow, b: &ParamPow) -> (ParamPow, Coeff) {
        let mut coeff = Coeff::one();
        let zeta = a.zeta + b.zeta;

        let mut kappa = a.kappa + b.kappa;
        match self.kappa2 {
            SquareValue::Symbolic => {
                kappa %= 4; // kappa^4 = 1
            }
            SquareValue::Plus => {
                kappa %= 2; // kappa^2 = 1
            }
            SquareValue::Minus => {
                // kappa^2 = -1: each pair of kappas contributes -1
                let pairs = kappa / 2;
                if pairs % 2 == 1 {
                    coeff = coeff.neg();
                }
                kappa %= 2;
            }
        }

        let mut eps2 = a.eps2 + b.eps2;
        match self.eps2 {
            SquareValue::Symbolic => {
                if self.eps2_involutive {
                    eps2 %= 2;
                }
            }
            SquareValue::Plus => {
                eps2 = 0;
            }
            SquareValue::Minus => {
                if eps2 % 2 == 1 {
                    coeff = coeff.neg();
                    eps2 = 1;
                } else {
                    eps2 = 0;
                }
                // concrete eps2 = -1 folds entirely into the coefficient
                if eps2 == 1 {
                    coeff = coeff.neg();
                    eps2 = 0;
                }
            }
        }

        (ParamPow { zeta, kappa, eps2 }, coeff)
    }

    /// Bring a raw monomial into ring normal form (used after parsing).
    pub fn normalize_pow(&self, p: &ParamPow) -> (ParamPow, Coeff) {
        self.mul(p, &ParamPow::unit())
    }

    /// The `kappa^2` factor as a normal-form (monomial, coefficient) pair.
    pub fn kappa2_factor(&self) -> (ParamPow, Coeff) {
        self.normalize_pow(&ParamPow {
            zeta: 0,
            kappa: 2,
            eps2: 0,
        })
    }

    /// The `eps2` factor as a normal-form pair.
    pub fn eps2_factor(&self) -> (ParamPow, Coeff) {
        self.normalize_pow(&ParamPow {
            zeta: 0,
            kappa: 0,
            eps2: 1,
        })
    }
}

impl fmt::Display for ParamPow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut put = |f: &mut fmt::Formatter<'_>, name: &str, pow: u32| -> fmt::Result {
            if pow == 0 {
                return Ok(());
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if pow == 1 {
                write!(f, "{}", name)
            } else {
                write!(f, "{}^{}", name, pow)
            }
        };
        put(f, "zeta", self.zeta)?;
        put(f, "kappa", self.kappa)?;
        put(f, "eps2", self.eps2)?;
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_involution_symbolic() {
        let ring = ParamRing::default();
        let k2 = ParamPow {
            zeta: 0,
            kappa: 2,
            eps2: 0,
        };
        let (p, c) = ring.mul(&k2, &k2);
        assert!(p.is_unit());
        assert!(c.is_one());
    }

    #[test]
    fn kappa_concrete_minus() {
        let ring = ParamRing {
            kappa2: SquareValue::Minus,
            ..Default::default()
        };
        let k2 = ParamPow {
            zeta: 0,
            kappa: 2,
            eps2: 0,
        };
        let (p, c) = ring.normalize_pow(&k2);
        assert!(p.is_unit());
        assert_eq!(c, Coeff::from_int(-1));
    }

    #[test]
    fn coeff_field_ops() {
        let a = Coeff::i();
        let b = a.mul(&a);
        assert_eq!(b, Coeff::from_int(-1));
        let c = Coeff::from_ratio(3, 4);
        assert!(c.mul(&c.inv()).is_one());
    }
}
