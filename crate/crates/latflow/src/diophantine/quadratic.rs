//! Exact arithmetic in real quadratic fields: values a + b sqrt(disc) with
//! rational a, b over i128. Supports the comparisons and nearest-integer
//! rounding the best-approximation search needs, with every decision made
//! by integer sign tests.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use std::cmp::Ordering;

type Rat = Ratio<i128>;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadVal {
    pub a: Rat,
    pub b: Rat,
    /// Positive non-square discriminant.
    pub disc: i64,
}

impl QuadVal {
    pub fn new(a: Rat, b: Rat, disc: i64) -> Self {
        assert!(disc > 0, "discriminant must be positive");
        QuadVal { a, b, disc }
    }

    pub fn from_rational(a: Rat, disc: i64) -> Self {
        QuadVal::new(a, Rat::zero(), disc)
    }

    pub fn approx(&self) -> f64 {
        let to_f64 = |r: &Rat| *r.numer() as f64 / *r.denom() as f64;
        to_f64(&self.a) + to_f64(&self.b) * (self.disc as f64).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn mul_int(&self, k: i128) -> Self {
        QuadVal::new(self.a * k, self.b * k, self.disc)
    }

    pub fn sub_int(&self, k: i128) -> Self {
        QuadVal::new(self.a - Rat::from_integer(k), self.b, self.disc)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.disc, other.disc);
        QuadVal::new(self.a - other.a, self.b - other.b, self.disc)
    }

    pub fn neg(&self) -> Self {
        QuadVal::new(-self.a, -self.b, self.disc)
    }

    /// Exact sign of a + b sqrt(disc).
    pub fn sign(&self) -> Ordering {
        let (sa, sb) = (sign_of(&self.a), sign_of(&self.b));
        match (sa, sb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
            (Ordering::Less, Ordering::Less) => Ordering::Less,
            _ => {
                // opposite signs: compare a^2 with b^2 disc
                let lhs = self.a * self.a;
                let rhs = self.b * self.b * Rat::from_integer(self.disc as i128);
                match lhs.cmp(&rhs) {
                    Ordering::Greater => sa,
                    Ordering::Less => sb,
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    /// Compare |self| with |other| exactly via the sign of the square
    /// difference.
    pub fn abs_cmp(&self, other: &Self) -> Ordering {
        let d = self.square_minus(other);
        d.sign()
    }

    /// self^2 - other^2, still a quadratic value.
    fn square_minus(&self, other: &Self) -> QuadVal {
        let disc = Rat::from_integer(self.disc as i128);
        let a = self.a * self.a + self.b * self.b * disc
            - (other.a * other.a + other.b * other.b * disc);
        let b = Rat::from_integer(2) * (self.a * self.b - other.a * other.b);
        QuadVal::new(a, b, self.disc)
    }

    /// Nearest integer, resolved exactly. Half-integer values cannot occur
    /// for irrational inputs; the rational case rounds half away from zero.
    pub fn round(&self) -> i128 {
        let mut k = self.approx().round() as i128;
        let half = Rat::new(1, 2);
        // x - k must land in [-1/2, 1/2]
        for _ in 0..4 {
            let diff = self.sub_int(k);
            let below = QuadVal::new(diff.a + half, diff.b, self.disc);
            let above = QuadVal::new(diff.a - half, diff.b, self.disc);
            if below.sign() == Ordering::Less {
                k -= 1;
            } else if above.sign() == Ordering::Greater {
                k += 1;
            } else {
                return k;
            }
        }
        k
    }
}

fn sign_of(r: &Rat) -> Ordering {
    if r.is_zero() {
        Ordering::Equal
    } else if r.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// The golden-ratio conjugate (sqrt 5 - 1) / 2.
pub fn golden() -> QuadVal {
    QuadVal::new(Ratio::new(-1, 2), Ratio::new(1, 2), 5)
}

/// sqrt 2.
pub fn sqrt2() -> QuadVal {
    QuadVal::new(Ratio::from_integer(0), Ratio::from_integer(1), 2)
}
