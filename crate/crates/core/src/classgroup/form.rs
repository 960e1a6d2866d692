// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClassGroupError;
use crate::arith::{ext_gcd, FundamentalDiscriminant};

/// A positive definite binary quadratic form `a x² + b xy + c y²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

fn narrow(v: i128) -> Result<i64, ClassGroupError> {
    i64::try_from(v).map_err(|_| ClassGroupError::Overflow)
}

impl QuadraticForm {
    /// Builds `(a, b, c)` checking `a > 0` and `b² - 4ac = Δ`.
    pub fn new(
        a: i64,
        b: i64,
        c: i64,
        delta: FundamentalDiscriminant,
    ) -> Result<Self, ClassGroupError> {
        let f = Self { a, b, c };
        if a <= 0 || f.discriminant() != delta.value() as i128 {
            return Err(ClassGroupError::InvalidForm {
                a,
                b,
                c,
                delta: delta.value(),
            });
        }
        Ok(f)
    }

    pub fn discriminant(&self) -> i128 {
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        b * b - 4 * a * c
    }

    /// The principal form, identity of the class group.
    pub fn principal(delta: FundamentalDiscriminant) -> Self {
        let d = delta.value();
        let b = d.rem_euclid(2);
        Self {
            a: 1,
            b,
            c: (b * b - d) / 4,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.a,
            b: -self.b,
            c: self.c,
        }
        .reduce()
        .expect("inverse of a reduced form stays in range")
    }

    pub fn is_reduced(&self) -> bool {
        let Self { a, b, c } = *self;
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    /// Gauss reduction to the unique reduced representative of the class.
    pub fn reduce(self) -> Result<Self, ClassGroupError> {
        let (mut a, mut b, mut c) = (self.a as i128, self.b as i128, self.c as i128);
        loop {
            if !(-a < b && b <= a) {
                // b + 2ak lands in (-a, a]
                let k = (a - b).div_euclid(2 * a);
                c += k * (a * k + b);
                b += 2 * a * k;
            }
            if a > c {
                std::mem::swap(&mut a, &mut c);
                b = -b;
                continue;
            }
            if a == c && b < 0 {
                b = -b;
            }
            break;
        }
        Ok(Self {
            a: narrow(a)?,
            b: narrow(b)?,
            c: narrow(c)?,
        })
    }

    /// Dirichlet composition followed by reduction.
    pub fn compose(&self, other: &Self) -> Result<Self, ClassGroupError> {
        let disc = self.discriminant();
        if disc != other.discriminant() {
            return Err(ClassGroupError::DiscriminantMismatch {
                left: disc as i64,
                right: other.discriminant() as i64,
            });
        }
        let (f1, f2) = if self.a > other.a {
            (other, self)
        } else {
            (self, other)
        };
        let (a1, b1) = (f1.a as i128, f1.b as i128);
        let (a2, b2, c2) = (f2.a as i128, f2.b as i128, f2.c as i128);
        let s = (b1 + b2) / 2;
        let n = b2 - s;
        let (y1, d) = if a2 % a1 == 0 {
            (0, a1)
        } else {
            let (g, u, _) = ext_gcd(a2, a1);
            (u, g)
        };
        let (x2, y2, d1) = if s % d == 0 {
            (0, -1, d)
        } else {
            let (g, u, v) = ext_gcd(s, d);
            (u, -v, g)
        };
        let v1 = a1 / d1;
        let v2 = a2 / d1;
        let r = (y1 * y2 * n - x2 * c2).rem_euclid(v1);
        let b3 = b2 + 2 * v2 * r;
        let a3 = v1 * v2;
        let num = b3 * b3 - disc;
        debug_assert_eq!(num % (4 * a3), 0);
        let c3 = num / (4 * a3);
        Self {
            a: narrow(a3)?,
            b: narrow(b3)?,
            c: narrow(c3)?,
        }
        .reduce()
    }

    pub fn pow(&self, mut e: u64) -> Result<Self, ClassGroupError> {
        let d = self.discriminant();
        let b0 = d.rem_euclid(2) as i64;
        let mut acc = Self {
            a: 1,
            b: b0,
            c: narrow((b0 as i128 - d) / 4)?,
        };
        let mut base = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn is_principal(&self) -> bool {
        self.a == 1
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}
