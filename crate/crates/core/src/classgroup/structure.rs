// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClassGroupError;

/// A finite abelian group `Z/d_1 ⊕ … ⊕ Z/d_r` in invariant-factor form,
/// `d_1 | d_2 | … | d_r`, every `d_i >= 2`. The empty list is the trivial group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct AbelianGroupStructure {
    divisors: Vec<u64>,
}

impl AbelianGroupStructure {
    pub fn new(divisors: Vec<u64>) -> Result<Self, ClassGroupError> {
        let chain_ok =
            divisors.iter().all(|&d| d >= 2) && divisors.windows(2).all(|w| w[1] % w[0] == 0);
        if !chain_ok {
            return Err(ClassGroupError::InvalidStructure(divisors));
        }
        Ok(Self { divisors })
    }

    pub fn trivial() -> Self {
        Self::default()
    }

    /// Assembles the invariant factors from the cyclic-factor exponents of
    /// each Sylow subgroup: `exponents[ℓ]` lists `e` with `Z/ℓ^e` a summand.
    pub fn from_sylow_exponents(exponents: &BTreeMap<u64, Vec<u32>>) -> Self {
        let rank = exponents.values().map(Vec::len).max().unwrap_or(0);
        let mut divisors = vec![1u64; rank];
        for (&l, es) in exponents {
            let mut es = es.clone();
            es.sort_unstable_by(|a, b| b.cmp(a));
            // largest exponent goes to the largest invariant factor
            for (i, e) in es.into_iter().enumerate() {
                divisors[rank - 1 - i] *= l.pow(e);
            }
        }
        divisors.retain(|&d| d > 1);
        Self { divisors }
    }

    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    pub fn order(&self) -> u64 {
        self.divisors.iter().product()
    }

    pub fn rank(&self) -> usize {
        self.divisors.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.divisors.is_empty()
    }

    /// Dimension of `G / pG` over `F_p`.
    pub fn p_rank(&self, p: u64) -> u32 {
        self.divisors.iter().filter(|&&d| d % p == 0).count() as u32
    }

    /// Whether `G` contains a subgroup isomorphic to `(Z/m)^n`.
    pub fn contains_power(&self, m: u64, n: u32) -> bool {
        self.divisors.iter().filter(|&&d| d % m == 0).count() as u32 >= n
    }

    /// The `p`-Sylow subgroup.
    pub fn p_part(&self, p: u64) -> Self {
        let divisors = self
            .divisors
            .iter()
            .map(|&d| {
                let mut q = 1;
                let mut d = d;
                while d % p == 0 {
                    d /= p;
                    q *= p;
                }
                q
            })
            .filter(|&q| q > 1)
            .collect();
        Self { divisors }
    }

    pub fn is_p_group(&self, p: u64) -> bool {
        self.divisors.iter().all(|&d| {
            let mut d = d;
            while d % p == 0 {
                d /= p;
            }
            d == 1
        })
    }
}

impl TryFrom<Vec<u64>> for AbelianGroupStructure {
    type Error = ClassGroupError;

    fn try_from(v: Vec<u64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<AbelianGroupStructure> for Vec<u64> {
    fn from(g: AbelianGroupStructure) -> Self {
        g.divisors
    }
}

impl fmt::Display for AbelianGroupStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.divisors.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(d: &[u64]) -> AbelianGroupStructure {
        AbelianGroupStructure::new(d.to_vec()).unwrap()
    }

    #[test]
    fn p_rank_examples() {
        assert_eq!(g(&[3]).p_rank(3), 1);
        assert_eq!(g(&[2, 6]).p_rank(3), 1);
        assert_eq!(g(&[3, 3, 3]).p_rank(3), 3);
        assert_eq!(g(&[]).p_rank(3), 0);
    }

    #[test]
    fn contains_power_examples() {
        assert!(!g(&[3]).contains_power(3, 2));
        assert!(g(&[15, 15]).contains_power(15, 2));
        assert!(!g(&[3, 15]).contains_power(15, 2));
    }

    #[test]
    fn rejects_broken_chains() {
        assert!(AbelianGroupStructure::new(vec![2, 3]).is_err());
        assert!(AbelianGroupStructure::new(vec![1, 3]).is_err());
        assert!(serde_json::from_str::<AbelianGroupStructure>("[3,6]").is_ok());
        assert!(serde_json::from_str::<AbelianGroupStructure>("[4,6]").is_err());
    }

    #[test]
    fn assembles_invariant_factors() {
        let mut ex = BTreeMap::new();
        ex.insert(2, vec![1, 2]);
        ex.insert(3, vec![1]);
        ex.insert(5, vec![1, 1, 1]);
        let s = AbelianGroupStructure::from_sylow_exponents(&ex);
        assert_eq!(s.divisors(), &[5, 10, 60]);
        assert_eq!(s.order(), 2 * 4 * 3 * 125);
        assert_eq!(s.p_part(2).divisors(), &[2, 4]);
        assert!(s.p_part(5).is_p_group(5));
        assert!(!s.is_p_group(5));
    }
}
