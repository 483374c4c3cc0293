//! Exact group-ring arithmetic `K[G]`.

use std::collections::BTreeMap;



use crate::group::{GroupElem, GroupError, GroupSpec};
use crate::scalar::Scalar;

/// Finite formal `K`-combination of normal-form group elements. Zero
/// coefficients are never stored, so supports are canonical.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroupRingElem<K: Scalar> {
    terms: BTreeMap<GroupElem, K>,
}

impl<K: Scalar> Default for GroupRingElem<K> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<K: Scalar> GroupRingElem<K> {
    pub fn zero() -> Self {
        GroupRingElem {
            terms: BTreeMap::new(),
        }
    }

    pub fn one(spec: &GroupSpec) -> Self {
        Self::monomial(spec.id(), K::one())
    }

    pub fn monomial(g: GroupElem, coeff: K) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(g, coeff);
        }
        GroupRingElem { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (GroupElem, K)>) -> Self {
        let mut out = Self::zero();
        for (g, c) in it {
            out.add_term(g, c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, g: &GroupElem) -> K {
        self.terms.get(g).cloned().unwrap_or_else(K::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElem, &K)> {
        self.terms.iter()
    }

    /// Exactly the group elements with nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = &GroupElem> {
        self.terms.keys()
    }

    pub fn add_term(&mut self, g: GroupElem, c: K) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(g);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (g, c) in &rhs.terms {
            out.add_term(g.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (g, c) in &rhs.terms {
            out.add_term(g.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        GroupRingElem {
            terms: self
                .terms
                .iter()
                .map(|(g, c)| (g.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &K) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        GroupRingElem {
            terms: self
                .terms
                .iter()
                .map(|(g, c)| (g.clone(), c.clone() * k.clone()))
                .collect(),
        }
    }

    /// Convolution product; needs the spec for the group law.
    pub fn mul(&self, spec: &GroupSpec, rhs: &Self) -> Result<Self, GroupError> {
        let mut out = Self::zero();
        for (g, c) in &self.terms {
            spec.mul(g, g)?; // backend check once per left factor
            for (h, d) in &rhs.terms {
                let gh = spec.mul(g, h)?;
                out.add_term(gh, c.clone() * d.clone());
            }
        }
        Ok(out)
    }

    /// Left translation `g * self`.
    pub fn translate_left(&self, spec: &GroupSpec, g: &GroupElem) -> Self {
        GroupRingElem {
            terms: self
                .terms
                .iter()
                .map(|(h, c)| (spec.mul_unchecked(g, h), c.clone()))
                .collect(),
        }
    }

    /// Right translation `self * g`.
    pub fn translate_right(&self, spec: &GroupSpec, g: &GroupElem) -> Self {
        GroupRingElem {
            terms: self
                .terms
                .iter()
                .map(|(h, c)| (spec.mul_unchecked(h, g), c.clone()))
                .collect(),
        }
    }

    /// Sum of all coefficients (image under the augmentation `K[G] -> K`).
    pub fn coeff_sum(&self) -> K {
        self.terms
            .values()
            .fold(K::zero(), |acc, c| acc + c.clone())
    }
}

/// Fox derivative `∂w/∂(gen i)` of a word, evaluated in `K[G]` through the
/// quotient map (coefficients land on normal forms of the prefixes).
///
/// Rules: `∂(uv) = ∂u + u ∂v`, `∂(a) / ∂a = 1`, `∂(a^-1)/∂a = -a^-1`,
/// `∂b/∂a = 0`.
pub fn fox_derivative<K: Scalar>(
    spec: &GroupSpec,
    word: &[(usize, i64)],
    gen: usize,
) -> Result<GroupRingElem<K>, GroupError> {
    let mut result = GroupRingElem::zero();
    let mut prefix = spec.id();
    for &(i, e) in word {
        let g = spec.generator(i);
        if i == gen {
            if e > 0 {
                // ∂(a^e) = 1 + a + ... + a^(e-1)
                let mut p = prefix.clone();
                for _ in 0..e {
                    result.add_term(p.clone(), K::one());
                    p = spec.mul_unchecked(&p, &g);
                }
            } else {
                // ∂(a^-n) = -(a^-1 + ... + a^-n)
                let ginv = spec.inv_unchecked(&g);
                let mut p = prefix.clone();
                for _ in 0..(-e) {
                    p = spec.mul_unchecked(&p, &ginv);
                    result.add_term(p.clone(), -K::one());
                }
            }
        }
        let step = spec.pow(&g, e);
        prefix = spec.mul_unchecked(&prefix, &step);
    }
    Ok(result)
}
