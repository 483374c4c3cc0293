//! Exact linear algebra over a field: solving, kernels and affine solution
//! sets for sparse column systems keyed by arbitrary ordered row labels.
//!
//! Columns are preference-ordered by the caller; solutions produced by
//! `solve` use the earliest columns possible (free variables are zero), which
//! is what the deterministic chooser policies rely on.

use std::collections::BTreeMap;



use crate::scalar::Field;

/// Sparse column vector keyed by row label `R`.
pub type Col<R, K> = BTreeMap<R, K>;

/// Row-echelon state for incremental elimination.
pub struct Echelon<R: Ord + Clone, K: Field> {
    /// pivot row -> (reduced column, column expression in terms of inserted columns)
    pivots: BTreeMap<R, (Col<R, K>, Vec<(usize, K)>)>,
    inserted: usize,
}

impl<R: Ord + Clone, K: Field> Default for Echelon<R, K> {
    fn default() -> Self {
        Echelon {
            pivots: BTreeMap::new(),
            inserted: 0,
        }
    }
}

impl<R: Ord + Clone, K: Field> Echelon<R, K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reduces `col` against the current pivots. Returns the remainder and
    /// the combination of previously inserted columns used.
    fn reduce(&self, col: &Col<R, K>) -> (Col<R, K>, Vec<(usize, K)>) {
        let mut rem: Col<R, K> = col
            .iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(r, v)| (r.clone(), v.clone()))
            .collect();
        let mut combo: Vec<(usize, K)> = Vec::new();
        loop {
            let Some((row, coeff)) = rem.iter().next().map(|(r, v)| (r.clone(), v.clone()))
            else {
                break;
            };
            let Some((pivot_col, pivot_combo)) = self.pivots.get(&row) else {
                // `row` is the leading label and no pivot covers it; but a
                // later label might still reduce, so scan for the first
                // reducible row instead of bailing on the leading one.
                let mut hit = None;
                for (r, v) in rem.iter() {
                    if self.pivots.contains_key(r) {
                        hit = Some((r.clone(), v.clone()));
                        break;
                    }
                }
                match hit {
                    Some((r, v)) => {
                        let (pc, pcombo) = self.pivots.get(&r).unwrap();
                        let factor = v;
                        sub_scaled(&mut rem, pc, &factor);
                        for (i, c) in pcombo {
                            push_combo(&mut combo, *i, factor.clone() * c.clone());
                        }
                        continue;
                    }
                    None => break,
                }
            };
            let factor = coeff;
            sub_scaled(&mut rem, pivot_col, &factor);
            for (i, c) in pivot_combo {
                push_combo(&mut combo, *i, factor.clone() * c.clone());
            }
        }
        (rem, combo)
    }

    /// Inserts a column. Returns `None` if it was independent (a new pivot),
    /// or `Some(combination)` expressing it over earlier columns.
    pub fn insert(&mut self, col: &Col<R, K>) -> Option<Vec<(usize, K)>> {
        let idx = self.inserted;
        self.inserted += 1;
        let (mut rem, combo) = self.reduce(col);
        if rem.is_empty() {
            return Some(combo);
        }
        // Normalize so the leading coefficient is 1.
        let (lead_row, lead) = rem.iter().next().map(|(r, v)| (r.clone(), v.clone())).unwrap();
        let inv = lead.inv().expect("nonzero leading coefficient");
        for v in rem.values_mut() {
            *v = v.clone() * inv.clone();
        }
        let mut pivot_combo: Vec<(usize, K)> = combo
            .into_iter()
            .map(|(i, c)| (i, -(c * inv.clone())))
            .collect();
        push_combo(&mut pivot_combo, idx, inv);
        self.pivots.insert(lead_row, (rem, pivot_combo));
        None
    }

    /// Can `target` be written over the inserted columns? Returns the
    /// combination if so.
    pub fn express(&self, target: &Col<R, K>) -> Option<Vec<(usize, K)>> {
        let (rem, combo) = self.reduce(target);
        if rem.is_empty() {
            Some(combo)
        } else {
            None
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

fn sub_scaled<R: Ord + Clone, K: Field>(dst: &mut Col<R, K>, src: &Col<R, K>, factor: &K) {
    for (r, v) in src {
        let delta = factor.clone() * v.clone();
        match dst.entry(r.clone()) {
            std::collections::btree_map::Entry::Vacant(e) => {
                let neg = -delta;
                if !neg.is_zero() {
                    e.insert(neg);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let nv = e.get().clone() - delta;
                if nv.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = nv;
                }
            }
        }
    }
}

fn push_combo<K: Field>(combo: &mut Vec<(usize, K)>, idx: usize, coeff: K) {
    if coeff.is_zero() {
        return;
    }
    if let Some(entry) = combo.iter_mut().find(|(i, _)| *i == idx) {
        entry.1 = entry.1.clone() + coeff;
        if entry.1.is_zero() {
            combo.retain(|(_, c)| !c.is_zero());
        }
    } else {
        combo.push((idx, coeff));
    }
}

/// Solves `Σ λ_i col_i = target`; columns are tried in the given preference
/// order and unused columns get coefficient zero. Returns the coefficient
/// vector aligned with `cols`.
pub fn solve<R: Ord + Clone, K: Field>(
    cols: &[Col<R, K>],
    target: &Col<R, K>,
) -> Option<Vec<K>> {
    let mut ech = Echelon::new();
    let mut inserted_of_col: Vec<Option<usize>> = Vec::with_capacity(cols.len());
    let mut independent: Vec<usize> = Vec::new();
    for (i, c) in cols.iter().enumerate() {
        if ech.insert(c).is_none() {
            inserted_of_col.push(Some(independent.len()));
            independent.push(i);
        } else {
            inserted_of_col.push(None);
        }
    }
    // Inserted indices count every call to insert, including dependent ones;
    // remap to positions among the independent columns.
    let combo = ech.express(target)?;
    let mut out = vec![K::zero(); cols.len()];
    for (ins_idx, coeff) in combo {
        // ins_idx counts all insertions; find which column it was.
        let col_idx = ins_idx;
        debug_assert!(inserted_of_col[col_idx].is_some());
        out[col_idx] = coeff;
    }
    Some(out)
}

/// Kernel basis of the column system (vectors of column coefficients).
pub fn kernel<R: Ord + Clone, K: Field>(cols: &[Col<R, K>]) -> Vec<Vec<K>> {
    let mut ech = Echelon::new();
    let mut out = Vec::new();
    for (i, c) in cols.iter().enumerate() {
        if let Some(combo) = ech.insert(c) {
            let mut v = vec![K::zero(); cols.len()];
            v[i] = K::one();
            for (j, coeff) in combo {
                v[j] = v[j].clone() - coeff;
            }
            out.push(v);
        }
    }
    out
}
