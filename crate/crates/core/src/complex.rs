//! Based free chain complexes over group rings.
//!
//! A complex stores, per dimension up to a skeleton bound, a list of named
//! basis symbols together with boundary chains and an augmentation into a
//! finite-rank trivial module. Cells are translates `g·x` of basis symbols;
//! chains are finite combinations of cells. `∂∂ = 0` and `ε∂ = 0` are
//! validated at construction and can be re-checked on demand.

use std::collections::BTreeMap;


use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{GroupElem, GroupError, GroupSpec, Word};
use crate::groupring::{fox_derivative, GroupRingElem};
use crate::scalar::{Field, Scalar};

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("boundary of `{cell}` has wrong dimension")]
    DimensionMismatch { cell: String },
    #[error("∂∂ ≠ 0 at basis cell `{cell}`")]
    BoundarySquare { cell: String },
    #[error("ε∂ ≠ 0 at basis cell `{cell}`")]
    AugmentationBoundary { cell: String },
    #[error("inadmissible complex: {0}")]
    Inadmissible(String),
    #[error("cannot repair admissibility in dimension {dim}: {reason}")]
    Unrepairable { dim: usize, reason: String },
    #[error("expansion precondition failed: {0}")]
    Expansion(String),
    #[error("{0}")]
    Invalid(String),
}

/// The module `A` being resolved: `K^rank` with trivial `G`-action. `rank`
/// zero is the zero module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDescr {
    pub rank: usize,
}

impl ModuleDescr {
    pub fn trivial() -> Self {
        ModuleDescr { rank: 1 }
    }
}

/// A cell `y = g·x`: translate of the `sym`-th basis symbol in dimension
/// `dim`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub dim: usize,
    pub sym: usize,
    pub g: GroupElem,
}

/// Finite homogeneous chain; keys are `(basis symbol, translate)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Chain<K: Scalar> {
    pub dim: usize,
    terms: BTreeMap<(usize, GroupElem), K>,
}

impl<K: Scalar> Chain<K> {
    pub fn zero(dim: usize) -> Self {
        Chain {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn cell(cell: &Cell) -> Self {
        Self::monomial(cell.dim, cell.sym, cell.g.clone(), K::one())
    }

    pub fn monomial(dim: usize, sym: usize, g: GroupElem, coeff: K) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert((sym, g), coeff);
        }
        Chain { dim, terms }
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

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, GroupElem), &K)> {
        self.terms.iter()
    }

    pub fn support_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.terms.keys().map(move |(sym, g)| Cell {
            dim: self.dim,
            sym: *sym,
            g: g.clone(),
        })
    }

    pub fn coeff(&self, sym: usize, g: &GroupElem) -> K {
        self.terms
            .get(&(sym, g.clone()))
            .cloned()
            .unwrap_or_else(K::zero)
    }

    pub fn add_term(&mut self, sym: usize, g: GroupElem, c: K) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry((sym, g)) {
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
        assert_eq!(self.dim, rhs.dim, "chain dimensions differ");
        let mut out = self.clone();
        for ((s, g), c) in &rhs.terms {
            out.add_term(*s, g.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        Chain {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, k: &K) -> Self {
        if k.is_zero() {
            return Chain::zero(self.dim);
        }
        Chain {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(key, c)| (key.clone(), c.clone() * k.clone()))
                .collect(),
        }
    }

    /// Left translation `g·c`.
    pub fn translate(&self, spec: &GroupSpec, g: &GroupElem) -> Self {
        Chain {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|((s, h), c)| ((*s, spec.mul_unchecked(g, h)), c.clone()))
                .collect(),
        }
    }

    /// Group-ring coordinates per basis symbol.
    pub fn ring_coords(&self) -> BTreeMap<usize, GroupRingElem<K>> {
        let mut out: BTreeMap<usize, GroupRingElem<K>> = BTreeMap::new();
        for ((s, g), c) in &self.terms {
            out.entry(*s)
                .or_default()
                .add_term(g.clone(), c.clone());
        }
        out
    }

    pub fn from_ring_coords(
        dim: usize,
        spec: &GroupSpec,
        coords: impl IntoIterator<Item = (usize, GroupRingElem<K>)>,
    ) -> Self {
        let _ = spec;
        let mut out = Chain::zero(dim);
        for (s, r) in coords {
            for (g, c) in r.iter() {
                out.add_term(s, g.clone(), c.clone());
            }
        }
        out
    }
}

/// Control-map extension rule recorded by elementary expansions: the new
/// basis symbol inherits the union of control images of the listed cells.
#[derive(Clone, Debug)]
pub struct ControlRule {
    pub dim: usize,
    pub sym: usize,
    pub from_cells: Vec<Cell>,
}

/// Based free resolution skeleton.
#[derive(Clone, Debug)]
pub struct ChainComplex<K: Scalar> {
    pub spec: GroupSpec,
    pub module: ModuleDescr,
    /// Basis symbol names per dimension `0..=top_dim`.
    basis: Vec<Vec<String>>,
    /// `boundary[d][i]` is `∂` of symbol `i` in dimension `d+1`.
    boundary: Vec<Vec<Chain<K>>>,
    /// `augmentation[i]` is `ε` of symbol `i` in dimension 0, in `K^rank`.
    augmentation: Vec<Vec<K>>,
    /// Control extension rules for cells added by expansions.
    pub control_rules: Vec<ControlRule>,
}

/// Presentation data feeding `fox_resolution`.
#[derive(Clone, Debug)]
pub struct Presentation {
    pub spec: GroupSpec,
    pub relators: Vec<Word>,
    pub module: ModuleDescr,
}

impl Presentation {
    /// Standard presentation of a backend with its preset relators and the
    /// trivial module.
    pub fn standard(spec: GroupSpec) -> Self {
        let relators = spec.preset_relators();
        Presentation {
            spec,
            relators,
            module: ModuleDescr::trivial(),
        }
    }
}

impl<K: Scalar> ChainComplex<K> {
    pub fn top_dim(&self) -> usize {
        self.basis.len() - 1
    }

    pub fn rank(&self, dim: usize) -> usize {
        self.basis.get(dim).map_or(0, |b| b.len())
    }

    pub fn basis_name(&self, dim: usize, sym: usize) -> &str {
        &self.basis[dim][sym]
    }

    pub fn basis_names(&self, dim: usize) -> &[String] {
        &self.basis[dim]
    }

    /// Basis cells (identity translates) of a dimension.
    pub fn basis_cells(&self, dim: usize) -> Vec<Cell> {
        (0..self.rank(dim))
            .map(|sym| Cell {
                dim,
                sym,
                g: self.spec.id(),
            })
            .collect()
    }

    pub fn boundary_of_sym(&self, dim: usize, sym: usize) -> &Chain<K> {
        &self.boundary[dim - 1][sym]
    }

    pub fn augmentation_of_sym(&self, sym: usize) -> &[K] {
        &self.augmentation[sym]
    }

    /// `∂c` for a chain of dimension ≥ 1.
    pub fn boundary(&self, c: &Chain<K>) -> Chain<K> {
        assert!(c.dim >= 1, "boundary of a 0-chain");
        let mut out = Chain::zero(c.dim - 1);
        for ((s, g), k) in c.iter() {
            let base = self.boundary_of_sym(c.dim, *s);
            for ((ts, h), c2) in base.iter() {
                out.add_term(*ts, self.spec.mul_unchecked(g, h), k.clone() * c2.clone());
            }
        }
        out
    }

    /// `ε(c)` for a 0-chain; the module action is trivial, so translates
    /// augment like their basis symbols.
    pub fn augment(&self, c: &Chain<K>) -> Vec<K> {
        assert_eq!(c.dim, 0, "augmentation of nonzero-dimensional chain");
        let mut out = vec![K::zero(); self.module.rank];
        for ((s, _g), k) in c.iter() {
            for (slot, v) in out.iter_mut().zip(self.augmentation[*s].iter()) {
                *slot = slot.clone() + k.clone() * v.clone();
            }
        }
        out
    }

    /// Validated construction from explicit tables.
    pub fn from_tables(
        spec: GroupSpec,
        module: ModuleDescr,
        basis: Vec<Vec<String>>,
        boundary: Vec<Vec<Chain<K>>>,
        augmentation: Vec<Vec<K>>,
    ) -> Result<Self, ComplexError> {
        spec.validate()?;
        if basis.is_empty() {
            return Err(ComplexError::Invalid("need at least dimension 0".into()));
        }
        if boundary.len() + 1 != basis.len() {
            return Err(ComplexError::Invalid(
                "boundary tables must cover dimensions 1..=top".into(),
            ));
        }
        if augmentation.len() != basis[0].len() {
            return Err(ComplexError::Invalid(
                "augmentation table must match X₀".into(),
            ));
        }
        for eps in &augmentation {
            if eps.len() != module.rank {
                return Err(ComplexError::Invalid(
                    "augmentation vectors must have the module rank".into(),
                ));
            }
        }
        let cx = ChainComplex {
            spec,
            module,
            basis,
            boundary,
            augmentation,
            control_rules: Vec::new(),
        };
        cx.validate()?;
        Ok(cx)
    }

    /// Re-checks `∂∂ = 0`, `ε∂ = 0` and dimension consistency.
    pub fn validate(&self) -> Result<(), ComplexError> {
        for d in 1..=self.top_dim() {
            for (i, b) in self.boundary[d - 1].iter().enumerate() {
                if b.dim + 1 != d {
                    return Err(ComplexError::DimensionMismatch {
                        cell: self.basis[d][i].clone(),
                    });
                }
                for ((s, _), _) in b.iter() {
                    if *s >= self.rank(d - 1) {
                        return Err(ComplexError::DimensionMismatch {
                            cell: self.basis[d][i].clone(),
                        });
                    }
                }
                if d >= 2 {
                    if !self.boundary(b).is_zero() {
                        return Err(ComplexError::BoundarySquare {
                            cell: self.basis[d][i].clone(),
                        });
                    }
                } else {
                    let eps = self.augment(b);
                    if eps.iter().any(|v| !v.is_zero()) {
                        return Err(ComplexError::AugmentationBoundary {
                            cell: self.basis[d][i].clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Admissibility: no basis cell killed by `∂` (dim ≥ 1) or by `ε`
    /// (dim 0). Returns the offending cells, empty when admissible.
    pub fn admissibility_defects(&self) -> Vec<Cell> {
        let mut bad = Vec::new();
        for (sym, eps) in self.augmentation.iter().enumerate() {
            if eps.iter().all(|v| v.is_zero()) {
                bad.push(Cell {
                    dim: 0,
                    sym,
                    g: self.spec.id(),
                });
            }
        }
        for d in 1..=self.top_dim() {
            for (sym, b) in self.boundary[d - 1].iter().enumerate() {
                if b.is_zero() {
                    bad.push(Cell {
                        dim: d,
                        sym,
                        g: self.spec.id(),
                    });
                }
            }
        }
        bad
    }

    pub fn is_admissible(&self) -> bool {
        self.admissibility_defects().is_empty()
    }

    /// Repairs admissibility by the basis substitution `x ↦ x + x'` when a
    /// sibling `x'` with nonzero boundary (resp. augmentation) exists, and
    /// otherwise deletes cells that no higher boundary uses. Dimensions
    /// where neither repair applies are reported as errors.
    pub fn make_admissible(&self) -> Result<Self, ComplexError> {
        let mut cx = self.clone();
        // Recompute defects after each repair: deletions shift indices.
        let mut guard = 0usize;
        while let Some(defect) = cx.admissibility_defects().into_iter().next() {
            guard += 1;
            if guard > 10_000 {
                return Err(ComplexError::Inadmissible("repair did not converge".into()));
            }
            let d = defect.dim;
            let sym = defect.sym;
            let donor = if d == 0 {
                (0..cx.rank(0)).find(|s| {
                    *s != sym && cx.augmentation[*s].iter().any(|v| !v.is_zero())
                })
            } else {
                (0..cx.rank(d)).find(|s| *s != sym && !cx.boundary[d - 1][*s].is_zero())
            };
            if let Some(donor) = donor {
                // x ↦ x + x': only the tables indexed by x change.
                if d == 0 {
                    let add = cx.augmentation[donor].clone();
                    for (slot, v) in cx.augmentation[sym]
                        .clone()
                        .into_iter()
                        .zip(add)
                        .enumerate()
                        .map(|(i, (a, b))| (i, a + b))
                    {
                        cx.augmentation[sym][slot] = v;
                    }
                    // boundaries of 1-cells now see x + x' where they saw x:
                    // rewrite occurrences of sym by sym - donor? The basis
                    // substitution keeps ∂ tables expressed in the new basis
                    // unchanged except where the old x appears.
                    let subst = |chain: &Chain<K>| -> Chain<K> {
                        let mut out = Chain::zero(chain.dim);
                        for ((s, g), c) in chain.iter() {
                            out.add_term(*s, g.clone(), c.clone());
                            if *s == sym {
                                out.add_term(donor, g.clone(), -c.clone());
                            }
                        }
                        out
                    };
                    if cx.top_dim() >= 1 {
                        cx.boundary[0] = cx.boundary[0].iter().map(subst).collect();
                    }
                } else {
                    let add = cx.boundary[d - 1][donor].clone();
                    cx.boundary[d - 1][sym] = cx.boundary[d - 1][sym].add(&add);
                    let subst = |chain: &Chain<K>| -> Chain<K> {
                        let mut out = Chain::zero(chain.dim);
                        for ((s, g), c) in chain.iter() {
                            out.add_term(*s, g.clone(), c.clone());
                            if *s == sym {
                                out.add_term(donor, g.clone(), -c.clone());
                            }
                        }
                        out
                    };
                    if cx.top_dim() > d {
                        cx.boundary[d] = cx.boundary[d].iter().map(subst).collect();
                    }
                }
            } else {
                // No donor: delete if unused by higher boundaries.
                let used = if d < cx.top_dim() {
                    cx.boundary[d]
                        .iter()
                        .any(|b| b.iter().any(|((s, _), _)| *s == sym))
                } else {
                    false
                };
                if used {
                    return Err(ComplexError::Unrepairable {
                        dim: d,
                        reason: format!(
                            "cell `{}` has zero boundary, no admissible sibling, and is used in dimension {}",
                            cx.basis[d][sym],
                            d + 1
                        ),
                    });
                }
                cx = cx.delete_cell(d, sym);
            }
        }
        cx.validate()?;
        if !cx.is_admissible() {
            return Err(ComplexError::Inadmissible(
                "repair did not converge".into(),
            ));
        }
        Ok(cx)
    }

    fn delete_cell(&self, dim: usize, sym: usize) -> Self {
        let mut cx = self.clone();
        cx.basis[dim].remove(sym);
        if dim == 0 {
            cx.augmentation.remove(sym);
        } else {
            cx.boundary[dim - 1].remove(sym);
        }
        let remap = |chain: &Chain<K>| -> Chain<K> {
            let mut out = Chain::zero(chain.dim);
            for ((s, g), c) in chain.iter() {
                let ns = if *s > sym { *s - 1 } else { *s };
                out.add_term(ns, g.clone(), c.clone());
            }
            out
        };
        if cx.top_dim() >= dim + 1 {
            cx.boundary[dim] = cx.boundary[dim].iter().map(remap).collect();
        }
        cx
    }

    /// Elementary expansion: given a cell `x` (any translate; normalized to
    /// its basis representative), a chain `c` matching it under `ε` resp.
    /// `∂`, and `d` with `∂d = x − c`, adds new basis cells `ξ` with
    /// `∂ξ = x − c` and `η` with `∂η = d − ξ`, recording the control
    /// extension rule for both.
    pub fn elementary_expansion(
        &self,
        x: &Cell,
        c: &Chain<K>,
        d: &Chain<K>,
    ) -> Result<Self, ComplexError> {
        let k = x.dim;
        if c.dim != k || d.dim != k + 1 {
            return Err(ComplexError::Expansion(
                "chain dimensions must match the expanded cell".into(),
            ));
        }
        // Normalize to the basis representative of x's orbit.
        let ginv = self.spec.inv_unchecked(&x.g);
        let c0 = c.translate(&self.spec, &ginv);
        let d0 = d.translate(&self.spec, &ginv);
        let x_chain = Chain::monomial(k, x.sym, self.spec.id(), K::one());

        if k == 0 {
            let ex = self.augment(&x_chain);
            let ec = self.augment(&c0);
            if ex != ec {
                return Err(ComplexError::Expansion("ε(c) ≠ ε(x)".into()));
            }
        } else {
            let bx = self.boundary(&x_chain);
            let bc = self.boundary(&c0);
            if bx != bc {
                return Err(ComplexError::Expansion("∂c ≠ ∂x".into()));
            }
        }
        let xi_boundary = x_chain.sub(&c0);
        if !self.boundary(&d0).eq(&xi_boundary) {
            return Err(ComplexError::Expansion("∂d ≠ x − c".into()));
        }

        let mut cx = self.clone();
        while cx.top_dim() < k + 2 {
            cx.basis.push(Vec::new());
            cx.boundary.push(Vec::new());
        }
        let xi_sym = cx.rank(k + 1);
        let xi_name = format!("xi{}_{}", k + 1, xi_sym);
        cx.basis[k + 1].push(xi_name);
        cx.boundary[k].push(xi_boundary.clone());

        let eta_sym = cx.rank(k + 2);
        let eta_name = format!("eta{}_{}", k + 2, eta_sym);
        cx.basis[k + 2].push(eta_name);
        let mut xi_chain = Chain::zero(k + 1);
        xi_chain.add_term(xi_sym, cx.spec.id(), K::one());
        cx.boundary[k + 1].push(d0.sub(&xi_chain));

        // Control extensions: h'(ξ) = h(x) ∪ h(c), h'(η) = h(x) ∪ h(c) ∪ h(d).
        let mut xi_from: Vec<Cell> = vec![Cell {
            dim: k,
            sym: x.sym,
            g: cx.spec.id(),
        }];
        xi_from.extend(c0.support_cells());
        let mut eta_from = xi_from.clone();
        eta_from.extend(d0.support_cells());
        cx.control_rules.push(ControlRule {
            dim: k + 1,
            sym: xi_sym,
            from_cells: xi_from,
        });
        cx.control_rules.push(ControlRule {
            dim: k + 2,
            sym: eta_sym,
            from_cells: eta_from,
        });

        cx.validate()?;
        if !cx.is_admissible() {
            return Err(ComplexError::Inadmissible(
                "expansion produced a cell with zero boundary (degenerate c = x?)".into(),
            ));
        }
        Ok(cx)
    }

    /// Block sum of `copies` copies of the complex, resolving `A^copies`.
    pub fn direct_power(&self, copies: usize) -> Result<Self, ComplexError> {
        let basis = self
            .basis
            .iter()
            .map(|names| {
                (0..copies)
                    .flat_map(|c| names.iter().map(move |n| format!("{n}#{c}")))
                    .collect::<Vec<_>>()
            })
            .collect();
        let boundary = self
            .boundary
            .iter()
            .enumerate()
            .map(|(d, chains)| {
                let lower_rank = self.rank(d);
                (0..copies)
                    .flat_map(|c| {
                        chains.iter().map(move |b| {
                            let mut out = Chain::zero(b.dim);
                            for ((s, g), k) in b.iter() {
                                out.add_term(s + c * lower_rank, g.clone(), k.clone());
                            }
                            out
                        })
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let rank = self.module.rank;
        let augmentation = (0..copies)
            .flat_map(|c| {
                self.augmentation.iter().map(move |eps| {
                    let mut v = vec![K::zero(); rank * copies];
                    for (i, x) in eps.iter().enumerate() {
                        v[c * rank + i] = x.clone();
                    }
                    v
                })
            })
            .collect();
        ChainComplex::from_tables(
            self.spec.clone(),
            ModuleDescr {
                rank: rank * copies,
            },
            basis,
            boundary,
            augmentation,
        )
    }

    /// Transports a complex whose group is an iterated product of free
    /// abelian groups onto the flat `Z^d` spec. Basis and tables are
    /// preserved; only group-element labels change.
    pub fn relabel_flat_abelian(&self, target: &GroupSpec) -> Result<Self, ComplexError> {
        let map_chain = |c: &Chain<K>| -> Result<Chain<K>, ComplexError> {
            let mut out = Chain::zero(c.dim);
            for ((s, g), k) in c.iter() {
                let v = self.spec.flatten_abelian(g).ok_or_else(|| {
                    ComplexError::Invalid("complex group is not a product of free abelians".into())
                })?;
                out.add_term(*s, GroupElem::FreeAbelian(v), k.clone());
            }
            Ok(out)
        };
        let boundary = self
            .boundary
            .iter()
            .map(|dims| dims.iter().map(map_chain).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        ChainComplex::from_tables(
            target.clone(),
            self.module.clone(),
            self.basis.clone(),
            boundary,
            self.augmentation.clone(),
        )
    }
}

/// The 2-skeleton resolution of the trivial module from a presentation via
/// Fox calculus: `F₀ = KG·x₀` with `ε(x₀) = 1`, `∂x_a = (a−1)x₀` per
/// generator, `∂x_r = Σ_a (∂r/∂a)·x_a` per relator.
pub fn fox_resolution<K: Scalar>(p: &Presentation) -> Result<ChainComplex<K>, ComplexError> {
    if p.module.rank != 1 {
        return Err(ComplexError::Invalid(
            "fox_resolution requires the trivial module; use from_tables otherwise".into(),
        ));
    }
    let spec = &p.spec;
    spec.validate()?;
    for r in &p.relators {
        let nf = spec.normal_form(r)?;
        if !nf.is_identity() {
            return Err(ComplexError::Invalid(format!(
                "relator does not vanish in the group: {:?}",
                r
            )));
        }
    }
    let n_gens = spec.gens.len();
    let basis0 = vec!["x0".to_string()];
    let basis1: Vec<String> = spec.gens.iter().map(|g| format!("x_{g}")).collect();
    let basis2: Vec<String> = (0..p.relators.len()).map(|i| format!("x_r{i}")).collect();

    let mut boundary1 = Vec::with_capacity(n_gens);
    for i in 0..n_gens {
        let mut b = Chain::zero(0);
        b.add_term(0, spec.generator(i), K::one());
        b.add_term(0, spec.id(), -K::one());
        boundary1.push(b);
    }
    let mut boundary2 = Vec::with_capacity(p.relators.len());
    for r in &p.relators {
        let mut b = Chain::zero(1);
        for i in 0..n_gens {
            let del: GroupRingElem<K> = fox_derivative(spec, r, i)?;
            for (g, c) in del.iter() {
                b.add_term(i, g.clone(), c.clone());
            }
        }
        boundary2.push(b);
    }

    let basis = if p.relators.is_empty() {
        vec![basis0, basis1]
    } else {
        vec![basis0, basis1, basis2]
    };
    let boundary = if p.relators.is_empty() {
        vec![boundary1]
    } else {
        vec![boundary1, boundary2]
    };
    ChainComplex::from_tables(
        spec.clone(),
        p.module.clone(),
        basis,
        boundary,
        vec![vec![K::one()]],
    )
}

/// Index bookkeeping for tensor complexes: per dimension, the list of
/// `(left dim, left sym, right sym)` triples in basis order.
#[derive(Clone, Debug)]
pub struct TensorIndex {
    pub pairs: Vec<Vec<(usize, usize, usize)>>,
}

impl TensorIndex {
    pub fn position(&self, dim: usize, p: usize, i: usize, j: usize) -> Option<usize> {
        self.pairs[dim].iter().position(|t| *t == (p, i, j))
    }
}

/// `F ⊗_K F'` over `K(G×H)` with the Koszul sign
/// `∂(x⊗x') = ∂x⊗x' + (−1)^{|x|} x⊗∂x'`, truncated at `max_dim`.
pub fn tensor_complex<K: Field>(
    left: &ChainComplex<K>,
    right: &ChainComplex<K>,
    max_dim: usize,
) -> Result<(ChainComplex<K>, TensorIndex), ComplexError> {
    let spec = GroupSpec::product(left.spec.clone(), right.spec.clone());
    let mut pairs: Vec<Vec<(usize, usize, usize)>> = Vec::new();
    for n in 0..=max_dim {
        let mut layer = Vec::new();
        for p in 0..=n.min(left.top_dim()) {
            let q = n - p;
            if q > right.top_dim() {
                continue;
            }
            for i in 0..left.rank(p) {
                for j in 0..right.rank(q) {
                    layer.push((p, i, j));
                }
            }
        }
        pairs.push(layer);
    }
    while pairs.len() > 1 && pairs.last().is_some_and(|l| l.is_empty()) {
        pairs.pop();
    }
    let index = TensorIndex { pairs };

    let embed_left = |g: &GroupElem| -> GroupElem {
        GroupElem::Product(Box::new(g.clone()), Box::new(right.spec.id()))
    };
    let embed_right = |h: &GroupElem| -> GroupElem {
        GroupElem::Product(Box::new(left.spec.id()), Box::new(h.clone()))
    };

    let mut basis = Vec::new();
    let mut boundary = Vec::new();
    for (n, layer) in index.pairs.iter().enumerate() {
        basis.push(
            layer
                .iter()
                .map(|(p, i, j)| {
                    format!(
                        "{}⊗{}",
                        left.basis_name(*p, *i),
                        right.basis_name(n - p, *j)
                    )
                })
                .collect::<Vec<_>>(),
        );
        if n == 0 {
            continue;
        }
        let mut layer_boundary = Vec::new();
        for (p, i, j) in layer {
            let q = n - p;
            let mut b = Chain::zero(n - 1);
            if *p >= 1 {
                for ((s, g), c) in left.boundary_of_sym(*p, *i).iter() {
                    if let Some(t) = index.position(n - 1, p - 1, *s, *j) {
                        b.add_term(t, embed_left(g), c.clone());
                    }
                }
            }
            if q >= 1 {
                let sign = if p % 2 == 0 { K::one() } else { -K::one() };
                for ((s, h), c) in right.boundary_of_sym(q, *j).iter() {
                    if let Some(t) = index.position(n - 1, *p, *i, *s) {
                        b.add_term(t, embed_right(h), sign.clone() * c.clone());
                    }
                }
            }
            layer_boundary.push(b);
        }
        boundary.push(layer_boundary);
    }

    let rank = left.module.rank * right.module.rank;
    let mut augmentation = Vec::new();
    for (_, i, j) in &index.pairs[0] {
        let mut v = Vec::with_capacity(rank);
        for a in left.augmentation_of_sym(*i) {
            for b in right.augmentation_of_sym(*j) {
                v.push(a.clone() * b.clone());
            }
        }
        augmentation.push(v);
    }

    let cx = ChainComplex::from_tables(
        spec,
        ModuleDescr { rank },
        basis,
        boundary,
        augmentation,
    )?;
    Ok((cx, index))
}

/// Embeds a pure tensor `c ⊗ c'` into the tensor complex.
pub fn tensor_chain<K: Field>(
    cx: &ChainComplex<K>,
    index: &TensorIndex,
    left_spec: &GroupSpec,
    right_spec: &GroupSpec,
    c: &Chain<K>,
    c2: &Chain<K>,
) -> Chain<K> {
    let _ = (left_spec, right_spec);
    let n = c.dim + c2.dim;
    let mut out = Chain::zero(n);
    for ((s, g), k) in c.iter() {
        for ((s2, h), k2) in c2.iter() {
            if let Some(t) = index.position(n, c.dim, *s, *s2) {
                let gh = GroupElem::Product(Box::new(g.clone()), Box::new(h.clone()));
                out.add_term(t, gh, k.clone() * k2.clone());
            }
        }
    }
    let _ = cx;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use crate::scalar::Scalar;

    type Q = BigRational;

    fn q(n: i64) -> Q {
        Q::from_i64(n)
    }

    pub(crate) fn z2_complex() -> ChainComplex<Q> {
        fox_resolution(&Presentation::standard(GroupSpec::free_abelian(&["a", "b"]))).unwrap()
    }

    #[test]
    fn fox_z2_matches_hand_computation() {
        let cx = z2_complex();
        assert_eq!(cx.rank(0), 1);
        assert_eq!(cx.rank(1), 2);
        assert_eq!(cx.rank(2), 1);
        let spec = cx.spec.clone();
        let b = cx.boundary_of_sym(2, 0);
        // ∂x_r = (1−b)x_a + (a−1)x_b
        assert_eq!(b.coeff(0, &spec.id()), q(1));
        assert_eq!(b.coeff(0, &spec.generator(1)), q(-1));
        assert_eq!(b.coeff(1, &spec.generator(0)), q(1));
        assert_eq!(b.coeff(1, &spec.id()), q(-1));
        cx.validate().unwrap();
        assert!(cx.is_admissible());
    }

    #[test]
    fn fox_free2_has_no_two_cells() {
        let cx: ChainComplex<Q> =
            fox_resolution(&Presentation::standard(GroupSpec::free(&["a", "b"]))).unwrap();
        assert_eq!(cx.top_dim(), 1);
        assert_eq!(cx.rank(1), 2);
        assert!(cx.is_admissible());
    }

    #[test]
    fn fox_bs_matches_hand_computation() {
        let cx: ChainComplex<Q> =
            fox_resolution(&Presentation::standard(GroupSpec::baumslag_solitar(2))).unwrap();
        let spec = cx.spec.clone();
        let b = cx.boundary_of_sym(2, 0);
        // ∂x_r = (t − 1 − a)x_a + (1 − a²)x_t
        assert_eq!(b.coeff(0, &spec.generator(1)), q(1));
        assert_eq!(b.coeff(0, &spec.id()), q(-1));
        assert_eq!(b.coeff(0, &spec.generator(0)), q(-1));
        assert_eq!(b.coeff(1, &spec.id()), q(1));
        assert_eq!(b.coeff(1, &spec.pow(&spec.generator(0), 2)), q(-1));
    }

    #[test]
    fn tables_roundtrip_and_bad_dimension_rejected() {
        let cx = z2_complex();
        let rebuilt = ChainComplex::from_tables(
            cx.spec.clone(),
            cx.module.clone(),
            cx.basis.clone(),
            cx.boundary.clone(),
            cx.augmentation.clone(),
        )
        .unwrap();
        assert_eq!(rebuilt.rank(2), cx.rank(2));

        // ∂x_r := x_a (a 1-chain in place of a 0-chain) must be rejected.
        let mut bad = cx.boundary.clone();
        bad[1][0] = Chain::monomial(1, 0, cx.spec.id(), q(1));
        assert!(ChainComplex::from_tables(
            cx.spec.clone(),
            cx.module.clone(),
            cx.basis.clone(),
            bad,
            cx.augmentation.clone(),
        )
        .is_err());
    }

    #[test]
    fn admissibility_repairs() {
        let cx = z2_complex();
        // Add a 1-cell with zero boundary: repaired by x ↦ x + x_a.
        let mut basis = cx.basis.clone();
        basis[1].push("dead".into());
        let mut boundary = cx.boundary.clone();
        boundary[0].push(Chain::zero(0));
        let broken = ChainComplex {
            spec: cx.spec.clone(),
            module: cx.module.clone(),
            basis,
            boundary,
            augmentation: cx.augmentation.clone(),
            control_rules: Vec::new(),
        };
        assert!(!broken.is_admissible());
        let defects = broken.admissibility_defects();
        assert_eq!(defects.len(), 1);
        assert_eq!(defects[0].dim, 1);
        let fixed = broken.make_admissible().unwrap();
        assert!(fixed.is_admissible());
        assert_eq!(fixed.rank(1), 3);

        // A lone dead cell in a new top dimension is deleted instead.
        let mut basis = cx.basis.clone();
        basis.push(vec!["lone".into()]);
        let mut boundary = cx.boundary.clone();
        boundary.push(vec![Chain::zero(2)]);
        let broken = ChainComplex {
            spec: cx.spec.clone(),
            module: cx.module.clone(),
            basis,
            boundary,
            augmentation: cx.augmentation.clone(),
            control_rules: Vec::new(),
        };
        let fixed = broken.make_admissible().unwrap();
        assert_eq!(fixed.rank(3), 0);
    }

    #[test]
    fn expansion_matches_example() {
        // Z², x = x₀, c = a·x₀, d = x_a: ∂ξ = x₀ − a·x₀, ∂η = x_a − ξ.
        let cx = z2_complex();
        let x = Cell {
            dim: 0,
            sym: 0,
            g: cx.spec.id(),
        };
        let c = Chain::monomial(0, 0, cx.spec.generator(0), q(1));
        // ∂d must equal x − c = −(a−1)x₀, so d = −x_a.
        let d = Chain::monomial(1, 0, cx.spec.id(), q(-1));
        let expanded = cx.elementary_expansion(&x, &c, &d).unwrap();
        assert_eq!(expanded.rank(1), 3);
        assert_eq!(expanded.rank(2), 2);
        let xi = expanded.boundary_of_sym(1, 2);
        assert_eq!(xi.coeff(0, &cx.spec.id()), q(1));
        assert_eq!(xi.coeff(0, &cx.spec.generator(0)), q(-1));
        expanded.validate().unwrap();
        assert_eq!(expanded.control_rules.len(), 2);

        // Degenerate c = x is rejected (ξ would have zero boundary).
        let c_bad = Chain::monomial(0, 0, cx.spec.id(), q(1));
        let d_bad = Chain::zero(1);
        assert!(cx.elementary_expansion(&x, &c_bad, &d_bad).is_err());
    }

    #[test]
    fn tensor_ranks_and_signs() {
        let z: ChainComplex<Q> =
            fox_resolution(&Presentation::standard(GroupSpec::free_abelian(&["a"]))).unwrap();
        let (t, index) = tensor_complex(&z, &z, 3).unwrap();
        // ranks 1, 2, 1 in dimensions 0..2, matching the Z² resolution
        assert_eq!(t.rank(0), 1);
        assert_eq!(t.rank(1), 2);
        assert_eq!(t.rank(2), 1);
        t.validate().unwrap();
        // ∂(x⊗x') for |x| = |x'| = 1 carries the Koszul sign on the right factor
        let (p, _i, _j) = index.pairs[2][0];
        assert_eq!(p, 1);
        let b = t.boundary_of_sym(2, 0);
        assert!(!b.is_zero());
        // ε⊗ε' sends the 0-cell to 1
        assert_eq!(t.augmentation_of_sym(0), &[q(1)]);
        // flatten onto Z²
        let flat = t
            .relabel_flat_abelian(&GroupSpec::free_abelian(&["a", "b"]))
            .unwrap();
        flat.validate().unwrap();
    }
}
