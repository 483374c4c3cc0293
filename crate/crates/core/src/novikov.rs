//! Truncated Novikov modules and homology-vanishing tests.
//!
//! For a Euclidean-type model and a direction with discrete rational
//! character values, the completed group ring is handled through finite
//! truncations: an element is a finite group-ring part together with a
//! reliability floor, and all arithmetic re-truncates. Homology of the
//! induced complex is computed by unit-pivot reduction: an entry whose
//! lowest valuation stratum is a single invertible term is a unit, the
//! corresponding pair of basis cells is collapsed, and the differentials are
//! updated by a Schur complement. Bases that survive with zero reduced
//! differential yield kernel witnesses; the witness is an obstruction when
//! it stays outside the image at both the requested floor and its double.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::ChainComplex;
use crate::finitary::FinitaryMap;
use crate::geometry::{BoundaryDir, ControlledModel, Val};
use crate::group::{GroupElem, GroupSpec};
use crate::groupring::GroupRingElem;
use crate::scalar::{Field, Scalar};
use crate::solve;

type Q = num_rational::BigRational;

#[derive(Debug, Error)]
pub enum NovikovError {
    #[error("direction mismatch between truncated elements")]
    DirectionMismatch,
    #[error("not a unit: minimal stratum is not a single invertible term")]
    NotAUnit,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Context fixing the model, direction and valuation character.
pub struct NovCtx<'a> {
    pub cm: &'a ControlledModel,
    pub e: BoundaryDir,
}

impl<'a> NovCtx<'a> {
    /// Requires a translation-type model whose character toward `e` is
    /// additive with discrete rational image.
    pub fn new(cm: &'a ControlledModel, e: &BoundaryDir) -> Result<Self, NovikovError> {
        if !cm.model.boundary_action_trivial() {
            return Err(NovikovError::Unsupported(
                "Novikov computations require a Euclidean-type model".into(),
            ));
        }
        let e = e.canonical();
        let gens = cm.spec.generators();
        let all_zero = gens.iter().all(|g| cm.char_of(&e, g).is_zero());
        if all_zero {
            return Err(NovikovError::Unsupported(
                "character vanishes on every generator; no horoball filtration".into(),
            ));
        }
        Ok(NovCtx { cm, e })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.cm.spec
    }

    /// `χ(g) = β_e(g·b) − β_e(b)`, additive for translation actions.
    pub fn vchar(&self, g: &GroupElem) -> Q {
        self.cm.char_of(&self.e, g)
    }
}

/// Finite part plus reliability floor: the element is its part modulo terms
/// of valuation `>= floor` (`None` floor means the element is exact).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NovElem<K: Scalar> {
    pub part: GroupRingElem<K>,
    pub floor: Option<Q>,
}

fn floor_min(a: &Option<Q>, b: &Option<Q>) -> Option<Q> {
    match (a, b) {
        (None, x) => x.clone(),
        (x, None) => x.clone(),
        (Some(x), Some(y)) => Some(x.clone().min(y.clone())),
    }
}

fn floor_add(f: &Option<Q>, delta: &Q) -> Option<Q> {
    f.as_ref().map(|x| x + delta)
}

impl<K: Field> NovElem<K> {
    pub fn exact(part: GroupRingElem<K>) -> Self {
        NovElem { part, floor: None }
    }

    pub fn zero() -> Self {
        NovElem {
            part: GroupRingElem::zero(),
            floor: None,
        }
    }

    pub fn is_reliably_zero(&self) -> bool {
        self.part.is_zero()
    }

    /// Minimal valuation of the stored part.
    pub fn vmin(&self, ctx: &NovCtx) -> Option<Q> {
        self.part.support().map(|g| ctx.vchar(g)).min()
    }

    /// Drops the terms at or above `floor` and records the floor.
    pub fn truncate(&self, ctx: &NovCtx, floor: &Q) -> Self {
        let new_floor = match &self.floor {
            None => floor.clone(),
            Some(f) => f.clone().min(floor.clone()),
        };
        let part = GroupRingElem::from_terms(
            self.part
                .iter()
                .filter(|(g, _)| ctx.vchar(g) < new_floor)
                .map(|(g, c)| (g.clone(), c.clone())),
        );
        NovElem {
            part,
            floor: Some(new_floor),
        }
    }

    pub fn add(&self, ctx: &NovCtx, rhs: &Self) -> Self {
        let floor = floor_min(&self.floor, &rhs.floor);
        let out = NovElem {
            part: self.part.add(&rhs.part),
            floor: floor.clone(),
        };
        match floor {
            Some(f) => out.truncate(ctx, &f),
            None => out,
        }
    }

    pub fn sub(&self, ctx: &NovCtx, rhs: &Self) -> Self {
        self.add(ctx, &rhs.neg())
    }

    pub fn neg(&self) -> Self {
        NovElem {
            part: self.part.neg(),
            floor: self.floor.clone(),
        }
    }

    /// Product with floor adjustment: the tail of each factor pollutes from
    /// its floor plus the other factor's minimal valuation.
    pub fn mul(&self, ctx: &NovCtx, rhs: &Self) -> Result<Self, NovikovError> {
        let part = self
            .part
            .mul(ctx.spec(), &rhs.part)
            .map_err(|_| NovikovError::DirectionMismatch)?;
        let zero = Q::zero();
        let f1 = floor_add(&self.floor, rhs.vmin(ctx).as_ref().unwrap_or(&zero));
        let f2 = floor_add(&rhs.floor, self.vmin(ctx).as_ref().unwrap_or(&zero));
        // When a part is zero its tail still pollutes from the floor itself.
        let f1 = if rhs.part.is_zero() { self.floor.clone() } else { f1 };
        let f2 = if self.part.is_zero() { rhs.floor.clone() } else { f2 };
        let floor = floor_min(&f1, &f2);
        let out = NovElem { part, floor: floor.clone() };
        Ok(match floor {
            Some(f) => out.truncate(ctx, &f),
            None => out,
        })
    }

    /// Leading term when the minimal stratum is a singleton.
    fn leading(&self, ctx: &NovCtx) -> Option<(GroupElem, K)> {
        let vmin = self.vmin(ctx)?;
        if let Some(f) = &self.floor {
            if *f <= vmin {
                return None; // leading term not reliable
            }
        }
        let mut at_min = self
            .part
            .iter()
            .filter(|(g, _)| ctx.vchar(g) == vmin);
        let first = at_min.next()?;
        if at_min.next().is_some() {
            return None;
        }
        Some((first.0.clone(), first.1.clone()))
    }

    pub fn is_unit(&self, ctx: &NovCtx) -> bool {
        match self.leading(ctx) {
            Some((_, c)) => c.inv().is_some(),
            None => false,
        }
    }

    /// Geometric-series inverse modulo `>= target_floor`.
    ///
    /// Writes `u = c₀g₀(1 − w)` with `v(w) > 0` and returns
    /// `(1 + w + w² + …)(c₀g₀)^{-1}` truncated.
    pub fn invert_if_unit(&self, ctx: &NovCtx, target_floor: &Q) -> Result<Self, NovikovError> {
        let (g0, c0) = self.leading(ctx).ok_or(NovikovError::NotAUnit)?;
        let c0_inv = c0.inv().ok_or(NovikovError::NotAUnit)?;
        let spec = ctx.spec();
        let v0 = ctx.vchar(&g0);
        // The inverse is reliable up to floor(self) − 2·v(self).
        let inv_floor = match &self.floor {
            None => target_floor.clone(),
            Some(f) => (f - &v0 - &v0).min(target_floor.clone()),
        };
        let lead_inv = NovElem::exact(GroupRingElem::monomial(
            spec.inv_unchecked(&g0),
            c0_inv.clone(),
        ));
        // w = 1 − (c₀g₀)^{-1}·u, truncated relative to the series budget.
        let series_floor = &inv_floor + &v0;
        let one = NovElem::exact(GroupRingElem::one(spec));
        let w = one
            .sub(ctx, &lead_inv.mul(ctx, self)?)
            .truncate(ctx, &series_floor);
        debug_assert!(w.vmin(ctx).map_or(true, |v| v > Q::zero()));
        let mut acc = one.clone();
        let mut term = one;
        loop {
            term = term.mul(ctx, &w)?.truncate(ctx, &series_floor);
            if term.part.is_zero() {
                break;
            }
            acc = acc.add(ctx, &term);
        }
        let inv = acc.mul(ctx, &lead_inv)?;
        Ok(inv.truncate(ctx, &inv_floor))
    }
}

/// One collapsed pair in the reduction, for transcript replay.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PivotStep {
    pub dim: usize,
    pub row: usize,
    pub col: usize,
}

/// Truncated chain complex over the Novikov completion: differentials as
/// sparse matrices of truncated elements over the original bases.
pub struct TruncComplex<K: Scalar> {
    pub ranks: Vec<usize>,
    /// `diff[d]` maps dimension `d+1` to dimension `d`:
    /// entries keyed by `(row in X_{d+1}, col in X_d)`.
    pub diff: Vec<BTreeMap<(usize, usize), NovElem<K>>>,
    /// alive flags per dimension
    pub alive: Vec<Vec<bool>>,
    /// expressions of the surviving basis elements over the original basis
    pub expr: Vec<Vec<BTreeMap<usize, NovElem<K>>>>,
    pub pivots: Vec<PivotStep>,
}

impl<K: Field> TruncComplex<K> {
    pub fn from_complex(cx: &ChainComplex<K>, max_dim: usize) -> Self {
        let top = max_dim.min(cx.top_dim());
        let ranks: Vec<usize> = (0..=top).map(|d| cx.rank(d)).collect();
        let mut diff = Vec::new();
        for d in 1..=top {
            let mut m = BTreeMap::new();
            for i in 0..cx.rank(d) {
                for (sym, ring) in cx.boundary_of_sym(d, i).ring_coords() {
                    m.insert((i, sym), NovElem::exact(ring));
                }
            }
            diff.push(m);
        }
        let alive = ranks.iter().map(|r| vec![true; *r]).collect();
        let expr = ranks
            .iter()
            .map(|r| {
                (0..*r)
                    .map(|i| {
                        let mut m = BTreeMap::new();
                        m.insert(i, NovElem::exact(GroupRingElem::one(&cx.spec)));
                        m
                    })
                    .collect()
            })
            .collect();
        TruncComplex {
            ranks,
            diff,
            alive,
            expr,
            pivots: Vec::new(),
        }
    }

    fn entry(&self, d: usize, i: usize, j: usize) -> Option<&NovElem<K>> {
        self.diff[d - 1].get(&(i, j))
    }

    /// Collapses unit pivots until none remain; deterministic scan order.
    pub fn reduce(&mut self, ctx: &NovCtx, work_floor: &Q) -> Result<(), NovikovError> {
        loop {
            let mut pivot: Option<(usize, usize, usize)> = None;
            'scan: for d in 1..self.ranks.len() {
                for ((i, j), e) in &self.diff[d - 1] {
                    if self.alive[d][*i] && self.alive[d - 1][*j] && e.is_unit(ctx) {
                        pivot = Some((d, *i, *j));
                        break 'scan;
                    }
                }
            }
            let Some((d, i0, j0)) = pivot else {
                return Ok(());
            };
            self.collapse(ctx, work_floor, d, i0, j0)?;
        }
    }

    fn collapse(
        &mut self,
        ctx: &NovCtx,
        work_floor: &Q,
        d: usize,
        i0: usize,
        j0: usize,
    ) -> Result<(), NovikovError> {
        let u = self.entry(d, i0, j0).cloned().expect("pivot entry");

        // Schur update of the dimension-d differential.
        let rows: Vec<usize> = (0..self.ranks[d])
            .filter(|i| *i != i0 && self.alive[d][*i])
            .collect();
        // The inverse is only needed when a sibling row actually meets the
        // pivot column; inverting eagerly can blow up (truncated series in
        // nonabelian backends grow a stratum at a time).
        let needs_inverse = rows.iter().any(|i| {
            self.entry(d, *i, j0)
                .is_some_and(|e| !e.is_reliably_zero())
        });
        let u_inv = if needs_inverse {
            u.invert_if_unit(ctx, work_floor)?
        } else {
            NovElem::zero()
        };
        let cols: Vec<usize> = (0..self.ranks[d - 1])
            .filter(|j| *j != j0 && self.alive[d - 1][*j])
            .collect();
        let pivot_row: BTreeMap<usize, NovElem<K>> = cols
            .iter()
            .filter_map(|j| self.entry(d, i0, *j).cloned().map(|e| (*j, e)))
            .collect();
        for i in &rows {
            let Some(li_j0) = self.entry(d, *i, j0).cloned() else {
                continue;
            };
            if li_j0.is_reliably_zero() {
                continue;
            }
            let factor = li_j0.mul(ctx, &u_inv)?;
            for (j, l0j) in &pivot_row {
                let corr = factor.mul(ctx, l0j)?;
                let cur = self
                    .entry(d, *i, *j)
                    .cloned()
                    .unwrap_or_else(NovElem::zero);
                let nv = cur.sub(ctx, &corr).truncate(ctx, work_floor);
                self.diff[d - 1].insert((*i, *j), nv);
            }
            // Expression correction: x̃_i := x_i − λ_{i,j0} u^{-1} x_{i0}.
            let base_expr = self.expr[d][i0].clone();
            for (orig, coeff) in base_expr {
                let corr = factor.mul(ctx, &coeff)?;
                let cur = self.expr[d][*i]
                    .get(&orig)
                    .cloned()
                    .unwrap_or_else(NovElem::zero);
                let nv = cur.sub(ctx, &corr).truncate(ctx, work_floor);
                self.expr[d][*i].insert(orig, nv);
            }
        }
        // Remove the collapsed pair everywhere.
        self.alive[d][i0] = false;
        self.alive[d - 1][j0] = false;
        self.diff[d - 1].retain(|(i, j), _| *i != i0 && *j != j0);
        if d < self.ranks.len() - 1 {
            self.diff[d].retain(|(_, j), _| *j != i0);
        }
        if d >= 2 {
            self.diff[d - 2].retain(|(i, _), _| *i != j0);
        }
        self.pivots.push(PivotStep {
            dim: d,
            row: i0,
            col: j0,
        });
        Ok(())
    }

    pub fn alive_count(&self, d: usize) -> usize {
        self.alive
            .get(d)
            .map_or(0, |v| v.iter().filter(|b| **b).count())
    }

    fn has_nonzero_diff_out(&self, d: usize) -> bool {
        if d == 0 || d >= self.ranks.len() {
            return false;
        }
        self.diff[d - 1].iter().any(|((i, j), e)| {
            self.alive[d][*i] && self.alive[d - 1][*j] && !e.is_reliably_zero()
        })
    }
}

/// Outcome of the Tor-vanishing test at one dimension.
#[derive(Clone, Debug)]
pub enum TorOutcome<K: Scalar> {
    Vanishes,
    Obstruction(ObstructionClass<K>),
    Unknown(String),
}

/// A persistent kernel witness: a reduced-basis cycle that stays outside the
/// image at the floor and its double.
#[derive(Clone, Debug)]
pub struct ObstructionClass<K: Scalar> {
    pub dim: usize,
    pub dir: BoundaryDir,
    pub floor: Q,
    /// Witness in the original basis of dimension `dim`.
    pub witness: BTreeMap<usize, NovElem<K>>,
    pub pivots: Vec<PivotStep>,
    /// Word-ball radius used by the not-in-image solve, for replay.
    pub solve_radius: u32,
    /// Stability: verified at `floor` and `2·floor`.
    pub stable_at_double: bool,
}

pub struct TorSettings {
    pub floor: Q,
    /// Word-ball radius for ideal-membership solves.
    pub solve_radius: u32,
}

impl TorSettings {
    pub fn new(floor: Q, solve_radius: u32) -> Self {
        TorSettings {
            floor,
            solve_radius,
        }
    }
}

/// `Tor_k` of the Novikov completion against the resolved module: `Vanishes`
/// when the unit-pivot reduction empties dimension `k` (or every surviving
/// generator is expressible over the image at both floors), `Obstruction`
/// when a witness persists at both floors, `Unknown` otherwise.
pub fn tor_vanishing_test<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    k: usize,
    settings: &TorSettings,
) -> TorOutcome<K> {
    let ctx = match NovCtx::new(cm, e) {
        Ok(c) => c,
        Err(err) => return TorOutcome::Unknown(err.to_string()),
    };
    let double = &settings.floor + &settings.floor;
    let work_floor = &double + Q::from_i64(16);
    let max_dim = (k + 1).min(cx.top_dim());
    let mut tc = TruncComplex::from_complex(cx, max_dim);
    if let Err(err) = tc.reduce(&ctx, &work_floor) {
        return TorOutcome::Unknown(err.to_string());
    }
    if k >= tc.ranks.len() {
        // No cells at this dimension at all: nothing survives.
        return TorOutcome::Vanishes;
    }
    if tc.alive_count(k) == 0 {
        return TorOutcome::Vanishes;
    }
    if tc.has_nonzero_diff_out(k) {
        return TorOutcome::Unknown(
            "reduced differential out of the target dimension has non-unit entries".into(),
        );
    }
    // Kernel = all surviving generators. Check image membership at both
    // floors, with the solve window doubled alongside the floor.
    let survivors: Vec<usize> = (0..tc.ranks[k]).filter(|i| tc.alive[k][*i]).collect();
    let image_rows: Vec<(usize, BTreeMap<usize, NovElem<K>>)> = if k + 1 < tc.ranks.len() {
        (0..tc.ranks[k + 1])
            .filter(|r| tc.alive[k + 1][*r])
            .map(|r| {
                let row: BTreeMap<usize, NovElem<K>> = survivors
                    .iter()
                    .filter_map(|j| tc.diff[k].get(&(r, *j)).cloned().map(|e| (*j, e)))
                    .collect();
                (r, row)
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut all_bounded_both = true;
    let mut witness_survivor: Option<usize> = None;
    for i in &survivors {
        let bounded_t = witness_in_image(
            &ctx,
            &image_rows,
            *i,
            &settings.floor,
            settings.solve_radius,
        );
        // The stability probe doubles the floor; the solve window grows by a
        // step only, since word balls grow exponentially in the free-ish
        // backends.
        let bounded_2t = witness_in_image(
            &ctx,
            &image_rows,
            *i,
            &double,
            settings.solve_radius + 1,
        );
        match (bounded_t, bounded_2t) {
            (true, true) => {}
            (false, false) => {
                all_bounded_both = false;
                if witness_survivor.is_none() {
                    witness_survivor = Some(*i);
                }
            }
            _ => {
                return TorOutcome::Unknown(
                    "witness boundedness differs between the floor and its double".into(),
                );
            }
        }
    }
    if all_bounded_both {
        return TorOutcome::Vanishes;
    }
    let i = witness_survivor.expect("survivor without image expression");
    // Truncate the witness expression to the requested floor and re-verify
    // its boundary vanishes there in the original complex.
    let witness: BTreeMap<usize, NovElem<K>> = tc.expr[k][i]
        .iter()
        .map(|(o, c)| (*o, c.truncate(&ctx, &settings.floor)))
        .filter(|(_, c)| !c.part.is_zero())
        .collect();
    if witness.is_empty() {
        return TorOutcome::Unknown("witness truncated to zero".into());
    }
    match witness_boundary_vanishes(cx, &ctx, k, &witness, &settings.floor) {
        Ok(true) => {}
        Ok(false) => {
            return TorOutcome::Unknown(
                "witness boundary does not vanish at the requested floor".into(),
            )
        }
        Err(e) => return TorOutcome::Unknown(e.to_string()),
    }
    TorOutcome::Obstruction(ObstructionClass {
        dim: k,
        dir: ctx.e.clone(),
        floor: settings.floor.clone(),
        witness,
        pivots: tc.pivots.clone(),
        solve_radius: settings.solve_radius,
        stable_at_double: true,
    })
}

impl<K: Field> ObstructionClass<K> {
    /// Standalone re-verification: the witness boundary vanishes at the
    /// floor by direct arithmetic, and the reduction transcript replays to
    /// the same pivots with the witness still outside the image.
    pub fn verify(&self, cx: &ChainComplex<K>, cm: &ControlledModel) -> bool {
        let Ok(ctx) = NovCtx::new(cm, &self.dir) else {
            return false;
        };
        match witness_boundary_vanishes(cx, &ctx, self.dim, &self.witness, &self.floor) {
            Ok(true) => {}
            _ => return false,
        }
        let double = &self.floor + &self.floor;
        let work_floor = &double + Q::from_i64(16);
        let max_dim = (self.dim + 1).min(cx.top_dim());
        let mut tc = TruncComplex::from_complex(cx, max_dim);
        if tc.reduce(&ctx, &work_floor).is_err() {
            return false;
        }
        let replayed: Vec<(usize, usize, usize)> =
            tc.pivots.iter().map(|p| (p.dim, p.row, p.col)).collect();
        let stored: Vec<(usize, usize, usize)> =
            self.pivots.iter().map(|p| (p.dim, p.row, p.col)).collect();
        if replayed != stored {
            return false;
        }
        if self.dim >= tc.ranks.len() || tc.alive_count(self.dim) == 0 {
            return false;
        }
        let survivors: Vec<usize> = (0..tc.ranks[self.dim])
            .filter(|i| tc.alive[self.dim][*i])
            .collect();
        let image_rows: Vec<(usize, BTreeMap<usize, NovElem<K>>)> =
            if self.dim + 1 < tc.ranks.len() {
                (0..tc.ranks[self.dim + 1])
                    .filter(|r| tc.alive[self.dim + 1][*r])
                    .map(|r| {
                        let row: BTreeMap<usize, NovElem<K>> = survivors
                            .iter()
                            .filter_map(|j| {
                                tc.diff[self.dim].get(&(r, *j)).cloned().map(|e| (*j, e))
                            })
                            .collect();
                        (r, row)
                    })
                    .collect()
            } else {
                Vec::new()
            };
        // The stored witness corresponds to one surviving generator; it must
        // still resist the image at the stored floor and radius.
        survivors.iter().any(|i| {
            !witness_in_image(&ctx, &image_rows, *i, &self.floor, self.solve_radius)
        })
    }
}

/// Re-checks `∂(witness) ≡ 0 mod ≥ floor` directly against the original
/// boundary tables.
pub fn witness_boundary_vanishes<K: Field>(
    cx: &ChainComplex<K>,
    ctx: &NovCtx,
    k: usize,
    witness: &BTreeMap<usize, NovElem<K>>,
    floor: &Q,
) -> Result<bool, NovikovError> {
    if k == 0 {
        return Ok(true);
    }
    let mut acc: BTreeMap<usize, NovElem<K>> = BTreeMap::new();
    for (i, coeff) in witness {
        for (sym, ring) in cx.boundary_of_sym(k, *i).ring_coords() {
            let term = coeff.mul(ctx, &NovElem::exact(ring))?;
            let cur = acc.get(&sym).cloned().unwrap_or_else(NovElem::zero);
            acc.insert(sym, cur.add(ctx, &term));
        }
    }
    Ok(acc
        .values()
        .all(|e| e.truncate(ctx, floor).part.is_zero()))
}

/// Windowed left-ideal membership: can the `target`-th surviving generator
/// be written as `Σ_r τ_r·row_r` modulo the floor, with the coefficients
/// supported on the word ball?
fn witness_in_image<K: Field>(
    ctx: &NovCtx,
    image_rows: &[(usize, BTreeMap<usize, NovElem<K>>)],
    target: usize,
    floor: &Q,
    radius: u32,
) -> bool {
    if image_rows.is_empty() {
        return false;
    }
    let spec = ctx.spec();
    let mut ball: Vec<GroupElem> = spec
        .ball(radius)
        .into_keys()
        .filter(|g| ctx.vchar(g) < *floor)
        .collect();
    // Keep the linear system tractable: balls grow exponentially in the
    // free-ish backends, and infeasibility is already detected on the
    // lowest valuation stratum.
    const MAX_SHIFTS: usize = 4_000;
    if ball.len() > MAX_SHIFTS {
        ball.truncate(MAX_SHIFTS);
    }
    // Columns: (row index, shift g) -> vector over (basis, group elem) with
    // valuation below the floor.
    let mut cols: Vec<solve::Col<(usize, GroupElem), K>> = Vec::new();
    for (_, row) in image_rows {
        for g in &ball {
            let mut col: solve::Col<(usize, GroupElem), K> = BTreeMap::new();
            for (j, entry) in row {
                for (h, c) in entry.part.iter() {
                    let gh = spec.mul_unchecked(g, h);
                    if ctx.vchar(&gh) < *floor {
                        let key = (*j, gh);
                        let cur = col.remove(&key).unwrap_or_else(K::zero);
                        let nv = cur + c.clone();
                        if !nv.is_zero() {
                            col.insert(key, nv);
                        }
                    }
                }
            }
            if !col.is_empty() {
                cols.push(col);
            }
        }
    }
    let mut target_col: solve::Col<(usize, GroupElem), K> = BTreeMap::new();
    target_col.insert((target, spec.id()), K::one());
    solve::solve(&cols, &target_col).is_some()
}

/// Descriptor for the allowed valuation loss in a Lipschitz-deformation
/// check.
#[derive(Clone, Debug)]
pub enum NuDescriptor {
    Constant(Q),
    /// Step function: the loss bound for inputs at or above each threshold,
    /// thresholds ascending; below the first threshold the first value is
    /// used.
    Steps(Vec<(Q, Q)>),
}

impl NuDescriptor {
    pub fn eval(&self, v: &Q) -> Q {
        match self {
            NuDescriptor::Constant(c) => c.clone(),
            NuDescriptor::Steps(steps) => {
                let mut out = steps.first().map(|(_, v)| v.clone()).unwrap_or_else(Q::zero);
                for (threshold, value) in steps {
                    if v >= threshold {
                        out = value.clone();
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct LipschitzReport {
    pub checked: usize,
    pub violations: Vec<(crate::complex::Cell, Q, Q)>,
}

/// Verifies `v(σ(y)) ≥ v(y) − ν(v(y))` on the sampled window cells.
pub fn lipschitz_check<K: Scalar>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    sigma: &FinitaryMap<K>,
    nu: &NuDescriptor,
    window: &crate::finitary::Window,
) -> LipschitzReport {
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for d in 0..sigma.source_dims() {
        for cell in window.cells(cx, d) {
            checked += 1;
            let v_y = cm.cell_valuation(e, &cell);
            let image = sigma.apply_cell(&cm.spec, &cell);
            match cm.valuation(e, &image) {
                Val::Infinite => {}
                Val::Finite(v_img) => {
                    let allowed = &v_y - nu.eval(&v_y);
                    if v_img < allowed {
                        violations.push((cell, v_y.clone(), v_img));
                    }
                }
            }
        }
    }
    LipschitzReport {
        checked,
        violations,
    }
}

/// Vanishing flags for a short exact sequence of trivial-power modules and
/// the long-exact-sequence implication pattern between them.
#[derive(Clone, Debug)]
pub struct LesReport {
    pub dims: Vec<usize>,
    pub left_vanishes: Vec<bool>,
    pub middle_vanishes: Vec<bool>,
    pub right_vanishes: Vec<bool>,
    pub consistent: bool,
}

/// For a split sequence of trivial powers `K^r' ↣ K^(r'+r'') ↠ K^r''`, the
/// middle flags must be the conjunction of the outer ones; with the right
/// module zero the outer and middle flags must agree.
pub fn les_consistency<K: Field>(
    left: &ChainComplex<K>,
    middle: &ChainComplex<K>,
    right: Option<&ChainComplex<K>>,
    cm_left: &ControlledModel,
    cm_middle: &ControlledModel,
    cm_right: Option<&ControlledModel>,
    e: &BoundaryDir,
    n: usize,
    settings: &TorSettings,
) -> LesReport {
    let dims: Vec<usize> = (0..=n).collect();
    let flags = |cx: &ChainComplex<K>, cm: &ControlledModel| -> Vec<bool> {
        dims.iter()
            .map(|k| matches!(tor_vanishing_test(cx, cm, e, *k, settings), TorOutcome::Vanishes))
            .collect()
    };
    let lv = flags(left, cm_left);
    let mv = flags(middle, cm_middle);
    let rv = match (right, cm_right) {
        (Some(r), Some(cmr)) => flags(r, cmr),
        _ => vec![true; dims.len()],
    };
    let consistent = match right {
        // Split direct sum: middle vanishes iff both summands vanish.
        Some(_) => dims
            .iter()
            .all(|k| mv[*k] == (lv[*k] && rv[*k])),
        // Right module zero: left ≅ middle.
        None => dims.iter().all(|k| mv[*k] == lv[*k]),
    };
    LesReport {
        dims,
        left_vanishes: lv,
        middle_vanishes: mv,
        right_vanishes: rv,
        consistent,
    }
}
