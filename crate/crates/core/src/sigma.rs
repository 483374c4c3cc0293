//! Membership engines: controlled-acyclicity checks with lags, push search,
//! membership verdicts with re-checkable evidence, the zero-lag transform,
//! and the product, openness and invariance probes.
//!
//! Verdict discipline: `Member` requires a verified push certificate (a
//! finitary chain map lifting the identity whose valuation shift is at least
//! `ν` on every cell — exactly on translation models, window-tagged
//! otherwise); `NonMember` requires a persistent truncated Novikov
//! obstruction; everything else is `Unknown` with the budgets that were
//! tried.

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::complex::{Cell, Chain, ChainComplex, ComplexError};
use crate::finitary::{
    self, homotopy_between, homotopy_identity_holds, lift_finitary, norm_map, shift_report,
    Chooser, FinitaryMap, GshBound, Volley, Window,
};
use crate::geometry::{orbit_closure_sample, BoundaryDir, ControlledModel, Dist, Point, Val};
use crate::group::GroupElem;
use crate::novikov::{tor_vanishing_test, ObstructionClass, TorOutcome, TorSettings};
use crate::scalar::{Field, Scalar};
use crate::solve;

type Q = num_rational::BigRational;

#[derive(Debug, Error)]
pub enum SigmaError {
    #[error("push requires a strictly positive shift target")]
    NonPositiveNu,
    #[error("hypothesis not established: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Finitary(#[from] crate::finitary::FinitaryError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Explicit budgets for every windowed search.
#[derive(Clone, Debug)]
pub struct Budgets {
    /// Starting window radius (word metric).
    pub window: u32,
    /// Hard cap for window deepening (the schedule doubles).
    pub max_window: u32,
    /// Push shift target; directions are canonicalized so 1 is the natural
    /// unit.
    pub nu: Q,
    /// Truncation floor for Novikov computations.
    pub trunc: Q,
    /// Word-ball radius for Novikov ideal-membership solves.
    pub solve_radius: u32,
    /// Largest lag scanned before a level is declared unknown.
    pub lag_budget: Q,
    /// Orbit-closure sampling depth.
    pub orbit_depth: u32,
    /// Ball radius for limit-translate searches.
    pub search_budget: u32,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            window: 2,
            max_window: 8,
            nu: Q::from_i64(1),
            trunc: Q::from_i64(8),
            solve_radius: 5,
            lag_budget: Q::from_i64(16),
            orbit_depth: 2,
            search_budget: 3,
        }
    }
}

/// Evidence that one cycle bounds with the stated lag.
#[derive(Clone, Debug)]
pub struct BoundingCertificate<K: crate::scalar::Scalar> {
    /// Cycle dimension; `-1` is the augmented level (module elements).
    pub i: i64,
    pub level: Q,
    /// The module element for `i = -1`, empty otherwise.
    pub module_target: Vec<K>,
    pub cycle: Chain<K>,
    pub bounding: Chain<K>,
    pub lag: Q,
}

impl<K: Field> BoundingCertificate<K> {
    /// Re-checks `∂c = z` (resp. `ε(c) = a`) and the claimed lag against a
    /// complex and control model.
    pub fn verify(
        &self,
        cx: &ChainComplex<K>,
        cm: &ControlledModel,
        e: &BoundaryDir,
    ) -> bool {
        if self.i >= 0 {
            if cx.boundary(&self.bounding) != self.cycle {
                return false;
            }
        } else if cx.augment(&self.bounding) != self.module_target {
            return false;
        }
        let needed = &self.level - &self.lag;
        cm.valuation(e, &self.bounding).ge(&needed)
    }
}

#[derive(Clone, Debug)]
pub struct LevelReport {
    pub i: i64,
    pub level: Q,
    /// Worst observed lag at this level; `None` when the window was
    /// exhausted.
    pub worst_lag: Option<Q>,
}

/// Observed lags per level with the witnesses realizing them.
#[derive(Clone, Debug)]
pub struct LagEstimate<K: crate::scalar::Scalar> {
    pub dir: BoundaryDir,
    pub skeleton: usize,
    pub levels: Vec<LevelReport>,
    pub certificates: Vec<BoundingCertificate<K>>,
    /// Max observed lag when every level bounded; the constant-lag value.
    pub constant_lag: Option<Q>,
    pub unknown_levels: usize,
}

/// Controlled (n−1)-acyclicity over a direction: for each `i ≤ n−1` and
/// level `s`, a spanning set of window `i`-cycles of valuation ≥ `s` is
/// bounded while maximizing the bounding chain's valuation by iterative
/// deepening over valuation-thresholded sub-windows. `i = -1` is the
/// augmented level: module elements must be hit by 0-chains over the
/// horoball.
pub fn ca_check<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    n: usize,
    s_levels: &[Q],
    budgets: &Budgets,
) -> LagEstimate<K> {
    let e = e.canonical();
    let window = Window::new(&cx.spec, budgets.window);
    let mut levels = Vec::new();
    let mut certificates = Vec::new();
    let mut unknown = 0usize;

    for i in -1i64..=(n as i64 - 1) {
        if i >= 0 && (i as usize) > cx.top_dim() {
            break;
        }
        if i == -1 {
            // ε-preimages: one certificate per module basis vector; the best
            // achievable threshold is level-independent.
            for target_idx in 0..cx.module.rank {
                let mut target = vec![K::zero(); cx.module.rank];
                target[target_idx] = K::one();
                let cells0 = window.cells(cx, 0);
                let best = best_threshold_augmentation(cx, cm, &e, &cells0, &target);
                for s in s_levels {
                    match &best {
                        Some((tau, chain)) => {
                            let lag = (s - tau).max(Q::zero());
                            if lag > budgets.lag_budget {
                                levels.push(LevelReport {
                                    i,
                                    level: s.clone(),
                                    worst_lag: None,
                                });
                                unknown += 1;
                                continue;
                            }
                            levels.push(LevelReport {
                                i,
                                level: s.clone(),
                                worst_lag: Some(lag.clone()),
                            });
                            certificates.push(BoundingCertificate {
                                i,
                                level: s.clone(),
                                module_target: target.clone(),
                                cycle: Chain::zero(0),
                                bounding: chain.clone(),
                                lag,
                            });
                        }
                        None => {
                            levels.push(LevelReport {
                                i,
                                level: s.clone(),
                                worst_lag: None,
                            });
                            unknown += 1;
                        }
                    }
                }
            }
            continue;
        }
        let i_us = i as usize;
        for s in s_levels {
            let cycle_cells: Vec<Cell> = window
                .cells(cx, i_us)
                .into_iter()
                .filter(|c| cm.cell_valuation(&e, c) >= *s)
                .collect();
            let cycles = spanning_cycles(cx, &cycle_cells, i_us);
            let mut worst: Option<Q> = Some(Q::zero());
            for z in cycles {
                if z.is_zero() {
                    continue;
                }
                match bound_cycle_with_threshold(cx, cm, &e, &window, &z, s, budgets) {
                    Some((chain, lag)) => {
                        certificates.push(BoundingCertificate {
                            i,
                            level: s.clone(),
                            module_target: Vec::new(),
                            cycle: z,
                            bounding: chain,
                            lag: lag.clone(),
                        });
                        worst = worst.map(|w| w.max(lag));
                    }
                    None => {
                        worst = None;
                        break;
                    }
                }
            }
            if worst.is_none() {
                unknown += 1;
            }
            levels.push(LevelReport {
                i,
                level: s.clone(),
                worst_lag: worst,
            });
        }
    }

    let constant_lag = if unknown == 0 {
        levels
            .iter()
            .filter_map(|l| l.worst_lag.clone())
            .max()
            .or_else(|| Some(Q::zero()))
    } else {
        None
    };
    LagEstimate {
        dir: e,
        skeleton: n,
        levels,
        certificates,
        constant_lag,
        unknown_levels: unknown,
    }
}

/// Highest threshold `τ` such that `ε(c) = target` is solvable over window
/// cells of valuation ≥ `τ`.
fn best_threshold_augmentation<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    cells: &[Cell],
    target: &[K],
) -> Option<(Q, Chain<K>)> {
    let mut thresholds: Vec<Q> = cells.iter().map(|c| cm.cell_valuation(e, c)).collect();
    thresholds.sort();
    thresholds.dedup();
    for tau in thresholds.iter().rev() {
        let sub: Vec<Cell> = cells
            .iter()
            .filter(|c| cm.cell_valuation(e, c) >= *tau)
            .cloned()
            .collect();
        if let Some(chain) =
            finitary::solve_augmentation_for(cx, cm, &Chooser::Lexicographic, &sub, target)
        {
            return Some((tau.clone(), chain));
        }
    }
    None
}

/// Kernel spanning set of the boundary (resp. augmentation for `i = 0`)
/// restricted to the given cells.
fn spanning_cycles<K: Field>(
    cx: &ChainComplex<K>,
    cells: &[Cell],
    i: usize,
) -> Vec<Chain<K>> {
    if cells.is_empty() {
        return Vec::new();
    }
    let kernel_vectors: Vec<Vec<K>> = if i == 0 {
        let cols: Vec<solve::Col<usize, K>> = cells
            .iter()
            .map(|cell| {
                cx.augment(&Chain::cell(cell))
                    .into_iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .collect()
            })
            .collect();
        solve::kernel(&cols)
    } else {
        let cols: Vec<solve::Col<(usize, GroupElem), K>> = cells
            .iter()
            .map(|cell| {
                cx.boundary(&Chain::cell(cell))
                    .iter()
                    .map(|((s, g), k)| ((*s, g.clone()), k.clone()))
                    .collect()
            })
            .collect();
        solve::kernel(&cols)
    };
    kernel_vectors
        .into_iter()
        .map(|v| {
            let mut c = Chain::zero(i);
            for (cell, coeff) in cells.iter().zip(v) {
                if !coeff.is_zero() {
                    c.add_term(cell.sym, cell.g.clone(), coeff);
                }
            }
            c
        })
        .collect()
}

/// Finds `c` with `∂c = z` maximizing the valuation threshold, scanning
/// thresholds downward from the level (lag 0 first).
fn bound_cycle_with_threshold<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    window: &Window,
    z: &Chain<K>,
    level: &Q,
    budgets: &Budgets,
) -> Option<(Chain<K>, Q)> {
    let dim = z.dim + 1;
    if dim > cx.top_dim() {
        return None;
    }
    let all_cells = window.cells(cx, dim);
    let mut thresholds: Vec<Q> = all_cells
        .iter()
        .map(|c| cm.cell_valuation(e, c))
        .filter(|v| *v <= *level)
        .collect();
    thresholds.push(level.clone());
    thresholds.sort();
    thresholds.dedup();
    let floor = level - &budgets.lag_budget;
    for tau in thresholds.iter().rev() {
        if *tau < floor {
            break;
        }
        let sub: Vec<Cell> = all_cells
            .iter()
            .filter(|c| cm.cell_valuation(e, c) >= *tau)
            .cloned()
            .collect();
        if let Some(chain) =
            finitary::solve_boundary_for(cx, cm, &Chooser::Lexicographic, dim, &sub, z)
        {
            let lag = (level - tau).max(Q::zero());
            return Some((chain, lag));
        }
    }
    None
}

/// A verified push: a finitary chain map lifting the identity with
/// guaranteed shift at least `nu` toward the direction.
#[derive(Clone, Debug)]
pub struct PushCertificate<K: crate::scalar::Scalar> {
    pub dir: BoundaryDir,
    pub level: usize,
    pub nu: Q,
    pub map: FinitaryMap<K>,
    pub gsh: GshBound,
    pub homotopy: Option<FinitaryMap<K>>,
    pub window_radius: u32,
}

impl<K: Field> PushCertificate<K> {
    /// Full re-verification: chain-map identities, augmentation
    /// compatibility, per-cell shifts at least `nu`, and the homotopy
    /// identity when present.
    pub fn verify(&self, cx: &ChainComplex<K>, cm: &ControlledModel) -> bool {
        let window = Window::new(&cx.spec, self.window_radius);
        if !self.map.is_chain_map(cx, cx, &window) {
            return false;
        }
        if !self.map.lifts_identity(cx, cx, &window) {
            return false;
        }
        let report = shift_report(cm, &self.dir, &self.map, &window);
        if !report.gsh.at_least(&self.nu) {
            return false;
        }
        if let Some(sigma) = &self.homotopy {
            let id = FinitaryMap::identity(cx, self.level.min(cx.top_dim()));
            if !homotopy_identity_holds(cx, cx, &self.map, &id, sigma, &window) {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug)]
pub enum PushSearch<K: crate::scalar::Scalar> {
    Found(Box<PushCertificate<K>>),
    NotFound { deepest_window: u32 },
}

/// Searches for a push certificate for the `n`-skeleton toward `e`:
/// candidate images are solved dimension by dimension under the chain-map
/// constraint with the valuation requirement `v(φ(x)) ≥ v(x) + ν` imposed on
/// the solution's support.
pub fn find_push<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    n: usize,
    budgets: &Budgets,
) -> Result<PushSearch<K>, SigmaError> {
    find_push_extending(cx, cm, e, n, budgets, None)
}

/// As `find_push`, optionally extending fixed lower-dimensional choices.
pub fn find_push_extending<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    n: usize,
    budgets: &Budgets,
    extend: Option<&FinitaryMap<K>>,
) -> Result<PushSearch<K>, SigmaError> {
    if budgets.nu <= Q::zero() {
        return Err(SigmaError::NonPositiveNu);
    }
    if !cx.is_admissible() {
        return Err(SigmaError::Hypothesis("complex is not admissible".into()));
    }
    let e = e.canonical();
    let equivariant_ok = cm.model.boundary_action_trivial();
    let mut radius = budgets.window;
    loop {
        let window = Window::new(&cx.spec, radius);
        let found = if equivariant_ok {
            try_push_equivariant(cx, cm, &e, n, &budgets.nu, &window, extend)
        } else {
            try_push_per_cell(cx, cm, &e, n, &budgets.nu, &window)
        };
        if let Some(map) = found {
            let report = shift_report(cm, &e, &map, &window);
            if !report.gsh.at_least(&budgets.nu) {
                return Ok(PushSearch::NotFound {
                    deepest_window: radius,
                });
            }
            let id = FinitaryMap::identity(cx, n.min(cx.top_dim()));
            let homotopy = homotopy_between(
                cx,
                cx,
                cm,
                &map,
                &id,
                &Chooser::Lexicographic,
                &window,
            )
            .ok()
            .filter(|sigma| homotopy_identity_holds(cx, cx, &map, &id, sigma, &window));
            return Ok(PushSearch::Found(Box::new(PushCertificate {
                dir: e,
                level: n,
                nu: budgets.nu.clone(),
                map,
                gsh: report.gsh,
                homotopy,
                window_radius: radius,
            })));
        }
        if radius >= budgets.max_window {
            return Ok(PushSearch::NotFound {
                deepest_window: radius,
            });
        }
        radius = (radius * 2).min(budgets.max_window);
    }
}

fn try_push_equivariant<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    n: usize,
    nu: &Q,
    window: &Window,
    extend: Option<&FinitaryMap<K>>,
) -> Option<FinitaryMap<K>> {
    let mut table: Vec<Vec<Chain<K>>> = Vec::new();
    let fixed_dims = extend.map_or(0, |m| m.source_dims());
    for d in 0..=n.min(cx.top_dim()) {
        let mut dim_table = Vec::new();
        if d < fixed_dims {
            let m = extend.unwrap();
            for sym in 0..cx.rank(d) {
                if sym < m.volley.table[d].len() {
                    dim_table.push(m.apply_cell(
                        &cx.spec,
                        &Cell {
                            dim: d,
                            sym,
                            g: cx.spec.id(),
                        },
                    ));
                    continue;
                }
                // new cells (from expansions) still need fresh values
                match solve_push_value(cx, cm, e, nu, window, d, sym, &table, &dim_table) {
                    Some(v) => dim_table.push(v),
                    None => return None,
                }
            }
        } else {
            for sym in 0..cx.rank(d) {
                match solve_push_value(cx, cm, e, nu, window, d, sym, &table, &dim_table) {
                    Some(v) => dim_table.push(v),
                    None => return None,
                }
            }
        }
        table.push(dim_table);
    }
    Some(FinitaryMap::equivariant(0, table))
}

#[allow(clippy::too_many_arguments)]
fn solve_push_value<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    nu: &Q,
    window: &Window,
    d: usize,
    sym: usize,
    lower: &[Vec<Chain<K>>],
    current: &[Chain<K>],
) -> Option<Chain<K>> {
    let basis_cell = Cell {
        dim: d,
        sym,
        g: cx.spec.id(),
    };
    let threshold = cm.cell_valuation(e, &basis_cell) + nu;
    let cells: Vec<Cell> = window
        .cells(cx, d)
        .into_iter()
        .filter(|c| cm.cell_valuation(e, c) >= threshold)
        .collect();
    let chooser = Chooser::ValuationAscending(e.clone());
    if d == 0 {
        let target = cx.augment(&Chain::cell(&basis_cell));
        finitary::solve_augmentation_for(cx, cm, &chooser, &cells, &target)
    } else {
        let bx = cx.boundary(&Chain::cell(&basis_cell));
        let mut rhs = Chain::zero(d - 1);
        for ((s, g), k) in bx.iter() {
            let img = if *s < lower[d - 1].len() {
                &lower[d - 1][*s]
            } else {
                // expansion cell whose value hasn't been solved yet: bail
                return None;
            };
            rhs = rhs.add(&img.translate(&cx.spec, g).scale(k));
        }
        let _ = current;
        finitary::solve_boundary_for(cx, cm, &chooser, d, &cells, &rhs)
    }
}

/// Per-cell push construction for models whose boundary action is
/// nontrivial (tree ends): selections vary over the window; the resulting
/// certificate is window-tagged.
fn try_push_per_cell<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    n: usize,
    nu: &Q,
    window: &Window,
) -> Option<FinitaryMap<K>> {
    let spec = &cx.spec;
    let mut values: BTreeMap<Cell, Chain<K>> = BTreeMap::new();
    let depth: u32 = 2;
    // candidate supports must be allowed to leave the target window by
    // roughly ν steps, or boundary cells could never gain valuation
    let margin: u32 = {
        let ceil = (nu.ceil()).to_integer();
        let c: u32 = ceil.try_into().unwrap_or(1);
        c + 1
    };
    for d in 0..=n.min(cx.top_dim()) {
        let radius = window.radius + depth * (n.saturating_sub(d)) as u32;
        let wide = Window::new(spec, radius);
        let candidates = Window::new(spec, radius + margin);
        let solver_cells_all = candidates.cells(cx, d);
        for cell in wide.cells(cx, d) {
            let threshold = cm.cell_valuation(e, &cell) + nu;
            let cells: Vec<Cell> = solver_cells_all
                .iter()
                .filter(|c| cm.cell_valuation(e, c) >= threshold)
                .cloned()
                .collect();
            let chooser = Chooser::ValuationAscending(e.clone());
            let value = if d == 0 {
                let target = cx.augment(&Chain::cell(&cell));
                finitary::solve_augmentation_for(cx, cm, &chooser, &cells, &target)?
            } else {
                let by = cx.boundary(&Chain::cell(&cell));
                let mut rhs = Chain::zero(d - 1);
                for ((s, g), k) in by.iter() {
                    let img = values.get(&Cell {
                        dim: d - 1,
                        sym: *s,
                        g: g.clone(),
                    })?;
                    rhs = rhs.add(&img.scale(k));
                }
                finitary::solve_boundary_for(cx, cm, &chooser, d, &cells, &rhs)?
            };
            values.insert(cell, value);
        }
    }
    Some(crate::finitary::compress_cell_map_public(
        spec, cx, n, 0, &values,
    ))
}

/// Constant-lag estimate from a push certificate carrying a homotopy: the
/// claimed bound is `‖σ‖`, validated by running `ca_check` at the same
/// direction and asserting every observed lag stays below it.
pub struct ConstantLagOutcome<K: crate::scalar::Scalar> {
    pub claimed_bound: Dist,
    pub estimate: LagEstimate<K>,
    pub validated: bool,
}

pub fn lag_from_push<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    cert: &PushCertificate<K>,
    s_levels: &[Q],
    budgets: &Budgets,
) -> Result<ConstantLagOutcome<K>, SigmaError> {
    let Some(sigma) = &cert.homotopy else {
        return Err(SigmaError::Hypothesis(
            "certificate carries no homotopy".into(),
        ));
    };
    let norm = norm_map(cm, cm, sigma);
    let estimate = ca_check(cx, cm, &cert.dir, cert.level, s_levels, budgets);
    let validated = estimate.unknown_levels == 0
        && estimate
            .levels
            .iter()
            .filter_map(|l| l.worst_lag.as_ref())
            .all(|lag| norm.ge_rat(lag));
    Ok(ConstantLagOutcome {
        claimed_bound: norm,
        estimate,
        validated,
    })
}

/// Membership evidence kinds.
#[derive(Clone, Debug)]
pub enum MemberEvidence<K: crate::scalar::Scalar> {
    Push(Box<PushCertificate<K>>),
    /// The convention for skeleton level −1: every direction is a member.
    Convention,
}

#[derive(Clone, Debug)]
pub enum Verdict<K: crate::scalar::Scalar> {
    Member(MemberEvidence<K>),
    NonMember(Box<ObstructionClass<K>>),
    Unknown { window: u32, trunc: Q, reason: String },
}

impl<K: crate::scalar::Scalar> Verdict<K> {
    pub fn is_member(&self) -> bool {
        matches!(self, Verdict::Member(_))
    }

    pub fn is_non_member(&self) -> bool {
        matches!(self, Verdict::NonMember(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown { .. })
    }
}

/// Decision pipeline: a verified push certificate gives `Member`; a
/// persistent truncated Novikov obstruction at any sampled orbit-closure
/// point gives `NonMember`; otherwise `Unknown`. For trivial boundary
/// actions the orbit closure sample is the direction itself.
pub fn membership<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    e: &BoundaryDir,
    n: i64,
    budgets: &Budgets,
) -> Result<Verdict<K>, SigmaError> {
    if n < 0 {
        return Ok(Verdict::Member(MemberEvidence::Convention));
    }
    let n = n as usize;
    let e = e.canonical();
    match find_push(cx, cm, &e, n, budgets)? {
        PushSearch::Found(cert) => {
            if cert.verify(cx, cm) {
                return Ok(Verdict::Member(MemberEvidence::Push(cert)));
            }
            return Ok(Verdict::Unknown {
                window: budgets.max_window,
                trunc: budgets.trunc.clone(),
                reason: "push candidate failed re-verification".into(),
            });
        }
        PushSearch::NotFound { .. } => {}
    }
    let settings = TorSettings::new(budgets.trunc.clone(), budgets.solve_radius);
    for e_hat in orbit_closure_sample(cm, &e, budgets.orbit_depth) {
        for k in 0..=n {
            match tor_vanishing_test(cx, cm, &e_hat, k, &settings) {
                TorOutcome::Obstruction(obs) => {
                    return Ok(Verdict::NonMember(Box::new(obs)));
                }
                TorOutcome::Vanishes | TorOutcome::Unknown(_) => {}
            }
        }
    }
    Ok(Verdict::Unknown {
        window: budgets.max_window,
        trunc: budgets.trunc.clone(),
        reason: "no push found and no persistent obstruction".into(),
    })
}

/// Lag data toward a base point, measured by distances.
#[derive(Clone, Debug)]
pub struct PointLevelReport {
    pub i: i64,
    pub level: Q,
    /// Smallest half-integer lag `λ` with `D(c) ≤ D(z) + λ`; `None` when the
    /// window was exhausted.
    pub lag: Option<Q>,
}

#[derive(Clone, Debug)]
pub struct PointLagEstimate {
    pub base: Point,
    pub levels: Vec<PointLevelReport>,
    pub uniform_lag: Option<Q>,
    pub unknown_levels: usize,
}

/// Controlled acyclicity over a point: the same enumeration with `D_b` in
/// place of the valuation; levels are radii, and bounding chains are pushed
/// to the smallest distance threshold that still solves.
pub fn ca_over_point<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    b: &Point,
    n: usize,
    radii: &[Q],
    budgets: &Budgets,
) -> PointLagEstimate {
    let window = Window::new(&cx.spec, budgets.window);
    let mut levels = Vec::new();
    let mut unknown = 0usize;

    let lag_grid = |target: &Dist, level: &Dist| -> Option<Q> {
        let mut j: i64 = 0;
        while j <= 64 {
            let lam = Q::from_i64(j) / Q::from_i64(2);
            if target.le_rat_plus(&lam, level) {
                return Some(lam);
            }
            j += 1;
        }
        None
    };

    for i in -1i64..=(n as i64 - 1) {
        if i >= 0 && (i as usize) > cx.top_dim() {
            break;
        }
        if i == -1 {
            for target_idx in 0..cx.module.rank {
                let mut target = vec![K::zero(); cx.module.rank];
                target[target_idx] = K::one();
                let cells0 = window.cells(cx, 0);
                let best = best_distance_augmentation(cx, cm, b, &cells0, &target);
                match best {
                    Some((tau, _chain)) => {
                        let lag = lag_grid(&tau, &Dist::zero());
                        if lag.is_none() {
                            unknown += 1;
                        }
                        levels.push(PointLevelReport {
                            i,
                            level: Q::zero(),
                            lag,
                        });
                    }
                    None => {
                        unknown += 1;
                        levels.push(PointLevelReport {
                            i,
                            level: Q::zero(),
                            lag: None,
                        });
                    }
                }
            }
            continue;
        }
        let i_us = i as usize;
        for s in radii {
            let s_dist = Dist::from_rational(&s.clone().max(Q::zero()));
            let cycle_cells: Vec<Cell> = window
                .cells(cx, i_us)
                .into_iter()
                .filter(|c| {
                    cm.dist_to_base(b, &Chain::<K>::cell(c)).le(&s_dist)
                })
                .collect();
            let cycles = spanning_cycles(cx, &cycle_cells, i_us);
            let mut level_lag: Option<Q> = Some(Q::zero());
            for z in cycles {
                if z.is_zero() {
                    continue;
                }
                match bound_cycle_by_distance(cx, cm, b, &window, &z) {
                    Some((_, tau)) => match lag_grid(&tau, &s_dist) {
                        Some(lag) => {
                            level_lag = level_lag.map(|w| w.max(lag));
                        }
                        None => {
                            level_lag = None;
                            break;
                        }
                    },
                    None => {
                        level_lag = None;
                        break;
                    }
                }
            }
            if level_lag.is_none() {
                unknown += 1;
            }
            levels.push(PointLevelReport {
                i,
                level: s.clone(),
                lag: level_lag,
            });
        }
    }
    let uniform_lag = if unknown == 0 {
        levels.iter().filter_map(|l| l.lag.clone()).max().or_else(|| Some(Q::zero()))
    } else {
        None
    };
    PointLagEstimate {
        base: b.clone(),
        levels,
        uniform_lag,
        unknown_levels: unknown,
    }
}

fn best_distance_augmentation<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    b: &Point,
    cells: &[Cell],
    target: &[K],
) -> Option<(Dist, Chain<K>)> {
    let mut thresholds: Vec<Dist> = cells
        .iter()
        .map(|c| cm.dist_to_base(b, &Chain::<K>::cell(c)))
        .collect();
    thresholds.sort_by(|a, b| a.sq.cmp(&b.sq));
    thresholds.dedup_by(|a, b| a.sq == b.sq);
    for tau in &thresholds {
        let sub: Vec<Cell> = cells
            .iter()
            .filter(|c| cm.dist_to_base(b, &Chain::<K>::cell(c)).le(tau))
            .cloned()
            .collect();
        if let Some(chain) =
            finitary::solve_augmentation_for(cx, cm, &Chooser::Lexicographic, &sub, target)
        {
            return Some((tau.clone(), chain));
        }
    }
    None
}

fn bound_cycle_by_distance<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    b: &Point,
    window: &Window,
    z: &Chain<K>,
) -> Option<(Chain<K>, Dist)> {
    let dim = z.dim + 1;
    if dim > cx.top_dim() {
        return None;
    }
    let all_cells = window.cells(cx, dim);
    let mut thresholds: Vec<Dist> = all_cells
        .iter()
        .map(|c| cm.dist_to_base(b, &Chain::<K>::cell(c)))
        .collect();
    thresholds.sort_by(|a, b| a.sq.cmp(&b.sq));
    thresholds.dedup_by(|a, b| a.sq == b.sq);
    for tau in &thresholds {
        let sub: Vec<Cell> = all_cells
            .iter()
            .filter(|c| cm.dist_to_base(b, &Chain::<K>::cell(c)).le(tau))
            .cloned()
            .collect();
        if let Some(chain) =
            finitary::solve_boundary_for(cx, cm, &Chooser::Lexicographic, dim, &sub, z)
        {
            return Some((chain, tau.clone()));
        }
    }
    None
}

/// Least tested radius `r` such that every sampled module element is hit by
/// a 0-chain controlled inside `B_r(b)`.
pub fn bounded_support_check<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    samples: &[Vec<K>],
    radius_budget: u32,
) -> Option<Dist> {
    let window = Window::new(&cx.spec, radius_budget);
    let cells = window.cells(cx, 0);
    let mut best: Option<Dist> = None;
    for a in samples {
        let (tau, _) = best_distance_augmentation(cx, cm, &cm.base, &cells, a)?;
        best = Some(match best {
            None => tau,
            Some(b) => b.max(tau),
        });
    }
    best
}

/// Result of the zero-lag transform: the expanded complex, the extended
/// control map, and the monotone homotopy volley assembled from the
/// dimension-raising expansion cells.
pub struct ZeroLagTransform<K: crate::scalar::Scalar> {
    pub complex: ChainComplex<K>,
    pub control: ControlledModel,
    pub monotone_volley: Volley<K>,
}

/// Performs the elementary expansions driven by per-direction pushes: for
/// every basis cell `x` in dimensions `< n` and every sampled direction, a
/// candidate `c` with matching boundary data and strictly higher valuation
/// is attached via new cells `ξ, η`, with the control extension
/// `h'(ξ) = h(x) ∪ h(c)` keeping `v(ξ) = v(x)` (the homotopy is monotone).
///
/// The hypothesis (full membership one level down) is verified on the
/// sampled directions before any expansion.
pub fn zero_lag_transform<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    dirs: &[BoundaryDir],
    n: usize,
    budgets: &Budgets,
) -> Result<ZeroLagTransform<K>, SigmaError> {
    // Hypothesis: membership at level n−1 for every sampled direction.
    for e in dirs {
        let v = membership(cx, cm, e, n as i64 - 1, budgets)?;
        if !v.is_member() {
            return Err(SigmaError::Hypothesis(format!(
                "direction {e} is not verified one level down"
            )));
        }
    }
    let mut cur = cx.clone();
    let mut cur_cm = cm.clone();
    // Per-direction data carried between levels.
    let mut phi: BTreeMap<usize, FinitaryMap<K>> = BTreeMap::new();
    let mut sigma: BTreeMap<usize, Vec<Chain<K>>> = BTreeMap::new(); // per dir: σ_e on the previous level's basis
    let mut monotone: Vec<Vec<Chain<K>>> = Vec::new();

    for k in 0..n {
        // Pushes at level k extending the previous level's choices.
        let mut new_phi: BTreeMap<usize, FinitaryMap<K>> = BTreeMap::new();
        for (idx, e) in dirs.iter().enumerate() {
            let found = find_push_extending(&cur, &cur_cm, e, k, budgets, phi.get(&idx))?;
            let PushSearch::Found(cert) = found else {
                return Err(SigmaError::Hypothesis(format!(
                    "no level-{k} push toward {e} despite the hypothesis"
                )));
            };
            new_phi.insert(idx, cert.map.clone());
        }

        // Expansions: one (ξ, η) pair per basis cell and direction.
        let symbol_count = cur.rank(k);
        let mut xi_records: BTreeMap<(usize, usize), Chain<K>> = BTreeMap::new();
        for sym in 0..symbol_count {
            for (idx, _e) in dirs.iter().enumerate() {
                let x_cell = Cell {
                    dim: k,
                    sym,
                    g: cur.spec.id(),
                };
                let map = &new_phi[&idx];
                let mut c = map.apply_cell(&cur.spec, &x_cell);
                if k >= 1 {
                    // correction by the previous level's monotone homotopy:
                    // c := φ(x) + σ(∂x)
                    let bx = cur.boundary(&Chain::cell(&x_cell));
                    for ((s, g), coeff) in bx.iter() {
                        let s_val = &sigma[&idx][*s];
                        c = c.add(&s_val.translate(&cur.spec, g).scale(coeff));
                    }
                }
                let window = Window::new(&cur.spec, budgets.max_window);
                let cells = window.cells(&cur, k + 1);
                let target = Chain::cell(&x_cell).sub(&c);
                let d_chain = finitary::solve_boundary_for(
                    &cur,
                    &cur_cm,
                    &Chooser::Lexicographic,
                    k + 1,
                    &cells,
                    &target,
                )
                .ok_or_else(|| {
                    SigmaError::Hypothesis("no chain d with ∂d = x − c in the window".into())
                })?;
                let expanded = cur.elementary_expansion(&x_cell, &c, &d_chain)?;
                let xi_sym = expanded.rank(k + 1) - 1;
                cur = expanded;
                cur_cm = cur_cm
                    .extend_by_rules(&cur)
                    .map_err(|e| SigmaError::Unsupported(e.to_string()))?;
                xi_records.insert(
                    (sym, idx),
                    Chain::monomial(k + 1, xi_sym, cur.spec.id(), K::one()),
                );
            }
        }
        // σ for the next level: per direction, the ξ-cell over each symbol.
        let mut new_sigma: BTreeMap<usize, Vec<Chain<K>>> = BTreeMap::new();
        for (idx, _) in dirs.iter().enumerate() {
            let per_sym: Vec<Chain<K>> = (0..symbol_count)
                .map(|sym| xi_records[&(sym, idx)].clone())
                .collect();
            new_sigma.insert(idx, per_sym);
        }
        if k == 0 {
            // the monotone volley exposed to callers: all ξ options per cell
            monotone = (0..symbol_count)
                .map(|sym| {
                    (0..dirs.len())
                        .map(|idx| xi_records[&(sym, idx)].clone())
                        .collect()
                })
                .collect();
        }
        sigma = new_sigma;
        phi = new_phi;
    }
    let _ = phi;
    Ok(ZeroLagTransform {
        complex: cur,
        control: cur_cm,
        monotone_volley: Volley {
            degree: 1,
            table: vec![monotone],
        },
    })
}

/// One sampled join with the independently computed verdicts.
#[derive(Debug)]
pub struct JoinSample<K: crate::scalar::Scalar> {
    pub dir: BoundaryDir,
    pub verdict: Verdict<K>,
    pub predicted_member: bool,
    pub matches: Option<bool>,
}

#[derive(Debug)]
pub struct ProductCheckReport<K: crate::scalar::Scalar> {
    pub joins: Vec<JoinSample<K>>,
    pub consistent: bool,
}

/// Verifies the complement product formula on sampled joins: factor
/// verdicts at every split `p + (n−p)` and the product verdict on the
/// tensor complex are computed independently, then compared against the
/// join-of-complements prediction.
#[allow(clippy::too_many_arguments)]
pub fn product_complement_check<K: Field>(
    left: &ChainComplex<K>,
    cm_left: &ControlledModel,
    right: &ChainComplex<K>,
    cm_right: &ControlledModel,
    product: &ChainComplex<K>,
    cm_product: &ControlledModel,
    n: usize,
    joins: &[BoundaryDir],
    budgets: &Budgets,
) -> Result<ProductCheckReport<K>, SigmaError> {
    // Hypothesis: full zero-level membership on both factors for the factor
    // directions appearing in the joins.
    let mut left_dirs: Vec<BoundaryDir> = Vec::new();
    let mut right_dirs: Vec<BoundaryDir> = Vec::new();
    for j in joins {
        let BoundaryDir::Join { left: l, right: r, .. } = j else {
            return Err(SigmaError::Unsupported(
                "product check needs join directions".into(),
            ));
        };
        let l = l.canonical();
        let r = r.canonical();
        if !left_dirs.contains(&l) {
            left_dirs.push(l);
        }
        if !right_dirs.contains(&r) {
            right_dirs.push(r);
        }
    }
    for e in &left_dirs {
        if !membership(left, cm_left, e, 0, budgets)?.is_member() {
            return Err(SigmaError::Hypothesis(format!(
                "left factor not verified at level 0 toward {e}"
            )));
        }
    }
    for e in &right_dirs {
        if !membership(right, cm_right, e, 0, budgets)?.is_member() {
            return Err(SigmaError::Hypothesis(format!(
                "right factor not verified at level 0 toward {e}"
            )));
        }
    }
    // Factor complement flags for all p ≤ n.
    let mut left_complement: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    let mut right_complement: BTreeMap<(usize, usize), bool> = BTreeMap::new();
    for p in 0..=n {
        for (i, e) in left_dirs.iter().enumerate() {
            let v = membership(left, cm_left, e, p as i64, budgets)?;
            left_complement.insert((p, i), !v.is_member());
        }
        for (i, e) in right_dirs.iter().enumerate() {
            let v = membership(right, cm_right, e, p as i64, budgets)?;
            right_complement.insert((p, i), !v.is_member());
        }
    }
    let mut out = Vec::new();
    let mut consistent = true;
    for j in joins {
        let BoundaryDir::Join { w, w2, left: l, right: r } = j else {
            unreachable!()
        };
        let li = left_dirs.iter().position(|d| *d == l.canonical()).unwrap();
        let ri = right_dirs.iter().position(|d| *d == r.canonical()).unwrap();
        let predicted_complement = if w2.is_zero() {
            left_complement[&(n, li)]
        } else if w.is_zero() {
            right_complement[&(n, ri)]
        } else {
            (0..=n).any(|p| left_complement[&(p, li)] && right_complement[&(n - p, ri)])
        };
        let verdict = membership(product, cm_product, j, n as i64, budgets)?;
        let matches = if verdict.is_unknown() {
            None
        } else {
            Some(verdict.is_member() == !predicted_complement)
        };
        if matches != Some(true) {
            consistent = false;
        }
        out.push(JoinSample {
            dir: j.clone(),
            verdict,
            predicted_member: !predicted_complement,
            matches,
        });
    }
    Ok(ProductCheckReport {
        joins: out,
        consistent,
    })
}

/// One probed perturbation of a direction.
#[derive(Clone, Debug)]
pub struct TitsSample {
    pub dir: BoundaryDir,
    pub gsh: Val,
    pub positive: bool,
}

#[derive(Clone, Debug)]
pub struct TitsProbeReport {
    /// Exact sup-norm radius within which positivity is guaranteed by the
    /// linear bound (zero when the base shift is zero).
    pub margin: Q,
    pub samples: Vec<TitsSample>,
    pub failures: Vec<TitsSample>,
}

/// For an equivariant Euclidean certificate, the guaranteed shift is a
/// minimum of finitely many functions linear in the direction vector. The
/// probe derives the exact linear margin and evaluates the shift at rational
/// perturbations within the requested radius.
pub fn tits_openness_probe<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    map: &FinitaryMap<K>,
    e: &BoundaryDir,
    radius: &Q,
    budgets: &Budgets,
) -> Result<TitsProbeReport, SigmaError> {
    let crate::geometry::ModelSpace::Euclidean { dim, .. } = &cm.model else {
        return Err(SigmaError::Unsupported(
            "the openness probe supports Euclidean models only".into(),
        ));
    };
    if !map.is_equivariant() {
        return Err(SigmaError::Unsupported(
            "the openness probe requires an equivariant certificate".into(),
        ));
    }
    let dim = *dim;
    let e = e.canonical();
    let window = Window::new(&cx.spec, budgets.window);
    let base_report = shift_report(cm, &e, map, &window);
    let base_gsh = match base_report.gsh.value() {
        Val::Finite(v) => v.clone(),
        Val::Infinite => Q::zero(),
    };
    // Coordinate bound over every control point involved in the shift data.
    let mut coord_bound = Q::from_i64(1);
    for d in 0..map.source_dims() {
        for sym in 0..map.volley.table[d].len() {
            let cell = Cell {
                dim: d,
                sym,
                g: cx.spec.id(),
            };
            let mut pts = cm.points_of_cell(&cell);
            pts.extend(
                map.apply_cell(&cx.spec, &cell)
                    .support_cells()
                    .flat_map(|c| cm.points_of_cell(&c)),
            );
            for p in pts {
                let Point::Euclidean(coords) = p else { continue };
                for c in coords {
                    let a = if c < Q::zero() { -c.clone() } else { c.clone() };
                    if a > coord_bound {
                        coord_bound = a;
                    }
                }
            }
        }
    }
    let margin = if base_gsh > Q::zero() {
        base_gsh.clone() / (Q::from_i64(2) * &coord_bound)
    } else {
        Q::zero()
    };
    let probe_radius = if margin > Q::zero() {
        margin.clone().min(radius.clone())
    } else {
        radius.clone()
    };
    let BoundaryDir::Euclidean(u) = &e else {
        return Err(SigmaError::Unsupported("expected a Euclidean direction".into()));
    };
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for i in 0..dim {
        for sign in [1i64, -1] {
            let mut u2 = u.clone();
            u2[i] = &u2[i] + Q::from_i64(sign) * &probe_radius;
            if u2.iter().all(|c| c.is_zero()) {
                continue;
            }
            let dir = BoundaryDir::Euclidean(u2);
            let rep = shift_report(cm, &dir, map, &window);
            let gsh = rep.gsh.value().clone();
            let positive = match &gsh {
                Val::Finite(v) => *v > Q::zero(),
                Val::Infinite => true,
            };
            let sample = TitsSample {
                dir,
                gsh,
                positive,
            };
            if !positive {
                failures.push(sample.clone());
            }
            samples.push(sample);
        }
    }
    Ok(TitsProbeReport {
        margin,
        samples,
        failures,
    })
}

/// Report of the resolution/control-map independence check.
#[derive(Debug)]
pub struct InvarianceReport<K: crate::scalar::Scalar> {
    pub verdicts_agree: bool,
    pub first_member: bool,
    pub second_member: bool,
    /// The transported push `α φ^k β` when the first complex had one,
    /// with its verified shift on the second complex.
    pub transported: Option<(usize, PushCertificate<K>)>,
}

/// Checks that two resolutions of the same module with their control maps
/// give the same verdict, and when the first has a push, transports it to
/// the second via lifted comparison maps with the iterate count `k` chosen
/// so that `k·ν` exceeds `‖α‖ + ‖β‖`.
pub fn invariance_crosscheck<K: Field>(
    first: &ChainComplex<K>,
    cm_first: &ControlledModel,
    second: &ChainComplex<K>,
    cm_second: &ControlledModel,
    e: &BoundaryDir,
    n: usize,
    budgets: &Budgets,
) -> Result<InvarianceReport<K>, SigmaError> {
    let v1 = membership(first, cm_first, e, n as i64, budgets)?;
    let v2 = membership(second, cm_second, e, n as i64, budgets)?;
    let mut transported = None;
    if let Verdict::Member(MemberEvidence::Push(cert)) = &v1 {
        let chooser = Chooser::ValuationFirst(e.canonical());
        let alpha = lift_finitary(
            first,
            second,
            cm_second,
            &chooser,
            n,
            budgets.window,
            budgets.max_window,
        )?;
        let beta = lift_finitary(
            second,
            first,
            cm_first,
            &chooser,
            n,
            budgets.window,
            budgets.max_window,
        )?;
        let norm_a = norm_map(cm_first, cm_second, &alpha);
        let norm_b = norm_map(cm_second, cm_first, &beta);
        let nu = match cert.gsh.value() {
            Val::Finite(v) => v.clone(),
            Val::Infinite => Q::from_i64(1),
        };
        let mut k: usize = 1;
        let window = Window::new(&second.spec, budgets.window);
        loop {
            let threshold = Q::from_i64(k as i64) * &nu;
            if norm_a.sum_le_rat(&norm_b, &threshold) {
                let phik = cert.map.iterate(first, k)?;
                let composed = alpha.compose(&first.spec, &phik.compose(&first.spec, &beta)?)?;
                let rep = shift_report(cm_second, &e.canonical(), &composed, &window);
                let positive = match rep.gsh.value() {
                    Val::Finite(v) => *v > Q::zero(),
                    Val::Infinite => true,
                };
                if positive
                    && composed.is_chain_map(second, second, &window)
                    && composed.lifts_identity(second, second, &window)
                {
                    transported = Some((
                        k,
                        PushCertificate {
                            dir: e.canonical(),
                            level: n,
                            nu: Q::from_i64(0),
                            map: composed,
                            gsh: rep.gsh,
                            homotopy: None,
                            window_radius: window.radius,
                        },
                    ));
                    break;
                }
            }
            k += 1;
            if k > 64 {
                break;
            }
        }
    }
    Ok(InvarianceReport {
        verdicts_agree: v1.is_member() == v2.is_member()
            && v1.is_non_member() == v2.is_non_member(),
        first_member: v1.is_member(),
        second_member: v2.is_member(),
        transported,
    })
}
