//! Model CAT(0) spaces, boundary directions, control maps and valuations.
//!
//! Three model families are implemented: Euclidean spaces with rational
//! translation actions, the Bass–Serre tree of `BS(1,m)`, and finite
//! products. All Busemann differences are exact rationals (directions are
//! unnormalized, so every comparison is invariant under positive scaling),
//! and point distances are exact square roots of rationals compared without
//! ever leaving `Q`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::complex::{Cell, Chain, ChainComplex};
use crate::group::{Backend, GroupElem, GroupSpec};
use crate::scalar::Scalar;

type Q = BigRational;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("model/group mismatch: {0}")]
    Mismatch(String),
    #[error("invalid model: {0}")]
    Invalid(String),
}

/// A model space together with the isometric action of the scenario group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelSpace {
    /// `R^dim`; `action[i]` is the translation vector of generator `i`.
    Euclidean { dim: usize, action: Vec<Vec<Q>> },
    /// Bass–Serre tree of `BS(1,m)` with unit edge lengths.
    Tree { m: u64 },
    Product(Box<ModelSpace>, Box<ModelSpace>),
}

/// A point of a model space.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Point {
    Euclidean(Vec<Q>),
    /// Vertex `(level, coset)` of the `BS(1,m)` tree: the coset
    /// `u + m^level Z` of `Z[1/m]`, with `u` canonicalized into `[0, m^level)`.
    TreeVertex { level: i64, coset: Q },
    Product(Box<Point>, Box<Point>),
}

/// A boundary direction, kept unnormalized.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundaryDir {
    /// Nonzero rational vector up to positive scaling.
    Euclidean(Vec<Q>),
    /// The unique end of the tree in the direction of coarser cosets.
    TreeUp,
    /// An end refining towards the m-adic limit `xi` (any rational whose
    /// digit expansion is eventually periodic, i.e. all of `Q`).
    TreeEnd(Q),
    /// Join point `w·e + w'·e'` with rational weights `w, w' >= 0`, not both
    /// zero.
    Join {
        w: Q,
        w2: Q,
        left: Box<BoundaryDir>,
        right: Box<BoundaryDir>,
    },
}

impl fmt::Display for BoundaryDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryDir::Euclidean(v) => {
                let parts: Vec<String> = v.iter().map(|q| q.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            BoundaryDir::TreeUp => write!(f, "up"),
            BoundaryDir::TreeEnd(xi) => write!(f, "end({xi})"),
            BoundaryDir::Join { w, w2, left, right } => {
                write!(f, "join[{w},{w2}]({left},{right})")
            }
        }
    }
}

impl BoundaryDir {
    /// Scales Euclidean vectors to primitive integer form and join weights to
    /// coprime integers. All theory statements are invariant under positive
    /// scaling, and with canonical directions the shift unit is 1.
    pub fn canonical(&self) -> BoundaryDir {
        match self {
            BoundaryDir::Euclidean(v) => BoundaryDir::Euclidean(primitive_scale(v)),
            BoundaryDir::TreeUp => BoundaryDir::TreeUp,
            BoundaryDir::TreeEnd(xi) => BoundaryDir::TreeEnd(xi.clone()),
            BoundaryDir::Join { w, w2, left, right } => {
                let pair = primitive_scale(&[w.clone(), w2.clone()]);
                BoundaryDir::Join {
                    w: pair[0].clone(),
                    w2: pair[1].clone(),
                    left: Box::new(left.canonical()),
                    right: Box::new(right.canonical()),
                }
            }
        }
    }
}

fn primitive_scale(v: &[Q]) -> Vec<Q> {
    let mut lcm = BigInt::one();
    for q in v {
        lcm = lcm.lcm(q.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|q| (q * Q::from_integer(lcm.clone())).to_integer()).collect();
    let mut gcd = BigInt::zero();
    for i in &ints {
        gcd = gcd.gcd(i);
    }
    if gcd.is_zero() {
        return v.to_vec();
    }
    ints.iter()
        .map(|i| Q::from_integer(i / &gcd))
        .collect()
}

/// Exact nonnegative distance `sqrt(sq)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dist {
    pub sq: Q,
}

impl Dist {
    pub fn zero() -> Self {
        Dist { sq: Q::zero() }
    }

    pub fn from_rational(q: &Q) -> Self {
        assert!(!q.is_negative());
        Dist { sq: q * q }
    }

    pub fn is_zero(&self) -> bool {
        self.sq.is_zero()
    }

    pub fn le(&self, other: &Dist) -> bool {
        self.sq <= other.sq
    }

    pub fn max(self, other: Dist) -> Dist {
        if self.sq >= other.sq {
            self
        } else {
            other
        }
    }

    /// Exact test `sqrt(self) <= q + sqrt(other)`.
    pub fn le_rat_plus(&self, q: &Q, other: &Dist) -> bool {
        // RHS < 0 iff q < 0 and sqrt(other) < -q.
        if q.is_negative() && other.sq < q * q {
            return false;
        }
        // Both sides >= 0: compare squares. self <= q² + other + 2q·sqrt(other)
        let l = &self.sq - &other.sq - q * q;
        let rhs_sq = Q::from_i64(4) * q * q * &other.sq;
        if !q.is_negative() {
            l.is_negative() || l.is_zero() || (&l * &l) <= rhs_sq
        } else {
            // RHS' = 2q·sqrt(other) <= 0: need l <= RHS' i.e. (-l) >= 2|q|sqrt(other)
            if l.is_positive() {
                false
            } else {
                (&l * &l) >= rhs_sq
            }
        }
    }

    /// Exact test `sqrt(self) + sqrt(other) <= q`.
    pub fn sum_le_rat(&self, other: &Dist, q: &Q) -> bool {
        if q.is_negative() {
            return false;
        }
        let r = q * q - &self.sq - &other.sq;
        if r.is_negative() {
            return false;
        }
        Q::from_i64(4) * &self.sq * &other.sq <= &r * &r
    }

    /// Exact test `sqrt(self) <= q` for rational `q`.
    pub fn le_rat(&self, q: &Q) -> bool {
        !q.is_negative() && self.sq <= q * q
    }

    /// Exact test `q <= sqrt(self)`.
    pub fn ge_rat(&self, q: &Q) -> bool {
        q.is_negative() || q.is_zero() || q * q <= self.sq
    }
}

/// Valuation value: exact rational, with `+∞` exactly for the zero chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Val {
    Finite(Q),
    Infinite,
}

impl Val {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            Val::Finite(q) => Some(q),
            Val::Infinite => None,
        }
    }

    pub fn min(self, other: Val) -> Val {
        match (self, other) {
            (Val::Infinite, v) | (v, Val::Infinite) => v,
            (Val::Finite(a), Val::Finite(b)) => Val::Finite(a.min(b)),
        }
    }

    pub fn ge(&self, q: &Q) -> bool {
        match self {
            Val::Infinite => true,
            Val::Finite(v) => v >= q,
        }
    }
}

/// Largest `l` with `x ∈ m^l · Z_m` (m-adic closure); `None` for `x = 0`.
pub fn madic_valuation(m: u64, x: &Q) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let m_q = Q::from_integer(BigInt::from(m));
    let m_b = BigInt::from(m);
    let mut v: i64 = 0;
    let mut y = x.clone();
    // Strip the part of the denominator sharing factors with m.
    while !y.denom().gcd(&m_b).is_one() {
        y *= &m_q;
        v -= 1;
    }
    // Denominator is now coprime to m, so membership in m·Z_m is just
    // divisibility of the numerator.
    while (y.numer() % &m_b).is_zero() {
        y /= &m_q;
        v += 1;
    }
    Some(v)
}

fn m_pow_q(m: u64, e: i64) -> Q {
    let base = Q::from_integer(BigInt::from(m));
    let mut acc = Q::one();
    for _ in 0..e.unsigned_abs() {
        acc *= &base;
    }
    if e >= 0 {
        acc
    } else {
        acc.recip()
    }
}

impl ModelSpace {
    pub fn validate(&self, spec: &GroupSpec) -> Result<(), GeometryError> {
        match self {
            ModelSpace::Euclidean { dim, action } => {
                if action.len() != spec.gens.len() {
                    return Err(GeometryError::Invalid(
                        "one translation vector per generator required".into(),
                    ));
                }
                if action.iter().any(|v| v.len() != *dim) {
                    return Err(GeometryError::Invalid(
                        "translation vectors must match the model dimension".into(),
                    ));
                }
                // The per-generator vectors define an action iff every preset
                // relator maps to the zero vector.
                for rel in spec.preset_relators() {
                    let mut acc = vec![Q::zero(); *dim];
                    for (i, e) in rel {
                        for (slot, v) in acc.iter_mut().zip(action[i].iter()) {
                            *slot += Q::from_i64(e) * v;
                        }
                    }
                    if acc.iter().any(|q| !q.is_zero()) {
                        return Err(GeometryError::Invalid(
                            "translation vectors violate a group relation".into(),
                        ));
                    }
                }
                Ok(())
            }
            ModelSpace::Tree { m } => match &spec.backend {
                Backend::BaumslagSolitar(m2) if m2 == m => Ok(()),
                _ => Err(GeometryError::Mismatch(
                    "tree model requires the matching BS(1,m) backend".into(),
                )),
            },
            ModelSpace::Product(l, r) => match &spec.backend {
                Backend::Product(sl, sr) => {
                    l.validate(sl)?;
                    r.validate(sr)
                }
                _ => Err(GeometryError::Mismatch(
                    "product model requires a product group".into(),
                )),
            },
        }
    }

    pub fn default_base(&self) -> Point {
        match self {
            ModelSpace::Euclidean { dim, .. } => Point::Euclidean(vec![Q::zero(); *dim]),
            // the coset of <a>
            ModelSpace::Tree { .. } => Point::TreeVertex {
                level: 0,
                coset: Q::zero(),
            },
            ModelSpace::Product(l, r) => {
                Point::Product(Box::new(l.default_base()), Box::new(r.default_base()))
            }
        }
    }

    /// Translation vector of `g` on a Euclidean model.
    fn translation_of(&self, spec: &GroupSpec, g: &GroupElem) -> Vec<Q> {
        let ModelSpace::Euclidean { dim, action } = self else {
            panic!("translation_of on non-Euclidean model")
        };
        let mut acc = vec![Q::zero(); *dim];
        let mut add = |i: usize, e: &Q| {
            for (slot, v) in acc.iter_mut().zip(action[i].iter()) {
                *slot += e * v;
            }
        };
        match (&spec.backend, g) {
            (Backend::FreeAbelian(_), GroupElem::FreeAbelian(v)) => {
                for (i, e) in v.iter().enumerate() {
                    add(i, &Q::from_i64(*e));
                }
            }
            (Backend::Free(_), GroupElem::Free(w)) => {
                for (i, e) in w {
                    add(*i, &Q::from_i64(*e));
                }
            }
            (Backend::BaumslagSolitar(m), GroupElem::BaumslagSolitar { u: _, k }) => {
                // vec(a) = 0 is forced by the relation; only the t-exponent acts.
                let _ = m;
                add(1, &Q::from_i64(*k));
            }
            (Backend::Product(sl, sr), GroupElem::Product(a, b)) => {
                // Split the action table between the two factors.
                let off = sl.gens.len();
                let left_model = ModelSpace::Euclidean {
                    dim: *dim,
                    action: action[..off].to_vec(),
                };
                let right_model = ModelSpace::Euclidean {
                    dim: *dim,
                    action: action[off..].to_vec(),
                };
                let lv = left_model.translation_of(sl, a);
                let rv = right_model.translation_of(sr, b);
                for (slot, (x, y)) in acc.iter_mut().zip(lv.iter().zip(rv.iter())) {
                    *slot = x + y;
                }
            }
            _ => panic!("group element does not match backend"),
        }
        acc
    }

    pub fn act_point(&self, spec: &GroupSpec, g: &GroupElem, p: &Point) -> Point {
        match (self, p) {
            (ModelSpace::Euclidean { .. }, Point::Euclidean(coords)) => {
                let v = self.translation_of(spec, g);
                Point::Euclidean(
                    coords
                        .iter()
                        .zip(v.iter())
                        .map(|(c, t)| c + t)
                        .collect(),
                )
            }
            (ModelSpace::Tree { m }, Point::TreeVertex { level, coset }) => {
                let GroupElem::BaumslagSolitar { u, k } = g else {
                    panic!("tree action needs a BS element")
                };
                let new_level = level + k;
                let new_coset = m_pow_q(*m, *k) * coset + u;
                canonical_vertex(*m, new_level, new_coset)
            }
            (ModelSpace::Product(lm, rm), Point::Product(lp, rp)) => {
                let (Backend::Product(sl, sr), GroupElem::Product(a, b)) = (&spec.backend, g)
                else {
                    panic!("product action needs a product element")
                };
                Point::Product(
                    Box::new(lm.act_point(sl, a, lp)),
                    Box::new(rm.act_point(sr, b, rp)),
                )
            }
            _ => panic!("point does not match model"),
        }
    }

    pub fn act_boundary(&self, spec: &GroupSpec, g: &GroupElem, e: &BoundaryDir) -> BoundaryDir {
        match (self, e) {
            // Translations fix every direction.
            (ModelSpace::Euclidean { .. }, BoundaryDir::Euclidean(_)) => e.clone(),
            (ModelSpace::Tree { .. }, BoundaryDir::TreeUp) => BoundaryDir::TreeUp,
            (ModelSpace::Tree { m }, BoundaryDir::TreeEnd(xi)) => {
                let GroupElem::BaumslagSolitar { u, k } = g else {
                    panic!("tree action needs a BS element")
                };
                BoundaryDir::TreeEnd(m_pow_q(*m, *k) * xi + u)
            }
            (ModelSpace::Product(lm, rm), BoundaryDir::Join { w, w2, left, right }) => {
                let (Backend::Product(sl, sr), GroupElem::Product(a, b)) = (&spec.backend, g)
                else {
                    panic!("product action needs a product element")
                };
                BoundaryDir::Join {
                    w: w.clone(),
                    w2: w2.clone(),
                    left: Box::new(lm.act_boundary(sl, a, left)),
                    right: Box::new(rm.act_boundary(sr, b, right)),
                }
            }
            _ => panic!("direction does not match model"),
        }
    }

    /// Whether the boundary action is trivial (Euclidean translations and
    /// their products).
    pub fn boundary_action_trivial(&self) -> bool {
        match self {
            ModelSpace::Euclidean { .. } => true,
            ModelSpace::Tree { .. } => false,
            ModelSpace::Product(l, r) => l.boundary_action_trivial() && r.boundary_action_trivial(),
        }
    }

    /// `β_e(p) − β_e(q)`, exact, with the unnormalized-direction scaling.
    pub fn busemann_delta(&self, e: &BoundaryDir, p: &Point, q: &Point) -> Q {
        self.busemann(e, p) - self.busemann(e, q)
    }

    /// Busemann value anchored at a model-specific reference; only
    /// differences are meaningful across points, and valuations anchor at
    /// the control model's base point.
    pub fn busemann(&self, e: &BoundaryDir, p: &Point) -> Q {
        match (self, e, p) {
            (ModelSpace::Euclidean { .. }, BoundaryDir::Euclidean(u), Point::Euclidean(x)) => {
                x.iter().zip(u.iter()).map(|(a, b)| a * b).sum()
            }
            (ModelSpace::Tree { .. }, BoundaryDir::TreeUp, Point::TreeVertex { level, .. }) => {
                Q::from_i64(-level)
            }
            (
                ModelSpace::Tree { m },
                BoundaryDir::TreeEnd(xi),
                Point::TreeVertex { level, coset },
            ) => {
                // Confluence level of the vertex with the end: min(level, v_m(xi − u)).
                let l = match madic_valuation(*m, &(xi - coset)) {
                    None => *level,
                    Some(v) => v.min(*level),
                };
                Q::from_i64(2 * l - level)
            }
            (
                ModelSpace::Product(lm, rm),
                BoundaryDir::Join { w, w2, left, right },
                Point::Product(lp, rp),
            ) => w * lm.busemann(left, lp) + w2 * rm.busemann(right, rp),
            _ => panic!("direction/point does not match model"),
        }
    }

    /// Exact squared distance.
    pub fn dist(&self, p: &Point, q: &Point) -> Dist {
        match (self, p, q) {
            (ModelSpace::Euclidean { .. }, Point::Euclidean(a), Point::Euclidean(b)) => {
                let sq = a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| {
                        let d = x - y;
                        &d * &d
                    })
                    .sum();
                Dist { sq }
            }
            (
                ModelSpace::Tree { m },
                Point::TreeVertex {
                    level: k1,
                    coset: u1,
                },
                Point::TreeVertex {
                    level: k2,
                    coset: u2,
                },
            ) => {
                let conf = match madic_valuation(*m, &(u1 - u2)) {
                    None => (*k1).min(*k2),
                    Some(v) => v.min(*k1).min(*k2),
                };
                let d = (k1 - conf) + (k2 - conf);
                Dist::from_rational(&Q::from_i64(d))
            }
            (ModelSpace::Product(lm, rm), Point::Product(a1, a2), Point::Product(b1, b2)) => {
                let d1 = lm.dist(a1, b1);
                let d2 = rm.dist(a2, b2);
                Dist { sq: d1.sq + d2.sq }
            }
            _ => panic!("points do not match model"),
        }
    }
}

fn canonical_vertex(m: u64, level: i64, coset: Q) -> Point {
    let modulus = m_pow_q(m, level);
    let q = &coset / &modulus;
    let fl = q.floor();
    let canon = coset - modulus * fl;
    Point::TreeVertex {
        level,
        coset: canon,
    }
}

/// A model, base point and control table `h|X` for a specific complex shape.
#[derive(Clone, Debug)]
pub struct ControlledModel {
    pub spec: GroupSpec,
    pub model: ModelSpace,
    pub base: Point,
    /// `table[dim][sym]` is the finite nonempty point set `h(x)`.
    pub table: Vec<Vec<Vec<Point>>>,
}

impl ControlledModel {
    /// The default control map `h(x) = {b}` for every basis cell, realizing
    /// support-times-base-point control.
    pub fn single_base<K: Scalar>(
        cx: &ChainComplex<K>,
        model: ModelSpace,
        base: Point,
    ) -> Result<Self, GeometryError> {
        model.validate(&cx.spec)?;
        let table = (0..=cx.top_dim())
            .map(|d| (0..cx.rank(d)).map(|_| vec![base.clone()]).collect())
            .collect();
        Ok(ControlledModel {
            spec: cx.spec.clone(),
            model,
            base,
            table,
        })
    }

    /// The `h(x) := h(∂x)` preset: dimension 0 at the base point, higher
    /// cells inherit the union over their boundary supports.
    pub fn boundary_preset<K: Scalar>(
        cx: &ChainComplex<K>,
        model: ModelSpace,
        base: Point,
    ) -> Result<Self, GeometryError> {
        model.validate(&cx.spec)?;
        let mut table: Vec<Vec<Vec<Point>>> = vec![(0..cx.rank(0))
            .map(|_| vec![base.clone()])
            .collect()];
        let mut cm = ControlledModel {
            spec: cx.spec.clone(),
            model,
            base,
            table: table.clone(),
        };
        for d in 1..=cx.top_dim() {
            let mut layer = Vec::new();
            for sym in 0..cx.rank(d) {
                let mut pts = BTreeSet::new();
                for cell in cx.boundary_of_sym(d, sym).support_cells() {
                    for p in cm.points_of_cell(&cell) {
                        pts.insert(p);
                    }
                }
                if pts.is_empty() {
                    return Err(GeometryError::Invalid(
                        "boundary preset on a cell with empty boundary".into(),
                    ));
                }
                layer.push(pts.into_iter().collect());
            }
            table.push(layer);
            cm.table = table.clone();
        }
        Ok(cm)
    }

    /// Applies the control-extension rules a complex carries after
    /// elementary expansions, producing the extended control map.
    pub fn extend_by_rules<K: Scalar>(&self, cx: &ChainComplex<K>) -> Result<Self, GeometryError> {
        let mut out = self.clone();
        while out.table.len() <= cx.top_dim() {
            out.table.push(Vec::new());
        }
        for rule in &cx.control_rules {
            while out.table[rule.dim].len() <= rule.sym {
                out.table[rule.dim].push(Vec::new());
            }
            if !out.table[rule.dim][rule.sym].is_empty() {
                continue;
            }
            let mut pts = BTreeSet::new();
            for cell in &rule.from_cells {
                for p in out.points_of_cell(cell) {
                    pts.insert(p);
                }
            }
            if pts.is_empty() {
                return Err(GeometryError::Invalid("empty control extension".into()));
            }
            out.table[rule.dim][rule.sym] = pts.into_iter().collect();
        }
        for layer in &out.table {
            if layer.iter().any(|pts| pts.is_empty()) {
                return Err(GeometryError::Invalid("centerless control map violated".into()));
            }
        }
        Ok(out)
    }

    /// `h(y) = ρ(g)·h(x)` for a cell `y = g·x`.
    pub fn points_of_cell(&self, cell: &Cell) -> Vec<Point> {
        self.table[cell.dim][cell.sym]
            .iter()
            .map(|p| self.model.act_point(&self.spec, &cell.g, p))
            .collect()
    }

    /// Busemann value of a point, anchored so the base point is at 0.
    pub fn busemann_at(&self, e: &BoundaryDir, p: &Point) -> Q {
        self.model.busemann_delta(e, p, &self.base)
    }

    /// `v_e(c) = min over h(c)`; `+∞` exactly on the zero chain.
    pub fn valuation<K: Scalar>(&self, e: &BoundaryDir, c: &Chain<K>) -> Val {
        let mut best: Option<Q> = None;
        for cell in c.support_cells() {
            for p in self.points_of_cell(&cell) {
                let v = self.busemann_at(e, &p);
                best = Some(match best {
                    None => v,
                    Some(b) => b.min(v),
                });
            }
        }
        match best {
            None => Val::Infinite,
            Some(q) => Val::Finite(q),
        }
    }

    /// Valuation of a single cell.
    pub fn cell_valuation(&self, e: &BoundaryDir, cell: &Cell) -> Q {
        self.points_of_cell(cell)
            .iter()
            .map(|p| self.busemann_at(e, p))
            .min()
            .expect("control maps are centerless")
    }

    /// `D_b(c) = max{d(p,b) | p ∈ h(c)}`, `D_b(0) = 0`.
    pub fn dist_to_base<K: Scalar>(&self, b: &Point, c: &Chain<K>) -> Dist {
        let mut best = Dist::zero();
        for cell in c.support_cells() {
            for p in self.points_of_cell(&cell) {
                best = best.max(self.model.dist(&p, b));
            }
        }
        best
    }

    /// Valuation character `χ(g) = β_e(ρ(g)b) − β_e(b)`; additive in `g` for
    /// translation models.
    pub fn char_of(&self, e: &BoundaryDir, g: &GroupElem) -> Q {
        let gb = self.model.act_point(&self.spec, g, &self.base);
        self.busemann_at(e, &gb)
    }

    /// Hausdorff distance between the control images of two chains
    /// (exact squared form).
    pub fn hausdorff<K: Scalar>(&self, c1: &Chain<K>, c2: &Chain<K>) -> Option<Dist> {
        let pts1: Vec<Point> = c1
            .support_cells()
            .flat_map(|cell| self.points_of_cell(&cell))
            .collect();
        let pts2: Vec<Point> = c2
            .support_cells()
            .flat_map(|cell| self.points_of_cell(&cell))
            .collect();
        if pts1.is_empty() || pts2.is_empty() {
            return None;
        }
        let side = |from: &[Point], to: &[Point]| -> Dist {
            let mut worst = Dist::zero();
            for p in from {
                let mut best: Option<Dist> = None;
                for q in to {
                    let d = self.model.dist(p, q);
                    best = Some(match best {
                        None => d,
                        Some(b) => {
                            if d.le(&b) {
                                d
                            } else {
                                b
                            }
                        }
                    });
                }
                worst = worst.max(best.unwrap());
            }
            worst
        };
        Some(side(&pts1, &pts2).max(side(&pts2, &pts1)))
    }
}

/// `{g·e : |g| ≤ depth}` plus detected limit ends; for trivial boundary
/// actions this is `{e}`.
pub fn orbit_closure_sample(
    cm: &ControlledModel,
    e: &BoundaryDir,
    depth: u32,
) -> Vec<BoundaryDir> {
    if cm.model.boundary_action_trivial() {
        return vec![e.clone()];
    }
    let mut out = BTreeSet::new();
    out.insert(e.clone());
    for g in cm.spec.ball(depth).keys() {
        out.insert(cm.model.act_boundary(&cm.spec, g, e));
    }
    // Down-end orbits accumulate at the up end: translates g·xi with deep
    // negative m-adic valuation share ever-longer prefixes with the up ray.
    if let (ModelSpace::Tree { .. }, BoundaryDir::TreeEnd(_)) = (&cm.model, e) {
        out.insert(BoundaryDir::TreeUp);
    }
    out.into_iter().collect()
}

/// Deterministic direction samples for a model: primitive integer vectors in
/// sup-norm shells for Euclidean models, the up end followed by small
/// rational limits for trees, Farey-weighted joins of factor samples for
/// products. The first Euclidean sample is always `(1, 0, …)`.
pub fn sample_directions(model: &ModelSpace, n: usize, seed: u64) -> Vec<BoundaryDir> {
    let _ = seed; // sampling is fully deterministic; the seed is part of the
                  // scenario contract but no randomness is needed here
    match model {
        ModelSpace::Euclidean { dim, .. } => euclidean_samples(*dim, n)
            .into_iter()
            .map(BoundaryDir::Euclidean)
            .collect(),
        ModelSpace::Tree { m } => {
            let mut out = vec![BoundaryDir::TreeUp];
            let mut denoms: Vec<i64> = vec![1, 3, 5, 7, 9, 11]
                .into_iter()
                .filter(|d| (*d as u64).gcd(m) == 1 || *d == 1)
                .collect();
            if denoms.is_empty() {
                denoms.push(1);
            }
            'outer: for numer in 0..(n as i64 + 1) {
                for d in &denoms {
                    if numer.gcd(d) != 1 && !(numer == 0 && *d == 1) {
                        continue;
                    }
                    out.push(BoundaryDir::TreeEnd(Q::new(
                        BigInt::from(numer),
                        BigInt::from(*d),
                    )));
                    if out.len() >= n {
                        break 'outer;
                    }
                }
            }
            out.truncate(n.max(1));
            out
        }
        ModelSpace::Product(l, r) => {
            let weights = farey_weights(n);
            let ls = sample_directions(l, n.max(2), seed);
            let rs = sample_directions(r, n.max(2), seed);
            let mut out = Vec::new();
            let mut i = 0usize;
            while out.len() < n {
                let (w, w2) = &weights[out.len() % weights.len()];
                let le = &ls[i % ls.len()];
                let re = &rs[(i / ls.len()) % rs.len()];
                out.push(BoundaryDir::Join {
                    w: w.clone(),
                    w2: w2.clone(),
                    left: Box::new(le.clone()),
                    right: Box::new(re.clone()),
                });
                i += 1;
            }
            out
        }
    }
}

fn euclidean_samples(dim: usize, n: usize) -> Vec<Vec<Q>> {
    let mut out = Vec::new();
    let mut shell: i64 = 1;
    while out.len() < n && shell < 64 {
        let mut layer: Vec<Vec<i64>> = Vec::new();
        enumerate_shell(dim, shell, &mut vec![0; dim], 0, &mut layer);
        layer.retain(|v| {
            let mut g: i64 = 0;
            for x in v {
                g = g.gcd(x);
            }
            g == 1
        });
        layer.sort_by_key(|v| {
            let negs = v.iter().filter(|x| x.is_negative()).count();
            let nonzeros = v.iter().filter(|x| **x != 0).count();
            let lex: Vec<i64> = v.iter().map(|x| -x).collect();
            (negs, nonzeros, lex)
        });
        for v in layer {
            out.push(v.iter().map(|x| Q::from_i64(*x)).collect());
            if out.len() == n {
                break;
            }
        }
        shell += 1;
    }
    out
}

fn enumerate_shell(dim: usize, shell: i64, cur: &mut Vec<i64>, idx: usize, out: &mut Vec<Vec<i64>>) {
    if idx == dim {
        if cur.iter().map(|x| x.abs()).max() == Some(shell) {
            out.push(cur.clone());
        }
        return;
    }
    for v in -shell..=shell {
        cur[idx] = v;
        enumerate_shell(dim, shell, cur, idx + 1, out);
    }
    cur[idx] = 0;
}

/// Farey-ordered nonnegative weight pairs, starting with the pure ones.
pub fn farey_weights(n: usize) -> Vec<(Q, Q)> {
    let mut pairs: Vec<(i64, i64)> = vec![(1, 0), (0, 1), (1, 1)];
    let mut order = 2i64;
    while pairs.len() < n.max(3) && order < 64 {
        for p in 1..order {
            if p.gcd(&order) == 1 {
                pairs.push((p, order));
                pairs.push((order, p));
            }
        }
        order += 1;
    }
    pairs
        .into_iter()
        .map(|(a, b)| (Q::from_i64(a), Q::from_i64(b)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{fox_resolution, Presentation};
    use num_rational::BigRational;

    type Qr = BigRational;

    fn q(n: i64) -> Qr {
        Qr::from_i64(n)
    }

    fn z2_model() -> (ChainComplex<Qr>, ControlledModel) {
        let cx = fox_resolution(&Presentation::standard(GroupSpec::free_abelian(&["a", "b"])))
            .unwrap();
        let model = ModelSpace::Euclidean {
            dim: 2,
            action: vec![vec![q(1), q(0)], vec![q(0), q(1)]],
        };
        let base = model.default_base();
        let cm = ControlledModel::single_base(&cx, model, base).unwrap();
        (cx, cm)
    }

    fn bs_tree() -> (ChainComplex<Qr>, ControlledModel) {
        let cx = fox_resolution(&Presentation::standard(GroupSpec::baumslag_solitar(2))).unwrap();
        let model = ModelSpace::Tree { m: 2 };
        let base = model.default_base();
        let cm = ControlledModel::single_base(&cx, model, base).unwrap();
        (cx, cm)
    }

    #[test]
    fn euclidean_busemann_is_inner_product() {
        let model = ModelSpace::Euclidean {
            dim: 2,
            action: vec![vec![q(1), q(0)], vec![q(0), q(1)]],
        };
        let e = BoundaryDir::Euclidean(vec![q(1), q(0)]);
        let p = Point::Euclidean(vec![q(2), q(3)]);
        let origin = Point::Euclidean(vec![q(0), q(0)]);
        assert_eq!(model.busemann_delta(&e, &p, &origin), q(2));
    }

    #[test]
    fn tree_distances_and_busemann() {
        let (_, cm) = bs_tree();
        let spec = cm.spec.clone();
        let base = cm.base.clone();
        // t moves the base vertex to an adjacent vertex.
        let t = spec.generator(1);
        let tb = cm.model.act_point(&spec, &t, &base);
        assert_eq!(cm.model.dist(&tb, &base).sq, q(1));
        // a fixes the base vertex.
        let a = spec.generator(0);
        assert_eq!(cm.model.act_point(&spec, &a, &base), base);
        // identity fixes everything
        assert_eq!(cm.model.act_point(&spec, &spec.id(), &tb), tb);
        // Busemann toward the end 0: t·base is one step toward it.
        let e0 = BoundaryDir::TreeEnd(q(0));
        assert_eq!(cm.busemann_at(&e0, &tb), q(1));
        // Toward the up end, t·base moves away.
        assert_eq!(cm.busemann_at(&BoundaryDir::TreeUp, &tb), q(-1));
        // p = q gives delta 0
        assert_eq!(cm.model.busemann_delta(&e0, &tb, &tb), q(0));
    }

    #[test]
    fn tree_end_action_permutes_ends() {
        let (_, cm) = bs_tree();
        let spec = cm.spec.clone();
        let a = spec.generator(0);
        let e0 = BoundaryDir::TreeEnd(q(0));
        let moved = cm.model.act_boundary(&spec, &a, &e0);
        assert_eq!(moved, BoundaryDir::TreeEnd(q(1)));
        let up = cm.model.act_boundary(&spec, &a, &BoundaryDir::TreeUp);
        assert_eq!(up, BoundaryDir::TreeUp);
    }

    #[test]
    fn valuation_of_supported_chain() {
        let (cx, cm) = z2_model();
        let e = BoundaryDir::Euclidean(vec![q(1), q(0)]);
        // c = a²b³·x₀: support point (2,3), value 2
        let g = cx
            .spec
            .normal_form(&cx.spec.parse_word("a^2 b^3").unwrap())
            .unwrap();
        let c = Chain::monomial(0, 0, g, q(1));
        assert_eq!(cm.valuation(&e, &c), Val::Finite(q(2)));
        // zero chain → ∞
        assert_eq!(cm.valuation::<Qr>(&e, &Chain::zero(0)), Val::Infinite);
        // base cell → 0
        let c0 = Chain::monomial(0, 0, cx.spec.id(), q(1));
        assert_eq!(cm.valuation(&e, &c0), Val::Finite(q(0)));
    }

    #[test]
    fn dist_to_base_is_max_and_exact() {
        let (cx, cm) = z2_model();
        let g = cx
            .spec
            .normal_form(&cx.spec.parse_word("a^2 b^3").unwrap())
            .unwrap();
        let mut c = Chain::monomial(0, 0, g, q(1));
        c.add_term(0, cx.spec.id(), q(1));
        let d = cm.dist_to_base(&cm.base, &c);
        assert_eq!(d.sq, q(13));
        assert!(cm.dist_to_base::<Qr>(&cm.base, &Chain::zero(0)).is_zero());
    }

    #[test]
    fn madic_valuations() {
        assert_eq!(madic_valuation(2, &q(4)), Some(2));
        assert_eq!(madic_valuation(2, &q(3)), Some(0));
        assert_eq!(madic_valuation(2, &Qr::new(BigInt::from(1), BigInt::from(2))), Some(-1));
        assert_eq!(madic_valuation(2, &Qr::new(BigInt::from(1), BigInt::from(3))), Some(0));
        assert_eq!(madic_valuation(2, &Qr::new(BigInt::from(2), BigInt::from(3))), Some(1));
        assert_eq!(madic_valuation(2, &q(0)), None);
        assert_eq!(madic_valuation(6, &Qr::new(BigInt::from(3), BigInt::from(2))), Some(-1));
    }

    #[test]
    fn exact_sqrt_comparisons() {
        let a = Dist { sq: q(13) };
        let b = Dist { sq: q(9) };
        // sqrt(13) <= 1 + sqrt(9) = 4? 13 <= 16 yes
        assert!(a.le_rat_plus(&q(1), &b));
        // sqrt(13) <= 0.5 + 3 = 3.5? 13 <= 12.25 no
        assert!(!a.le_rat_plus(&Qr::new(BigInt::from(1), BigInt::from(2)), &b));
        // sqrt(13) <= -1 + sqrt(9)? sqrt(13) > 2
        assert!(!a.le_rat_plus(&q(-1), &b));
        // sqrt(9) <= -1 + sqrt(13)? 3 <= 2.6055 no
        assert!(!b.le_rat_plus(&q(-1), &a));
        // sqrt(4) <= -1 + sqrt(9)? 2 <= 2 yes
        assert!(Dist { sq: q(4) }.le_rat_plus(&q(-1), &b));
        // sum: sqrt(9) + sqrt(4) <= 5 yes; <= 4.9 no
        assert!(b.sum_le_rat(&Dist { sq: q(4) }, &q(5)));
        assert!(!b.sum_le_rat(&Dist { sq: q(4) }, &Qr::new(BigInt::from(49), BigInt::from(10))));
    }

    #[test]
    fn direction_samples_deterministic() {
        let model = ModelSpace::Euclidean {
            dim: 2,
            action: vec![vec![q(1), q(0)], vec![q(0), q(1)]],
        };
        let s1 = sample_directions(&model, 8, 1);
        let s2 = sample_directions(&model, 8, 1);
        assert_eq!(s1, s2);
        assert_eq!(s1[0], BoundaryDir::Euclidean(vec![q(1), q(0)]));
        assert_eq!(s1.len(), 8);
        let many = sample_directions(&model, 64, 1);
        assert_eq!(many.len(), 64);
        let set: BTreeSet<_> = many.iter().cloned().collect();
        assert_eq!(set.len(), 64);
    }

    #[test]
    fn orbit_closure_samples() {
        let (_, cm) = z2_model();
        let e = BoundaryDir::Euclidean(vec![q(1), q(0)]);
        assert_eq!(orbit_closure_sample(&cm, &e, 3), vec![e.clone()]);

        let (_, tcm) = bs_tree();
        let e0 = BoundaryDir::TreeEnd(q(0));
        let sample = orbit_closure_sample(&tcm, &e0, 1);
        assert!(sample.contains(&BoundaryDir::TreeUp));
        assert!(sample.contains(&e0));
        assert!(sample.len() > 2);
        // The up end is fixed by everything: orbit is a singleton plus itself.
        let up_sample = orbit_closure_sample(&tcm, &BoundaryDir::TreeUp, 2);
        assert_eq!(up_sample, vec![BoundaryDir::TreeUp]);
    }

    #[test]
    fn product_join_valuation_is_weighted_sum() {
        let m1 = ModelSpace::Euclidean {
            dim: 1,
            action: vec![vec![q(1)]],
        };
        let m2 = ModelSpace::Euclidean {
            dim: 1,
            action: vec![vec![q(1)]],
        };
        let model = ModelSpace::Product(Box::new(m1), Box::new(m2));
        let e = BoundaryDir::Join {
            w: q(1),
            w2: q(1),
            left: Box::new(BoundaryDir::Euclidean(vec![q(1)])),
            right: Box::new(BoundaryDir::Euclidean(vec![q(1)])),
        };
        let p = Point::Product(
            Box::new(Point::Euclidean(vec![q(2)])),
            Box::new(Point::Euclidean(vec![q(5)])),
        );
        let b = model.default_base();
        assert_eq!(model.busemann_delta(&e, &p, &b), q(7));
    }
}
