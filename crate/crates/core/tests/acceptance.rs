//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Everything here is exact arithmetic; tolerances are zero throughout and
//! counts/thresholds are pinned in the constants below.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sigma_core::complex::{fox_resolution, tensor_complex, Cell, Chain, ChainComplex, Presentation};
use sigma_core::finitary::{
    gsh_point, homotopy_between, homotopy_identity_holds, lift_finitary, norm_map, shift_report,
    Chooser, FinitaryMap, Window,
};
use sigma_core::geometry::{
    sample_directions, BoundaryDir, ControlledModel, ModelSpace, Point, Val,
};
use sigma_core::group::{GroupElem, GroupSpec};
use sigma_core::novikov::{tor_vanishing_test, TorOutcome, TorSettings};
use sigma_core::scalar::Scalar;
use sigma_core::sigma::{
    ca_check, ca_over_point, find_push, invariance_crosscheck, lag_from_push, membership,
    product_complement_check, tits_openness_probe, zero_lag_transform, Budgets, MemberEvidence,
    PushSearch, Verdict,
};

type Q = BigRational;

const VALUATION_TRIALS: usize = 1000;
const SHIFT_TRIALS: usize = 200;
const TREE_TRANSLATE_TRIALS: usize = 100;
const HOMOTOPY_PAIRS: usize = 50;
const SPHERE_SAMPLES: usize = 64;
const F2_SAMPLES: usize = 16;
const INVARIANCE_SAMPLES: usize = 16;
const ZERO_LAG_LEVELS: usize = 8;
const TREE_POINT_SAMPLES: usize = 8;

fn q(n: i64) -> Q {
    Q::from_i64(n)
}

fn report(criterion: &str, pass: bool) {
    println!(
        "ACCEPTANCE {criterion}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed");
}

fn z1() -> (ChainComplex<Q>, ControlledModel) {
    let cx = fox_resolution(&Presentation::standard(GroupSpec::free_abelian(&["a"]))).unwrap();
    let model = ModelSpace::Euclidean {
        dim: 1,
        action: vec![vec![q(1)]],
    };
    let base = model.default_base();
    let cm = ControlledModel::single_base(&cx, model, base).unwrap();
    (cx, cm)
}

fn z2() -> (ChainComplex<Q>, ControlledModel) {
    let cx =
        fox_resolution(&Presentation::standard(GroupSpec::free_abelian(&["a", "b"]))).unwrap();
    let model = ModelSpace::Euclidean {
        dim: 2,
        action: vec![vec![q(1), q(0)], vec![q(0), q(1)]],
    };
    let base = model.default_base();
    let cm = ControlledModel::single_base(&cx, model, base).unwrap();
    (cx, cm)
}

fn f2() -> (ChainComplex<Q>, ControlledModel) {
    let cx = fox_resolution(&Presentation::standard(GroupSpec::free(&["a", "b"]))).unwrap();
    let model = ModelSpace::Euclidean {
        dim: 2,
        action: vec![vec![q(1), q(0)], vec![q(0), q(1)]],
    };
    let base = model.default_base();
    let cm = ControlledModel::single_base(&cx, model, base).unwrap();
    (cx, cm)
}

fn bs_euclidean() -> (ChainComplex<Q>, ControlledModel) {
    let cx = fox_resolution(&Presentation::standard(GroupSpec::baumslag_solitar(2))).unwrap();
    let model = ModelSpace::Euclidean {
        dim: 1,
        action: vec![vec![q(0)], vec![q(1)]],
    };
    let base = model.default_base();
    let cm = ControlledModel::single_base(&cx, model, base).unwrap();
    (cx, cm)
}

fn bs_tree() -> (ChainComplex<Q>, ControlledModel) {
    let cx = fox_resolution(&Presentation::standard(GroupSpec::baumslag_solitar(2))).unwrap();
    let model = ModelSpace::Tree { m: 2 };
    let base = model.default_base();
    let cm = ControlledModel::single_base(&cx, model, base).unwrap();
    (cx, cm)
}

fn z2_product() -> (ChainComplex<Q>, ControlledModel) {
    let z = fox_resolution(&Presentation::standard(GroupSpec::free_abelian(&["a"]))).unwrap();
    let (cx, _) = tensor_complex(&z, &z, 3).unwrap();
    let factor = ModelSpace::Euclidean {
        dim: 1,
        action: vec![vec![q(1)]],
    };
    let model = ModelSpace::Product(Box::new(factor.clone()), Box::new(factor));
    let base = model.default_base();
    let cm = ControlledModel::single_base(&cx, model, base).unwrap();
    (cx, cm)
}

fn random_elem(rng: &mut ChaCha8Rng, spec: &GroupSpec, len: usize) -> GroupElem {
    let gens = spec.generators();
    let mut g = spec.id();
    for _ in 0..rng.gen_range(0..=len) {
        let i = rng.gen_range(0..gens.len());
        let s = if rng.gen_bool(0.5) {
            gens[i].clone()
        } else {
            spec.inv(&gens[i]).unwrap()
        };
        g = spec.mul(&g, &s).unwrap();
    }
    g
}

fn random_chain(
    rng: &mut ChaCha8Rng,
    cx: &ChainComplex<Q>,
    dim: usize,
    terms: usize,
) -> Chain<Q> {
    let mut c = Chain::zero(dim);
    for _ in 0..rng.gen_range(1..=terms) {
        let sym = rng.gen_range(0..cx.rank(dim));
        let coeff = loop {
            let v = rng.gen_range(-3i64..=3);
            if v != 0 {
                break v;
            }
        };
        c.add_term(sym, random_elem(rng, &cx.spec, 3), q(coeff));
    }
    c
}

fn model_directions(cm: &ControlledModel) -> Vec<BoundaryDir> {
    sample_directions(&cm.model, 4, 1)
}

// 1. Valuation laws, exactly, on ≥1000 random chains/pairs per model family.
#[test]
fn criterion_01_valuation_laws() {
    let families = vec![
        ("euclidean-1", z1()),
        ("euclidean-2", z2()),
        ("bs-tree", bs_tree()),
        ("z2-product", z2_product()),
    ];
    let mut pass = true;
    for (name, (cx, cm)) in &families {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
        let dirs = model_directions(cm);
        for trial in 0..VALUATION_TRIALS {
            let e = &dirs[trial % dirs.len()];
            let dim = trial % (cx.top_dim() + 1);
            let c = random_chain(&mut rng, cx, dim, 4);
            let c2 = random_chain(&mut rng, cx, dim, 4);
            // (i) v(−c) = v(c)
            if cm.valuation(e, &c.neg()) != cm.valuation(e, &c) {
                pass = false;
                eprintln!("{name}: (i) failed");
                break;
            }
            // (ii) v(c+c') ≥ min(v(c), v(c'))
            let sum = cm.valuation(e, &c.add(&c2));
            let lower = cm.valuation(e, &c).min(cm.valuation(e, &c2));
            let ok = match (&sum, &lower) {
                (Val::Infinite, _) => true,
                (Val::Finite(_), Val::Infinite) => false,
                (Val::Finite(s), Val::Finite(m)) => s >= m,
            };
            if !ok {
                pass = false;
                eprintln!("{name}: (ii) failed");
                break;
            }
            // (iii) equivariance with the anchored correction term
            let g = random_elem(&mut rng, &cx.spec, 3);
            let ge = cm.model.act_boundary(&cx.spec, &g, e);
            let gc = c.translate(&cx.spec, &g);
            if let (Val::Finite(v1), Val::Finite(v2)) =
                (cm.valuation(&ge, &gc), cm.valuation(e, &c))
            {
                let gb = cm.model.act_point(&cx.spec, &g, &cm.base);
                let shift = cm.model.busemann_delta(&ge, &gb, &cm.base);
                if v1 != v2 + shift {
                    pass = false;
                    eprintln!("{name}: (iii) failed");
                    break;
                }
            }
            // (iv) |v(c) − v(c')| ≤ scaled Hausdorff distance (Euclidean and
            // tree: the scale is |u| and 1 respectively, compared exactly in
            // squared form)
            if matches!(cm.model, ModelSpace::Euclidean { .. } | ModelSpace::Tree { .. }) {
                if let (Val::Finite(v1), Val::Finite(v2)) =
                    (cm.valuation(e, &c), cm.valuation(e, &c2))
                {
                    let dh = cm.hausdorff(&c, &c2).unwrap();
                    let dv = (&v1 - &v2).abs();
                    let scale_sq = match (e, &cm.model) {
                        (BoundaryDir::Euclidean(u), _) => {
                            u.iter().map(|x| x * x).sum::<Q>()
                        }
                        _ => q(1),
                    };
                    // dv ≤ |u|·d_H  ⟺  dv² ≤ |u|²·d_H²
                    if &dv * &dv > scale_sq * &dh.sq {
                        pass = false;
                        eprintln!("{name}: (iv) failed");
                        break;
                    }
                }
            }
        }
    }
    report("1 valuation-laws", pass);
}

// 2. Shift arithmetic: norm lower bounds, translation equivariance,
//    superadditivity, and the window analogs toward points.
#[test]
fn criterion_02_shift_arithmetic() {
    let (cx, cm) = z2();
    let window = Window::new(&cx.spec, 2);
    let dirs = sample_directions(&cm.model, 8, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let mut pass = true;

    let random_map = |rng: &mut ChaCha8Rng, cx: &ChainComplex<Q>, monomial: bool| {
        let table: Vec<Vec<Chain<Q>>> = (0..=cx.top_dim())
            .map(|d| {
                (0..cx.rank(d))
                    .map(|_| {
                        if monomial {
                            let sym = rng.gen_range(0..cx.rank(d));
                            Chain::monomial(d, sym, random_elem(rng, &cx.spec, 2), q(1))
                        } else {
                            let mut c = random_chain(rng, cx, d, 3);
                            if c.is_zero() {
                                c = Chain::monomial(d, 0, cx.spec.id(), q(1));
                            }
                            c
                        }
                    })
                    .collect()
            })
            .collect();
        FinitaryMap::equivariant(0, table)
    };

    // Lemma 4.1(i): sh(y) ≥ −|u|·‖φ‖ for every cell (the |u| factor is the
    // unnormalized-direction scaling), hence the same for gsh.
    for t in 0..SHIFT_TRIALS {
        let map = random_map(&mut rng, &cx, false);
        let e = &dirs[t % dirs.len()];
        let BoundaryDir::Euclidean(u) = e else { unreachable!() };
        let scale_sq: Q = u.iter().map(|x| x * x).sum();
        let norm = norm_map(&cm, &cm, &map);
        let rep = shift_report(&cm, e, &map, &window);
        for (_, s) in &rep.per_cell {
            if let Val::Finite(v) = s {
                // v ≥ −|u|·‖φ‖ ⟺ v ≥ 0 or v² ≤ |u|²·‖φ‖²
                if v < &q(0) && v * v > &scale_sq * &norm.sq {
                    pass = false;
                    eprintln!("4.1(i) failed: shift {v}, |u|²·‖φ‖² = {}", &scale_sq * &norm.sq);
                }
            }
        }
    }

    // Lemma 4.1(ii) on the tree: per-cell shifts are translation-equivariant,
    // sh_{gφ,ge}(g·y) = sh_{φ,e}(y).
    let (tcx, tcm) = bs_tree();
    let twindow = Window::new(&tcx.spec, 2);
    for t in 0..TREE_TRANSLATE_TRIALS {
        let map = {
            let table: Vec<Vec<Chain<Q>>> = (0..=tcx.top_dim())
                .map(|d| {
                    (0..tcx.rank(d))
                        .map(|_| {
                            Chain::monomial(
                                d,
                                rng.gen_range(0..tcx.rank(d)),
                                random_elem(&mut rng, &tcx.spec, 2),
                                q(1),
                            )
                        })
                        .collect()
                })
                .collect();
            FinitaryMap::equivariant(0, table)
        };
        let ends = [
            BoundaryDir::TreeUp,
            BoundaryDir::TreeEnd(q(0)),
            BoundaryDir::TreeEnd(q(1)),
        ];
        let e = &ends[t % ends.len()];
        let g = random_elem(&mut rng, &tcx.spec, 2);
        let ge = tcm.model.act_boundary(&tcx.spec, &g, e);
        let gmap = map.translate(&tcx.spec, &g);
        for cell in twindow.cells(&tcx, 0) {
            let gcell = Cell {
                dim: 0,
                sym: cell.sym,
                g: tcx.spec.mul(&g, &cell.g).unwrap(),
            };
            let sh1 = match tcm.valuation(e, &map.apply_cell(&tcx.spec, &cell)) {
                Val::Finite(v) => v - tcm.cell_valuation(e, &cell),
                Val::Infinite => continue,
            };
            let sh2 = match tcm.valuation(&ge, &gmap.apply_cell(&tcx.spec, &gcell)) {
                Val::Finite(v) => v - tcm.cell_valuation(&ge, &gcell),
                Val::Infinite => continue,
            };
            if sh1 != sh2 {
                pass = false;
                eprintln!("4.1(ii) failed on the tree");
            }
        }
    }

    // Lemma 4.2: gsh(φ∘ψ) ≥ gsh(φ) + gsh(ψ) and gsh(φ^k) ≥ k·gsh(φ),
    // exactly, on equivariant maps over the translation model.
    for t in 0..SHIFT_TRIALS {
        let phi = random_map(&mut rng, &cx, true);
        let psi = random_map(&mut rng, &cx, true);
        let e = &dirs[t % dirs.len()];
        let comp = phi.compose(&cx.spec, &psi).unwrap();
        let g_comp = shift_report(&cm, e, &comp, &window).gsh;
        let g_phi = shift_report(&cm, e, &phi, &window).gsh;
        let g_psi = shift_report(&cm, e, &psi, &window).gsh;
        if let (Val::Finite(a), Val::Finite(b)) = (g_phi.value(), g_psi.value()) {
            if !g_comp.at_least(&(a + b)) {
                pass = false;
                eprintln!("4.2 superadditivity failed");
            }
        }
        let k = 3usize;
        let iter = phi.iterate(&cx, k).unwrap();
        let g_iter = shift_report(&cm, e, &iter, &window).gsh;
        if let Val::Finite(a) = g_phi.value() {
            if !g_iter.at_least(&(q(k as i64) * a)) {
                pass = false;
                eprintln!("4.2 iteration failed");
            }
        }
    }

    // Lemma 8.4(i): −‖φ‖ ≤ gsh_b(φ) ≤ ‖φ‖ on the window.
    let (cx1, cm1) = z1();
    let window1 = Window::new(&cx1.spec, 3);
    for _ in 0..SHIFT_TRIALS {
        let map = {
            let table: Vec<Vec<Chain<Q>>> = (0..=cx1.top_dim())
                .map(|d| {
                    (0..cx1.rank(d))
                        .map(|_| {
                            Chain::monomial(
                                d,
                                rng.gen_range(0..cx1.rank(d)),
                                random_elem(&mut rng, &cx1.spec, 2),
                                q(1),
                            )
                        })
                        .collect()
                })
                .collect();
            FinitaryMap::equivariant(0, table)
        };
        let rep = gsh_point(&cm1, &cm1.base, &map, &window1);
        let norm = norm_map(&cm1, &cm1, &map);
        let upper = norm.ge_rat(&rep.alpha);
        let lower = rep.alpha >= q(0) || norm.ge_rat(&-rep.alpha.clone());
        if !(upper && lower) {
            pass = false;
            eprintln!("8.4(i) failed: alpha {} vs norm² {}", rep.alpha, norm.sq);
        }
    }

    // Lemma 8.4(ii) window analog: composing two shrink-by-one selections
    // yields a shift of at least 2 outside radius 0.
    {
        let (cx1, cm1) = z1();
        let window1 = Window::new(&cx1.spec, 4);
        let shrink = shrinking_map(&cx1, 4);
        let rep1 = gsh_point(&cm1, &cm1.base, &shrink, &window1);
        let twice = shrink.compose(&cx1.spec, &shrink).unwrap();
        let rep2 = gsh_point(&cm1, &cm1.base, &twice, &Window::new(&cx1.spec, 3));
        if !(rep1.alpha == q(1) && rep2.alpha >= q(2)) {
            pass = false;
            eprintln!(
                "8.4(ii) window analog failed: {} then {}",
                rep1.alpha, rep2.alpha
            );
        }
    }
    report("2 shift-arithmetic", pass);
}

/// The sign-shrinking selection on the rank-1 complex: a^k·x₀ moves one step
/// toward the origin (in every dimension, toward the identity translate).
fn shrinking_map(cx: &ChainComplex<Q>, radius: i64) -> FinitaryMap<Q> {
    let spec = cx.spec.clone();
    let mut map = FinitaryMap::identity(cx, cx.top_dim());
    for d in 0..=cx.top_dim() {
        for sym in 0..cx.rank(d) {
            for k in -radius..=radius {
                if k == 0 {
                    continue;
                }
                let g = spec.pow(&spec.generator(0), k);
                let shrunk = spec.pow(&spec.generator(0), k - k.signum());
                let value = Chain::monomial(d, sym, shrunk, q(1));
                let pulled = value.translate(&spec, &spec.inv(&g).unwrap());
                let set = &mut map.volley.table[d][sym];
                let idx = match set.iter().position(|c| *c == pulled) {
                    Some(i) => i,
                    None => {
                        set.push(pulled);
                        set.len() - 1
                    }
                };
                map.overrides.insert(
                    Cell {
                        dim: d,
                        sym,
                        g,
                    },
                    idx,
                );
            }
        }
    }
    map
}

// 3. Constructive comparison: homotopies between pairs of chain-map
//    selections lifting the identity, verified exactly.
#[test]
fn criterion_03_constructive_comparison() {
    let mut pass = true;
    let mut pairs_done = 0usize;
    let setups = [("z2", z2()), ("f2", f2())];
    'outer: for round in 0..(HOMOTOPY_PAIRS * 4) {
        let (name, (cx, cm)) = &setups[round % 2];
        let window = Window::new(&cx.spec, 3);
        let seed_a = 1000 + round as u64 * 2;
        let seed_b = 1001 + round as u64 * 2;
        let lift = |seed: u64| {
            lift_finitary(
                cx,
                cx,
                cm,
                &Chooser::Seeded(seed),
                cx.top_dim(),
                2,
                3,
            )
        };
        let (Ok(phi), Ok(psi)) = (lift(seed_a), lift(seed_b)) else {
            continue;
        };
        if !phi.is_chain_map(cx, cx, &window) || !psi.is_chain_map(cx, cx, &window) {
            pass = false;
            eprintln!("{name}: lift is not a chain map");
            break 'outer;
        }
        let Ok(sigma) = homotopy_between(cx, cx, cm, &phi, &psi, &Chooser::Lexicographic, &window)
        else {
            pass = false;
            eprintln!("{name}: homotopy construction failed (seeds {seed_a},{seed_b})");
            break 'outer;
        };
        if !homotopy_identity_holds(cx, cx, &phi, &psi, &sigma, &window) {
            pass = false;
            eprintln!("{name}: φ − ψ ≠ ∂σ + σ∂");
            break 'outer;
        }
        pairs_done += 1;
        if pairs_done >= HOMOTOPY_PAIRS {
            break;
        }
    }
    report(
        "3 constructive-comparison",
        pass && pairs_done >= HOMOTOPY_PAIRS,
    );
}

// 4. Z² full sphere: push certificates for 64 directions at n = 1 and
//    Novikov vanishing at floors 8 and 16.
#[test]
fn criterion_04_z2_full_sphere() {
    let (cx, cm) = z2();
    let budgets = Budgets {
        window: 2,
        max_window: 4,
        ..Budgets::default()
    };
    let dirs = sample_directions(&cm.model, SPHERE_SAMPLES, 1);
    let results: Vec<bool> = dirs
        .par_iter()
        .map(|e| {
            let PushSearch::Found(cert) = find_push(&cx, &cm, e, 1, &budgets).unwrap() else {
                eprintln!("no push at {e}");
                return false;
            };
            if !cert.verify(&cx, &cm) {
                eprintln!("certificate failed at {e}");
                return false;
            }
            for floor in [8i64, 16] {
                let settings = TorSettings::new(q(floor), 5);
                for k in 0..=1usize {
                    if !matches!(
                        tor_vanishing_test(&cx, &cm, e, k, &settings),
                        TorOutcome::Vanishes
                    ) {
                        eprintln!("Tor_{k} does not vanish at {e} (floor {floor})");
                        return false;
                    }
                }
            }
            true
        })
        .collect();
    report(
        "4 z2-full-sphere",
        results.len() == SPHERE_SAMPLES && results.iter().all(|b| *b),
    );
}

// 5. F₂ empty Σ¹: no pushes at window ≤ 4, persistent dimension-1
//    obstructions, the hand-verified witness at (1,0), NonMember verdicts.
#[test]
fn criterion_05_f2_empty_sigma1() {
    let (cx, cm) = f2();
    let budgets = Budgets {
        window: 2,
        max_window: 4,
        ..Budgets::default()
    };
    let dirs = sample_directions(&cm.model, F2_SAMPLES, 1);
    let results: Vec<bool> = dirs
        .par_iter()
        .map(|e| {
            match find_push(&cx, &cm, e, 1, &budgets).unwrap() {
                PushSearch::NotFound { deepest_window } if deepest_window <= 4 => {}
                other => {
                    eprintln!("unexpected push result at {e}: {other:?}");
                    return false;
                }
            }
            let verdict = membership(&cx, &cm, e, 1, &budgets).unwrap();
            let Verdict::NonMember(obs) = &verdict else {
                eprintln!("expected NonMember at {e}");
                return false;
            };
            obs.dim <= 1 && obs.stable_at_double
        })
        .collect();
    let mut pass = results.len() == F2_SAMPLES && results.iter().all(|b| *b);

    // The hand-verified infinite-precision witness at χ(a)=1, χ(b)=0:
    // ((1−b)(a−1)^{-1}, 1), i.e. coefficient −1 on a^j and +1 on b·a^j
    // against x_a, and 1 against x_b.
    let e = BoundaryDir::Euclidean(vec![q(1), q(0)]);
    let settings = TorSettings::new(q(8), 5);
    match tor_vanishing_test(&cx, &cm, &e, 1, &settings) {
        TorOutcome::Obstruction(obs) => {
            let spec = &cx.spec;
            let a = spec.generator(0);
            let b = spec.generator(1);
            let xa = obs.witness.get(&0);
            let xb = obs.witness.get(&1);
            match (xa, xb) {
                (Some(xa), Some(xb)) => {
                    if xb.part != sigma_core::groupring::GroupRingElem::one(spec) {
                        pass = false;
                    }
                    for j in 0..8 {
                        let aj = spec.pow(&a, j);
                        let baj = spec.mul(&b, &aj).unwrap();
                        if xa.part.coeff(&aj) != q(-1) || xa.part.coeff(&baj) != q(1) {
                            pass = false;
                        }
                    }
                }
                _ => pass = false,
            }
        }
        other => {
            eprintln!("expected the dimension-1 obstruction at (1,0), got {other:?}");
            pass = false;
        }
    }
    report("5 f2-empty-sigma1", pass);
}

// 6. BS(1,2) on the line: exactly one of the two directions is a verified
//    member; the other carries a persistent obstruction.
#[test]
fn criterion_06_bs_exactly_one() {
    let (cx, cm) = bs_euclidean();
    let budgets = Budgets::default();
    let verdicts: Vec<Verdict<Q>> = [q(1), q(-1)]
        .into_iter()
        .map(|s| membership(&cx, &cm, &BoundaryDir::Euclidean(vec![s]), 1, &budgets).unwrap())
        .collect();
    let members = verdicts.iter().filter(|v| v.is_member()).count();
    let obstructed = verdicts.iter().filter(|v| v.is_non_member()).count();
    let mut pass = members == 1 && obstructed == 1;
    for v in &verdicts {
        match v {
            Verdict::Member(MemberEvidence::Push(c)) => {
                if !c.verify(&cx, &cm) {
                    pass = false;
                }
            }
            Verdict::NonMember(obs) => {
                if !obs.stable_at_double || !obs.verify(&cx, &cm) {
                    pass = false;
                }
            }
            _ => pass = false,
        }
    }
    report("6 bs-exactly-one", pass);
}

// 7. Product formula on F₂ × F₂ (mixed joins member, pure joins not) and
//    Z × Z (everything member), each side computed independently.
#[test]
fn criterion_07_product_formula() {
    let budgets = Budgets {
        window: 2,
        max_window: 4,
        solve_radius: 4,
        ..Budgets::default()
    };
    let mut pass = true;

    // F₂ × F₂ over the rationals.
    {
        let (fcx, fcm) = f2();
        let (pcx, _) = tensor_complex(&fcx, &fcx, 3).unwrap();
        let model = ModelSpace::Product(Box::new(fcm.model.clone()), Box::new(fcm.model.clone()));
        let base = Point::Product(Box::new(fcm.base.clone()), Box::new(fcm.base.clone()));
        let pcm = ControlledModel::single_base(&pcx, model.clone(), base).unwrap();
        let joins = sample_directions(&model, 10, 1);
        let report_data = product_complement_check(
            &fcx, &fcm, &fcx, &fcm, &pcx, &pcm, 1, &joins, &budgets,
        )
        .unwrap();
        if !report_data.consistent {
            pass = false;
        }
        for sample in &report_data.joins {
            let BoundaryDir::Join { w, w2, .. } = &sample.dir else {
                pass = false;
                continue;
            };
            let mixed = !w.is_zero() && !w2.is_zero();
            if mixed {
                match &sample.verdict {
                    Verdict::Member(MemberEvidence::Push(c)) => {
                        if !c.verify(&pcx, &pcm) {
                            eprintln!("mixed join certificate failed: {}", sample.dir);
                            pass = false;
                        }
                    }
                    other => {
                        eprintln!("mixed join not a member: {} ({other:?})", sample.dir);
                        pass = false;
                    }
                }
            } else if !sample.verdict.is_non_member() {
                eprintln!("pure join not obstructed: {}", sample.dir);
                pass = false;
            }
        }
    }

    // Z × Z: every sampled join is a member.
    {
        let (zcx, zcm) = z1();
        let (pcx, _) = tensor_complex(&zcx, &zcx, 3).unwrap();
        let model = ModelSpace::Product(Box::new(zcm.model.clone()), Box::new(zcm.model.clone()));
        let base = Point::Product(Box::new(zcm.base.clone()), Box::new(zcm.base.clone()));
        let pcm = ControlledModel::single_base(&pcx, model.clone(), base).unwrap();
        let joins = sample_directions(&model, 8, 1);
        let report_data = product_complement_check(
            &zcx, &zcm, &zcx, &zcm, &pcx, &pcm, 1, &joins, &budgets,
        )
        .unwrap();
        if !report_data.consistent {
            pass = false;
        }
        for sample in &report_data.joins {
            if !sample.verdict.is_member() {
                eprintln!("Z×Z join not a member: {}", sample.dir);
                pass = false;
            }
        }
    }
    report("7 product-formula", pass);
}

// 8. Constant-lag bound: certificates with homotopies bound every observed
//    lag by ‖σ‖. Zero violations.
#[test]
fn criterion_08_constant_lag_bound() {
    let mut pass = true;
    let levels = vec![q(-1), q(0), q(1)];

    // Every Z² sphere certificate.
    {
        let (cx, cm) = z2();
        let budgets = Budgets {
            window: 2,
            max_window: 4,
            ..Budgets::default()
        };
        let dirs = sample_directions(&cm.model, SPHERE_SAMPLES, 1);
        let ok = dirs
            .par_iter()
            .map(|e| {
                let PushSearch::Found(cert) = find_push(&cx, &cm, e, 1, &budgets).unwrap()
                else {
                    return false;
                };
                if cert.homotopy.is_none() {
                    return false;
                }
                let out = lag_from_push(&cx, &cm, &cert, &levels, &budgets).unwrap();
                out.validated
            })
            .reduce(|| true, |a, b| a && b);
        if !ok {
            eprintln!("a Z² certificate violates the ‖σ‖ bound");
            pass = false;
        }
    }

    // The BS member direction.
    {
        let (cx, cm) = bs_euclidean();
        let budgets = Budgets::default();
        let mut found = false;
        for s in [q(1), q(-1)] {
            let e = BoundaryDir::Euclidean(vec![s]);
            if let PushSearch::Found(cert) = find_push(&cx, &cm, &e, 1, &budgets).unwrap() {
                found = true;
                if cert.homotopy.is_none() {
                    pass = false;
                } else {
                    let out = lag_from_push(&cx, &cm, &cert, &levels, &budgets).unwrap();
                    if !out.validated {
                        eprintln!("BS certificate violates the ‖σ‖ bound");
                        pass = false;
                    }
                }
            }
        }
        if !found {
            pass = false;
        }
    }

    // Mixed product joins (F₂ × F₂) and Z × Z joins.
    {
        let (fcx, fcm) = f2();
        let (pcx, _) = tensor_complex(&fcx, &fcx, 3).unwrap();
        let model = ModelSpace::Product(Box::new(fcm.model.clone()), Box::new(fcm.model.clone()));
        let base = Point::Product(Box::new(fcm.base.clone()), Box::new(fcm.base.clone()));
        let pcm = ControlledModel::single_base(&pcx, model.clone(), base).unwrap();
        let budgets = Budgets {
            window: 2,
            max_window: 4,
            ..Budgets::default()
        };
        let joins: Vec<BoundaryDir> = sample_directions(&model, 10, 1)
            .into_iter()
            .filter(|j| {
                matches!(j, BoundaryDir::Join { w, w2, .. } if !w.is_zero() && !w2.is_zero())
            })
            .take(4)
            .collect();
        let ok = joins
            .par_iter()
            .map(|e| {
                let PushSearch::Found(cert) = find_push(&pcx, &pcm, e, 1, &budgets).unwrap()
                else {
                    return false;
                };
                match cert.homotopy {
                    Some(_) => lag_from_push(&pcx, &pcm, &cert, &levels, &budgets)
                        .unwrap()
                        .validated,
                    None => false,
                }
            })
            .reduce(|| true, |a, b| a && b);
        if !ok {
            eprintln!("a product certificate violates the ‖σ‖ bound");
            pass = false;
        }
    }
    report("8 constant-lag-bound", pass);
}

// 9. Zero-lag transform on Z²: sampled horoball 0-cycles at 8 levels bound
//    with lag exactly 0.
#[test]
fn criterion_09_zero_lag_transform() {
    let (cx, cm) = z2();
    let budgets = Budgets {
        window: 2,
        max_window: 4,
        ..Budgets::default()
    };
    let dirs = sample_directions(&cm.model, 4, 1);
    let out = zero_lag_transform(&cx, &cm, &dirs, 1, &budgets).unwrap();
    let levels: Vec<Q> = (0..ZERO_LAG_LEVELS as i64).map(|i| q(i - 4)).collect();
    let mut pass = true;
    for e in &dirs {
        let est = ca_check(&out.complex, &out.control, e, 1, &levels, &budgets);
        // The criterion is about horoball 0-cycles: every i = 0 level must
        // be known and bound with lag exactly 0.
        for level in est.levels.iter().filter(|l| l.i == 0) {
            if level.worst_lag != Some(q(0)) {
                eprintln!(
                    "direction {e}: level {} has lag {:?}",
                    level.level, level.worst_lag
                );
                pass = false;
            }
        }
        // Every bounding certificate re-verifies from its data.
        for cert in &est.certificates {
            if !cert.verify(&out.complex, &out.control, &est.dir) {
                pass = false;
            }
        }
    }
    report("9 zero-lag-transform", pass);
}

// 10. Invariance: two resolutions of the trivial module over Z² and two
//     base points give identical verdicts; transported pushes verify.
#[test]
fn criterion_10_invariance() {
    let (cx, cm) = z2();
    let z = fox_resolution(&Presentation::standard(GroupSpec::free_abelian(&["a"]))).unwrap();
    let (tensor, _) = tensor_complex(&z, &z, 3).unwrap();
    let flat = tensor.relabel_flat_abelian(&cx.spec).unwrap();
    let cm2 = ControlledModel::single_base(&flat, cm.model.clone(), cm.base.clone()).unwrap();
    let budgets = Budgets {
        window: 2,
        max_window: 4,
        ..Budgets::default()
    };
    let dirs = sample_directions(&cm.model, INVARIANCE_SAMPLES, 1);
    let results: Vec<bool> = dirs
        .par_iter()
        .map(|e| {
            let rep = invariance_crosscheck(&cx, &cm, &flat, &cm2, e, 1, &budgets).unwrap();
            if !(rep.verdicts_agree && rep.first_member && rep.second_member) {
                eprintln!("verdicts disagree at {e}");
                return false;
            }
            match &rep.transported {
                Some((k, cert)) => {
                    let positive = match cert.gsh.value() {
                        Val::Finite(v) => *v > q(0),
                        Val::Infinite => true,
                    };
                    *k >= 1 && positive
                }
                None => {
                    eprintln!("no transported push at {e}");
                    false
                }
            }
        })
        .collect();
    let mut pass = results.iter().all(|b| *b);

    // Two base points for the control map on the same resolution.
    let cm_shifted = ControlledModel::single_base(
        &cx,
        cm.model.clone(),
        Point::Euclidean(vec![q(1), q(2)]),
    )
    .unwrap();
    for e in dirs.iter().take(INVARIANCE_SAMPLES) {
        let rep = invariance_crosscheck(&cx, &cm, &cx, &cm_shifted, e, 1, &budgets).unwrap();
        if !rep.verdicts_agree {
            eprintln!("base-point change flipped the verdict at {e}");
            pass = false;
        }
    }
    report("10 invariance", pass);
}

// 11. Controlled acyclicity over points on the Bass–Serre tree: a uniform
//     constant lag for i ∈ {−1, 0} over 8 sampled vertices.
#[test]
fn criterion_11_ca_over_tree_points() {
    let (cx, cm) = bs_tree();
    let budgets = Budgets {
        window: 3,
        ..Budgets::default()
    };
    let mut points: Vec<Point> = vec![cm.base.clone()];
    for g in cx.spec.ball(3).keys() {
        let p = cm.model.act_point(&cx.spec, g, &cm.base);
        if !points.contains(&p) {
            points.push(p);
        }
        if points.len() == TREE_POINT_SAMPLES {
            break;
        }
    }
    let mut pass = points.len() == TREE_POINT_SAMPLES;
    let mut uniform: Option<Q> = Some(q(0));
    for b in &points {
        let est = ca_over_point(&cx, &cm, b, 1, &[q(1), q(2)], &budgets);
        if est.unknown_levels != 0 {
            eprintln!("window exhausted over {b:?}");
            pass = false;
        }
        uniform = match (uniform, est.uniform_lag) {
            (Some(u), Some(l)) => Some(u.max(l)),
            _ => None,
        };
    }
    match uniform {
        Some(lag) => {
            println!("uniform lag over {TREE_POINT_SAMPLES} vertices: {lag}");
            if lag > q(4) {
                pass = false;
            }
        }
        None => pass = false,
    }
    report("11 ca-over-tree-points", pass);
}

// 12. Openness probe: exact linear margins are positive for every Z²
//     certificate, and the orthogonal-displacement fixture reports a
//     boundary failure.
#[test]
fn criterion_12_tits_openness() {
    let (cx, cm) = z2();
    let budgets = Budgets {
        window: 2,
        max_window: 4,
        ..Budgets::default()
    };
    let dirs = sample_directions(&cm.model, SPHERE_SAMPLES, 1);
    let radius = Q::new(1.into(), 10.into());
    let results: Vec<bool> = dirs
        .par_iter()
        .map(|e| {
            let PushSearch::Found(cert) = find_push(&cx, &cm, e, 1, &budgets).unwrap() else {
                return false;
            };
            let rep = tits_openness_probe(&cx, &cm, &cert.map, e, &radius, &budgets).unwrap();
            rep.margin > q(0) && rep.failures.is_empty() && !rep.samples.is_empty()
        })
        .collect();
    let mut pass = results.iter().all(|b| *b);

    // φ = mult-by-b toward (1,0) sits on the boundary of positivity.
    let b = cx.spec.generator(1);
    let table: Vec<Vec<Chain<Q>>> = (0..=1)
        .map(|d| {
            (0..cx.rank(d))
                .map(|sym| Chain::monomial(d, sym, b.clone(), q(1)))
                .collect()
        })
        .collect();
    let by_b = FinitaryMap::equivariant(0, table);
    let e = BoundaryDir::Euclidean(vec![q(1), q(0)]);
    let rep = tits_openness_probe(&cx, &cm, &by_b, &e, &radius, &budgets).unwrap();
    if !(rep.margin == q(0) && !rep.failures.is_empty()) {
        eprintln!("fixture did not report a boundary failure");
        pass = false;
    }
    report("12 tits-openness", pass);
}

// 13. Containment chain: across the full suite's scenarios and directions,
//     no direction holds both a verified push certificate and a persistent
//     obstruction at the same (or lower) dimension.
#[test]
fn criterion_13_containment_chain() {
    let mut pass = true;
    let mut checked = 0usize;

    let mut check = |cx: &ChainComplex<Q>,
                     cm: &ControlledModel,
                     e: &BoundaryDir,
                     n: usize,
                     budgets: &Budgets,
                     pass: &mut bool,
                     checked: &mut usize| {
        let push = match find_push(cx, cm, e, n, budgets).unwrap() {
            PushSearch::Found(cert) => cert.verify(cx, cm),
            PushSearch::NotFound { .. } => false,
        };
        let settings = TorSettings::new(budgets.trunc.clone(), budgets.solve_radius);
        let obstruction = (0..=n).any(|k| {
            matches!(
                tor_vanishing_test(cx, cm, e, k, &settings),
                TorOutcome::Obstruction(_)
            )
        });
        if push && obstruction {
            eprintln!("containment chain violated at {e}");
            *pass = false;
        }
        *checked += 1;
    };

    let budgets = Budgets {
        window: 2,
        max_window: 4,
        ..Budgets::default()
    };
    let (cx, cm) = z2();
    for e in sample_directions(&cm.model, 16, 1) {
        check(&cx, &cm, &e, 1, &budgets, &mut pass, &mut checked);
    }
    let (cx, cm) = f2();
    for e in sample_directions(&cm.model, 8, 1) {
        check(&cx, &cm, &e, 1, &budgets, &mut pass, &mut checked);
    }
    let (cx, cm) = bs_euclidean();
    for s in [q(1), q(-1)] {
        check(
            &cx,
            &cm,
            &BoundaryDir::Euclidean(vec![s]),
            1,
            &Budgets::default(),
            &mut pass,
            &mut checked,
        );
    }
    {
        let (fcx, fcm) = f2();
        let (pcx, _) = tensor_complex(&fcx, &fcx, 3).unwrap();
        let model = ModelSpace::Product(Box::new(fcm.model.clone()), Box::new(fcm.model.clone()));
        let base = Point::Product(Box::new(fcm.base.clone()), Box::new(fcm.base.clone()));
        let pcm = ControlledModel::single_base(&pcx, model.clone(), base).unwrap();
        for e in sample_directions(&model, 6, 1) {
            check(&pcx, &pcm, &e, 1, &budgets, &mut pass, &mut checked);
        }
    }
    println!("containment chain checked on {checked} direction/scenario pairs");
    report("13 containment-chain", pass && checked >= 32);
}
