//! Command implementations, generic over the scenario's ground field.

use std::path::Path;

use anyhow::{anyhow, Result};
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde_json::json;

use sigma_core::certificate as cert;
use sigma_core::complex::tensor_complex;
use sigma_core::finitary::Window;
use sigma_core::geometry::{
    sample_directions, BoundaryDir, ControlledModel, ModelSpace, Point,
};
use sigma_core::novikov::{tor_vanishing_test, TorOutcome, TorSettings};
use sigma_core::scalar::{Field, Scalar};
use sigma_core::sigma::{
    bounded_support_check, ca_check, ca_over_point, find_push, lag_from_push, membership,
    product_complement_check, tits_openness_probe, zero_lag_transform, MemberEvidence,
    PushSearch, Verdict,
};

use crate::scenario::Built;
use crate::store::{Artifact, Store};

type Q = BigRational;

fn q64(n: i64) -> Q {
    Q::from_i64(n)
}

fn val_str(v: &sigma_core::geometry::Val) -> String {
    match v.finite() {
        Some(q) => q.to_string(),
        None => "∞".into(),
    }
}

fn verdict_summary<K: Scalar>(v: &Verdict<K>) -> String {
    match v {
        Verdict::Member(MemberEvidence::Push(c)) => {
            format!(
                "Member (push, gsh {}{}, window {})",
                val_str(c.gsh.value()),
                if c.gsh.is_exact() { "" } else { " windowed" },
                c.window_radius
            )
        }
        Verdict::Member(MemberEvidence::Convention) => "Member (level -1 convention)".into(),
        Verdict::NonMember(o) => format!(
            "NonMember (obstruction in dimension {}, floor {})",
            o.dim, o.floor
        ),
        Verdict::Unknown { window, trunc, reason } => {
            format!("Unknown (window {window}, floor {trunc}: {reason})")
        }
    }
}

pub struct CommandCtx<'a> {
    pub store: &'a Store,
    pub scenario_toml: &'a str,
}

pub fn cmd_member<K: Field>(
    built: &Built<K>,
    ctx: &CommandCtx,
    e: &BoundaryDir,
    n: i64,
) -> Result<i32> {
    let verdict = membership(&built.cx, &built.cm, e, n, &built.budgets)
        .map_err(|err| anyhow!("{err}"))?;
    println!("{e}  n={n}  →  {}", verdict_summary(&verdict));
    let payload = serde_json::to_value(cert::verdict_to_dto(&verdict))?;
    let artifact = Artifact::new(
        "verdict",
        &built.name,
        &built.hash,
        ctx.scenario_toml,
        n,
        Some(e.to_string()),
        payload,
    );
    let path = ctx.store.write(&artifact)?;
    println!("artifact: {}", path.display());
    Ok(if verdict.is_unknown() { 3 } else { 0 })
}

pub fn cmd_scan<K: Field>(
    built: &Built<K>,
    ctx: &CommandCtx,
    n: i64,
    samples: usize,
    jobs: usize,
) -> Result<i32> {
    let dirs = sample_directions(&built.cm.model, samples, built.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let verdicts: Vec<_> = pool.install(|| {
        dirs.par_iter()
            .map(|e| membership(&built.cx, &built.cm, e, n, &built.budgets))
            .collect::<Vec<_>>()
    });
    let mut all_unknown = true;
    let mut summaries = Vec::new();
    for (e, v) in dirs.iter().zip(verdicts.iter()) {
        let v = v.as_ref().map_err(|err| anyhow!("{err}"))?;
        if !v.is_unknown() {
            all_unknown = false;
        }
        println!("{e}  →  {}", verdict_summary(v));
        summaries.push(json!({
            "dir": e.to_string(),
            "verdict": cert::verdict_to_dto(v),
        }));
    }
    let artifact = Artifact::new(
        "scan",
        &built.name,
        &built.hash,
        ctx.scenario_toml,
        n,
        None,
        json!({ "samples": summaries }),
    );
    let path = ctx.store.write(&artifact)?;
    println!("artifact: {}", path.display());
    Ok(if all_unknown { 3 } else { 0 })
}

pub fn cmd_push<K: Field>(
    built: &Built<K>,
    ctx: &CommandCtx,
    e: &BoundaryDir,
    n: usize,
) -> Result<i32> {
    let search =
        find_push(&built.cx, &built.cm, e, n, &built.budgets).map_err(|err| anyhow!("{err}"))?;
    match &search {
        PushSearch::Found(c) => {
            println!(
                "push found: gsh {:?} ({}), window {}",
                c.gsh.value(),
                if c.gsh.is_exact() { "exact" } else { "windowed" },
                c.window_radius
            );
            let ok = c.verify(&built.cx, &built.cm);
            println!("re-verification: {}", if ok { "pass" } else { "FAIL" });
            let payload = serde_json::to_value(cert::push_to_dto(c))?;
            let artifact = Artifact::new(
                "push",
                &built.name,
                &built.hash,
                ctx.scenario_toml,
                n as i64,
                Some(e.to_string()),
                payload,
            );
            let path = ctx.store.write(&artifact)?;
            println!("artifact: {}", path.display());
            Ok(if ok { 0 } else { 4 })
        }
        PushSearch::NotFound { deepest_window } => {
            println!("no push found (deepest window {deepest_window})");
            let artifact = Artifact::new(
                "push",
                &built.name,
                &built.hash,
                ctx.scenario_toml,
                n as i64,
                Some(e.to_string()),
                json!({ "not_found": { "deepest_window": deepest_window } }),
            );
            ctx.store.write(&artifact)?;
            Ok(3)
        }
    }
}

pub fn cmd_ca<K: Field>(
    built: &Built<K>,
    ctx: &CommandCtx,
    e: &BoundaryDir,
    n: usize,
) -> Result<i32> {
    let estimate = ca_check(&built.cx, &built.cm, e, n, &built.levels, &built.budgets);
    for level in &estimate.levels {
        match &level.worst_lag {
            Some(lag) => println!("i={} s={}  lag {}", level.i, level.level, lag),
            None => println!("i={} s={}  UNKNOWN (window exhausted)", level.i, level.level),
        }
    }
    match &estimate.constant_lag {
        Some(lag) => println!("constant lag on tested levels: {lag}"),
        None => println!("no constant lag established"),
    }
    let payload = serde_json::to_value(cert::lag_estimate_to_dto(&estimate))?;
    let artifact = Artifact::new(
        "ca",
        &built.name,
        &built.hash,
        ctx.scenario_toml,
        n as i64,
        Some(e.to_string()),
        payload,
    );
    let path = ctx.store.write(&artifact)?;
    println!("artifact: {}", path.display());
    Ok(if estimate.unknown_levels > 0 { 3 } else { 0 })
}

pub fn cmd_ca_point<K: Field>(
    built: &Built<K>,
    ctx: &CommandCtx,
    n: usize,
    samples: usize,
) -> Result<i32> {
    // Sample base-point translates over the word ball.
    let mut points: Vec<Point> = vec![built.cm.base.clone()];
    for g in built.cx.spec.ball(built.budgets.orbit_depth + 1).keys() {
        let p = built.cm.model.act_point(&built.cx.spec, g, &built.cm.base);
        if !points.contains(&p) {
            points.push(p);
        }
        if points.len() >= samples {
            break;
        }
    }
    let radii: Vec<Q> = built
        .levels
        .iter()
        .filter(|s| **s >= Q::zero())
        .cloned()
        .collect();
    let mut worst: Option<Q> = Some(Q::zero());
    let mut reports = Vec::new();
    for b in &points {
        let est = ca_over_point(&built.cx, &built.cm, b, n, &radii, &built.budgets);
        match &est.uniform_lag {
            Some(lag) => println!("point {b:?}: lag {lag}"),
            None => println!("point {b:?}: UNKNOWN"),
        }
        worst = match (worst, &est.uniform_lag) {
            (Some(w), Some(l)) => Some(w.max(l.clone())),
            _ => None,
        };
        reports.push(json!({
            "levels": est.levels.iter().map(|l| json!({
                "i": l.i,
                "level": l.level.to_string(),
                "lag": l.lag.as_ref().map(|x| x.to_string()),
            })).collect::<Vec<_>>(),
            "uniform_lag": est.uniform_lag.map(|l| l.to_string()),
            "unknown_levels": est.unknown_levels,
        }));
    }
    match &worst {
        Some(w) => println!("uniform lag over {} sampled points: {w}", points.len()),
        None => println!("no uniform lag established"),
    }
    let artifact = Artifact::new(
        "ca_point",
        &built.name,
        &built.hash,
        ctx.scenario_toml,
        n as i64,
        None,
        json!({ "points": reports, "uniform_lag": worst.as_ref().map(|w| w.to_string()) }),
    );
    let path = ctx.store.write(&artifact)?;
    println!("artifact: {}", path.display());
    Ok(if worst.is_some() { 0 } else { 3 })
}

pub fn cmd_novikov<K: Field>(
    built: &Built<K>,
    ctx: &CommandCtx,
    e: &BoundaryDir,
    n: usize,
) -> Result<i32> {
    let settings = TorSettings::new(built.budgets.trunc.clone(), built.budgets.solve_radius);
    let mut outcomes = Vec::new();
    let mut any_known = false;
    for k in 0..=n {
        let out = tor_vanishing_test(&built.cx, &built.cm, e, k, &settings);
        let entry = match &out {
            TorOutcome::Vanishes => {
                any_known = true;
                println!("Tor_{k}: vanishes (floor {} and double)", settings.floor);
                json!({ "k": k, "outcome": "vanishes" })
            }
            TorOutcome::Obstruction(obs) => {
                any_known = true;
                println!(
                    "Tor_{k}: persistent obstruction (witness over {} basis cells)",
                    obs.witness.len()
                );
                json!({ "k": k, "outcome": "obstruction", "obstruction": cert::obstruction_to_dto(obs) })
            }
            TorOutcome::Unknown(reason) => {
                println!("Tor_{k}: unknown ({reason})");
                json!({ "k": k, "outcome": "unknown", "reason": reason })
            }
        };
        outcomes.push(entry);
    }
    let artifact = Artifact::new(
        "novikov",
        &built.name,
        &built.hash,
        ctx.scenario_toml,
        n as i64,
        Some(e.to_string()),
        json!({ "outcomes": outcomes }),
    );
    let path = ctx.store.write(&artifact)?;
    println!("artifact: {}", path.display());
    Ok(if any_known { 0 } else { 3 })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_product<K: Field>(
    left: &Built<K>,
    right: &Built<K>,
    ctx: &CommandCtx,
    n: usize,
    samples: usize,
) -> Result<i32> {
    let (product_cx, _) =
        tensor_complex(&left.cx, &right.cx, (n + 2).min(3)).map_err(|e| anyhow!("{e}"))?;
    let model = ModelSpace::Product(
        Box::new(left.cm.model.clone()),
        Box::new(right.cm.model.clone()),
    );
    let base = Point::Product(Box::new(left.cm.base.clone()), Box::new(right.cm.base.clone()));
    let cm = ControlledModel::single_base(&product_cx, model.clone(), base)
        .map_err(|e| anyhow!("{e}"))?;
    let joins = sample_directions(&model, samples, left.seed);
    let report = product_complement_check(
        &left.cx,
        &left.cm,
        &right.cx,
        &right.cm,
        &product_cx,
        &cm,
        n,
        &joins,
        &left.budgets,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let mut rows = Vec::new();
    for sample in &report.joins {
        let status = match sample.matches {
            Some(true) => "ok",
            Some(false) => "MISMATCH",
            None => "unknown",
        };
        println!(
            "{}  verdict {}  predicted {}  [{}]",
            sample.dir,
            verdict_summary(&sample.verdict),
            if sample.predicted_member { "Member" } else { "NonMember" },
            status
        );
        rows.push(json!({
            "dir": sample.dir.to_string(),
            "verdict": cert::verdict_to_dto(&sample.verdict),
            "predicted_member": sample.predicted_member,
            "matches": sample.matches,
        }));
    }
    println!(
        "product formula on {} joins: {}",
        report.joins.len(),
        if report.consistent { "consistent" } else { "INCONSISTENT" }
    );
    let artifact = Artifact::new(
        "product",
        &left.name,
        &left.hash,
        ctx.scenario_toml,
        n as i64,
        None,
        json!({ "joins": rows, "consistent": report.consistent }),
    );
    let path = ctx.store.write(&artifact)?;
    println!("artifact: {}", path.display());
    Ok(if report.consistent { 0 } else { 4 })
}

pub fn cmd_expand<K: Field>(
    built: &Built<K>,
    ctx: &CommandCtx,
    n: usize,
    samples: usize,
) -> Result<i32> {
    let dirs = sample_directions(&built.cm.model, samples, built.seed);
    let out = zero_lag_transform(&built.cx, &built.cm, &dirs, n, &built.budgets)
        .map_err(|e| anyhow!("{e}"))?;
    println!(
        "expanded complex: ranks {:?} → {:?}",
        (0..=built.cx.top_dim()).map(|d| built.cx.rank(d)).collect::<Vec<_>>(),
        (0..=out.complex.top_dim()).map(|d| out.complex.rank(d)).collect::<Vec<_>>()
    );
    // post-condition: sampled horoball cycles bound with zero lag
    let mut all_zero = true;
    for e in &dirs {
        let est = ca_check(&out.complex, &out.control, e, n, &built.levels, &built.budgets);
        let ok = est.unknown_levels == 0 && est.constant_lag == Some(Q::zero());
        if !ok {
            all_zero = false;
        }
        println!(
            "{e}: lag {}",
            est.constant_lag
                .map(|l| l.to_string())
                .unwrap_or_else(|| "unknown".into())
        );
    }
    let payload = json!({
        "complex": cert::complex_to_dto(&out.complex),
        "zero_lag_confirmed": all_zero,
    });
    let artifact = Artifact::new(
        "expand",
        &built.name,
        &built.hash,
        ctx.scenario_toml,
        n as i64,
        None,
        payload,
    );
    let path = ctx.store.write(&artifact)?;
    println!("artifact: {}", path.display());
    Ok(if all_zero { 0 } else { 3 })
}

/// Re-checks an artifact file; exit 4 on any failed identity.
pub fn cmd_verify(path: &Path) -> Result<i32> {
    let artifact = Store::read(path)?;
    if artifact.compute_hash() != artifact.content_hash {
        println!("FAIL: content hash mismatch (file was modified)");
        return Ok(4);
    }
    let doc = crate::scenario::ScenarioDoc::parse(&artifact.scenario_toml)?;
    let ring = doc.ring_kind()?;
    let ok = crate::dispatch_verify(&doc, &artifact, ring)?;
    if ok {
        println!("verification passed ({})", artifact.kind);
        Ok(0)
    } else {
        println!("FAIL: {} artifact does not re-verify", artifact.kind);
        Ok(4)
    }
}

pub fn verify_artifact<K: Field>(built: &Built<K>, artifact: &Artifact) -> Result<bool> {
    match artifact.kind.as_str() {
        "verdict" => {
            let dto: cert::VerdictDto = serde_json::from_value(artifact.payload.clone())?;
            cert::verify_verdict_dto(&built.cx, &built.cm, &dto).map_err(|e| anyhow!("{e}"))
        }
        "push" => {
            if artifact.payload.get("not_found").is_some() {
                return Ok(true);
            }
            let dto: cert::PushCertDto = serde_json::from_value(artifact.payload.clone())?;
            let c = cert::push_from_dto::<K>(&dto).map_err(|e| anyhow!("{e}"))?;
            Ok(c.verify(&built.cx, &built.cm))
        }
        "novikov" => {
            let outcomes = artifact.payload["outcomes"]
                .as_array()
                .ok_or_else(|| anyhow!("malformed novikov payload"))?;
            for entry in outcomes {
                if entry["outcome"] == "obstruction" {
                    let dto: cert::ObstructionDto =
                        serde_json::from_value(entry["obstruction"].clone())?;
                    let obs = cert::obstruction_from_dto::<K>(&dto).map_err(|e| anyhow!("{e}"))?;
                    if !obs.verify(&built.cx, &built.cm) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        "ca" => {
            let dto: cert::LagEstimateDto = serde_json::from_value(artifact.payload.clone())?;
            let e = cert::dir_from_dto(&dto.dir).map_err(|e| anyhow!("{e}"))?;
            for b in &dto.certificates {
                let bc = cert::bounding_from_dto::<K>(b).map_err(|e| anyhow!("{e}"))?;
                if !bc.verify(&built.cx, &built.cm, &e) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        "scan" => {
            let samples = artifact.payload["samples"]
                .as_array()
                .ok_or_else(|| anyhow!("malformed scan payload"))?;
            for entry in samples {
                let dto: cert::VerdictDto = serde_json::from_value(entry["verdict"].clone())?;
                if !cert::verify_verdict_dto(&built.cx, &built.cm, &dto)
                    .map_err(|e| anyhow!("{e}"))?
                {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        // Structural artifacts carry no standalone identities beyond the
        // content hash, which was already checked.
        _ => Ok(true),
    }
}

/// Deterministic splitmix64 for the self-test sampling.
struct Rng(u64);

impl Rng {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn range(&mut self, lo: i64, hi: i64) -> i64 {
        lo + (self.next() % ((hi - lo) as u64 + 1)) as i64
    }
}

/// Quick property suites on the scenario's own model: ring axioms,
/// valuation laws and a norm/shift spot check.
pub fn cmd_selftest<K: Field>(built: &Built<K>, trials: usize) -> Result<i32> {
    let spec = built.cx.spec.clone();
    let cm = &built.cm;
    let mut rng = Rng(built.seed ^ 0xdead_beef);
    let gens = spec.generators();
    let random_elem = |rng: &mut Rng| {
        let mut g = spec.id();
        for _ in 0..rng.range(0, 4) {
            let i = rng.range(0, gens.len() as i64 - 1) as usize;
            let e = if rng.next() % 2 == 0 { 1 } else { -1 };
            let step = if e > 0 {
                gens[i].clone()
            } else {
                spec.inv(&gens[i]).expect("generator inverse")
            };
            g = spec.mul(&g, &step).expect("generator product");
        }
        g
    };

    // Ring axioms on random triples.
    for _ in 0..trials {
        let mut u = sigma_core::groupring::GroupRingElem::<K>::zero();
        let mut v = sigma_core::groupring::GroupRingElem::<K>::zero();
        let mut w = sigma_core::groupring::GroupRingElem::<K>::zero();
        for target in [&mut u, &mut v, &mut w] {
            for _ in 0..rng.range(0, 3) {
                target.add_term(random_elem(&mut rng), K::from_i64(rng.range(-3, 3)));
            }
        }
        let left = u.mul(&spec, &v.add(&w)).map_err(|e| anyhow!("{e}"))?;
        let right = u
            .mul(&spec, &v)
            .map_err(|e| anyhow!("{e}"))?
            .add(&u.mul(&spec, &w).map_err(|e| anyhow!("{e}"))?);
        if left != right {
            println!("FAIL: distributivity violated");
            return Ok(4);
        }
        let assoc_l = u
            .mul(&spec, &v)
            .map_err(|e| anyhow!("{e}"))?
            .mul(&spec, &w)
            .map_err(|e| anyhow!("{e}"))?;
        let assoc_r = u
            .mul(&spec, &v.mul(&spec, &w).map_err(|e| anyhow!("{e}"))?)
            .map_err(|e| anyhow!("{e}"))?;
        if assoc_l != assoc_r {
            println!("FAIL: associativity violated");
            return Ok(4);
        }
    }
    println!("ring axioms: ok ({trials} random triples)");

    // Valuation laws toward sampled directions.
    let dirs = sample_directions(&cm.model, 4, built.seed);
    let random_chain = |rng: &mut Rng| {
        let mut c = sigma_core::complex::Chain::<K>::zero(0);
        for _ in 0..rng.range(1, 4) {
            c.add_term(0, random_elem(rng), K::from_i64(rng.range(-2, 2)));
        }
        c
    };
    for e in &dirs {
        for _ in 0..trials {
            let c = random_chain(&mut rng);
            let c2 = random_chain(&mut rng);
            // v(−c) = v(c)
            if cm.valuation(e, &c.neg()) != cm.valuation(e, &c) {
                println!("FAIL: v(−c) ≠ v(c)");
                return Ok(4);
            }
            // v(c+c') ≥ min(v(c), v(c'))
            let sum = cm.valuation(e, &c.add(&c2));
            let min = cm.valuation(e, &c).min(cm.valuation(e, &c2));
            let ok = match (&sum, &min) {
                (sigma_core::geometry::Val::Infinite, _) => true,
                (sigma_core::geometry::Val::Finite(s), sigma_core::geometry::Val::Finite(m)) => {
                    s >= m
                }
                (sigma_core::geometry::Val::Finite(_), sigma_core::geometry::Val::Infinite) => {
                    false
                }
            };
            if !ok {
                println!("FAIL: v(c+c') < min");
                return Ok(4);
            }
        }
    }
    println!("valuation laws: ok ({} directions × {trials} chains)", dirs.len());

    // Identity map norms and shifts vanish.
    let id = sigma_core::finitary::FinitaryMap::<K>::identity(&built.cx, built.cx.top_dim());
    let window = Window::new(&spec, built.budgets.window);
    let norm = sigma_core::finitary::norm_map(cm, cm, &id);
    if !norm.is_zero() {
        println!("FAIL: ‖id‖ ≠ 0");
        return Ok(4);
    }
    for e in &dirs {
        let rep = sigma_core::finitary::shift_report(cm, e, &id, &window);
        if !rep.gsh.at_least(&q64(0)) {
            println!("FAIL: gsh(id) < 0");
            return Ok(4);
        }
    }
    println!("identity norms and shifts: ok");
    println!("selftest passed");
    Ok(0)
}

/// Runs the openness probe and the bounded-support and constant-lag probes
/// as smoke checks over one direction (exercised fully by the acceptance
/// suite; exposed here for scenario debugging).
pub fn cmd_probe<K: Field>(built: &Built<K>, e: &BoundaryDir, n: usize) -> Result<i32> {
    match find_push(&built.cx, &built.cm, e, n, &built.budgets).map_err(|e| anyhow!("{e}"))? {
        PushSearch::Found(c) => {
            if let Ok(report) = tits_openness_probe(
                &built.cx,
                &built.cm,
                &c.map,
                e,
                &Q::new(1.into(), 10.into()),
                &built.budgets,
            ) {
                println!(
                    "openness margin {} with {} samples, {} failures",
                    report.margin,
                    report.samples.len(),
                    report.failures.len()
                );
            }
            if let Ok(out) = lag_from_push(&built.cx, &built.cm, &c, &built.levels, &built.budgets)
            {
                println!(
                    "constant-lag bound ‖σ‖² = {} validated: {}",
                    out.claimed_bound.sq, out.validated
                );
            }
        }
        PushSearch::NotFound { deepest_window } => {
            println!("no push (window {deepest_window})");
        }
    }
    let samples: Vec<Vec<K>> = (0..built.cx.module.rank)
        .map(|i| {
            let mut v = vec![K::zero(); built.cx.module.rank];
            v[i] = K::one();
            v
        })
        .collect();
    if let Some(r) = bounded_support_check(&built.cx, &built.cm, &samples, built.budgets.window) {
        println!("bounded support radius² = {}", r.sq);
    }
    Ok(0)
}
