//! TOML scenario schema and construction of the core objects.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_rational::BigRational;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use sigma_core::complex::{Chain, ChainComplex, ModuleDescr, Presentation};
use sigma_core::geometry::{BoundaryDir, ControlledModel, ModelSpace, Point};
use sigma_core::group::{Backend, GroupSpec};
use sigma_core::scalar::{Field, Scalar};
use sigma_core::sigma::Budgets;

pub const SCENARIO_SCHEMA: &str = "sigma.scenario.v1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub schema: Option<String>,
    pub name: Option<String>,
    pub seed: Option<u64>,
    pub group: GroupDoc,
    pub module: Option<ModuleDoc>,
    pub ring: Option<RingDoc>,
    pub model: ModelDoc,
    pub resolution: Option<ResolutionDoc>,
    pub control: Option<ControlDoc>,
    pub budgets: Option<BudgetsDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDoc {
    pub backend: String,
    pub rank: Option<usize>,
    pub m: Option<u64>,
    pub generators: Option<Vec<String>>,
    pub left: Option<Box<GroupDoc>>,
    pub right: Option<Box<GroupDoc>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleDoc {
    pub rank: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingDoc {
    pub kind: String,
    pub p: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub kind: String,
    pub dim: Option<usize>,
    pub action: Option<BTreeMap<String, Vec<String>>>,
    pub base: Option<Vec<String>>,
    pub m: Option<u64>,
    pub left: Option<Box<ModelDoc>>,
    pub right: Option<Box<ModelDoc>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionDoc {
    pub kind: Option<String>,
    pub relators: Option<Vec<String>>,
    pub basis: Option<Vec<BasisDoc>>,
    pub boundary: Option<Vec<BoundaryDoc>>,
    pub augmentation: Option<Vec<AugmentationDoc>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDoc {
    pub dim: usize,
    pub names: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryDoc {
    pub dim: usize,
    pub sym: usize,
    pub chain: Vec<TermDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub sym: usize,
    pub g: String,
    pub c: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationDoc {
    pub sym: usize,
    pub vector: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlDoc {
    pub preset: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BudgetsDoc {
    pub window: Option<u32>,
    pub max_window: Option<u32>,
    pub nu: Option<String>,
    pub trunc: Option<String>,
    pub solve_radius: Option<u32>,
    pub lag_budget: Option<String>,
    pub orbit_depth: Option<u32>,
    pub search_budget: Option<u32>,
    pub samples: Option<usize>,
    pub levels: Option<Vec<String>>,
    pub jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingKind {
    Rational,
    Integer,
    Gf(u64),
}

impl ScenarioDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: ScenarioDoc = toml::from_str(text).context("scenario parse error")?;
        if let Some(schema) = &doc.schema {
            if schema != SCENARIO_SCHEMA {
                bail!("unsupported scenario schema `{schema}`");
            }
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario {}", path.display()))?;
        let doc = Self::parse(&text)?;
        Ok((doc, text))
    }

    pub fn ring_kind(&self) -> Result<RingKind> {
        let Some(ring) = &self.ring else {
            return Ok(RingKind::Rational);
        };
        match ring.kind.as_str() {
            "rational" => Ok(RingKind::Rational),
            "integer" => Ok(RingKind::Integer),
            "gf" => {
                let p = ring.p.ok_or_else(|| anyhow!("gf ring needs `p`"))?;
                if ![2, 3, 5, 7].contains(&p) {
                    bail!("supported prime fields: 2, 3, 5, 7");
                }
                Ok(RingKind::Gf(p))
            }
            other => bail!("unknown ring kind `{other}`"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn parse_q(s: &str) -> Result<BigRational> {
    <BigRational as Scalar>::decode(s).ok_or_else(|| anyhow!("bad rational `{s}`"))
}

pub fn build_group(doc: &GroupDoc) -> Result<GroupSpec> {
    let spec = match doc.backend.as_str() {
        "free_abelian" => {
            let rank = doc.rank.ok_or_else(|| anyhow!("free_abelian needs `rank`"))?;
            let names = default_names(doc, rank);
            GroupSpec {
                backend: Backend::FreeAbelian(rank),
                gens: names,
            }
        }
        "free" => {
            let rank = doc.rank.ok_or_else(|| anyhow!("free needs `rank`"))?;
            let names = default_names(doc, rank);
            GroupSpec {
                backend: Backend::Free(rank),
                gens: names,
            }
        }
        "bs" => {
            let m = doc.m.ok_or_else(|| anyhow!("bs needs `m`"))?;
            let names = doc
                .generators
                .clone()
                .unwrap_or_else(|| vec!["a".into(), "t".into()]);
            GroupSpec {
                backend: Backend::BaumslagSolitar(m),
                gens: names,
            }
        }
        "product" => {
            let left = doc
                .left
                .as_ref()
                .ok_or_else(|| anyhow!("product needs `left`"))?;
            let right = doc
                .right
                .as_ref()
                .ok_or_else(|| anyhow!("product needs `right`"))?;
            GroupSpec::product(build_group(left)?, build_group(right)?)
        }
        other => bail!("unknown group backend `{other}`"),
    };
    spec.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(spec)
}

fn default_names(doc: &GroupDoc, rank: usize) -> Vec<String> {
    doc.generators.clone().unwrap_or_else(|| {
        let alphabet = ["a", "b", "c", "d", "e", "f", "g", "h"];
        (0..rank)
            .map(|i| {
                alphabet
                    .get(i)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("g{i}"))
            })
            .collect()
    })
}

pub fn build_model(doc: &ModelDoc, spec: &GroupSpec) -> Result<ModelSpace> {
    let model = match doc.kind.as_str() {
        "euclidean" => {
            let dim = doc.dim.ok_or_else(|| anyhow!("euclidean model needs `dim`"))?;
            let table = doc
                .action
                .as_ref()
                .ok_or_else(|| anyhow!("euclidean model needs `action`"))?;
            let mut action = Vec::with_capacity(spec.gens.len());
            for name in &spec.gens {
                let vec = table
                    .get(name)
                    .ok_or_else(|| anyhow!("no action vector for generator `{name}`"))?;
                if vec.len() != dim {
                    bail!("action vector for `{name}` has wrong dimension");
                }
                action.push(vec.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?);
            }
            ModelSpace::Euclidean { dim, action }
        }
        "tree" => {
            let m = match (&spec.backend, doc.m) {
                (Backend::BaumslagSolitar(m), None) => *m,
                (Backend::BaumslagSolitar(m), Some(m2)) if *m == m2 => *m,
                _ => bail!("tree model requires the BS backend (optionally matching `m`)"),
            };
            ModelSpace::Tree { m }
        }
        "product" => {
            let (Backend::Product(ls, rs), Some(l), Some(r)) =
                (&spec.backend, &doc.left, &doc.right)
            else {
                bail!("product model requires a product group and `left`/`right` models");
            };
            ModelSpace::Product(
                Box::new(build_model(l, ls)?),
                Box::new(build_model(r, rs)?),
            )
        }
        other => bail!("unknown model kind `{other}`"),
    };
    model.validate(spec).map_err(|e| anyhow!("{e}"))?;
    Ok(model)
}

fn build_base(doc: &ModelDoc, model: &ModelSpace) -> Result<Point> {
    match (&doc.base, model) {
        (None, _) => Ok(model.default_base()),
        (Some(coords), ModelSpace::Euclidean { dim, .. }) => {
            if coords.len() != *dim {
                bail!("base point has wrong dimension");
            }
            Ok(Point::Euclidean(
                coords.iter().map(|s| parse_q(s)).collect::<Result<_>>()?,
            ))
        }
        (Some(_), _) => bail!("explicit base points are supported on Euclidean models only"),
    }
}

pub struct Built<K: Field> {
    pub name: String,
    pub seed: u64,
    pub cx: ChainComplex<K>,
    pub cm: ControlledModel,
    pub budgets: Budgets,
    pub samples: usize,
    pub levels: Vec<BigRational>,
    pub jobs: usize,
    pub hash: String,
}

pub fn build<K: Field>(doc: &ScenarioDoc, raw: &str) -> Result<Built<K>> {
    let spec = build_group(&doc.group)?;
    let module = ModuleDescr {
        rank: doc.module.as_ref().map_or(1, |m| m.rank),
    };
    let res_kind = doc
        .resolution
        .as_ref()
        .and_then(|r| r.kind.clone())
        .unwrap_or_else(|| "fox".into());
    let cx: ChainComplex<K> = match res_kind.as_str() {
        "fox" => {
            if module.rank != 1 {
                bail!("fox resolutions resolve the trivial module; use `tables`");
            }
            let relators = match doc.resolution.as_ref().and_then(|r| r.relators.as_ref()) {
                Some(words) => words
                    .iter()
                    .map(|w| spec.parse_word(w).map_err(|e| anyhow!("{e}")))
                    .collect::<Result<Vec<_>>>()?,
                None => spec.preset_relators(),
            };
            sigma_core::complex::fox_resolution(&Presentation {
                spec: spec.clone(),
                relators,
                module: module.clone(),
            })
            .map_err(|e| anyhow!("{e}"))?
        }
        "tables" => build_tables(doc, &spec, &module)?,
        other => bail!("unknown resolution kind `{other}` (use `fox` or `tables`)"),
    };
    let cx = cx.make_admissible().map_err(|e| anyhow!("{e}"))?;
    let model = build_model(&doc.model, &spec)?;
    let base = build_base(&doc.model, &model)?;
    let preset = doc
        .control
        .as_ref()
        .and_then(|c| c.preset.clone())
        .unwrap_or_else(|| "base_point".into());
    let cm = match preset.as_str() {
        "base_point" => ControlledModel::single_base(&cx, model, base),
        "boundary" => ControlledModel::boundary_preset(&cx, model, base),
        other => bail!("unknown control preset `{other}`"),
    }
    .map_err(|e| anyhow!("{e}"))?;

    let b = doc.budgets.as_ref();
    let defaults = Budgets::default();
    let budgets = Budgets {
        window: b.and_then(|b| b.window).unwrap_or(defaults.window),
        max_window: b.and_then(|b| b.max_window).unwrap_or(defaults.max_window),
        nu: b
            .and_then(|b| b.nu.as_ref().map(|s| parse_q(s)))
            .transpose()?
            .unwrap_or(defaults.nu),
        trunc: b
            .and_then(|b| b.trunc.as_ref().map(|s| parse_q(s)))
            .transpose()?
            .unwrap_or(defaults.trunc),
        solve_radius: b
            .and_then(|b| b.solve_radius)
            .unwrap_or(defaults.solve_radius),
        lag_budget: b
            .and_then(|b| b.lag_budget.as_ref().map(|s| parse_q(s)))
            .transpose()?
            .unwrap_or(defaults.lag_budget),
        orbit_depth: b
            .and_then(|b| b.orbit_depth)
            .unwrap_or(defaults.orbit_depth),
        search_budget: b
            .and_then(|b| b.search_budget)
            .unwrap_or(defaults.search_budget),
    };
    if budgets.window == 0 || budgets.max_window < budgets.window {
        bail!("window budgets must be positive and consistent");
    }
    let levels = match b.and_then(|b| b.levels.as_ref()) {
        Some(ls) => ls.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?,
        None => (-1..=2).map(BigRational::from_i64).collect(),
    };
    let mut hasher = Sha256::new();
    hasher.update(raw.as_bytes());
    let hash = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    Ok(Built {
        name: doc.name.clone().unwrap_or_else(|| "scenario".into()),
        seed: doc.seed(),
        cx,
        cm,
        budgets,
        samples: b.and_then(|b| b.samples).unwrap_or(16),
        levels,
        jobs: b.and_then(|b| b.jobs).unwrap_or(1),
        hash,
    })
}

fn build_tables<K: Field>(
    doc: &ScenarioDoc,
    spec: &GroupSpec,
    module: &ModuleDescr,
) -> Result<ChainComplex<K>> {
    let res = doc
        .resolution
        .as_ref()
        .ok_or_else(|| anyhow!("tables resolution needs the tables"))?;
    let basis_docs = res
        .basis
        .as_ref()
        .ok_or_else(|| anyhow!("tables resolution needs `basis`"))?;
    let top = basis_docs.iter().map(|b| b.dim).max().unwrap_or(0);
    let mut basis = vec![Vec::new(); top + 1];
    for b in basis_docs {
        basis[b.dim] = b.names.clone();
    }
    let mut boundary: Vec<Vec<Chain<K>>> = (1..=top)
        .map(|d| vec![Chain::zero(d - 1); basis[d].len()])
        .collect();
    for bd in res.boundary.as_deref().unwrap_or(&[]) {
        if bd.dim == 0 || bd.dim > top {
            bail!("boundary table at invalid dimension {}", bd.dim);
        }
        let mut chain = Chain::zero(bd.dim - 1);
        for term in &bd.chain {
            let word = spec.parse_word(&term.g).map_err(|e| anyhow!("{e}"))?;
            let g = spec.normal_form(&word).map_err(|e| anyhow!("{e}"))?;
            let c = K::decode(&term.c).ok_or_else(|| anyhow!("bad coefficient `{}`", term.c))?;
            chain.add_term(term.sym, g, c);
        }
        boundary[bd.dim - 1][bd.sym] = chain;
    }
    let mut augmentation = vec![vec![K::zero(); module.rank]; basis[0].len()];
    for ag in res.augmentation.as_deref().unwrap_or(&[]) {
        if ag.vector.len() != module.rank {
            bail!("augmentation vector must match the module rank");
        }
        augmentation[ag.sym] = ag
            .vector
            .iter()
            .map(|s| K::decode(s).ok_or_else(|| anyhow!("bad coefficient `{s}`")))
            .collect::<Result<_>>()?;
    }
    ChainComplex::from_tables(spec.clone(), module.clone(), basis, boundary, augmentation)
        .map_err(|e| anyhow!("{e}"))
}

/// Parses a direction from CLI flags: Euclidean vectors (`1,0`), tree ends
/// (`up`, a rational, or a digit word like `01(1)`), and joins.
pub fn parse_direction(
    model: &ModelSpace,
    dir: Option<&str>,
    end: Option<&str>,
    join: Option<&str>,
    left: Option<&str>,
    right: Option<&str>,
) -> Result<BoundaryDir> {
    match model {
        ModelSpace::Euclidean { dim, .. } => {
            let spec = dir.ok_or_else(|| anyhow!("Euclidean models need --dir x,y,…"))?;
            let coords: Vec<BigRational> = spec
                .split(',')
                .map(|p| parse_q(p.trim()))
                .collect::<Result<_>>()?;
            if coords.len() != *dim {
                bail!("--dir must have {dim} coordinates");
            }
            if coords.iter().all(num_traits::Zero::is_zero) {
                bail!("direction must be nonzero");
            }
            Ok(BoundaryDir::Euclidean(coords))
        }
        ModelSpace::Tree { m } => {
            let spec = end.ok_or_else(|| anyhow!("tree models need --end up|<rational>|<digits>"))?;
            parse_tree_end(*m, spec)
        }
        ModelSpace::Product(lm, rm) => {
            let weights = join.ok_or_else(|| anyhow!("product models need --join w,w'"))?;
            let (w, w2) = weights
                .split_once(',')
                .ok_or_else(|| anyhow!("--join needs two weights"))?;
            let w = parse_q(w.trim())?;
            let w2 = parse_q(w2.trim())?;
            let l = parse_direction(lm, left, left, None, None, None)
                .context("left factor direction (--left)")?;
            let r = parse_direction(rm, right, right, None, None, None)
                .context("right factor direction (--right)")?;
            Ok(BoundaryDir::Join {
                w,
                w2,
                left: Box::new(l),
                right: Box::new(r),
            })
        }
    }
}

fn parse_tree_end(m: u64, spec: &str) -> Result<BoundaryDir> {
    if spec == "up" {
        return Ok(BoundaryDir::TreeUp);
    }
    if spec.contains('(') {
        // digit word with a parenthesized period: e.g. `01(10)`
        let (pre, rest) = spec.split_once('(').unwrap();
        let period = rest
            .strip_suffix(')')
            .ok_or_else(|| anyhow!("unclosed period in end word"))?;
        let digits = |s: &str| -> Result<Vec<u64>> {
            s.chars()
                .map(|c| {
                    let d = c.to_digit(10).ok_or_else(|| anyhow!("bad digit `{c}`"))? as u64;
                    if d >= m {
                        bail!("digit {d} out of range for m = {m}");
                    }
                    Ok(d)
                })
                .collect()
        };
        let pre_digits = digits(pre)?;
        let per_digits = digits(period)?;
        if per_digits.is_empty() {
            bail!("period must be nonempty");
        }
        let m_q = BigRational::from_i64(m as i64);
        let mut pow = BigRational::from_i64(1);
        let mut value = BigRational::from_i64(0);
        for d in &pre_digits {
            value += &pow * BigRational::from_i64(*d as i64);
            pow *= &m_q;
        }
        // periodic tail: P_val · m^L / (1 − m^P), the m-adic limit
        let mut p_val = BigRational::from_i64(0);
        let mut p_pow = BigRational::from_i64(1);
        for d in &per_digits {
            p_val += &p_pow * BigRational::from_i64(*d as i64);
            p_pow *= &m_q;
        }
        let denom = BigRational::from_i64(1) - p_pow;
        value += pow * p_val / denom;
        Ok(BoundaryDir::TreeEnd(value))
    } else {
        Ok(BoundaryDir::TreeEnd(parse_q(spec)?))
    }
}
