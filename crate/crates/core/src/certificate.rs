//! Versioned JSON payloads for verdicts and certificates.
//!
//! Scalars are encoded as canonical strings (`"3/4"`, `"-2"`), group
//! elements as structured data, so every artifact round-trips exactly and
//! re-verifies from its serialized form alone given the scenario it was
//! produced from.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complex::{Cell, Chain, ChainComplex};
use crate::finitary::{FinitaryMap, GshBound, Volley};
use crate::geometry::{BoundaryDir, ControlledModel, Val};
use crate::group::GroupElem;
use crate::novikov::{NovElem, ObstructionClass, PivotStep};
use crate::groupring::GroupRingElem;
use crate::scalar::{Field, Scalar};
use crate::sigma::{BoundingCertificate, LagEstimate, MemberEvidence, PushCertificate, Verdict};

pub const CERT_SCHEMA: &str = "sigma.cert.v1";
pub const COMPLEX_SCHEMA: &str = "sigma.complex.v1";

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("bad scalar literal `{0}`")]
    BadScalar(String),
    #[error("bad rational literal `{0}`")]
    BadRational(String),
    #[error("malformed payload: {0}")]
    Malformed(String),
}

type Q = num_rational::BigRational;

fn enc_q(q: &Q) -> String {
    q.to_string()
}

fn dec_q(s: &str) -> Result<Q, CodecError> {
    <Q as Scalar>::decode(s).ok_or_else(|| CodecError::BadRational(s.to_string()))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum GroupElemDto {
    #[serde(rename = "fa")]
    FreeAbelian(Vec<i64>),
    #[serde(rename = "free")]
    Free(Vec<(usize, i64)>),
    #[serde(rename = "bs")]
    BaumslagSolitar { u: String, k: i64 },
    #[serde(rename = "prod")]
    Product(Box<GroupElemDto>, Box<GroupElemDto>),
}

pub fn group_elem_to_dto(g: &GroupElem) -> GroupElemDto {
    match g {
        GroupElem::FreeAbelian(v) => GroupElemDto::FreeAbelian(v.clone()),
        GroupElem::Free(w) => GroupElemDto::Free(w.clone()),
        GroupElem::BaumslagSolitar { u, k } => GroupElemDto::BaumslagSolitar {
            u: enc_q(u),
            k: *k,
        },
        GroupElem::Product(a, b) => GroupElemDto::Product(
            Box::new(group_elem_to_dto(a)),
            Box::new(group_elem_to_dto(b)),
        ),
    }
}

pub fn group_elem_from_dto(d: &GroupElemDto) -> Result<GroupElem, CodecError> {
    Ok(match d {
        GroupElemDto::FreeAbelian(v) => GroupElem::FreeAbelian(v.clone()),
        GroupElemDto::Free(w) => GroupElem::Free(w.clone()),
        GroupElemDto::BaumslagSolitar { u, k } => GroupElem::BaumslagSolitar {
            u: dec_q(u)?,
            k: *k,
        },
        GroupElemDto::Product(a, b) => GroupElem::Product(
            Box::new(group_elem_from_dto(a)?),
            Box::new(group_elem_from_dto(b)?),
        ),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum DirDto {
    #[serde(rename = "euclidean")]
    Euclidean(Vec<String>),
    #[serde(rename = "tree_up")]
    TreeUp,
    #[serde(rename = "tree_end")]
    TreeEnd(String),
    #[serde(rename = "join")]
    Join {
        w: String,
        w2: String,
        left: Box<DirDto>,
        right: Box<DirDto>,
    },
}

pub fn dir_to_dto(e: &BoundaryDir) -> DirDto {
    match e {
        BoundaryDir::Euclidean(v) => DirDto::Euclidean(v.iter().map(enc_q).collect()),
        BoundaryDir::TreeUp => DirDto::TreeUp,
        BoundaryDir::TreeEnd(xi) => DirDto::TreeEnd(enc_q(xi)),
        BoundaryDir::Join { w, w2, left, right } => DirDto::Join {
            w: enc_q(w),
            w2: enc_q(w2),
            left: Box::new(dir_to_dto(left)),
            right: Box::new(dir_to_dto(right)),
        },
    }
}

pub fn dir_from_dto(d: &DirDto) -> Result<BoundaryDir, CodecError> {
    Ok(match d {
        DirDto::Euclidean(v) => BoundaryDir::Euclidean(
            v.iter().map(|s| dec_q(s)).collect::<Result<_, _>>()?,
        ),
        DirDto::TreeUp => BoundaryDir::TreeUp,
        DirDto::TreeEnd(s) => BoundaryDir::TreeEnd(dec_q(s)?),
        DirDto::Join { w, w2, left, right } => BoundaryDir::Join {
            w: dec_q(w)?,
            w2: dec_q(w2)?,
            left: Box::new(dir_from_dto(left)?),
            right: Box::new(dir_from_dto(right)?),
        },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainDto {
    pub dim: usize,
    pub terms: Vec<(usize, GroupElemDto, String)>,
}

pub fn chain_to_dto<K: Scalar>(c: &Chain<K>) -> ChainDto {
    ChainDto {
        dim: c.dim,
        terms: c
            .iter()
            .map(|((s, g), k)| (*s, group_elem_to_dto(g), k.encode()))
            .collect(),
    }
}

pub fn chain_from_dto<K: Scalar>(d: &ChainDto) -> Result<Chain<K>, CodecError> {
    let mut out = Chain::zero(d.dim);
    for (s, g, k) in &d.terms {
        let coeff = K::decode(k).ok_or_else(|| CodecError::BadScalar(k.clone()))?;
        out.add_term(*s, group_elem_from_dto(g)?, coeff);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellDto {
    pub dim: usize,
    pub sym: usize,
    pub g: GroupElemDto,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapDto {
    pub degree: i32,
    pub volley: Vec<Vec<Vec<ChainDto>>>,
    pub default_choice: Vec<Vec<usize>>,
    pub overrides: Vec<(CellDto, usize)>,
}

pub fn map_to_dto<K: Scalar>(m: &FinitaryMap<K>) -> MapDto {
    MapDto {
        degree: m.degree(),
        volley: m
            .volley
            .table
            .iter()
            .map(|d| d.iter().map(|set| set.iter().map(chain_to_dto).collect()).collect())
            .collect(),
        default_choice: m.default_choice.clone(),
        overrides: m
            .overrides
            .iter()
            .map(|(cell, idx)| {
                (
                    CellDto {
                        dim: cell.dim,
                        sym: cell.sym,
                        g: group_elem_to_dto(&cell.g),
                    },
                    *idx,
                )
            })
            .collect(),
    }
}

pub fn map_from_dto<K: Scalar>(d: &MapDto) -> Result<FinitaryMap<K>, CodecError> {
    let table = d
        .volley
        .iter()
        .map(|dim| {
            dim.iter()
                .map(|set| set.iter().map(chain_from_dto).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut overrides = BTreeMap::new();
    for (cell, idx) in &d.overrides {
        overrides.insert(
            Cell {
                dim: cell.dim,
                sym: cell.sym,
                g: group_elem_from_dto(&cell.g)?,
            },
            *idx,
        );
    }
    Ok(FinitaryMap {
        volley: Volley {
            degree: d.degree,
            table,
        },
        default_choice: d.default_choice.clone(),
        overrides,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum GshDto {
    #[serde(rename = "exact")]
    Exact(Option<String>),
    #[serde(rename = "windowed")]
    Windowed { value: Option<String>, radius: u32 },
}

fn val_to_dto(v: &Val) -> Option<String> {
    v.finite().map(enc_q)
}

fn val_from_dto(d: &Option<String>) -> Result<Val, CodecError> {
    Ok(match d {
        None => Val::Infinite,
        Some(s) => Val::Finite(dec_q(s)?),
    })
}

pub fn gsh_to_dto(g: &GshBound) -> GshDto {
    match g {
        GshBound::Exact(v) => GshDto::Exact(val_to_dto(v)),
        GshBound::Windowed { value, radius } => GshDto::Windowed {
            value: val_to_dto(value),
            radius: *radius,
        },
    }
}

pub fn gsh_from_dto(d: &GshDto) -> Result<GshBound, CodecError> {
    Ok(match d {
        GshDto::Exact(v) => GshBound::Exact(val_from_dto(v)?),
        GshDto::Windowed { value, radius } => GshBound::Windowed {
            value: val_from_dto(value)?,
            radius: *radius,
        },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PushCertDto {
    pub dir: DirDto,
    pub level: usize,
    pub nu: String,
    pub map: MapDto,
    pub gsh: GshDto,
    pub homotopy: Option<MapDto>,
    pub window_radius: u32,
}

pub fn push_to_dto<K: Scalar>(c: &PushCertificate<K>) -> PushCertDto {
    PushCertDto {
        dir: dir_to_dto(&c.dir),
        level: c.level,
        nu: enc_q(&c.nu),
        map: map_to_dto(&c.map),
        gsh: gsh_to_dto(&c.gsh),
        homotopy: c.homotopy.as_ref().map(map_to_dto),
        window_radius: c.window_radius,
    }
}

pub fn push_from_dto<K: Scalar>(d: &PushCertDto) -> Result<PushCertificate<K>, CodecError> {
    Ok(PushCertificate {
        dir: dir_from_dto(&d.dir)?,
        level: d.level,
        nu: dec_q(&d.nu)?,
        map: map_from_dto(&d.map)?,
        gsh: gsh_from_dto(&d.gsh)?,
        homotopy: d.homotopy.as_ref().map(|m| map_from_dto(m)).transpose()?,
        window_radius: d.window_radius,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NovElemDto {
    pub terms: Vec<(GroupElemDto, String)>,
    pub floor: Option<String>,
}

fn nov_to_dto<K: Scalar>(e: &NovElem<K>) -> NovElemDto {
    NovElemDto {
        terms: e
            .part
            .iter()
            .map(|(g, c)| (group_elem_to_dto(g), c.encode()))
            .collect(),
        floor: e.floor.as_ref().map(enc_q),
    }
}

fn nov_from_dto<K: Field>(d: &NovElemDto) -> Result<NovElem<K>, CodecError> {
    let mut part = GroupRingElem::zero();
    for (g, c) in &d.terms {
        let coeff = K::decode(c).ok_or_else(|| CodecError::BadScalar(c.clone()))?;
        part.add_term(group_elem_from_dto(g)?, coeff);
    }
    Ok(NovElem {
        part,
        floor: d.floor.as_ref().map(|s| dec_q(s)).transpose()?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObstructionDto {
    pub dim: usize,
    pub dir: DirDto,
    pub floor: String,
    pub witness: Vec<(usize, NovElemDto)>,
    pub pivots: Vec<PivotStep>,
    pub solve_radius: u32,
    pub stable_at_double: bool,
    /// Digest of the transcript (pivots plus witness leading parts).
    pub transcript_digest: String,
}

pub fn obstruction_to_dto<K: Scalar>(o: &ObstructionClass<K>) -> ObstructionDto {
    let witness: Vec<(usize, NovElemDto)> =
        o.witness.iter().map(|(i, e)| (*i, nov_to_dto(e))).collect();
    let mut hasher = Sha256::new();
    for p in &o.pivots {
        hasher.update(format!("{}:{}:{};", p.dim, p.row, p.col));
    }
    for (i, e) in &witness {
        hasher.update(format!("{i}="));
        for (g, c) in &e.terms {
            hasher.update(format!("{g:?}*{c};"));
        }
    }
    let digest = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    ObstructionDto {
        dim: o.dim,
        dir: dir_to_dto(&o.dir),
        floor: enc_q(&o.floor),
        witness,
        pivots: o.pivots.clone(),
        solve_radius: o.solve_radius,
        stable_at_double: o.stable_at_double,
        transcript_digest: digest,
    }
}

pub fn obstruction_from_dto<K: Field>(
    d: &ObstructionDto,
) -> Result<ObstructionClass<K>, CodecError> {
    let mut witness = BTreeMap::new();
    for (i, e) in &d.witness {
        witness.insert(*i, nov_from_dto(e)?);
    }
    Ok(ObstructionClass {
        dim: d.dim,
        dir: dir_from_dto(&d.dir)?,
        floor: dec_q(&d.floor)?,
        witness,
        pivots: d.pivots.clone(),
        solve_radius: d.solve_radius,
        stable_at_double: d.stable_at_double,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundingDto {
    pub i: i64,
    pub level: String,
    pub module_target: Vec<String>,
    pub cycle: ChainDto,
    pub bounding: ChainDto,
    pub lag: String,
}

pub fn bounding_to_dto<K: Scalar>(b: &BoundingCertificate<K>) -> BoundingDto {
    BoundingDto {
        i: b.i,
        level: enc_q(&b.level),
        module_target: b.module_target.iter().map(|k| k.encode()).collect(),
        cycle: chain_to_dto(&b.cycle),
        bounding: chain_to_dto(&b.bounding),
        lag: enc_q(&b.lag),
    }
}

pub fn bounding_from_dto<K: Scalar>(
    d: &BoundingDto,
) -> Result<BoundingCertificate<K>, CodecError> {
    Ok(BoundingCertificate {
        i: d.i,
        level: dec_q(&d.level)?,
        module_target: d
            .module_target
            .iter()
            .map(|s| K::decode(s).ok_or_else(|| CodecError::BadScalar(s.clone())))
            .collect::<Result<_, _>>()?,
        cycle: chain_from_dto(&d.cycle)?,
        bounding: chain_from_dto(&d.bounding)?,
        lag: dec_q(&d.lag)?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LagEstimateDto {
    pub dir: DirDto,
    pub skeleton: usize,
    pub levels: Vec<(i64, String, Option<String>)>,
    pub certificates: Vec<BoundingDto>,
    pub constant_lag: Option<String>,
    pub unknown_levels: usize,
}

pub fn lag_estimate_to_dto<K: Scalar>(l: &LagEstimate<K>) -> LagEstimateDto {
    LagEstimateDto {
        dir: dir_to_dto(&l.dir),
        skeleton: l.skeleton,
        levels: l
            .levels
            .iter()
            .map(|lr| (lr.i, enc_q(&lr.level), lr.worst_lag.as_ref().map(enc_q)))
            .collect(),
        certificates: l.certificates.iter().map(bounding_to_dto).collect(),
        constant_lag: l.constant_lag.as_ref().map(enc_q),
        unknown_levels: l.unknown_levels,
    }
}

/// The payload of a verdict artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum VerdictDto {
    #[serde(rename = "member")]
    Member { push: Option<PushCertDto> },
    #[serde(rename = "non_member")]
    NonMember { obstruction: ObstructionDto },
    #[serde(rename = "unknown")]
    Unknown {
        window: u32,
        trunc: String,
        reason: String,
    },
}

pub fn verdict_to_dto<K: Scalar>(v: &Verdict<K>) -> VerdictDto {
    match v {
        Verdict::Member(MemberEvidence::Push(cert)) => VerdictDto::Member {
            push: Some(push_to_dto(cert)),
        },
        Verdict::Member(MemberEvidence::Convention) => VerdictDto::Member { push: None },
        Verdict::NonMember(obs) => VerdictDto::NonMember {
            obstruction: obstruction_to_dto(obs),
        },
        Verdict::Unknown {
            window,
            trunc,
            reason,
        } => VerdictDto::Unknown {
            window: *window,
            trunc: enc_q(trunc),
            reason: reason.clone(),
        },
    }
}

/// Re-verifies a verdict payload against the rebuilt scenario objects.
pub fn verify_verdict_dto<K: Field>(
    cx: &ChainComplex<K>,
    cm: &ControlledModel,
    dto: &VerdictDto,
) -> Result<bool, CodecError> {
    match dto {
        VerdictDto::Member { push: Some(p) } => {
            let cert = push_from_dto::<K>(p)?;
            Ok(cert.verify(cx, cm))
        }
        VerdictDto::Member { push: None } => Ok(true),
        VerdictDto::NonMember { obstruction } => {
            let obs = obstruction_from_dto::<K>(obstruction)?;
            Ok(obs.verify(cx, cm))
        }
        VerdictDto::Unknown { .. } => Ok(true),
    }
}

/// Complex serialization for certificate replay.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexDto {
    pub schema: String,
    pub module_rank: usize,
    pub basis: Vec<Vec<String>>,
    pub boundary: Vec<Vec<ChainDto>>,
    pub augmentation: Vec<Vec<String>>,
}

pub fn complex_to_dto<K: Scalar>(cx: &ChainComplex<K>) -> ComplexDto {
    ComplexDto {
        schema: COMPLEX_SCHEMA.to_string(),
        module_rank: cx.module.rank,
        basis: (0..=cx.top_dim())
            .map(|d| cx.basis_names(d).to_vec())
            .collect(),
        boundary: (1..=cx.top_dim())
            .map(|d| {
                (0..cx.rank(d))
                    .map(|i| chain_to_dto(cx.boundary_of_sym(d, i)))
                    .collect()
            })
            .collect(),
        augmentation: (0..cx.rank(0))
            .map(|i| {
                cx.augmentation_of_sym(i)
                    .iter()
                    .map(|k| k.encode())
                    .collect()
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{fox_resolution, Presentation};
    use crate::geometry::ModelSpace;
    use crate::group::GroupSpec;
    use crate::sigma::{find_push, Budgets, PushSearch};
    use num_rational::BigRational;

    type Qr = BigRational;

    fn q(n: i64) -> Qr {
        Qr::from_i64(n)
    }

    #[test]
    fn push_certificate_roundtrip_and_tamper_detection() {
        let cx = fox_resolution::<Qr>(&Presentation::standard(GroupSpec::free_abelian(&[
            "a", "b",
        ])))
        .unwrap();
        let model = ModelSpace::Euclidean {
            dim: 2,
            action: vec![vec![q(1), q(0)], vec![q(0), q(1)]],
        };
        let base = model.default_base();
        let cm = ControlledModel::single_base(&cx, model, base).unwrap();
        let e = BoundaryDir::Euclidean(vec![q(1), q(0)]);
        let PushSearch::Found(cert) = find_push(&cx, &cm, &e, 1, &Budgets::default()).unwrap()
        else {
            panic!()
        };
        let dto = push_to_dto(&cert);
        let json = serde_json::to_string_pretty(&dto).unwrap();
        let parsed: PushCertDto = serde_json::from_str(&json).unwrap();
        let back = push_from_dto::<Qr>(&parsed).unwrap();
        assert!(back.verify(&cx, &cm));

        // Tampering with the claimed shift target must fail re-verification.
        let tampered_json = json.replace("\"nu\": \"1\"", "\"nu\": \"2\"");
        assert_ne!(json, tampered_json);
        let parsed: PushCertDto = serde_json::from_str(&tampered_json).unwrap();
        let bad = push_from_dto::<Qr>(&parsed).unwrap();
        assert!(!bad.verify(&cx, &cm));

        // Corrupting the map itself must fail the chain-map identity.
        let corrupt = json.replace("\"fa\": [\n                    1,\n                    0\n                  ]", "\"fa\": [\n                    1,\n                    1\n                  ]");
        if corrupt != json {
            let parsed: PushCertDto = serde_json::from_str(&corrupt).unwrap();
            let bad = push_from_dto::<Qr>(&parsed).unwrap();
            assert!(!bad.verify(&cx, &cm));
        }
    }

    #[test]
    fn obstruction_roundtrip_verifies() {
        let cx = fox_resolution::<Qr>(&Presentation::standard(GroupSpec::free(&["a", "b"])))
            .unwrap();
        let model = ModelSpace::Euclidean {
            dim: 1,
            action: vec![vec![q(1)], vec![q(0)]],
        };
        let base = model.default_base();
        let cm = ControlledModel::single_base(&cx, model, base).unwrap();
        let e = BoundaryDir::Euclidean(vec![q(1)]);
        let settings = crate::novikov::TorSettings::new(q(8), 5);
        let crate::novikov::TorOutcome::Obstruction(obs) =
            crate::novikov::tor_vanishing_test(&cx, &cm, &e, 1, &settings)
        else {
            panic!()
        };
        assert!(obs.verify(&cx, &cm));
        let dto = obstruction_to_dto(&obs);
        let json = serde_json::to_string(&dto).unwrap();
        let parsed: ObstructionDto = serde_json::from_str(&json).unwrap();
        let back = obstruction_from_dto::<Qr>(&parsed).unwrap();
        assert!(back.verify(&cx, &cm));
        assert!(!dto.transcript_digest.is_empty());
    }
}
