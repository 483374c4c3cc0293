//! `sigma`: scenario-driven membership verdicts for controlled resolutions.
//!
//! Exit codes: 0 success, 2 parse errors, 3 budget exhaustion (all-unknown
//! results; artifacts still written), 4 verification failure.

mod commands;
mod scenario;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;

use scenario::{Built, RingKind, ScenarioDoc};
use sigma_core::scalar::Gf;
use store::{Artifact, Store};

#[derive(Parser)]
#[command(name = "sigma", about = "Controlled resolution membership verdicts", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct DirArgs {
    /// Euclidean direction as comma-separated rationals, e.g. `1,0`.
    #[arg(long, allow_hyphen_values = true)]
    dir: Option<String>,
    /// Tree end: `up`, a rational limit, or a digit word like `01(1)`.
    #[arg(long, allow_hyphen_values = true)]
    end: Option<String>,
    /// Join weights `w,w'` for product models.
    #[arg(long, allow_hyphen_values = true)]
    join: Option<String>,
    /// Left factor direction for joins.
    #[arg(long, allow_hyphen_values = true)]
    left: Option<String>,
    /// Right factor direction for joins.
    #[arg(long, allow_hyphen_values = true)]
    right: Option<String>,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Output directory for artifacts (default: $SIGMA_CERT_DIR or ./sigma-artifacts).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Window radius override.
    #[arg(long)]
    window: Option<u32>,
    /// Truncation floor override.
    #[arg(long)]
    trunc: Option<String>,
    /// Push shift target override.
    #[arg(long)]
    nu: Option<String>,
    /// Sample count override.
    #[arg(long)]
    samples: Option<usize>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count for scans.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Verdict for one boundary direction.
    Member {
        scenario: PathBuf,
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long)]
        n: i64,
        #[command(flatten)]
        over: Overrides,
    },
    /// Verdicts for sampled directions.
    Scan {
        scenario: PathBuf,
        #[arg(long)]
        n: i64,
        #[command(flatten)]
        over: Overrides,
    },
    /// Push-certificate search only.
    Push {
        scenario: PathBuf,
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        over: Overrides,
    },
    /// Controlled-acyclicity lag estimate toward a direction.
    Ca {
        scenario: PathBuf,
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        over: Overrides,
    },
    /// Controlled-acyclicity lags over sampled base points.
    CaPoint {
        scenario: PathBuf,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        over: Overrides,
    },
    /// Truncated Novikov homology outcomes through dimension n.
    Novikov {
        scenario: PathBuf,
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        over: Overrides,
    },
    /// Product-formula check over sampled joins of two scenarios.
    Product {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        over: Overrides,
    },
    /// Zero-lag transform: elementary expansions plus the post-check.
    Expand {
        scenario: PathBuf,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        over: Overrides,
    },
    /// Re-verify a stored artifact.
    Verify { artifact: PathBuf },
    /// Property suites on the scenario's model.
    Selftest {
        scenario: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Openness, constant-lag and bounded-support probes for one direction.
    Probe {
        scenario: PathBuf,
        #[command(flatten)]
        dir: DirArgs,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        over: Overrides,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            // Scenario/artifact syntax problems are exit 2.
            ExitCode::from(2)
        }
    }
}

macro_rules! with_ring {
    ($ring:expr, $f:ident :: <_> ( $($args:expr),* $(,)? )) => {
        match $ring {
            RingKind::Rational => $f::<BigRational>($($args),*),
            RingKind::Gf(2) => $f::<Gf<2>>($($args),*),
            RingKind::Gf(3) => $f::<Gf<3>>($($args),*),
            RingKind::Gf(5) => $f::<Gf<5>>($($args),*),
            RingKind::Gf(7) => $f::<Gf<7>>($($args),*),
            RingKind::Gf(_) => Err(anyhow!("unsupported prime field")),
            RingKind::Integer => Err(anyhow!(
                "requires rational coefficients: set [ring] kind = \"rational\""
            )),
        }
    };
}

fn load(path: &PathBuf, over: &Overrides) -> Result<(ScenarioDoc, String, RingKind)> {
    let (mut doc, raw) = ScenarioDoc::load(path)?;
    if let Some(seed) = over.seed {
        doc.seed = Some(seed);
    }
    let ring = doc.ring_kind()?;
    Ok((doc, raw, ring))
}

fn apply_overrides<K: sigma_core::scalar::Field>(built: &mut Built<K>, over: &Overrides) -> Result<()> {
    if let Some(w) = over.window {
        built.budgets.window = w;
        built.budgets.max_window = built.budgets.max_window.max(w);
    }
    if let Some(t) = &over.trunc {
        built.budgets.trunc = <BigRational as sigma_core::scalar::Scalar>::decode(t)
            .ok_or_else(|| anyhow!("bad --trunc"))?;
    }
    if let Some(nu) = &over.nu {
        built.budgets.nu = <BigRational as sigma_core::scalar::Scalar>::decode(nu)
            .ok_or_else(|| anyhow!("bad --nu"))?;
    }
    if let Some(s) = over.samples {
        built.samples = s;
    }
    if let Some(j) = over.jobs {
        built.jobs = j;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Member { scenario, dir, n, over } => {
            let (doc, raw, ring) = load(&scenario, &over)?;
            fn go<K: sigma_core::scalar::Field>(
                doc: &ScenarioDoc,
                raw: &str,
                dir: &DirArgs,
                n: i64,
                over: &Overrides,
            ) -> Result<i32> {
                let mut built = scenario::build::<K>(doc, raw)?;
                apply_overrides(&mut built, over)?;
                let e = scenario::parse_direction(
                    &built.cm.model,
                    dir.dir.as_deref(),
                    dir.end.as_deref(),
                    dir.join.as_deref(),
                    dir.left.as_deref(),
                    dir.right.as_deref(),
                )?;
                let store = Store::open(over.out.as_deref())?;
                let ctx = commands::CommandCtx {
                    store: &store,
                    scenario_toml: raw,
                };
                commands::cmd_member(&built, &ctx, &e, n)
            }
            with_ring!(ring, go::<_>(&doc, &raw, &dir, n, &over))
        }
        Command::Scan { scenario, n, over } => {
            let (doc, raw, ring) = load(&scenario, &over)?;
            fn go<K: sigma_core::scalar::Field>(
                doc: &ScenarioDoc,
                raw: &str,
                n: i64,
                over: &Overrides,
            ) -> Result<i32> {
                let mut built = scenario::build::<K>(doc, raw)?;
                apply_overrides(&mut built, over)?;
                let store = Store::open(over.out.as_deref())?;
                let ctx = commands::CommandCtx {
                    store: &store,
                    scenario_toml: raw,
                };
                let samples = built.samples;
                let jobs = built.jobs;
                commands::cmd_scan(&built, &ctx, n, samples, jobs)
            }
            with_ring!(ring, go::<_>(&doc, &raw, n, &over))
        }
        Command::Push { scenario, dir, n, over } => {
            let (doc, raw, ring) = load(&scenario, &over)?;
            fn go<K: sigma_core::scalar::Field>(
                doc: &ScenarioDoc,
                raw: &str,
                dir: &DirArgs,
                n: usize,
                over: &Overrides,
            ) -> Result<i32> {
                let mut built = scenario::build::<K>(doc, raw)?;
                apply_overrides(&mut built, over)?;
                let e = scenario::parse_direction(
                    &built.cm.model,
                    dir.dir.as_deref(),
                    dir.end.as_deref(),
                    dir.join.as_deref(),
                    dir.left.as_deref(),
                    dir.right.as_deref(),
                )?;
                let store = Store::open(over.out.as_deref())?;
                let ctx = commands::CommandCtx {
                    store: &store,
                    scenario_toml: raw,
                };
                commands::cmd_push(&built, &ctx, &e, n)
            }
            with_ring!(ring, go::<_>(&doc, &raw, &dir, n, &over))
        }
        Command::Ca { scenario, dir, n, over } => {
            let (doc, raw, ring) = load(&scenario, &over)?;
            fn go<K: sigma_core::scalar::Field>(
                doc: &ScenarioDoc,
                raw: &str,
                dir: &DirArgs,
                n: usize,
                over: &Overrides,
            ) -> Result<i32> {
                let mut built = scenario::build::<K>(doc, raw)?;
                apply_overrides(&mut built, over)?;
                let e = scenario::parse_direction(
                    &built.cm.model,
                    dir.dir.as_deref(),
                    dir.end.as_deref(),
                    dir.join.as_deref(),
                    dir.left.as_deref(),
                    dir.right.as_deref(),
                )?;
                let store = Store::open(over.out.as_deref())?;
                let ctx = commands::CommandCtx {
                    store: &store,
                    scenario_toml: raw,
                };
                commands::cmd_ca(&built, &ctx, &e, n)
            }
            with_ring!(ring, go::<_>(&doc, &raw, &dir, n, &over))
        }
        Command::CaPoint { scenario, n, over } => {
            let (doc, raw, ring) = load(&scenario, &over)?;
            fn go<K: sigma_core::scalar::Field>(
                doc: &ScenarioDoc,
                raw: &str,
                n: usize,
                over: &Overrides,
            ) -> Result<i32> {
                let mut built = scenario::build::<K>(doc, raw)?;
                apply_overrides(&mut built, over)?;
                let store = Store::open(over.out.as_deref())?;
                let ctx = commands::CommandCtx {
                    store: &store,
                    scenario_toml: raw,
                };
                let samples = built.samples;
                commands::cmd_ca_point(&built, &ctx, n, samples)
            }
            with_ring!(ring, go::<_>(&doc, &raw, n, &over))
        }
        Command::Novikov { scenario, dir, n, over } => {
            let (doc, raw, ring) = load(&scenario, &over)?;
            fn go<K: sigma_core::scalar::Field>(
                doc: &ScenarioDoc,
                raw: &str,
                dir: &DirArgs,
                n: usize,
                over: &Overrides,
            ) -> Result<i32> {
                let mut built = scenario::build::<K>(doc, raw)?;
                apply_overrides(&mut built, over)?;
                let e = scenario::parse_direction(
                    &built.cm.model,
                    dir.dir.as_deref(),
                    dir.end.as_deref(),
                    dir.join.as_deref(),
                    dir.left.as_deref(),
                    dir.right.as_deref(),
                )?;
                let store = Store::open(over.out.as_deref())?;
                let ctx = commands::CommandCtx {
                    store: &store,
                    scenario_toml: raw,
                };
                commands::cmd_novikov(&built, &ctx, &e, n)
            }
            with_ring!(ring, go::<_>(&doc, &raw, &dir, n, &over))
        }
        Command::Product { left, right, n, over } => {
            let (doc_l, raw_l, ring_l) = load(&left, &over)?;
            let (doc_r, raw_r, ring_r) = load(&right, &over)?;
            if ring_l != ring_r {
                return Err(anyhow!("both factor scenarios must use the same ground ring"));
            }
            fn go<K: sigma_core::scalar::Field>(
                doc_l: &ScenarioDoc,
                raw_l: &str,
                doc_r: &ScenarioDoc,
                raw_r: &str,
                n: usize,
                over: &Overrides,
            ) -> Result<i32> {
                let mut built_l = scenario::build::<K>(doc_l, raw_l)?;
                apply_overrides(&mut built_l, over)?;
                let built_r = scenario::build::<K>(doc_r, raw_r)?;
                let store = Store::open(over.out.as_deref())?;
                let ctx = commands::CommandCtx {
                    store: &store,
                    scenario_toml: raw_l,
                };
                let samples = over.samples.unwrap_or(built_l.samples);
                commands::cmd_product(&built_l, &built_r, &ctx, n, samples)
            }
            with_ring!(ring_l, go::<_>(&doc_l, &raw_l, &doc_r, &raw_r, n, &over))
        }
        Command::Expand { scenario, n, over } => {
            let (doc, raw, ring) = load(&scenario, &over)?;
            fn go<K: sigma_core::scalar::Field>(
                doc: &ScenarioDoc,
                raw: &str,
                n: usize,
                over: &Overrides,
            ) -> Result<i32> {
                let mut built = scenario::build::<K>(doc, raw)?;
                apply_overrides(&mut built, over)?;
                let store = Store::open(over.out.as_deref())?;
                let ctx = commands::CommandCtx {
                    store: &store,
                    scenario_toml: raw,
                };
                let samples = built.samples.min(4);
                commands::cmd_expand(&built, &ctx, n, samples)
            }
            with_ring!(ring, go::<_>(&doc, &raw, n, &over))
        }
        Command::Verify { artifact } => commands::cmd_verify(&artifact),
        Command::Selftest { scenario, trials } => {
            let over = Overrides::default();
            let (doc, raw, ring) = load(&scenario, &over)?;
            fn go<K: sigma_core::scalar::Field>(
                doc: &ScenarioDoc,
                raw: &str,
                trials: usize,
            ) -> Result<i32> {
                let built = scenario::build::<K>(doc, raw)?;
                commands::cmd_selftest(&built, trials)
            }
            with_ring!(ring, go::<_>(&doc, &raw, trials))
        }
        Command::Probe { scenario, dir, n, over } => {
            let (doc, raw, ring) = load(&scenario, &over)?;
            fn go<K: sigma_core::scalar::Field>(
                doc: &ScenarioDoc,
                raw: &str,
                dir: &DirArgs,
                n: usize,
                over: &Overrides,
            ) -> Result<i32> {
                let mut built = scenario::build::<K>(doc, raw)?;
                apply_overrides(&mut built, over)?;
                let e = scenario::parse_direction(
                    &built.cm.model,
                    dir.dir.as_deref(),
                    dir.end.as_deref(),
                    dir.join.as_deref(),
                    dir.left.as_deref(),
                    dir.right.as_deref(),
                )?;
                commands::cmd_probe(&built, &e, n)
            }
            with_ring!(ring, go::<_>(&doc, &raw, &dir, n, &over))
        }
    }
}

/// Verification dispatch used by `cmd_verify` (needs the ring from the
/// embedded scenario).
pub(crate) fn dispatch_verify(
    doc: &ScenarioDoc,
    artifact: &Artifact,
    ring: RingKind,
) -> Result<bool> {
    fn go<K: sigma_core::scalar::Field>(doc: &ScenarioDoc, artifact: &Artifact) -> Result<bool> {
        let built = scenario::build::<K>(doc, &artifact.scenario_toml)?;
        commands::verify_artifact(&built, artifact)
    }
    with_ring!(ring, go::<_>(doc, artifact))
}

