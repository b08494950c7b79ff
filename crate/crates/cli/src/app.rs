//! Command-line front end. Exit codes: 0 success or accept, 1 verification
//! reject, 2 usage error or malformed input.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use pqmiss_core::aggsig::{batch_digest, la_sign, la_ver, ls_sign, ls_ver, SignedMessage};
use pqmiss_core::ibs::{extract, setup, IbsSignature, MasterPublicKey, MasterSecretKey, UserSecretKey};
use pqmiss_core::{AggregateSignature31, Gf31, ParamSet, Verdict};
use pqmiss_sim::{run, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::bench::{parse_csv, run_plan, to_csv, BenchPlan, Sweep, DEFAULT_WARMUP, MIN_REPS};
use crate::report::render;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_MALFORMED: i32 = 2;

pub const MPK_FILE: &str = "master.pub";
pub const MSK_FILE: &str = "master.key";
pub const TRACE_FILE: &str = "trace.log";
pub const METRICS_FILE: &str = "metrics.csv";

const BENCH_BANNER: &str = "note: timings are machine dependent; compare trends and ratios within one run, not absolute values";

#[derive(Debug, Parser)]
#[command(name = "pqmiss", version, about = "Identity-based multivariate signatures, aggregation and a UAV ledger pipeline")]
pub struct Cli {
    /// Parameter profile: desk or paper128.
    #[arg(long, global = true)]
    pub profile: Option<String>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a master key pair into the --out directory.
    Keygen,
    /// Issue the secret key of an identity.
    Extract {
        #[arg(long)]
        msk: PathBuf,
        #[arg(long)]
        id: String,
    },
    /// Sign a message file.
    Sign {
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        msg: PathBuf,
    },
    /// Verify a signature against an identity.
    Verify {
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        sig: PathBuf,
    },
    /// Verify members and aggregate them under the aggregator key.
    AggSign {
        #[arg(long)]
        mpk: PathBuf,
        /// Aggregator secret key.
        #[arg(long)]
        key: PathBuf,
        /// One batch member; repeatable.
        #[arg(long, num_args = 3, value_names = ["ID", "MSG", "SIG"], required = true)]
        member: Vec<String>,
    },
    /// Verify an aggregate, optionally against the member files it claims.
    AggVerify {
        #[arg(long)]
        mpk: PathBuf,
        #[arg(long)]
        agg: PathBuf,
        /// Also re-verify every member signature.
        #[arg(long)]
        deep: bool,
        /// Expected batch member; when given, the batch must match exactly.
        #[arg(long, num_args = 3, value_names = ["ID", "MSG", "SIG"])]
        member: Vec<String>,
    },
    /// Run the pipeline simulation; writes trace.log and metrics.csv.
    Simulate {
        /// `key = value` config file; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Timing sweep; CSV to --out or stdout.
    Bench {
        #[arg(long, default_value = "batch")]
        sweep: String,
        /// Comma-separated sweep points; defaults to the preset grid.
        #[arg(long, value_delimiter = ',')]
        values: Vec<usize>,
        #[arg(long, default_value_t = MIN_REPS)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_WARMUP)]
        warmup: usize,
        /// Measure sweep points concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Summarize bench CSVs; later files are compared to the first.
    Report {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

/// A verification reject, as opposed to malformed input.
#[derive(Debug)]
struct Rejected(String);

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "reject: {}", self.0)
    }
}

impl std::error::Error for Rejected {}

fn verdict(v: Verdict) -> Result<()> {
    match v {
        Verdict::Accept => Ok(()),
        Verdict::Reject(r) => Err(Rejected(r.to_string()).into()),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn profile(name: Option<&str>) -> Result<ParamSet> {
    let name = name.unwrap_or("desk");
    ParamSet::by_name(name).ok_or_else(|| anyhow!("unknown profile `{name}` (expected desk or paper128)"))
}

fn load_mpk(path: &Path) -> Result<MasterPublicKey<Gf31>> {
    MasterPublicKey::decode(&read(path)?).with_context(|| format!("{} is not a master public key", path.display()))
}

fn load_usk(path: &Path, params: &ParamSet) -> Result<UserSecretKey<Gf31>> {
    let (p, usk) = UserSecretKey::decode(&read(path)?).with_context(|| format!("{} is not a user key", path.display()))?;
    if &p != params {
        bail!("{} belongs to a different profile", path.display());
    }
    Ok(usk)
}

fn load_sig(path: &Path, params: &ParamSet) -> Result<IbsSignature<Gf31>> {
    let (p, sig) = IbsSignature::decode(&read(path)?).with_context(|| format!("{} is not a signature", path.display()))?;
    if &p != params {
        bail!("{} belongs to a different profile", path.display());
    }
    Ok(sig)
}

fn load_members(triples: &[String], params: &ParamSet) -> Result<Vec<SignedMessage<Gf31>>> {
    triples.chunks(3)
        .map(|c| {
            Ok(SignedMessage {
                signer_id: c[0].as_bytes().to_vec(),
                msg: read(Path::new(&c[1]))?,
                sig: load_sig(Path::new(&c[2]), params)?,
            })
        })
        .collect()
}

fn out_path(out: &Option<PathBuf>, default: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn rng(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let out = &cli.out;
    match cli.command {
        Command::Keygen => {
            let params = profile(cli.profile.as_deref())?;
            let (mpk, msk) = setup::<Gf31, _>(&params, &mut rng(cli.seed))?;
            let dir = out_path(out, ".");
            write(&dir.join(MPK_FILE), &mpk.encode())?;
            write(&dir.join(MSK_FILE), &msk.encode())?;
            println!("wrote {} and {}", dir.join(MPK_FILE).display(), dir.join(MSK_FILE).display());
        }
        Command::Extract { msk, id } => {
            let msk = MasterSecretKey::<Gf31>::decode(&read(&msk)?).context("not a master secret key")?;
            let usk = extract(&msk, id.as_bytes())?;
            let path = out_path(out, &format!("{id}.usk"));
            write(&path, &usk.encode(msk.params()))?;
            println!("wrote {}", path.display());
        }
        Command::Sign { mpk, key, msg } => {
            let mpk = load_mpk(&mpk)?;
            let usk = load_usk(&key, mpk.params())?;
            let sig = ls_sign(&mpk, &usk, &read(&msg)?, &mut rng(cli.seed))?;
            let path = out_path(out, "message.sig");
            write(&path, &sig.encode(mpk.params()))?;
            println!("wrote {}", path.display());
        }
        Command::Verify { mpk, id, msg, sig } => {
            let mpk = load_mpk(&mpk)?;
            let sig = load_sig(&sig, mpk.params())?;
            verdict(ls_ver(&mpk, id.as_bytes(), &read(&msg)?, &sig))?;
            println!("accept");
        }
        Command::AggSign { mpk, key, member } => {
            let mpk = load_mpk(&mpk)?;
            let usk = load_usk(&key, mpk.params())?;
            let batch = load_members(&member, mpk.params())?;
            for (i, m) in batch.iter().enumerate() {
                verdict(ls_ver(&mpk, &m.signer_id, &m.msg, &m.sig))
                    .with_context(|| format!("member {i} ({})", String::from_utf8_lossy(&m.signer_id)))?;
            }
            let agg = la_sign(&mpk, &usk, batch, &mut rng(cli.seed))?;
            let path = out_path(out, "batch.agg");
            write(&path, &agg.encode(mpk.params()))?;
            println!("wrote {} ({} members)", path.display(), agg.batch.len());
        }
        Command::AggVerify { mpk, agg, deep, member } => {
            let mpk = load_mpk(&mpk)?;
            let agg = AggregateSignature31::decode(&read(&agg)?, mpk.params()).context("not an aggregate")?;
            if !member.is_empty() {
                let expected = load_members(&member, mpk.params())?;
                if batch_digest(&expected, mpk.params()) != agg.batch_digest {
                    return Err(Rejected("batch does not match the member files".into()).into());
                }
            }
            verdict(la_ver(&mpk, &agg, deep || !member.is_empty()))?;
            println!("accept");
        }
        Command::Simulate { config } => {
            let mut cfg = match &config {
                Some(p) => SimConfig::parse(&fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?)?,
                None => SimConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(p) = cli.profile {
                cfg.profile = p;
            }
            let outcome = run(&cfg)?;
            let dir = out_path(out, "sim-out");
            write(&dir.join(TRACE_FILE), outcome.trace.render().as_bytes())?;
            write(&dir.join(METRICS_FILE), outcome.metrics.to_csv().as_bytes())?;
            println!("{}", outcome.summary());
        }
        Command::Bench { sweep, values, reps, warmup, parallel } => {
            eprintln!("{BENCH_BANNER}");
            let sweeps: Vec<Sweep> = if sweep == "all" { Sweep::ALL.to_vec() } else { vec![sweep.parse()?] };
            let params = profile(cli.profile.as_deref())?;
            let mut records = Vec::new();
            for s in sweeps {
                let mut plan = BenchPlan::preset(s, params.clone(), cli.seed.unwrap_or(1));
                if !values.is_empty() {
                    plan.values = values.clone();
                }
                plan.reps = reps;
                plan.warmup = warmup;
                plan.parallel = parallel;
                records.extend(run_plan(&plan)?);
            }
            let csv = to_csv(&records);
            match out {
                Some(p) => {
                    write(p, csv.as_bytes())?;
                    println!("wrote {} ({} rows)", p.display(), records.len());
                }
                None => print!("{csv}"),
            }
        }
        Command::Report { csv } => {
            let runs = csv
                .iter()
                .map(|p| {
                    let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
                    Ok((p.display().to_string(), parse_csv(&text).with_context(|| p.display().to_string())?))
                })
                .collect::<Result<Vec<_>>>()?;
            print!("{}", render(&runs));
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_MALFORMED } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) if e.downcast_ref::<Rejected>().is_some() || e.chain().any(|c| c.is::<Rejected>()) => {
            eprintln!("{e:#}");
            EXIT_REJECT
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_MALFORMED
        }
    }
}
