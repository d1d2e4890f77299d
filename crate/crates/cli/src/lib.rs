//! The `locomplex` command-line pipeline.
//!
//! Every subcommand takes its settings from three layers, highest first:
//! command-line flags, the matching `[subcommand]` table of a `--config`
//! TOML file, and built-in defaults. The resolved settings are written into
//! every artifact as provenance, in a form `--config` accepts again.

pub mod commands;
pub mod plot;
pub mod table;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use locomplex::dataset::write_atomic;
use plot::PlotKind;
use table::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "locomplex", version, about = "Autoencoder complexity analysis of local quantum observations")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Global {
    /// Output directory.
    #[arg(long, global = true, env = "LOCOMPLEX_OUT")]
    pub out: Option<PathBuf>,
    /// TOML file with a `[subcommand]` table of settings.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Master seed of every random stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generalized Gibbs ensembles of the transverse-field Ising chain.
    GenGge(commands::GenGge),
    /// Steady states of the weakly open Ising chain.
    GenLindblad(commands::GenLindblad),
    /// Local observations along random unitary circuit trajectories.
    GenCircuit(commands::GenCircuit),
    /// Train one autoencoder.
    Train(commands::TrainCmd),
    /// Best test loss against bottleneck width over several seeds.
    Sweep(commands::Sweep),
    /// TwoNN intrinsic dimension, optionally with windowed slopes.
    IntrinsicDim(commands::IntrinsicDim),
    /// Two-dimensional embedding colored by an observable.
    Embed(commands::Embed),
    /// Rank correlation between a latent direction and an observable.
    Correlate(commands::Correlate),
    /// Recover Hamiltonian coupling ratios from thermal-like data.
    Reconstruct(commands::Reconstruct),
    /// Plot CSV tables written by the other subcommands.
    Report(commands::Report),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenGge(_) => "gen-gge",
            Command::GenLindblad(_) => "gen-lindblad",
            Command::GenCircuit(_) => "gen-circuit",
            Command::Train(_) => "train",
            Command::Sweep(_) => "sweep",
            Command::IntrinsicDim(_) => "intrinsic-dim",
            Command::Embed(_) => "embed",
            Command::Correlate(_) => "correlate",
            Command::Reconstruct(_) => "reconstruct",
            Command::Report(_) => "report",
        }
    }
}

/// Settings whose unset fields can be filled from a lower layer.
pub trait Layered: Sized + Serialize + DeserializeOwned + Default {
    /// Fields of `self` win; unset ones come from `lower`.
    fn overlay(self, lower: Self) -> Self;
    fn defaults() -> Self;
}

/// Implements [`Layered::overlay`] field by field.
#[macro_export]
macro_rules! overlay_fields {
    ($hi:ident, $lo:ident; $($f:ident),* $(,)?) => {
        Self { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Layered for Global {
    fn overlay(self, lower: Self) -> Self {
        let (hi, lo) = (self, lower);
        Global {
            out: hi.out.or(lo.out),
            config: hi.config.or(lo.config),
            seed: hi.seed.or(lo.seed),
            jobs: hi.jobs.or(lo.jobs),
        }
    }

    fn defaults() -> Self {
        Global {
            out: Some(PathBuf::from(".")),
            config: None,
            seed: Some(0),
            jobs: None,
        }
    }
}

/// The parsed `--config` file: global keys plus one table per subcommand.
#[derive(Debug, Default)]
struct ConfigFile {
    global: Global,
    sections: toml::Table,
}

fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| anyhow!("{}: {}", path.display(), e.message()))?;
    // Version tag written into provenance; informational only.
    table.remove("locomplex");
    let mut global = toml::Table::new();
    for key in ["out", "seed", "jobs"] {
        if let Some(v) = table.remove(key) {
            global.insert(key.into(), v);
        }
    }
    let global: Global = global
        .try_into()
        .map_err(|e: toml::de::Error| anyhow!("{}: {}", path.display(), e.message()))?;
    if let Some((key, _)) = table.iter().find(|(_, v)| !v.is_table()) {
        bail!("{}: unknown top-level key {key:?}", path.display());
    }
    Ok(ConfigFile { global, sections: table })
}

impl ConfigFile {
    fn section<T: Layered>(&self, name: &str) -> Result<T> {
        match self.sections.get(name) {
            None => Ok(T::default()),
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| anyhow!("config section [{name}]: {}", e.message())),
        }
    }
}

/// Resolved run context handed to every subcommand.
pub struct Run {
    pub command: &'static str,
    pub out: PathBuf,
    pub seed: u64,
    /// TOML text of the resolved settings, re-usable as a `--config` file.
    pub provenance: String,
}

impl Run {
    fn new<T: Layered>(command: &'static str, global: &Global, settings: &T) -> Result<Self> {
        let seed = global.seed.expect("defaulted");
        let mut doc = toml::Table::new();
        doc.insert("locomplex".into(), toml::Value::String(env!("CARGO_PKG_VERSION").into()));
        doc.insert("seed".into(), toml::Value::Integer(seed as i64));
        let body = toml::Table::try_from(settings).context("serializing settings")?;
        doc.insert(command.into(), toml::Value::Table(body));
        let provenance = toml::to_string(&doc).context("serializing settings")?;
        Ok(Run {
            command,
            out: global.out.clone().expect("defaulted"),
            seed,
            provenance,
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("cannot create output directory {}", self.out.display()))
    }

    fn commented(&self) -> String {
        self.provenance.lines().map(|l| format!("# {l}\n")).collect()
    }

    /// Writes every artifact only once all of them have been produced, so a
    /// failing run leaves no partial set behind.
    pub fn write_all(&self, artifacts: Vec<Artifact>) -> Result<Vec<PathBuf>> {
        let mut rendered = Vec::with_capacity(artifacts.len());
        for a in artifacts {
            let (file, bytes) = match a {
                Artifact::Csv(file, t) => {
                    let mut t = t;
                    let mut comments: Vec<String> = self.provenance.lines().map(str::to_string).collect();
                    comments.append(&mut t.comments);
                    t.comments = comments;
                    (file, t.to_csv().into_bytes())
                }
                Artifact::Svg(file, t, kind) => (file, plot::emit_svg(&t, &kind, &self.provenance)?.into_bytes()),
                Artifact::Toml(file, text) => (file, format!("{}{text}", self.commented()).into_bytes()),
            };
            rendered.push((self.path(&file), bytes));
        }
        self.ensure_out()?;
        for (path, bytes) in &rendered {
            write_atomic(path, bytes)?;
            log::info!("wrote {}", path.display());
        }
        Ok(rendered.into_iter().map(|(p, _)| p).collect())
    }

    /// Saves a dataset with the provenance stored in its metadata.
    pub fn save_dataset(&self, name: &str, mut ds: locomplex::Dataset) -> Result<PathBuf> {
        ds.metadata = ds.metadata.with("run_config", self.provenance.as_str());
        self.ensure_out()?;
        let base = self.path(name);
        locomplex::dataset::save(&ds, &base)?;
        Ok(locomplex::dataset::sibling(&base, "obs"))
    }
}

pub enum Artifact {
    Csv(String, Table),
    Svg(String, Table, PlotKind),
    Toml(String, String),
}

fn resolve<T: Layered>(flags: T, file: &ConfigFile, name: &str) -> Result<T> {
    Ok(flags.overlay(file.section(name)?).overlay(T::defaults()))
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = match &cli.global.config {
        Some(p) => read_config(p)?,
        None => ConfigFile::default(),
    };
    let global = cli.global.clone().overlay(file.global.clone()).overlay(Global::defaults());
    let name = cli.command.name();
    macro_rules! go {
        ($args:expr, $exec:path) => {{
            let settings = resolve($args, &file, name)?;
            let run = Run::new(name, &global, &settings)?;
            with_pool(global.jobs, || $exec(&settings, &run))
        }};
    }
    match cli.command {
        Command::GenGge(a) => go!(a, commands::gen_gge),
        Command::GenLindblad(a) => go!(a, commands::gen_lindblad),
        Command::GenCircuit(a) => go!(a, commands::gen_circuit),
        Command::Train(a) => go!(a, commands::train),
        Command::Sweep(a) => go!(a, commands::sweep),
        Command::IntrinsicDim(a) => go!(a, commands::intrinsic_dim),
        Command::Embed(a) => go!(a, commands::embed),
        Command::Correlate(a) => go!(a, commands::correlate),
        Command::Reconstruct(a) => go!(a, commands::reconstruct),
        Command::Report(a) => go!(a, commands::report),
    }
}

fn with_pool(jobs: Option<usize>, f: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    match jobs {
        None => f(),
        Some(0) => bail!("--jobs must be at least 1"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot start worker threads")?
            .install(f),
    }
}

/// Exit code for a failed run: 2 when the cause is numerical, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<locomplex::Error>())
        .any(|e| e.is_numerical());
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// Parses `argv` (program name first), runs the subcommand, and reports
/// errors on stderr as a single line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
