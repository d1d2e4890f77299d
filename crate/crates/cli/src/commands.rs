//! Subcommand settings and their pipelines.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use locomplex::analysis::{
    latent_observable_correlation, pca, tsne, twonn_id, two_slope_analysis, LatentDirection, MuWindow,
    TsneConfig,
};
use locomplex::autoencoder::{encode_dataset, latent_sweep, mean_baseline, train as train_network, AdamConfig};
use locomplex::circuit::{default_record_steps, CircuitConfig, GateSchedule};
use locomplex::dataset::{self, split, BathFamily, Dataset, GgeDatasetConfig, LindbladDatasetConfig};
use locomplex::reconstruct::{reconstruct as reconstruct_hamiltonian, EmbeddingMode, Precondition, ReconstructConfig};
use locomplex::{Checkpoint, NetworkConfig, PauliLabel, TrainConfig};

use crate::plot::{parse_axis, Axis, PlotKind};
use crate::table::Table;
use crate::{overlay_fields, Artifact, Layered, Run};

fn load_dataset(path: &Option<PathBuf>) -> Result<Dataset> {
    let path = path.as_ref().ok_or_else(|| anyhow!("missing --data <dataset.obs>"))?;
    if !dataset::sibling(path, "obs").exists() {
        bail!("dataset {} not found", path.display());
    }
    Ok(dataset::load(path)?)
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    if !path.exists() {
        bail!("checkpoint {} not found", path.display());
    }
    Ok(Checkpoint::load(path)?)
}

/// Latent vectors of `ds` under a checkpoint, or the raw rows without one.
fn points(ds: &Dataset, checkpoint: &Option<PathBuf>) -> Result<Array2<f64>> {
    match checkpoint {
        None => Ok(ds.rows().clone()),
        Some(p) => {
            let ck = load_checkpoint(p)?;
            if ck.network.input_dim != ds.n_cols() {
                bail!(
                    "checkpoint {} expects {} inputs, dataset has {} columns",
                    p.display(),
                    ck.network.input_dim,
                    ds.n_cols()
                );
            }
            Ok(encode_dataset(&ck.params()?, &ck.network, ds)?)
        }
    }
}

/// An auxiliary column, or the column of a Pauli label such as `zz`.
fn observable(ds: &Dataset, name: &str) -> Result<Vec<f64>> {
    if let Some(v) = ds.aux(name) {
        return Ok(v.to_vec());
    }
    let label = PauliLabel::parse(name)
        .and_then(|l| l.padded(ds.metadata.support))
        .map_err(|_| anyhow!("{name:?} is neither an auxiliary column nor a Pauli label"))?;
    ds.column(&label).ok_or_else(|| {
        let aux: Vec<&String> = ds.aux.keys().collect();
        anyhow!("dataset has no column {name:?} (auxiliary columns: {aux:?})")
    })
}

fn matrix_table(prefix: &str, m: &ArrayView2<f64>) -> Result<Table> {
    let columns = (0..m.ncols()).map(|k| format!("{prefix}{k}")).collect();
    Table::new(columns, m.rows().into_iter().map(|r| r.to_vec()).collect())
}

fn non_empty(name: &str, flag: &str) -> Result<()> {
    if name.is_empty() || name.contains(['/', '\\']) {
        bail!("--{flag} must be a plain file name, got {name:?}");
    }
    Ok(())
}

fn summary(lines: &[String]) {
    for l in lines {
        println!("{l}");
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenGge {
    /// Number of conserved charges with random multipliers (1 to 4).
    #[arg(long)]
    pub nc: Option<usize>,
    /// Number of samples.
    #[arg(long)]
    pub n: Option<usize>,
    /// Chain length.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub sites: Option<usize>,
    /// Observation support.
    #[arg(long)]
    pub support: Option<usize>,
    #[arg(long)]
    pub hx: Option<f64>,
    #[arg(long)]
    pub j: Option<f64>,
    /// Multipliers are uniform on `[-r, r] / J`.
    #[arg(long)]
    pub lambda_range: Option<f64>,
    /// Base name of the output files.
    #[arg(long)]
    pub name: Option<String>,
}

impl Layered for GenGge {
    fn overlay(self, lo: Self) -> Self {
        let hi = self;
        overlay_fields!(hi, lo; nc, n, sites, support, hx, j, lambda_range, name)
    }

    fn defaults() -> Self {
        let d = GgeDatasetConfig::default();
        GenGge {
            nc: Some(d.n_charges),
            n: Some(d.samples),
            sites: Some(d.sites),
            support: Some(d.support),
            hx: Some(d.h_x),
            j: Some(d.j),
            lambda_range: Some(d.lambda_range),
            name: Some("gge".into()),
        }
    }
}

pub fn gen_gge(s: &GenGge, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let cfg = GgeDatasetConfig {
        n_charges: s.nc.unwrap(),
        samples: s.n.unwrap(),
        sites: s.sites.unwrap(),
        support: s.support.unwrap(),
        j: s.j.unwrap(),
        h_x: s.hx.unwrap(),
        lambda_range: s.lambda_range.unwrap(),
        seed: run.seed,
    };
    let ds = locomplex::dataset::gge_dataset(&cfg)?;
    let path = run.save_dataset(&name, ds)?;
    summary(&[format!("wrote {}", path.display())]);
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenLindblad {
    /// Bath family: `rotated` or `structured`.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<BathFamily>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Chain length.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub sites: Option<usize>,
    #[arg(long)]
    pub support: Option<usize>,
    /// Coupling strength of the baths.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub j: Option<f64>,
    #[arg(long)]
    pub hx: Option<f64>,
    #[arg(long)]
    pub hz: Option<f64>,
    #[arg(long)]
    pub name: Option<String>,
}

fn parse_family(s: &str) -> Result<BathFamily, String> {
    match s {
        "rotated" => Ok(BathFamily::Rotated),
        "structured" => Ok(BathFamily::Structured),
        _ => Err(format!("unknown bath family {s:?} (rotated or structured)")),
    }
}

impl Layered for GenLindblad {
    fn overlay(self, lo: Self) -> Self {
        let hi = self;
        overlay_fields!(hi, lo; family, n, sites, support, epsilon, j, hx, hz, name)
    }

    fn defaults() -> Self {
        let d = LindbladDatasetConfig::default();
        GenLindblad {
            family: Some(d.family),
            n: Some(d.samples),
            sites: Some(d.sites),
            support: Some(d.support),
            epsilon: Some(d.epsilon),
            j: Some(d.j),
            hx: Some(d.h_x),
            hz: Some(d.h_z),
            name: Some("lindblad".into()),
        }
    }
}

pub fn gen_lindblad(s: &GenLindblad, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let cfg = LindbladDatasetConfig {
        family: s.family.unwrap(),
        samples: s.n.unwrap(),
        sites: s.sites.unwrap(),
        support: s.support.unwrap(),
        epsilon: s.epsilon.unwrap(),
        j: s.j.unwrap(),
        h_x: s.hx.unwrap(),
        h_z: s.hz.unwrap(),
        seed: run.seed,
    };
    let ds = locomplex::dataset::lindblad_dataset(&cfg)?;
    let path = run.save_dataset(&name, ds)?;
    summary(&[format!("wrote {}", path.display())]);
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenCircuit {
    /// Chain length.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub sites: Option<usize>,
    #[arg(long)]
    pub support: Option<usize>,
    /// Number of random initial product states.
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Last recorded brickwork step.
    #[arg(long)]
    pub max_step: Option<usize>,
    /// Logarithmically spaced records per decade beyond `t = 1`.
    #[arg(long)]
    pub per_decade: Option<usize>,
    /// Explicit recorded steps, overriding `--max-step`.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    /// `fresh-per-sublayer` or `shared-per-step`.
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: Option<GateSchedule>,
    #[arg(long)]
    pub name: Option<String>,
}

fn parse_schedule(s: &str) -> Result<GateSchedule, String> {
    match s {
        "fresh-per-sublayer" => Ok(GateSchedule::FreshPerSublayer),
        "shared-per-step" => Ok(GateSchedule::SharedPerStep),
        _ => Err(format!("unknown schedule {s:?} (fresh-per-sublayer or shared-per-step)")),
    }
}

impl Layered for GenCircuit {
    fn overlay(self, lo: Self) -> Self {
        let hi = self;
        overlay_fields!(hi, lo; sites, support, trajectories, max_step, per_decade, steps, schedule, name)
    }

    fn defaults() -> Self {
        let d = CircuitConfig::default();
        GenCircuit {
            sites: Some(d.sites),
            support: Some(d.support),
            trajectories: Some(500),
            max_step: Some(200),
            per_decade: Some(5),
            steps: None,
            schedule: Some(d.schedule),
            name: Some("circuit".into()),
        }
    }
}

pub fn gen_circuit(s: &GenCircuit, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let steps = match &s.steps {
        Some(v) if v.is_empty() => bail!("--steps is empty"),
        Some(v) => v.clone(),
        None => default_record_steps(s.max_step.unwrap(), s.per_decade.unwrap()),
    };
    let cfg = CircuitConfig {
        sites: s.sites.unwrap(),
        support: s.support.unwrap(),
        schedule: s.schedule.unwrap(),
    };
    let sets = locomplex::dataset::circuit_datasets(&cfg, s.trajectories.unwrap(), &steps, run.seed)?;
    let index = Table::new(
        vec!["step".into(), "time".into()],
        steps
            .iter()
            .map(|&k| vec![k as f64, k as f64 * locomplex::circuit::DEFAULT_DT])
            .collect(),
    )?
    .with_comments(&format!("datasets: {name}_t<step>.obs"));
    let mut lines = Vec::new();
    for (ds, step) in sets.into_iter().zip(&steps) {
        lines.push(format!("wrote {}", run.save_dataset(&format!("{name}_t{step}"), ds)?.display()));
    }
    run.write_all(vec![Artifact::Csv(format!("{name}_steps.csv"), index)])?;
    summary(&lines);
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainOptions {
    /// Hidden layer width (two encoder and two decoder layers).
    #[arg(long)]
    pub width: Option<usize>,
    /// Adam steps.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Fraction of rows used for training; the rest is the test set.
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

impl TrainOptions {
    fn overlay(self, lo: Self) -> Self {
        let hi = self;
        overlay_fields!(hi, lo; width, steps, batch, lr, eval_every, train_fraction)
    }

    fn defaults() -> Self {
        let d = TrainConfig::default();
        TrainOptions {
            width: Some(200),
            steps: Some(d.steps),
            batch: Some(d.batch_size),
            lr: Some(d.adam.lr),
            eval_every: Some(d.eval_every),
            train_fraction: Some(0.8),
        }
    }

    fn config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch.unwrap(),
            steps: self.steps.unwrap(),
            eval_every: self.eval_every.unwrap(),
            adam: AdamConfig {
                lr: self.lr.unwrap(),
                ..AdamConfig::default()
            },
        }
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainCmd {
    /// Dataset (`.obs`, with its `.meta` alongside).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Number of latent variables.
    #[arg(long)]
    pub nl: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOptions,
    #[arg(long)]
    pub name: Option<String>,
}

impl Layered for TrainCmd {
    fn overlay(self, lo: Self) -> Self {
        TrainCmd {
            data: self.data.or(lo.data),
            nl: self.nl.or(lo.nl),
            train: self.train.overlay(lo.train),
            name: self.name.or(lo.name),
        }
    }

    fn defaults() -> Self {
        TrainCmd {
            data: None,
            nl: Some(1),
            train: TrainOptions::defaults(),
            name: Some("train".into()),
        }
    }
}

fn checkpoint_text(report: &locomplex::TrainReport) -> Result<String> {
    Ok(Checkpoint::from_report(report).to_toml()?)
}

pub fn train(s: &TrainCmd, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let ds = load_dataset(&s.data)?;
    let ds = split(ds, s.train.train_fraction.unwrap(), run.seed)?;
    let net = NetworkConfig::new(ds.n_cols(), s.train.width.unwrap(), s.nl.unwrap());
    let report = train_network(&ds, &net, &s.train.config(), run.seed)?;
    let baseline = mean_baseline(&ds.train_rows()?.view(), &ds.test_rows()?.view())?;

    let history = Table::new(
        vec!["step".into(), "train_loss".into(), "test_loss".into()],
        report
            .evaluations
            .iter()
            .map(|e| vec![e.step as f64, e.train_loss, e.test_loss])
            .collect(),
    )?;
    let latents = encode_dataset(&report.best_params, &net, &ds)?;
    let mut lat = matrix_table("z", &latents.view())?;
    for (key, values) in &ds.aux {
        lat.columns.push(key.clone());
        for (row, v) in lat.rows.iter_mut().zip(values) {
            row.push(*v);
        }
    }
    let kind = PlotKind::Line {
        x: Axis::linear("step"),
        y: Axis::log("test_loss"),
        group: None,
    };
    run.write_all(vec![
        Artifact::Toml(format!("{name}.toml"), checkpoint_text(&report)?),
        Artifact::Csv(format!("{name}_history.csv"), history.clone()),
        Artifact::Csv(format!("{name}_latents.csv"), lat),
        Artifact::Svg(format!("{name}_history.svg"), history, kind),
    ])?;
    summary(&[
        format!("best test loss {:.6e} at step {}", report.best_test_loss, report.best_step),
        format!("mean baseline {baseline:.6e}"),
        format!("checkpoint {}", run.path(&format!("{name}.toml")).display()),
    ]);
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Sweep {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Latent widths; 0 is the mean baseline.
    #[arg(long, value_delimiter = ',')]
    pub nl: Option<Vec<usize>>,
    /// Independent trainings per width, seeded from the master seed.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOptions,
    /// Also write one checkpoint per training.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub checkpoints: Option<bool>,
    #[arg(long)]
    pub name: Option<String>,
}

impl Layered for Sweep {
    fn overlay(self, lo: Self) -> Self {
        Sweep {
            data: self.data.or(lo.data),
            nl: self.nl.or(lo.nl),
            seeds: self.seeds.or(lo.seeds),
            train: self.train.overlay(lo.train),
            checkpoints: self.checkpoints.or(lo.checkpoints),
            name: self.name.or(lo.name),
        }
    }

    fn defaults() -> Self {
        Sweep {
            data: None,
            nl: Some(vec![0, 1, 2, 3, 4]),
            seeds: Some(3),
            train: TrainOptions::defaults(),
            checkpoints: Some(false),
            name: Some("sweep".into()),
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn sweep(s: &Sweep, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let widths = s.nl.clone().unwrap();
    if widths.is_empty() {
        bail!("--nl is empty");
    }
    let seeds = s.seeds.unwrap();
    if seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let ds = load_dataset(&s.data)?;
    let ds = split(ds, s.train.train_fraction.unwrap(), run.seed)?;
    let template = NetworkConfig::new(ds.n_cols(), s.train.width.unwrap(), 1);
    let cfg = s.train.config();
    let time = ds.metadata.parameters.get("time").and_then(|v| v.as_float());

    let mut points = Vec::new();
    for k in 0..seeds as u64 {
        points.extend(latent_sweep(&ds, &widths, &template, &cfg, run.seed.wrapping_add(k))?);
    }
    let mut runs = Vec::new();
    let mut artifacts = Vec::new();
    for p in &points {
        let step = p.report.as_ref().map_or(0.0, |r| r.best_step as f64);
        runs.push(vec![p.latent_dim as f64, p.seed as f64, p.best_test_loss, step]);
        if let (true, Some(r)) = (s.checkpoints.unwrap(), &p.report) {
            artifacts.push(Artifact::Toml(
                format!("{name}_nl{}_s{}.toml", p.latent_dim, p.seed),
                checkpoint_text(r)?,
            ));
        }
    }
    let mut columns: Vec<String> = ["n_latent", "best_test_loss", "min_test_loss", "max_test_loss"]
        .map(String::from)
        .to_vec();
    if time.is_some() {
        columns.push("time".into());
    }
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for &nl in &widths {
        let mut losses: Vec<f64> = points
            .iter()
            .filter(|p| p.latent_dim == nl)
            .map(|p| p.best_test_loss)
            .collect();
        let med = median(&mut losses);
        let mut row = vec![nl as f64, med, losses[0], *losses.last().unwrap()];
        row.extend(time);
        rows.push(row);
        lines.push(format!("N_L = {nl}: median best test loss {med:.6e}"));
    }
    let table = Table::new(columns, rows)?;
    let runs = Table::new(
        ["n_latent", "seed", "best_test_loss", "best_step"].map(String::from).to_vec(),
        runs,
    )?;
    let kind = PlotKind::Line {
        x: Axis::linear("n_latent"),
        y: Axis::log("best_test_loss"),
        group: None,
    };
    artifacts.push(Artifact::Csv(format!("{name}.csv"), table.clone()));
    artifacts.push(Artifact::Csv(format!("{name}_runs.csv"), runs));
    artifacts.push(Artifact::Svg(format!("{name}.svg"), table, kind));
    run.write_all(artifacts)?;
    summary(&lines);
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct IntrinsicDim {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Analyse the latent vectors of this checkpoint instead of the rows.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Ratio windows `lo:hi` for windowed slopes, e.g. `1:1.5,2:inf`.
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<String>>,
    #[arg(long)]
    pub name: Option<String>,
}

impl Layered for IntrinsicDim {
    fn overlay(self, lo: Self) -> Self {
        let hi = self;
        overlay_fields!(hi, lo; data, checkpoint, windows, name)
    }

    fn defaults() -> Self {
        IntrinsicDim {
            name: Some("intrinsic_dim".into()),
            ..Default::default()
        }
    }
}

fn parse_window(spec: &str) -> Result<MuWindow> {
    let (lo, hi) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("window {spec:?} is not of the form lo:hi"))?;
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| anyhow!("window bound {s:?} is not a number"))
    };
    Ok(MuWindow::new(parse(lo)?, parse(hi)?))
}

pub fn intrinsic_dim(s: &IntrinsicDim, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let windows = s
        .windows
        .iter()
        .flatten()
        .map(|w| parse_window(w))
        .collect::<Result<Vec<_>>>()?;
    let ds = load_dataset(&s.data)?;
    let pts = points(&ds, &s.checkpoint)?;
    let est = twonn_id(&pts.view())?;
    let n = est.n_points as f64;
    let curve = Table::new(
        vec!["ln_mu".into(), "neg_ln_survival".into()],
        est.mu
            .iter()
            .enumerate()
            .map(|(i, m)| vec![m.ln(), -(1.0 - (i + 1) as f64 / n).ln()])
            .collect(),
    )?;
    let result = Table::new(
        vec!["dimension".into(), "residual".into(), "n_points".into()],
        vec![vec![est.dimension, est.residual, n]],
    )?;
    let mut lines = vec![format!("intrinsic dimension {:.4} (rms residual {:.3e})", est.dimension, est.residual)];
    let kind = PlotKind::Line {
        x: Axis::linear("ln_mu"),
        y: Axis::linear("neg_ln_survival"),
        group: None,
    };
    let mut artifacts = vec![
        Artifact::Csv(format!("{name}.csv"), result),
        Artifact::Csv(format!("{name}_curve.csv"), curve.clone()),
        Artifact::Svg(format!("{name}_curve.svg"), curve, kind),
    ];
    if !windows.is_empty() {
        let slopes = two_slope_analysis(&pts.view(), &windows)?;
        let mut rows = Vec::new();
        for w in &slopes {
            lines.push(format!(
                "window [{}, {}): slope {:.4}, dimension {:.4} from {} ratios",
                w.window.lo, w.window.hi, w.slope, w.dimension, w.n_points
            ));
            rows.push(vec![w.window.lo, w.window.hi, w.slope, w.dimension, w.n_points as f64]);
        }
        let cols = ["lo", "hi", "slope", "dimension", "n_points"].map(String::from).to_vec();
        artifacts.push(Artifact::Csv(format!("{name}_windows.csv"), Table::new(cols, rows)?));
    }
    run.write_all(artifacts)?;
    summary(&lines);
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Embed {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Embed the latent vectors of this checkpoint instead of the rows.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `tsne` or `pca`.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Auxiliary column or Pauli label used for the point colors.
    #[arg(long)]
    pub color: Option<String>,
    #[arg(long)]
    pub name: Option<String>,
}

impl Layered for Embed {
    fn overlay(self, lo: Self) -> Self {
        let hi = self;
        overlay_fields!(hi, lo; data, checkpoint, method, perplexity, iterations, color, name)
    }

    fn defaults() -> Self {
        let t = TsneConfig::default();
        Embed {
            data: None,
            checkpoint: None,
            method: Some("tsne".into()),
            perplexity: Some(t.perplexity),
            iterations: Some(t.iterations),
            color: Some("energy_density".into()),
            name: Some("embed".into()),
        }
    }
}

pub fn embed(s: &Embed, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let method = s.method.clone().unwrap();
    if method != "tsne" && method != "pca" {
        bail!("unknown --method {method:?} (tsne or pca)");
    }
    let ds = load_dataset(&s.data)?;
    let color_name = s.color.clone().unwrap();
    let color = observable(&ds, &color_name)?;
    let pts = points(&ds, &s.checkpoint)?;
    let xy: Array2<f64> = if method == "tsne" {
        let cfg = TsneConfig {
            perplexity: s.perplexity.unwrap(),
            iterations: s.iterations.unwrap(),
            seed: run.seed,
            ..TsneConfig::default()
        };
        let e = tsne(&pts.view(), &cfg)?;
        println!("final KL divergence {:.6}", e.final_kl());
        e.points
    } else {
        let p = pca(&pts.view())?;
        let scores = p.transform(&pts.view());
        Array2::from_shape_fn((pts.nrows(), 2), |(i, k)| if k < scores.ncols() { scores[[i, k]] } else { 0.0 })
    };
    let rows = (0..xy.nrows()).map(|i| vec![xy[[i, 0]], xy[[i, 1]], color[i]]).collect();
    let table = Table::new(vec!["x".into(), "y".into(), color_name.clone()], rows)?;
    let kind = PlotKind::Scatter {
        x: Axis::linear("x"),
        y: Axis::linear("y"),
        color: color_name,
    };
    let paths = run.write_all(vec![
        Artifact::Csv(format!("{name}.csv"), table.clone()),
        Artifact::Svg(format!("{name}.svg"), table, kind),
    ])?;
    summary(&paths.iter().map(|p| format!("wrote {}", p.display())).collect::<Vec<_>>());
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Correlate {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Auxiliary column or Pauli label.
    #[arg(long)]
    pub observable: Option<String>,
    /// `pc:<k>` for the k-th principal direction (0 = largest) or
    /// `coord:<k>` for a raw latent coordinate.
    #[arg(long)]
    pub direction: Option<String>,
    #[arg(long)]
    pub name: Option<String>,
}

impl Layered for Correlate {
    fn overlay(self, lo: Self) -> Self {
        let hi = self;
        overlay_fields!(hi, lo; data, checkpoint, observable, direction, name)
    }

    fn defaults() -> Self {
        Correlate {
            data: None,
            checkpoint: None,
            observable: Some("energy_density".into()),
            direction: Some("pc:0".into()),
            name: Some("correlate".into()),
        }
    }
}

fn parse_direction(spec: &str) -> Result<LatentDirection> {
    let (kind, k) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("direction {spec:?} is not pc:<k> or coord:<k>"))?;
    let k: usize = k.parse().map_err(|_| anyhow!("direction index {k:?} is not an integer"))?;
    match kind {
        "pc" => Ok(LatentDirection::Principal(k)),
        "coord" => Ok(LatentDirection::Coordinate(k)),
        _ => bail!("direction {spec:?} is not pc:<k> or coord:<k>"),
    }
}

pub fn correlate(s: &Correlate, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let direction = parse_direction(&s.direction.clone().unwrap())?;
    let checkpoint = s.checkpoint.clone().ok_or_else(|| anyhow!("missing --checkpoint"))?;
    let ds = load_dataset(&s.data)?;
    let obs_name = s.observable.clone().unwrap();
    let values = observable(&ds, &obs_name)?;
    let latents = points(&ds, &Some(checkpoint))?;
    let c = latent_observable_correlation(&latents.view(), &values, direction)?;
    let projection = locomplex::analysis::latent_projection(&latents.view(), direction)?;
    let result = Table::new(
        ["spearman", "monotone", "tie_fraction"].map(String::from).to_vec(),
        vec![vec![c.spearman, c.monotone as u8 as f64, c.tie_fraction]],
    )?;
    let scatter = Table::new(
        vec!["latent".into(), obs_name.clone()],
        projection.iter().zip(&values).map(|(a, b)| vec![*a, *b]).collect(),
    )?;
    let kind = PlotKind::Scatter {
        x: Axis::linear("latent"),
        y: Axis::linear(&obs_name),
        color: obs_name.clone(),
    };
    run.write_all(vec![
        Artifact::Csv(format!("{name}.csv"), result),
        Artifact::Csv(format!("{name}_points.csv"), scatter.clone()),
        Artifact::Svg(format!("{name}.svg"), scatter, kind),
    ])?;
    let mut lines = vec![format!("spearman {:.6} monotone {}", c.spearman, c.monotone)];
    if c.degenerate_ties {
        lines.push(format!("warning: {:.0}% of rows are tied", 100.0 * c.tie_fraction));
    }
    summary(&lines);
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Reconstruct {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Checkpoint of the one-latent network.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `sweep.csv` whose N_L = 0 and N_L = 1 rows show that one latent
    /// variable describes the data.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    /// Skip the one-parameter check.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub force: Option<bool>,
    /// `tangent` (local neighbourhood direction) or `pca1` (global).
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<EmbeddingMode>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// Number of top-ranked operators fitted.
    #[arg(long)]
    pub top: Option<usize>,
    /// Chain length of the thermal oracle.
    #[arg(long)]
    pub oracle_sites: Option<usize>,
    /// Rows solved, spread over the dataset; 0 solves all.
    #[arg(long)]
    pub max_rows: Option<usize>,
    #[arg(long)]
    pub name: Option<String>,
}

fn parse_mode(s: &str) -> Result<EmbeddingMode, String> {
    match s {
        "tangent" => Ok(EmbeddingMode::Tangent),
        "pca1" => Ok(EmbeddingMode::Pca1),
        _ => Err(format!("unknown mode {s:?} (tangent or pca1)")),
    }
}

impl Layered for Reconstruct {
    fn overlay(self, lo: Self) -> Self {
        let hi = self;
        overlay_fields!(hi, lo; data, checkpoint, sweep, force, mode, neighbors, top, oracle_sites, max_rows, name)
    }

    fn defaults() -> Self {
        let d = ReconstructConfig::default();
        Reconstruct {
            force: Some(false),
            mode: Some(d.mode),
            neighbors: Some(d.neighbors),
            top: Some(d.top_candidates),
            oracle_sites: Some(d.oracle_sites),
            max_rows: Some(d.max_rows),
            name: Some("reconstruct".into()),
            ..Default::default()
        }
    }
}

fn sweep_evidence(path: &Path) -> Result<Precondition> {
    let t = Table::load(path)?;
    let (nl, loss) = (t.column("n_latent")?, t.column("best_test_loss")?);
    let find = |k: f64| {
        nl.iter()
            .position(|&v| v == k)
            .map(|i| loss[i])
            .ok_or_else(|| anyhow!("{} has no N_L = {k} row", path.display()))
    };
    Ok(Precondition::SweepEvidence {
        loss_nl0: find(0.0)?,
        loss_nl1: find(1.0)?,
    })
}

pub fn reconstruct(s: &Reconstruct, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let precondition = match (s.force.unwrap(), &s.sweep) {
        (true, _) => Precondition::Override,
        (false, Some(p)) => sweep_evidence(p)?,
        (false, None) => bail!("give --sweep <sweep.csv> as evidence for one latent variable, or --force"),
    };
    let checkpoint = s.checkpoint.clone().ok_or_else(|| anyhow!("missing --checkpoint"))?;
    let ds = load_dataset(&s.data)?;
    let latents = points(&ds, &Some(checkpoint))?;
    let cfg = ReconstructConfig {
        mode: s.mode.unwrap(),
        neighbors: s.neighbors.unwrap(),
        top_candidates: s.top.unwrap(),
        oracle_sites: s.oracle_sites.unwrap(),
        max_rows: s.max_rows.unwrap(),
        ..ReconstructConfig::default()
    };
    let report = reconstruct_hamiltonian(&ds, &latents.view(), &precondition, &cfg).context("reconstruction")?;
    let text = toml::to_string(&report).context("serializing the reconstruction report")?;
    let ranking = Table::new(
        vec!["rank".into(), "score".into()],
        report
            .ranking
            .scores
            .iter()
            .enumerate()
            .map(|(i, (_, v))| vec![(i + 1) as f64, *v])
            .collect(),
    )?
    .with_comments(&format!(
        "labels by rank: {}",
        report.ranking.scores.iter().map(|(l, _)| l.to_string()).collect::<Vec<_>>().join(" ")
    ));
    run.write_all(vec![
        Artifact::Toml(format!("{name}.toml"), text),
        Artifact::Csv(format!("{name}_ranking.csv"), ranking),
    ])?;
    let mut lines = vec![format!(
        "candidates {}; {} of {} solved rows converged",
        report.candidates.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "),
        report.converged,
        report.rows.len()
    )];
    for c in &report.coefficients {
        lines.push(format!("a_{}/a_{} = {:.6} (spread {:.2e})", c.label, report.reference, c.ratio, c.spread));
    }
    if !report.eliminated.is_empty() {
        lines.push(format!(
            "eliminated {}",
            report.eliminated.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
        ));
    }
    summary(&lines);
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Report {
    /// CSV tables; rows of several inputs are concatenated with a `source`
    /// column holding the input index.
    #[arg(long, num_args = 1..)]
    pub input: Option<Vec<PathBuf>>,
    /// `line`, `scatter`, or `heatmap`.
    #[arg(long)]
    pub kind: Option<String>,
    /// Axis column, `name` or `name:log`.
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    /// Line plots: column splitting the rows into series.
    #[arg(long)]
    pub group: Option<String>,
    /// Scatter plots: color column. Heatmaps: cell value, `name` or `name:log`.
    #[arg(long)]
    pub value: Option<String>,
    #[arg(long)]
    pub name: Option<String>,
}

impl Layered for Report {
    fn overlay(self, lo: Self) -> Self {
        let hi = self;
        overlay_fields!(hi, lo; input, kind, x, y, group, value, name)
    }

    fn defaults() -> Self {
        Report {
            kind: Some("line".into()),
            name: Some("report".into()),
            ..Default::default()
        }
    }
}

fn concatenate(paths: &[PathBuf]) -> Result<Table> {
    let tables = paths.iter().map(|p| Table::load(p)).collect::<Result<Vec<_>>>()?;
    if tables.len() == 1 {
        return Ok(tables.into_iter().next().unwrap());
    }
    let columns = tables[0].columns.clone();
    let mut rows = Vec::new();
    for (k, (t, p)) in tables.iter().zip(paths).enumerate() {
        if t.columns != columns {
            bail!(
                "{} has columns {:?}, expected {:?} as in {}",
                p.display(),
                t.columns,
                columns,
                paths[0].display()
            );
        }
        rows.extend(t.rows.iter().map(|r| {
            let mut r = r.clone();
            r.push(k as f64);
            r
        }));
    }
    let mut columns = columns;
    columns.push("source".into());
    Table::new(columns, rows)
}

pub fn report(s: &Report, run: &Run) -> Result<()> {
    let name = s.name.clone().unwrap();
    non_empty(&name, "name")?;
    let inputs = s.input.clone().unwrap_or_default();
    if inputs.is_empty() {
        bail!("missing --input <table.csv>...");
    }
    let need = |v: &Option<String>, flag: &str| v.clone().ok_or_else(|| anyhow!("missing --{flag}"));
    let kind = match s.kind.clone().unwrap().as_str() {
        "line" => PlotKind::Line {
            x: parse_axis(&need(&s.x, "x")?)?,
            y: parse_axis(&need(&s.y, "y")?)?,
            group: s.group.clone().or_else(|| (inputs.len() > 1).then(|| "source".to_string())),
        },
        "scatter" => PlotKind::Scatter {
            x: parse_axis(&need(&s.x, "x")?)?,
            y: parse_axis(&need(&s.y, "y")?)?,
            color: need(&s.value, "value")?,
        },
        "heatmap" => PlotKind::Heatmap {
            x: need(&s.x, "x")?,
            y: need(&s.y, "y")?,
            value: parse_axis(&need(&s.value, "value")?)?,
        },
        other => bail!("unknown --kind {other:?} (line, scatter or heatmap)"),
    };
    let table = concatenate(&inputs)?;
    let paths = run.write_all(vec![Artifact::Svg(format!("{name}.svg"), table, kind)])?;
    summary(&[format!("wrote {}", paths[0].display())]);
    Ok(())
}
