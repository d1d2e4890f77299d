//! Observation datasets: generation from the physics engines, train/test
//! splits, and the on-disk `.obs` / `.meta` / `.split` triple.
//!
//! * `<name>.obs` holds one header line of comma-separated Pauli labels,
//!   then one comma-separated row per sample with every value written as
//!   `{:.16e}` (17 significant digits, exact round trip).
//! * `<name>.meta` is TOML with a `[metadata]` table and an `[aux]` table of
//!   per-row auxiliary columns (energies, Lagrange multipliers, ...).
//! * `<name>.split` has two lines, `train: i j k ...` and `test: ...`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{run_ensemble, CircuitConfig};
use crate::error::{Error, Result};
use crate::gge::{observe, GibbsSpectrum, LagrangeVector, ObservationVector};
use crate::lindblad::{build_liouvillian, random_rotated_dissipators, random_structured_dissipators, steady_state};
use crate::pauli::{enumerate_support_strings, ising_charge, ising_hamiltonian, PauliLabel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub format_version: u32,
    /// `gge`, `lindblad`, `circuit`, or `synthetic`.
    pub source: String,
    pub sites: usize,
    pub support: usize,
    /// Kept as a string: TOML integers are signed 64-bit.
    pub seed: String,
    pub created_unix: i64,
    #[serde(default)]
    pub parameters: BTreeMap<String, toml::Value>,
}

impl Metadata {
    pub fn new(source: &str, sites: usize, support: usize, seed: u64) -> Self {
        Metadata {
            format_version: FORMAT_VERSION,
            source: source.to_string(),
            sites,
            support,
            seed: seed.to_string(),
            created_unix: creation_time(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<toml::Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .parse()
            .map_err(|_| Error::arg(format!("seed {:?} is not an unsigned integer", self.seed)))
    }
}

/// `SOURCE_DATE_EPOCH` when set, for reproducible artifacts.
fn creation_time() -> i64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    labels: Vec<PauliLabel>,
    rows: Array2<f64>,
    pub metadata: Metadata,
    /// Per-row side information, not used for training.
    pub aux: BTreeMap<String, Vec<f64>>,
    pub split: Option<Split>,
}

impl Dataset {
    pub fn new(labels: Vec<PauliLabel>, rows: Array2<f64>, metadata: Metadata) -> Result<Self> {
        if rows.ncols() != labels.len() {
            return Err(Error::arg(format!("{} labels for {} columns", labels.len(), rows.ncols())));
        }
        if let Some(((r, c), v)) = rows.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite value {v} at row {r}, column {c}")));
        }
        Ok(Dataset {
            labels,
            rows,
            metadata,
            aux: BTreeMap::new(),
            split: None,
        })
    }

    /// Stacks observation vectors that share one support.
    pub fn from_observations(obs: &[ObservationVector], metadata: Metadata) -> Result<Self> {
        let first = obs.first().ok_or_else(|| Error::arg("no observations"))?;
        let support = first.support;
        let width = first.values.len();
        if let Some(i) = obs.iter().position(|o| o.support != support || o.values.len() != width) {
            return Err(Error::arg(format!("row {i} has a different support")));
        }
        let rows = Array2::from_shape_fn((obs.len(), width), |(i, j)| obs[i].values[j]);
        Dataset::new(enumerate_support_strings(support)?, rows, metadata)
    }

    pub fn with_aux(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.n_rows() {
            return Err(Error::arg(format!("aux column {name} has {} entries for {} rows", values.len(), self.n_rows())));
        }
        self.aux.insert(name.to_string(), values);
        Ok(self)
    }

    pub fn labels(&self) -> &[PauliLabel] {
        &self.labels
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, i: usize) -> Result<ObservationVector> {
        ObservationVector::new(self.rows.row(i).to_vec(), self.metadata.support)
    }

    pub fn column(&self, label: &PauliLabel) -> Option<Vec<f64>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.rows.column(j).to_vec())
    }

    pub fn aux(&self, name: &str) -> Option<&[f64]> {
        self.aux.get(name).map(|v| v.as_slice())
    }

    pub fn select(&self, indices: &[usize]) -> Array2<f64> {
        self.rows.select(Axis(0), indices)
    }

    pub fn train_rows(&self) -> Result<Array2<f64>> {
        let s = self.split.as_ref().ok_or_else(|| Error::arg("dataset has no split"))?;
        Ok(self.select(&s.train))
    }

    pub fn test_rows(&self) -> Result<Array2<f64>> {
        let s = self.split.as_ref().ok_or_else(|| Error::arg("dataset has no split"))?;
        Ok(self.select(&s.test))
    }
}

/// Uniformly random disjoint train/test split of all rows.
pub fn split(mut ds: Dataset, train_fraction: f64, seed: u64) -> Result<Dataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::arg(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let n = ds.n_rows();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::arg(format!("split of {n} rows at {train_fraction} leaves one side empty")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    ds.split = Some(Split { train, test });
    ds.metadata.parameters.insert("split_seed".into(), seed.to_string().into());
    ds.metadata.parameters.insert("train_fraction".into(), train_fraction.into());
    Ok(ds)
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// `base` with any `.obs` / `.meta` / `.split` extension replaced by `ext`.
pub fn sibling(base: &Path, ext: &str) -> PathBuf {
    let stem = match base.extension().and_then(|e| e.to_str()) {
        Some("obs" | "meta" | "split") => base.with_extension(""),
        _ => base.to_path_buf(),
    };
    let mut s = stem.into_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    metadata: Metadata,
    #[serde(default)]
    aux: BTreeMap<String, Vec<f64>>,
}

pub fn save(ds: &Dataset, base: &Path) -> Result<()> {
    let mut obs = String::new();
    let header: Vec<String> = ds.labels.iter().map(|l| l.to_string()).collect();
    obs.push_str(&header.join(","));
    obs.push('\n');
    for row in ds.rows.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                obs.push(',');
            }
            write!(obs, "{v:.16e}").unwrap();
        }
        obs.push('\n');
    }
    write_atomic(&sibling(base, "obs"), obs.as_bytes())?;

    let meta = MetaFile {
        metadata: ds.metadata.clone(),
        aux: ds.aux.clone(),
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Internal(format!("metadata serialization: {e}")))?;
    write_atomic(&sibling(base, "meta"), text.as_bytes())?;

    let split_path = sibling(base, "split");
    if let Some(s) = &ds.split {
        let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        let text = format!("train: {}\ntest: {}\n", join(&s.train), join(&s.test));
        write_atomic(&split_path, text.as_bytes())?;
    } else if split_path.exists() {
        fs::remove_file(&split_path).map_err(|e| Error::io(&split_path, e))?;
    }
    Ok(())
}

fn parse_err(path: &Path, line: usize, column: Option<usize>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load(base: &Path) -> Result<Dataset> {
    let obs_path = sibling(base, "obs");
    let text = read(&obs_path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(&obs_path, 1, None, "empty file"))?;
    let labels = header
        .split(',')
        .enumerate()
        .map(|(c, s)| PauliLabel::parse(s.trim()).map_err(|e| parse_err(&obs_path, 1, Some(c + 1), e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let width = labels.len();
    let mut values = Vec::new();
    let mut n_rows = 0;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(parse_err(
                &obs_path,
                i + 1,
                None,
                format!("row has {} values, header has {width}", fields.len()),
            ));
        }
        for (c, f) in fields.iter().enumerate() {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| parse_err(&obs_path, i + 1, Some(c + 1), format!("not a number: {f:?}")))?;
            values.push(v);
        }
        n_rows += 1;
    }
    let rows = Array2::from_shape_vec((n_rows, width), values).expect("row lengths checked");

    let meta_path = sibling(base, "meta");
    let meta: MetaFile = toml::from_str(&read(&meta_path)?).map_err(|e| {
        let line = e
            .span()
            .map(|s| read(&meta_path).map(|t| t[..s.start].matches('\n').count() + 1).unwrap_or(0))
            .unwrap_or(0);
        parse_err(&meta_path, line, None, e.message().to_string())
    })?;
    let mut ds = Dataset::new(labels, rows, meta.metadata).map_err(|e| parse_err(&obs_path, 0, None, e.to_string()))?;
    for (k, v) in meta.aux {
        ds = ds.with_aux(&k, v).map_err(|e| parse_err(&meta_path, 0, None, e.to_string()))?;
    }

    let split_path = sibling(base, "split");
    if split_path.exists() {
        let text = read(&split_path)?;
        let mut parts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| parse_err(&split_path, i + 1, None, "expected `train:` or `test:`"))?;
            let idx = rest
                .split_whitespace()
                .enumerate()
                .map(|(c, t)| {
                    t.parse::<usize>()
                        .ok()
                        .filter(|&x| x < ds.n_rows())
                        .ok_or_else(|| parse_err(&split_path, i + 1, Some(c + 1), format!("bad row index {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            parts.insert(key.trim(), idx);
        }
        let train = parts.remove("train").ok_or_else(|| parse_err(&split_path, 1, None, "missing train line"))?;
        let test = parts.remove("test").ok_or_else(|| parse_err(&split_path, 2, None, "missing test line"))?;
        let mut seen = vec![false; ds.n_rows()];
        for &i in train.iter().chain(&test) {
            if std::mem::replace(&mut seen[i], true) {
                return Err(parse_err(&split_path, 0, None, format!("row {i} listed twice")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(parse_err(&split_path, 0, None, "split does not cover every row"));
        }
        ds.split = Some(Split { train, test });
    }
    Ok(ds)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GgeDatasetConfig {
    pub n_charges: usize,
    pub samples: usize,
    pub sites: usize,
    pub support: usize,
    pub j: f64,
    pub h_x: f64,
    /// Each multiplier is uniform on `[-lambda_range, lambda_range] / J`.
    pub lambda_range: f64,
    pub seed: u64,
}

impl Default for GgeDatasetConfig {
    fn default() -> Self {
        GgeDatasetConfig {
            n_charges: 1,
            samples: 2000,
            sites: 10,
            support: 3,
            j: 1.0,
            h_x: 0.6,
            lambda_range: 2.0,
            seed: 0,
        }
    }
}

/// `sample_gge_dataset` with every other setting at its default.
pub fn sample_gge_dataset(n_charges: usize, samples: usize, sites: usize, seed: u64) -> Result<Dataset> {
    gge_dataset(&GgeDatasetConfig {
        n_charges,
        samples,
        sites,
        seed,
        ..Default::default()
    })
}

/// GGEs of the first `n_charges` Ising charges with random multipliers.
/// Aux columns: `lambda_i` and charge densities `c_i = <C_i>/L`.
pub fn gge_dataset(cfg: &GgeDatasetConfig) -> Result<Dataset> {
    if !(1..=4).contains(&cfg.n_charges) {
        return Err(Error::arg(format!("1..=4 charges supported, got {}", cfg.n_charges)));
    }
    if cfg.samples < 10 {
        return Err(Error::arg("at least 10 samples required"));
    }
    let charges: Vec<_> = (0..cfg.n_charges).map(|k| ising_charge(k, cfg.j, cfg.h_x)).collect();
    let spectrum = GibbsSpectrum::new(&charges, cfg.sites, cfg.support)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = cfg.lambda_range / cfg.j;
    let mut obs = Vec::with_capacity(cfg.samples);
    let mut lambdas = vec![Vec::with_capacity(cfg.samples); cfg.n_charges];
    let mut densities = vec![Vec::with_capacity(cfg.samples); cfg.n_charges];
    for _ in 0..cfg.samples {
        let lambda = LagrangeVector((0..cfg.n_charges).map(|_| rng.random_range(-bound..=bound)).collect());
        obs.push(spectrum.observe(&lambda)?);
        for (i, c) in spectrum.charge_expectations(&lambda)?.into_iter().enumerate() {
            lambdas[i].push(lambda.0[i]);
            densities[i].push(c / cfg.sites as f64);
        }
    }
    let meta = Metadata::new("gge", cfg.sites, cfg.support, cfg.seed)
        .with("n_charges", cfg.n_charges as i64)
        .with("j", cfg.j)
        .with("h_x", cfg.h_x)
        .with("h_z", 0.0)
        .with("lambda_range", cfg.lambda_range)
        .with("lambda_sampling", "uniform per component");
    let mut ds = Dataset::from_observations(&obs, meta)?;
    for i in 0..cfg.n_charges {
        ds = ds.with_aux(&format!("lambda_{i}"), lambdas[i].clone())?;
        ds = ds.with_aux(&format!("c_{i}"), densities[i].clone())?;
    }
    ds.aux.insert("energy_density".into(), ds.aux["c_0"].clone());
    Ok(ds)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathFamily {
    #[default]
    Rotated,
    Structured,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LindbladDatasetConfig {
    pub family: BathFamily,
    pub samples: usize,
    pub sites: usize,
    pub support: usize,
    pub epsilon: f64,
    pub j: f64,
    pub h_x: f64,
    pub h_z: f64,
    pub seed: u64,
}

impl Default for LindbladDatasetConfig {
    fn default() -> Self {
        LindbladDatasetConfig {
            family: BathFamily::Rotated,
            samples: 200,
            sites: 6,
            support: 3,
            epsilon: 0.001,
            j: 1.0,
            h_x: 1.152,
            h_z: 0.974,
            seed: 0,
        }
    }
}

/// Steady states of the Ising chain under random baths, one bath draw per
/// row. Aux columns: `energy_density`, `xx` (nearest-neighbour x
/// correlation), `residual`, and charge densities `c_0..c_3` of the
/// transverse-field part.
pub fn lindblad_dataset(cfg: &LindbladDatasetConfig) -> Result<Dataset> {
    if cfg.samples == 0 {
        return Err(Error::arg("at least one sample required"));
    }
    let h = ising_hamiltonian(cfg.j, cfg.h_x, cfg.h_z);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..cfg.samples).map(|_| rng.random()).collect();
    let charges: Vec<_> = (0..4).map(|k| ising_charge(k, cfg.j, cfg.h_x)).collect();
    let xx = crate::pauli::OperatorSpec::from_pairs([(1.0, "xx")])?;
    let results: Vec<(ObservationVector, Vec<f64>)> = seeds
        .par_iter()
        .map(|&s| -> Result<_> {
            let bath = match cfg.family {
                BathFamily::Rotated => random_rotated_dissipators(s, cfg.epsilon)?,
                BathFamily::Structured => random_structured_dissipators(s, cfg.epsilon)?,
            };
            let ss = steady_state(&build_liouvillian(&h, &bath, cfg.sites)?)?;
            let n = cfg.sites as f64;
            let mut aux = vec![ss.rho.expectation(&h)? / n, ss.rho.expectation(&xx)? / n, ss.residual];
            for c in &charges {
                aux.push(ss.rho.expectation(c)? / n);
            }
            Ok((observe(&ss.rho, cfg.support)?, aux))
        })
        .collect::<Result<_>>()?;
    let family = match cfg.family {
        BathFamily::Rotated => "rotated",
        BathFamily::Structured => "structured",
    };
    let meta = Metadata::new("lindblad", cfg.sites, cfg.support, cfg.seed)
        .with("family", family)
        .with("epsilon", cfg.epsilon)
        .with("j", cfg.j)
        .with("h_x", cfg.h_x)
        .with("h_z", cfg.h_z)
        .with("bath_layout", "translationally repeated, one random draw per row")
        .with("row_seeds", "drawn in order from the master seed");
    let obs: Vec<_> = results.iter().map(|r| r.0.clone()).collect();
    let mut ds = Dataset::from_observations(&obs, meta)?;
    let names = ["energy_density", "xx", "residual", "c_0", "c_1", "c_2", "c_3"];
    for (k, name) in names.iter().enumerate() {
        ds = ds.with_aux(name, results.iter().map(|r| r.1[k]).collect())?;
    }
    Ok(ds)
}

/// One dataset per recorded step of a circuit ensemble. Aux columns:
/// `theta`, `phi` (initial Bloch angles) and `z` (conserved magnetization).
pub fn circuit_datasets(
    cfg: &CircuitConfig,
    trajectories: usize,
    record_steps: &[usize],
    seed: u64,
) -> Result<Vec<Dataset>> {
    let ens = run_ensemble(cfg, trajectories, record_steps, seed)?;
    let theta: Vec<f64> = ens.iter().map(|t| t.bloch.0).collect();
    let phi: Vec<f64> = ens.iter().map(|t| t.bloch.1).collect();
    let schedule = match cfg.schedule {
        crate::circuit::GateSchedule::FreshPerSublayer => "fresh-per-sublayer",
        crate::circuit::GateSchedule::SharedPerStep => "shared-per-step",
    };
    record_steps
        .iter()
        .enumerate()
        .map(|(k, &step)| {
            let obs: Vec<_> = ens.iter().map(|t| t.observations[k].clone()).collect();
            let meta = Metadata::new("circuit", cfg.sites, cfg.support, seed)
                .with("step", step as i64)
                .with("time", step as f64 * crate::circuit::DEFAULT_DT)
                .with("gate_schedule", schedule)
                .with("bloch_sampling", "uniform on the sphere");
            let z_label = PauliLabel::parse("z")?.padded(cfg.support)?;
            let ds = Dataset::from_observations(&obs, meta)?;
            let z = ds.column(&z_label).expect("z column present");
            ds.with_aux("theta", theta.clone())?
                .with_aux("phi", phi.clone())?
                .with_aux("z", z)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let labels = enumerate_support_strings(1).unwrap();
        let rows = ndarray::array![[0.1, -1.0 / 3.0, 1e-300], [0.5, 0.25, -0.0], [std::f64::consts::PI / 10.0, 0.2, 0.3]];
        Dataset::new(labels, rows, Metadata::new("synthetic", 1, 1, u64::MAX).with("h_x", 0.6f64.sqrt()))
            .unwrap()
            .with_aux("energy_density", vec![-0.1, 1.0 / 7.0, 2.0])
            .unwrap()
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let ds = split(tiny(), 0.67, 3).unwrap();
        save(&ds, &dir.path().join("tiny")).unwrap();
        let back = load(&dir.path().join("tiny.obs")).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.metadata.seed().unwrap(), u64::MAX);
        for (a, b) in ds.rows().iter().zip(back.rows().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn inconsistent_rows_name_the_row() {
        let dir = tempfile::tempdir().unwrap();
        save(&tiny(), &dir.path().join("t")).unwrap();
        let p = dir.path().join("t.obs");
        let mut text = fs::read_to_string(&p).unwrap();
        text.push_str("1.0,2.0\n");
        fs::write(&p, &text).unwrap();
        match load(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
        fs::write(&p, text.replace("1.0,2.0", "1.0,abc,3.0")).unwrap();
        match load(&p) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (5, Some(2))),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn split_sizes_and_determinism() {
        let labels = enumerate_support_strings(1).unwrap();
        let ds = Dataset::new(labels.clone(), Array2::zeros((10, 3)), Metadata::new("synthetic", 1, 1, 0)).unwrap();
        let s = split(ds.clone(), 0.5, 1).unwrap().split.unwrap();
        assert_eq!((s.train.len(), s.test.len()), (5, 5));
        assert_eq!(split(ds.clone(), 0.5, 1).unwrap().split.unwrap(), s);
        let big = Dataset::new(labels, Array2::zeros((2000, 3)), Metadata::new("synthetic", 1, 1, 0)).unwrap();
        let s = split(big, 0.8, 9).unwrap().split.unwrap();
        assert_eq!((s.train.len(), s.test.len()), (1600, 400));
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..2000).collect::<Vec<_>>());
        assert!(split(ds.clone(), 0.01, 1).is_err());
        assert!(split(ds, 1.0, 1).is_err());
    }

    #[test]
    fn gge_dataset_shape_and_reproducibility() {
        let a = sample_gge_dataset(1, 10, 6, 4).unwrap();
        let b = sample_gge_dataset(1, 10, 6, 4).unwrap();
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.n_cols(), 48);
        assert_eq!(a.aux("lambda_0").unwrap().len(), 10);
        assert!(a.rows().iter().all(|v| v.abs() <= 1.0));
        assert!(sample_gge_dataset(5, 10, 6, 4).is_err());
    }

    #[test]
    fn source_date_epoch_is_honoured() {
        // Only this test touches the variable.
        std::env::set_var("SOURCE_DATE_EPOCH", "1234567");
        let m = Metadata::new("synthetic", 1, 1, 0);
        std::env::remove_var("SOURCE_DATE_EPOCH");
        assert_eq!(m.created_unix, 1234567);
    }
}
