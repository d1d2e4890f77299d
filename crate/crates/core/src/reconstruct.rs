//! Recovering translationally invariant couplings from thermal observations.
//!
//! Candidate operators are ranked by how strongly their expectation values
//! vary along the learned latent manifold. The couplings of the top
//! candidates are then fitted row by row with Newton's method against the
//! exact Gibbs state of the candidate Hamiltonian (at unit multiplier), and
//! the per-row coupling ratios are averaged.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{Solve, SVD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::neighbors::k_nearest;
use crate::analysis::pca::pca;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gge::{thermal_expectations, ObservationVector};
use crate::pauli::{OperatorSpec, PauliLabel, Term};

pub const MAX_CANDIDATES: usize = 6;

/// How the manifold coordinate is chosen around each row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingMode {
    /// Leading principal direction of each row's neighbourhood, for data on
    /// a thin one-dimensional manifold.
    #[default]
    Tangent,
    /// One global direction: the first principal component of the whole
    /// embedding, for data scattered around a manifold.
    Pca1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRanking {
    /// Trimmed labels with their row-averaged `|d<O>/ds|`, largest first.
    pub scores: Vec<(PauliLabel, f64)>,
    pub mode: EmbeddingMode,
    pub neighbors: usize,
}

impl CandidateRanking {
    pub fn top(&self, m: usize) -> Vec<PauliLabel> {
        self.scores.iter().take(m).map(|(l, _)| l.clone()).collect()
    }

    pub fn score(&self, label: &PauliLabel) -> Option<f64> {
        let t = label.trimmed();
        self.scores.iter().find(|(l, _)| *l == t).map(|(_, s)| *s)
    }
}

/// Slope of `y` against `s` by ordinary least squares, zero when `s` does
/// not vary.
fn slope(s: &[f64], y: &[f64]) -> f64 {
    let n = s.len() as f64;
    let (ms, my) = (s.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in s.iter().zip(y) {
        sxy += (a - ms) * (b - my);
        sxx += (a - ms) * (a - ms);
    }
    if sxx <= 1e-300 {
        0.0
    } else {
        sxy / sxx
    }
}

fn unit_leading_direction(points: &ArrayView2<f64>) -> Option<Array1<f64>> {
    let p = pca(points).ok()?;
    (p.explained_variance[0] > 0.0).then(|| p.components.row(0).to_owned())
}

/// Local linear gradients of every observable along the manifold
/// coordinate, averaged in magnitude over rows.
pub fn rank_candidates(
    ds: &Dataset,
    latents: &ArrayView2<f64>,
    mode: EmbeddingMode,
    k: usize,
) -> Result<CandidateRanking> {
    let n = ds.n_rows();
    if latents.nrows() != n {
        return Err(Error::arg(format!("{} latent rows for {n} data rows", latents.nrows())));
    }
    if n < k + 1 {
        return Err(Error::arg(format!("ranking with k = {k} neighbours needs at least {} rows, got {n}", k + 1)));
    }
    let nn = k_nearest(latents, k)?;
    let global = match mode {
        EmbeddingMode::Pca1 => Some(unit_leading_direction(latents).unwrap_or_else(|| {
            let mut e = Array1::zeros(latents.ncols());
            e[0] = 1.0;
            e
        })),
        EmbeddingMode::Tangent => None,
    };
    let rows = ds.rows();
    let per_row: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let idx: Vec<usize> = std::iter::once(i).chain(nn[i].iter().map(|&(j, _)| j)).collect();
            let local = Array2::from_shape_fn((idx.len(), latents.ncols()), |(r, c)| latents[[idx[r], c]]);
            let dir = match &global {
                Some(d) => Some(d.clone()),
                None => unit_leading_direction(&local.view()),
            };
            let Some(dir) = dir else {
                return vec![0.0; ds.n_cols()];
            };
            let s: Vec<f64> = local.rows().into_iter().map(|r| r.dot(&dir)).collect();
            (0..ds.n_cols())
                .map(|c| {
                    let y: Vec<f64> = idx.iter().map(|&r| rows[[r, c]]).collect();
                    slope(&s, &y).abs()
                })
                .collect()
        })
        .collect();
    let mut scores: Vec<(PauliLabel, f64)> = ds
        .labels()
        .iter()
        .enumerate()
        .map(|(c, l)| (l.trimmed(), per_row.iter().map(|r| r[c]).sum::<f64>() / n as f64))
        .collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.to_string().cmp(&b.0.to_string())));
    Ok(CandidateRanking {
        scores,
        mode,
        neighbors: k,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonOptions {
    /// Largest allowed `|F_a|` on exit.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Central-difference step for the Jacobian.
    pub fd_step: f64,
    pub max_condition: f64,
    /// Candidates with `|a| < prune_fraction * max |a|` are eliminated.
    pub prune_fraction: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tolerance: 1e-10,
            max_iterations: 50,
            fd_step: 1e-5,
            max_condition: 1e12,
            prune_fraction: 1e-3,
            max_halvings: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub labels: Vec<PauliLabel>,
    /// Couplings with the Lagrange multiplier absorbed; only ratios are
    /// physical.
    pub coefficients: Vec<f64>,
    /// Max-norm of the matching conditions on the candidate labels.
    pub residual: f64,
    /// Max-norm mismatch over every label of the target, candidates or not.
    pub consistency: f64,
    pub iterations: usize,
    pub eliminated: Vec<PauliLabel>,
}

impl ReconstructionResult {
    pub fn coefficient(&self, label: &PauliLabel) -> Option<f64> {
        let t = label.trimmed();
        self.labels.iter().position(|l| *l == t).map(|i| self.coefficients[i])
    }

    pub fn ratio(&self, num: &PauliLabel, den: &PauliLabel) -> Option<f64> {
        Some(self.coefficient(num)? / self.coefficient(den)?)
    }

    /// The candidate operator `sum_j sum_a a O_j(a)`.
    pub fn operator(&self) -> Result<OperatorSpec> {
        candidate_operator(&self.labels, &self.coefficients)
    }
}

fn candidate_operator(labels: &[PauliLabel], a: &[f64]) -> Result<OperatorSpec> {
    OperatorSpec::translation_invariant(
        labels
            .iter()
            .zip(a)
            .map(|(l, &c)| Term {
                coefficient: c,
                label: l.clone(),
            })
            .collect(),
    )
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Gibbs state of candidate couplings evaluated on a periodic chain.
struct Oracle<'a> {
    labels: &'a [PauliLabel],
    sites: usize,
}

impl Oracle<'_> {
    fn eval(&self, a: &[f64]) -> Result<Vec<f64>> {
        thermal_expectations(&candidate_operator(self.labels, a)?, self.labels, self.sites)
    }
}

/// Solves `<O(a)>_{exp(sum_b a_b O(b))} = target(a)` for the candidate couplings.
pub fn newton_solve(
    candidates: &[PauliLabel],
    target: &ObservationVector,
    sites: usize,
    opts: &NewtonOptions,
) -> Result<ReconstructionResult> {
    let m = candidates.len();
    if m == 0 || m > MAX_CANDIDATES {
        return Err(Error::arg(format!("1..={MAX_CANDIDATES} candidates supported, got {m}")));
    }
    let labels: Vec<PauliLabel> = candidates.iter().map(|l| l.trimmed()).collect();
    for (i, l) in labels.iter().enumerate() {
        if l.is_identity() {
            return Err(Error::arg("the identity cannot be a candidate"));
        }
        if labels[..i].contains(l) {
            return Err(Error::arg(format!("candidate {l} listed twice")));
        }
        if l.support() > target.support {
            return Err(Error::arg(format!(
                "candidate {l} exceeds the target support {}",
                target.support
            )));
        }
        if l.support() >= sites {
            return Err(Error::arg(format!("candidate {l} does not fit a {sites}-site ring")));
        }
    }
    let goal: Vec<f64> = labels.iter().map(|l| target.get(l)).collect::<Result<_>>()?;
    crate::linalg::check_finite(&goal, "target")?;
    let oracle = Oracle {
        labels: &labels,
        sites,
    };
    let residual_at = |a: &[f64]| -> Result<Vec<f64>> {
        Ok(oracle.eval(a)?.iter().zip(&goal).map(|(o, g)| o - g).collect())
    };

    let mut a = vec![0.0; m];
    let mut f = residual_at(&a)?;
    let mut iterations = 0;
    while max_norm(&f) > opts.tolerance {
        if iterations == opts.max_iterations {
            return Err(Error::Convergence {
                iterations,
                residual: max_norm(&f),
            });
        }
        iterations += 1;
        let mut jac = Array2::<f64>::zeros((m, m));
        for b in 0..m {
            let mut hi = a.clone();
            let mut lo = a.clone();
            hi[b] += opts.fd_step;
            lo[b] -= opts.fd_step;
            let (fp, fm) = (oracle.eval(&hi)?, oracle.eval(&lo)?);
            for r in 0..m {
                jac[[r, b]] = (fp[r] - fm[r]) / (2.0 * opts.fd_step);
            }
        }
        let (_, sv, _) = jac.svd(false, false)?;
        let condition = if sv[m - 1] > 0.0 { sv[0] / sv[m - 1] } else { f64::INFINITY };
        if condition.is_nan() || condition > opts.max_condition {
            return Err(Error::IllPosed { condition });
        }
        let delta = jac.solve(&Array1::from(f.iter().map(|x| -x).collect::<Vec<_>>()))?;
        let current = max_norm(&f);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = a.iter().zip(delta.iter()).map(|(x, d)| x + t * d).collect();
            let ft = residual_at(&trial)?;
            if max_norm(&ft) < current {
                a = trial;
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::Convergence {
                iterations,
                residual: current,
            });
        }
    }

    let full_labels = target.labels();
    let full = thermal_expectations(&candidate_operator(&labels, &a)?, &full_labels, sites)?;
    let consistency = max_norm(&full.iter().zip(&target.values).map(|(x, y)| x - y).collect::<Vec<_>>());
    let top = max_norm(&a);
    let eliminated = labels
        .iter()
        .zip(&a)
        .filter(|(_, c)| c.abs() < opts.prune_fraction * top)
        .map(|(l, _)| l.clone())
        .collect();
    Ok(ReconstructionResult {
        labels,
        coefficients: a,
        residual: max_norm(&f),
        consistency,
        iterations,
        eliminated,
    })
}

/// Evidence that one latent variable describes the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precondition {
    /// Best test losses of the `N_L = 0` and `N_L = 1` networks.
    SweepEvidence { loss_nl0: f64, loss_nl1: f64 },
    /// Skip the check.
    Override,
}

/// Largest accepted `loss(N_L = 1) / loss(N_L = 0)`.
pub const ONE_PARAMETER_RATIO: f64 = 1e-2;
/// Smallest fraction of solved rows that must converge.
pub const MIN_CONVERGED_FRACTION: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructConfig {
    pub mode: EmbeddingMode,
    pub neighbors: usize,
    pub top_candidates: usize,
    /// Chain length of the thermal oracle.
    pub oracle_sites: usize,
    /// Rows solved, spread evenly over the dataset; 0 means all.
    pub max_rows: usize,
    /// Rows whose candidate observations have a smaller max-norm are
    /// skipped as carrying no signal.
    pub min_signal: f64,
    pub newton: NewtonOptions,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            mode: EmbeddingMode::Tangent,
            neighbors: 10,
            top_candidates: 5,
            oracle_sites: 10,
            max_rows: 50,
            min_signal: 1e-6,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedCoefficient {
    pub label: PauliLabel,
    /// `a / a_reference` of the row-averaged, sign-aligned unit coupling
    /// vector.
    pub ratio: f64,
    /// Row-to-row standard deviation of the unit-vector component, in units
    /// of the averaged reference component.
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowOutcome {
    pub row: usize,
    /// `None` for converged rows, otherwise the failure message.
    pub error: Option<String>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub ranking: CandidateRanking,
    pub candidates: Vec<PauliLabel>,
    /// Coefficient all ratios are taken against.
    pub reference: PauliLabel,
    pub coefficients: Vec<AveragedCoefficient>,
    pub eliminated: Vec<PauliLabel>,
    pub low_signal_rows: Vec<usize>,
    pub rows: Vec<RowOutcome>,
    pub converged: usize,
}

impl ReconstructionReport {
    pub fn ratio(&self, label: &PauliLabel) -> Option<f64> {
        let t = label.trimmed();
        self.coefficients.iter().find(|c| c.label == t).map(|c| c.ratio)
    }
}

fn check_precondition(p: &Precondition) -> Result<()> {
    match *p {
        Precondition::Override => Ok(()),
        Precondition::SweepEvidence { loss_nl0, loss_nl1 } => {
            if !(loss_nl0 > 0.0 && loss_nl1 >= 0.0) {
                return Err(Error::arg("sweep losses must be positive"));
            }
            let r = loss_nl1 / loss_nl0;
            if r < ONE_PARAMETER_RATIO {
                Ok(())
            } else {
                Err(Error::arg(format!(
                    "one latent variable does not describe the data: loss(N_L=1)/loss(N_L=0) = {r:.3e}, need < {ONE_PARAMETER_RATIO:e}"
                )))
            }
        }
    }
}

/// Rank, solve each selected row, and average coupling ratios.
pub fn reconstruct(
    ds: &Dataset,
    latents: &ArrayView2<f64>,
    precondition: &Precondition,
    cfg: &ReconstructConfig,
) -> Result<ReconstructionReport> {
    check_precondition(precondition)?;
    let ranking = rank_candidates(ds, latents, cfg.mode, cfg.neighbors)?;
    let candidates: Vec<PauliLabel> = ranking
        .scores
        .iter()
        .filter(|(l, _)| !l.is_identity() && l.support() < cfg.oracle_sites)
        .take(cfg.top_candidates.min(MAX_CANDIDATES))
        .map(|(l, _)| l.clone())
        .collect();
    if candidates.is_empty() {
        return Err(Error::arg("no candidate operators to fit"));
    }
    reconstruct_with(ds, ranking, candidates, cfg)
}

/// The solving and averaging stages with a fixed candidate set.
pub fn reconstruct_with(
    ds: &Dataset,
    ranking: CandidateRanking,
    candidates: Vec<PauliLabel>,
    cfg: &ReconstructConfig,
) -> Result<ReconstructionReport> {
    let n = ds.n_rows();
    let picked: Vec<usize> = if cfg.max_rows == 0 || cfg.max_rows >= n {
        (0..n).collect()
    } else {
        (0..cfg.max_rows).map(|i| i * n / cfg.max_rows).collect()
    };
    let mut low_signal_rows = Vec::new();
    let mut work = Vec::new();
    for &r in &picked {
        let obs = ds.row(r)?;
        let signal = candidates
            .iter()
            .map(|l| obs.get(l).map(f64::abs))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if signal < cfg.min_signal {
            low_signal_rows.push(r);
        } else {
            work.push((r, obs));
        }
    }
    let solved: Vec<(usize, Result<ReconstructionResult>)> = work
        .par_iter()
        .map(|(r, obs)| (*r, newton_solve(&candidates, obs, cfg.oracle_sites, &cfg.newton)))
        .collect();

    let mut rows = Vec::with_capacity(solved.len());
    let mut good: Vec<Vec<f64>> = Vec::new();
    for (r, res) in &solved {
        match res {
            Ok(s) => {
                good.push(s.coefficients.clone());
                rows.push(RowOutcome {
                    row: *r,
                    error: None,
                    iterations: s.iterations,
                    residual: s.residual,
                });
            }
            Err(e) => {
                let (iterations, residual) = match e {
                    Error::Convergence { iterations, residual } => (*iterations, *residual),
                    _ => (0, f64::NAN),
                };
                rows.push(RowOutcome {
                    row: *r,
                    error: Some(e.to_string()),
                    iterations,
                    residual,
                });
            }
        }
    }
    let attempted = solved.len();
    let converged = good.len();
    if attempted == 0 || (converged as f64) < MIN_CONVERGED_FRACTION * attempted as f64 {
        let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
        for r in rows.iter().filter_map(|r| r.error.as_ref()) {
            let key = r.split(':').next().unwrap_or(r).to_string();
            *reasons.entry(key).or_default() += 1;
        }
        return Err(Error::Reconstruction(format!(
            "{converged} of {attempted} rows converged ({} low-signal rows skipped); failures: {reasons:?}",
            low_signal_rows.len()
        )));
    }

    // Each row carries its own multiplier, so rows are compared as unit
    // vectors with the sign of the dominant coupling fixed. Ratios of the
    // averaged vector stay finite when a row's reference coupling is tiny.
    let m = candidates.len();
    let unit: Vec<Vec<f64>> = good
        .iter()
        .map(|a| {
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            a.iter().map(|x| x / norm.max(f64::MIN_POSITIVE)).collect()
        })
        .collect();
    let weight: Vec<f64> = (0..m).map(|k| unit.iter().map(|u| u[k].abs()).sum::<f64>()).collect();
    let reference = (0..m).fold(0, |best, k| if weight[k] > weight[best] { k } else { best });
    let aligned: Vec<Vec<f64>> = unit
        .iter()
        .map(|u| {
            let s = if u[reference] < 0.0 { -1.0 } else { 1.0 };
            u.iter().map(|x| s * x).collect()
        })
        .collect();
    let count = aligned.len() as f64;
    let mean: Vec<f64> = (0..m).map(|k| aligned.iter().map(|u| u[k]).sum::<f64>() / count).collect();
    let coefficients: Vec<AveragedCoefficient> = (0..m)
        .map(|k| {
            let spread = if aligned.len() > 1 {
                let var = aligned.iter().map(|u| (u[k] - mean[k]).powi(2)).sum::<f64>() / (count - 1.0);
                var.sqrt() / mean[reference].abs()
            } else {
                0.0
            };
            AveragedCoefficient {
                label: candidates[k].trimmed(),
                ratio: mean[k] / mean[reference],
                spread,
            }
        })
        .collect();
    let top = coefficients.iter().fold(0.0f64, |t, c| t.max(c.ratio.abs()));
    let eliminated = coefficients
        .iter()
        .filter(|c| c.ratio.abs() < cfg.newton.prune_fraction * top)
        .map(|c| c.label.clone())
        .collect();
    Ok(ReconstructionReport {
        ranking,
        reference: candidates[reference].trimmed(),
        candidates,
        coefficients,
        eliminated,
        low_signal_rows,
        rows,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Metadata;
    use crate::gge::{gge_state, observe, LagrangeVector};
    use crate::pauli::ising_hamiltonian;

    fn label(s: &str) -> PauliLabel {
        PauliLabel::parse(s).unwrap()
    }

    fn gibbs_target(h: &OperatorSpec, l0: f64, n: usize) -> ObservationVector {
        let st = gge_state(std::slice::from_ref(h), &LagrangeVector(vec![l0]), n).unwrap();
        observe(&st.rho, 3).unwrap()
    }

    #[test]
    fn recovers_ising_couplings_on_a_small_ring() {
        let h = ising_hamiltonian(1.0, 0.6, 0.0);
        let target = gibbs_target(&h, -0.7, 6);
        let cands = [label("zz"), label("x"), label("zxz")];
        let r = newton_solve(&cands, &target, 6, &NewtonOptions::default()).unwrap();
        assert!((r.ratio(&label("x"), &label("zz")).unwrap() - 0.6).abs() < 1e-8);
        assert!((r.coefficient(&label("zz")).unwrap() + 0.7).abs() < 1e-8);
        assert_eq!(r.eliminated, vec![label("zxz")]);
        assert!(r.residual < 1e-10 && r.consistency < 1e-9);
    }

    #[test]
    fn true_couplings_satisfy_every_label() {
        let h = OperatorSpec::from_pairs([(0.8, "zz"), (-0.45, "x"), (0.3, "z")]).unwrap();
        let target = gibbs_target(&h, 1.0, 5);
        let labels = target.labels();
        let at_truth = thermal_expectations(&h, &labels, 5).unwrap();
        let worst = at_truth.iter().zip(&target.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn rescaling_keeps_ratios() {
        let cands = [label("zz"), label("x"), label("z")];
        let h = OperatorSpec::from_pairs([(1.0, "zz"), (1.152, "x"), (0.974, "z")]).unwrap();
        let a = newton_solve(&cands, &gibbs_target(&h, 0.4, 5), 5, &NewtonOptions::default()).unwrap();
        let b = newton_solve(&cands, &gibbs_target(&h.scaled(2.5), 0.4 / 2.5, 5), 5, &NewtonOptions::default()).unwrap();
        for l in ["x", "z"] {
            let (ra, rb) = (a.ratio(&label(l), &label("zz")).unwrap(), b.ratio(&label(l), &label("zz")).unwrap());
            assert!((ra - rb).abs() < 1e-8, "{l}: {ra} vs {rb}");
        }
    }

    #[test]
    fn infinite_temperature_is_the_zero_solution() {
        let target = ObservationVector::new(vec![0.0; 48], 3).unwrap();
        let r = newton_solve(&[label("zz"), label("x")], &target, 5, &NewtonOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.coefficients, vec![0.0, 0.0]);
    }

    #[test]
    fn condition_guard() {
        // Condition numbers are at least 1, so a bound below 1 rejects any step.
        let h = OperatorSpec::from_pairs([(1.0, "zz"), (0.5, "x")]).unwrap();
        let target = gibbs_target(&h, 0.5, 4);
        let opts = NewtonOptions {
            max_condition: 0.5,
            ..Default::default()
        };
        let r = newton_solve(&[label("zz"), label("x")], &target, 4, &opts);
        assert!(matches!(r, Err(Error::IllPosed { .. })), "{r:?}");
        assert!(newton_solve(&[label("zz"), label("x0z")], &target, 3, &NewtonOptions::default()).is_err());
    }

    #[test]
    fn argument_checks() {
        let target = ObservationVector::new(vec![0.1; 12], 2).unwrap();
        let o = NewtonOptions::default();
        assert!(newton_solve(&[], &target, 5, &o).is_err());
        assert!(newton_solve(&[label("zxz")], &target, 5, &o).is_err());
        assert!(newton_solve(&[label("x"), label("x00")], &target, 5, &o).is_err());
    }

    fn line_dataset(values: impl Fn(f64) -> Vec<f64>, n: usize) -> (Dataset, Array2<f64>) {
        let labels = crate::pauli::enumerate_support_strings(1).unwrap();
        let rows = Array2::from_shape_fn((n, 3), |(i, c)| values(i as f64 / n as f64)[c]);
        let lat = Array2::from_shape_fn((n, 2), |(i, c)| if c == 0 { i as f64 } else { 0.5 * i as f64 });
        (Dataset::new(labels, rows, Metadata::new("test", 3, 1, 0)).unwrap(), lat)
    }

    #[test]
    fn ranking_follows_gradients() {
        let (ds, lat) = line_dataset(|t| vec![3.0 * t, 0.2, -t], 40);
        for mode in [EmbeddingMode::Tangent, EmbeddingMode::Pca1] {
            let r = rank_candidates(&ds, &lat.view(), mode, 5).unwrap();
            assert_eq!(r.top(2), vec![label("x"), label("z")]);
            assert!(r.score(&label("y")).unwrap() < 1e-12);
            assert!((r.score(&label("x")).unwrap() / r.score(&label("z")).unwrap() - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ranking_is_rotation_invariant() {
        let (ds, lat) = line_dataset(|t| vec![(3.0 * t).sin(), t * t, -t], 40);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let rot = ndarray::array![[c, -s], [s, c]];
        let moved = lat.dot(&rot);
        let a = rank_candidates(&ds, &lat.view(), EmbeddingMode::Tangent, 6).unwrap();
        let b = rank_candidates(&ds, &moved.view(), EmbeddingMode::Tangent, 6).unwrap();
        for ((la, sa), (lb, sb)) in a.scores.iter().zip(&b.scores) {
            assert_eq!(la, lb);
            assert!((sa - sb).abs() < 1e-9 * sa.abs().max(1.0));
        }
    }

    #[test]
    fn identical_rows_have_no_gradient() {
        let (ds, _) = line_dataset(|_| vec![0.1, 0.2, 0.3], 20);
        let lat = Array2::from_shape_fn((20, 1), |(i, _)| i as f64);
        let r = rank_candidates(&ds, &lat.view(), EmbeddingMode::Tangent, 4).unwrap();
        assert!(r.scores.iter().all(|(_, s)| *s == 0.0));
        assert!(rank_candidates(&ds, &lat.view(), EmbeddingMode::Tangent, 20).is_err());
    }

    fn energy_latents(ds: &Dataset) -> Array2<f64> {
        let e = ds.aux("energy_density").unwrap();
        Array2::from_shape_fn((e.len(), 1), |(i, _)| e[i])
    }

    #[test]
    fn pipeline_on_exact_gibbs_rows() {
        let ds = crate::dataset::sample_gge_dataset(1, 50, 6, 8).unwrap();
        let cfg = ReconstructConfig {
            oracle_sites: 6,
            // On six sites x ranks sixth, behind z0z, zz, zxz, zzx and xzz.
            top_candidates: 6,
            ..Default::default()
        };
        let lat = energy_latents(&ds);
        let rep = reconstruct(&ds, &lat.view(), &Precondition::Override, &cfg).unwrap();
        assert_eq!(rep.converged, 50);
        assert!(rep.candidates.contains(&label("zz")) && rep.candidates.contains(&label("x")));
        let ratio = rep.ratio(&label("x")).unwrap() / rep.ratio(&label("zz")).unwrap();
        assert!((ratio - 0.6).abs() < 1e-4, "{ratio}");
        for c in &rep.coefficients {
            if c.label != label("zz") && c.label != label("x") {
                assert!(rep.eliminated.contains(&c.label), "{c:?}");
            }
        }
        let guarded = Precondition::SweepEvidence {
            loss_nl0: 1e-2,
            loss_nl1: 5e-4,
        };
        assert!(reconstruct(&ds, &lat.view(), &guarded, &cfg).is_err());
    }

    fn with_rows(ds: &Dataset, rows: Array2<f64>) -> Dataset {
        Dataset::new(ds.labels().to_vec(), rows, ds.metadata.clone()).unwrap()
    }

    #[test]
    fn zero_signal_rows_are_skipped() {
        let base = crate::dataset::sample_gge_dataset(1, 12, 5, 2).unwrap();
        let lat = energy_latents(&base);
        let mut rows = base.rows().clone();
        rows.row_mut(3).fill(0.0);
        let ds = with_rows(&base, rows);
        let cfg = ReconstructConfig {
            oracle_sites: 5,
            ..Default::default()
        };
        let ranking = rank_candidates(&ds, &lat.view(), EmbeddingMode::Tangent, 4).unwrap();
        let rep = reconstruct_with(&ds, ranking, vec![label("zz"), label("x")], &cfg).unwrap();
        assert_eq!(rep.low_signal_rows, vec![3]);
        assert_eq!(rep.converged, 11);
    }

    #[test]
    fn non_thermal_rows_fail() {
        // Nearly polarized product states: <zz> = <z>^2 close to 1 needs
        // couplings far beyond any finite temperature.
        let base = crate::dataset::sample_gge_dataset(1, 12, 4, 1).unwrap();
        let mut rows = base.rows().clone();
        for (i, mut row) in rows.rows_mut().into_iter().enumerate() {
            let psi = crate::circuit::StateVector::product(3, 0.01 * (i + 1) as f64, 0.3).unwrap();
            let obs = crate::gge::observe(&crate::gge::DensityMatrix::pure(psi.amplitudes()).unwrap(), 3).unwrap();
            row.assign(&Array1::from(obs.values));
        }
        let ds = with_rows(&base, rows);
        let cfg = ReconstructConfig {
            oracle_sites: 6,
            newton: NewtonOptions {
                max_iterations: 8,
                ..Default::default()
            },
            ..Default::default()
        };
        let lat = Array2::from_shape_fn((12, 1), |(i, _)| i as f64);
        let ranking = rank_candidates(&ds, &lat.view(), EmbeddingMode::Tangent, 4).unwrap();
        let r = reconstruct_with(&ds, ranking, vec![label("zz"), label("z"), label("x")], &cfg);
        assert!(matches!(r, Err(Error::Reconstruction(_))), "{r:?}");
    }

    #[test]
    fn precondition_guard() {
        assert!(check_precondition(&Precondition::SweepEvidence {
            loss_nl0: 1e-2,
            loss_nl1: 1e-3
        })
        .is_err());
        assert!(check_precondition(&Precondition::SweepEvidence {
            loss_nl0: 1e-2,
            loss_nl1: 1e-6
        })
        .is_ok());
    }
}
