//! Random U(1)-symmetric brickwork circuits on a periodic chain.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gge::{observe, DensityMatrix, ObservationVector};
use crate::linalg::{C64, ZERO};

pub const MAX_CIRCUIT_SITES: usize = 20;
pub const DEFAULT_SITES: usize = 16;
pub const DEFAULT_DT: f64 = 0.1;

/// Parameters of the two-site gate `exp(-i dt H)` with
/// `H = a (S⁺S⁻ + S⁻S⁺) + b σᶻσᶻ + c (σᶻ + σᶻ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub theta1: f64,
    pub theta2: f64,
    pub c: f64,
    pub dt: f64,
}

impl GateParams {
    pub fn new(theta1: f64, theta2: f64, c: f64, dt: f64) -> Result<Self> {
        if theta1.abs() > PI || theta2.abs() > PI {
            return Err(Error::arg("gate eigenvalues must lie in [-pi, pi]"));
        }
        if c.abs() > PI / 2.0 {
            return Err(Error::arg("gate field must lie in [-pi/2, pi/2]"));
        }
        if !dt.is_finite() {
            return Err(Error::arg("time step must be finite"));
        }
        Ok(GateParams { theta1, theta2, c, dt })
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        GateParams {
            theta1: rng.random_range(-PI..=PI),
            theta2: rng.random_range(-PI..=PI),
            c: rng.random_range(-PI / 2.0..=PI / 2.0),
            dt: DEFAULT_DT,
        }
    }

    pub fn a(&self) -> f64 {
        0.5 * (self.theta2 - self.theta1)
    }

    pub fn b(&self) -> f64 {
        0.5 * (self.theta1 + self.theta2)
    }

    /// Closed form in the basis `↑↑, ↑↓, ↓↑, ↓↓`: phases on the polarized
    /// states, a rotation in the one-flip block.
    pub fn unitary(&self) -> Array2<C64> {
        let (a, b, c, dt) = (self.a(), self.b(), self.c, self.dt);
        let mut u = Array2::zeros((4, 4));
        u[[0, 0]] = C64::from_polar(1.0, -dt * (b + 2.0 * c));
        u[[3, 3]] = C64::from_polar(1.0, -dt * (b - 2.0 * c));
        let phase = C64::from_polar(1.0, dt * b);
        let (s, co) = (dt * a).sin_cos();
        u[[1, 1]] = phase * co;
        u[[2, 2]] = phase * co;
        u[[1, 2]] = phase * C64::new(0.0, -s);
        u[[2, 1]] = phase * C64::new(0.0, -s);
        u
    }
}

/// Draws gate parameters and returns them with their unitary.
pub fn sample_gate<R: Rng + ?Sized>(rng: &mut R) -> (GateParams, Array2<C64>) {
    let p = GateParams::sample(rng);
    let u = p.unitary();
    (p, u)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    sites: usize,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::arg(format!("state length {dim} is not a power of two")));
        }
        let sites = dim.trailing_zeros() as usize;
        if sites > MAX_CIRCUIT_SITES {
            return Err(Error::Resource(format!("{sites} sites exceed the limit of {MAX_CIRCUIT_SITES}")));
        }
        let st = StateVector { amplitudes, sites };
        if (st.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::arg(format!("state is not normalized (norm {})", st.norm())));
        }
        Ok(st)
    }

    /// `(cos(θ/2)|↑⟩ + e^{iφ} sin(θ/2)|↓⟩)^{⊗L}`.
    pub fn product(sites: usize, theta: f64, phi: f64) -> Result<Self> {
        if sites == 0 || sites > MAX_CIRCUIT_SITES {
            return Err(Error::arg(format!("1..={MAX_CIRCUIT_SITES} sites supported")));
        }
        let up = C64::new((theta / 2.0).cos(), 0.0);
        let down = C64::from_polar((theta / 2.0).sin(), phi);
        let amplitudes = (0..1usize << sites)
            .map(|b| {
                let n_down = b.count_ones() as i32;
                up.powi(sites as i32 - n_down) * down.powi(n_down)
            })
            .collect();
        Ok(StateVector { amplitudes, sites })
    }

    /// Computational basis state; bit `L-1-j` set means site `j` is down.
    pub fn basis(sites: usize, index: usize) -> Result<Self> {
        let mut amplitudes = vec![ZERO; 1 << sites];
        *amplitudes
            .get_mut(index)
            .ok_or_else(|| Error::arg("basis index out of range"))? = C64::new(1.0, 0.0);
        StateVector::new(amplitudes)
    }

    /// `|↑↓↑↓...⟩`.
    pub fn neel(sites: usize) -> Result<Self> {
        let index = (0..sites).filter(|j| j % 2 == 1).map(|j| 1usize << (sites - 1 - j)).sum();
        StateVector::basis(sites, index)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨Σ_j σᶻ_j⟩`.
    pub fn magnetization(&self) -> f64 {
        let l = self.sites as f64;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(b, z)| z.norm_sqr() * (l - 2.0 * b.count_ones() as f64))
            .sum()
    }

    /// Applies a 4x4 gate to sites `(s, s+1 mod L)`, first site most significant.
    pub fn apply_two_site(&mut self, gate: &Array2<C64>, s: usize) {
        let l = self.sites;
        let hi = 1usize << (l - 1 - s);
        let lo = 1usize << (l - 1 - (s + 1) % l);
        let g: Vec<C64> = gate.iter().copied().collect();
        for b in 0..self.amplitudes.len() {
            if b & (hi | lo) != 0 {
                continue;
            }
            let idx = [b, b | lo, b | hi, b | hi | lo];
            let v = idx.map(|i| self.amplitudes[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amplitudes[i] = g[4 * r] * v[0] + g[4 * r + 1] * v[1] + g[4 * r + 2] * v[2] + g[4 * r + 3] * v[3];
            }
        }
    }
}

/// One brickwork step: `even_gate` on links `(0,1), (2,3), ...`, then
/// `odd_gate` on `(1,2), ..., (L-1,0)`.
pub fn brickwork_step(state: &mut StateVector, even_gate: &Array2<C64>, odd_gate: &Array2<C64>) -> Result<()> {
    let l = state.sites;
    if !l.is_multiple_of(2) || l < 2 {
        return Err(Error::arg(format!("brickwork needs an even chain, got L={l}")));
    }
    if even_gate.dim() != (4, 4) || odd_gate.dim() != (4, 4) {
        return Err(Error::arg("brickwork gates must be 4x4"));
    }
    for s in (0..l).step_by(2) {
        state.apply_two_site(even_gate, s);
    }
    for s in (1..l).step_by(2) {
        state.apply_two_site(odd_gate, s);
    }
    Ok(())
}

/// Partial trace onto `support` consecutive sites, averaged over all `L`
/// placements of the window.
pub fn reduced_density_matrix(state: &StateVector, support: usize) -> Result<DensityMatrix> {
    let l = state.sites;
    if support == 0 || 2 * support > l {
        return Err(Error::arg(format!("support must be in 1..={}, got {support}", l / 2)));
    }
    let k = support;
    let dk = 1usize << k;
    let mut rho = Array2::<C64>::zeros((dk, dk));
    let mut v = vec![ZERO; dk];
    for start in 0..l {
        let bits: Vec<usize> = (0..k).map(|q| l - 1 - (start + q) % l).collect();
        let mask: usize = bits.iter().map(|b| 1usize << b).sum();
        let offsets: Vec<usize> = (0..dk)
            .map(|a| bits.iter().enumerate().map(|(q, &b)| ((a >> (k - 1 - q)) & 1) << b).sum())
            .collect();
        for rest in 0..state.amplitudes.len() {
            if rest & mask != 0 {
                continue;
            }
            for (slot, off) in v.iter_mut().zip(&offsets) {
                *slot = state.amplitudes[rest | off];
            }
            for i in 0..dk {
                if v[i] == ZERO {
                    continue;
                }
                for j in 0..dk {
                    rho[[i, j]] += v[i] * v[j].conj();
                }
            }
        }
    }
    rho.mapv_inplace(|z| z / l as f64);
    DensityMatrix::new(rho)
}

/// Whether the odd sublayer draws its own gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateSchedule {
    #[default]
    FreshPerSublayer,
    SharedPerStep,
}

#[derive(Clone, Debug)]
pub struct CircuitConfig {
    pub sites: usize,
    pub support: usize,
    pub schedule: GateSchedule,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        CircuitConfig {
            sites: DEFAULT_SITES,
            support: 3,
            schedule: GateSchedule::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub bloch: (f64, f64),
    pub seed: u64,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub observations: Vec<ObservationVector>,
}

/// Every step up to `t = 1`, then roughly `per_decade` logarithmically spaced
/// steps per decade up to `max_step`.
pub fn default_record_steps(max_step: usize, per_decade: usize) -> Vec<usize> {
    let dense_until = (1.0 / DEFAULT_DT).round() as usize;
    let mut out: Vec<usize> = (0..=dense_until.min(max_step)).collect();
    if max_step > dense_until {
        let lo = (dense_until as f64).log10();
        let hi = (max_step as f64).log10();
        let count = ((hi - lo) * per_decade as f64).ceil().max(1.0) as usize;
        for i in 1..=count {
            let s = 10f64.powf(lo + (hi - lo) * i as f64 / count as f64).round() as usize;
            if s > *out.last().unwrap() {
                out.push(s.min(max_step));
            }
        }
    }
    out
}

/// `cos θ` uniform on `[-1, 1]`, `φ` uniform on `[-π, π]`.
pub fn sample_bloch<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    (cos_theta.acos(), rng.random_range(-PI..=PI))
}

pub fn run_trajectory(
    config: &CircuitConfig,
    bloch: (f64, f64),
    record_steps: &[usize],
    seed: u64,
) -> Result<TrajectoryRecord> {
    if record_steps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("record steps must be strictly increasing"));
    }
    let mut state = StateVector::product(config.sites, bloch.0, bloch.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observations = Vec::with_capacity(record_steps.len());
    let mut step = 0;
    for &target in record_steps {
        while step < target {
            let (_, even) = sample_gate(&mut rng);
            let odd = match config.schedule {
                GateSchedule::FreshPerSublayer => sample_gate(&mut rng).1,
                GateSchedule::SharedPerStep => even.clone(),
            };
            brickwork_step(&mut state, &even, &odd)?;
            step += 1;
        }
        let rdm = reduced_density_matrix(&state, config.support)?;
        observations.push(observe(&rdm, config.support)?);
    }
    Ok(TrajectoryRecord {
        bloch,
        seed,
        steps: record_steps.to_vec(),
        times: record_steps.iter().map(|&s| s as f64 * DEFAULT_DT).collect(),
        observations,
    })
}

/// Independent trajectories from random product states. Per-trajectory
/// seeds and Bloch angles are drawn from `seed` up front, so the result does
/// not depend on the thread count.
pub fn run_ensemble(
    config: &CircuitConfig,
    trajectories: usize,
    record_steps: &[usize],
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<((f64, f64), u64)> = (0..trajectories)
        .map(|_| (sample_bloch(&mut rng), rng.random::<u64>()))
        .collect();
    jobs.into_par_iter()
        .map(|(bloch, s)| run_trajectory(config, bloch, record_steps, s))
        .collect()
}
