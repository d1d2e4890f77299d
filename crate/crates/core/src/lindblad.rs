//! Vectorized Lindblad Liouvillians on periodic chains and their steady
//! states.
//!
//! Vectorization stacks rows: `vec(ρ)[i d + j] = ρ[i, j]`, so that
//! `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`. The generator is
//!
//! ```text
//! 𝓛 = i (I ⊗ Hᵀ - H ⊗ I)
//!   + ε Σ_{j,γ} rate_γ [ L ⊗ L̄ - ½ (L†L) ⊗ I - ½ I ⊗ (L†L)ᵀ ]
//! ```
//!
//! with every jump operator repeated on all translates of the chain.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndarray::{array, Array1, Array2, ShapeBuilder};
use ndarray_linalg::{FactorizeInto, Solve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gge::DensityMatrix;
use crate::linalg::{self, C64, I, ONE, ZERO};
use crate::pauli::{build_triplets, OperatorSpec};
use crate::sparse::CsrMatrix;

/// `4^7 = 16384` is the largest dense real system we factorize.
pub const MAX_LIOUVILLE_SITES: usize = 7;

/// A one- or two-site jump operator, repeated over every lattice offset.
#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub name: String,
    pub matrix: Array2<C64>,
    /// Site of the first factor relative to the translate index `j`.
    pub offset: usize,
    pub rate: f64,
}

impl JumpOperator {
    pub fn new(name: &str, matrix: Array2<C64>, offset: usize, rate: f64) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d || !(d == 2 || d == 4) {
            return Err(Error::arg(format!("jump operator {name} must be 2x2 or 4x4")));
        }
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::arg(format!("rate of {name} must be finite and non-negative, got {rate}")));
        }
        Ok(JumpOperator {
            name: name.to_string(),
            matrix,
            offset,
            rate,
        })
    }

    pub fn sites(&self) -> usize {
        self.matrix.nrows().trailing_zeros() as usize
    }
}

#[derive(Clone, Debug)]
pub struct LindbladSpec {
    pub operators: Vec<JumpOperator>,
    pub epsilon: f64,
    /// Free-form record of how the dissipators were drawn (angles, rates, seed).
    pub metadata: BTreeMap<String, String>,
}

impl LindbladSpec {
    pub fn new(operators: Vec<JumpOperator>, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::arg(format!("epsilon must be finite and non-negative, got {epsilon}")));
        }
        Ok(LindbladSpec {
            operators,
            epsilon,
            metadata: BTreeMap::new(),
        })
    }

    fn note(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `exp(-i ζ σ^z / 2)`.
pub fn rz(zeta: f64) -> Array2<C64> {
    array![[C64::from_polar(1.0, -zeta / 2.0), ZERO], [ZERO, C64::from_polar(1.0, zeta / 2.0)]]
}

/// `exp(-i φ σ^y / 2)`.
pub fn ry(phi: f64) -> Array2<C64> {
    let (s, co) = (phi / 2.0).sin_cos();
    array![[c(co), c(-s)], [c(s), c(co)]]
}

/// `σ^-`, taking up (index 0) to down (index 1).
pub fn sigma_minus() -> Array2<C64> {
    array![[ZERO, ZERO], [ONE, ZERO]]
}

pub fn projector_up() -> Array2<C64> {
    array![[ONE, ZERO], [ZERO, ZERO]]
}

pub fn projector_down() -> Array2<C64> {
    array![[ZERO, ZERO], [ZERO, ONE]]
}

/// `½(-σ^z ± i σ^y)`: raising (`+`) and lowering (`-`) along the x axis.
pub fn s_x(plus: bool) -> Array2<C64> {
    let sign = if plus { 1.0 } else { -1.0 };
    // i σ^y = [[0, 1], [-1, 0]]
    array![[c(-0.5), c(0.5 * sign)], [c(-0.5 * sign), c(0.5)]]
}

/// `½(1 ± σ^x)`.
pub fn p_x(up: bool) -> Array2<C64> {
    let s = if up { 0.5 } else { -0.5 };
    array![[c(0.5), c(s)], [c(s), c(0.5)]]
}

fn conjugate_by(u: &Array2<C64>, m: &Array2<C64>) -> Array2<C64> {
    u.dot(m).dot(&linalg::dagger(&u.view()))
}

/// Rotated decay and projection operators with angles drawn from `seed`:
/// `L1 = R P↑ R⁻¹` and `L2 = (R' σ^- R'⁻¹) ⊗ P↓` on neighbouring sites.
pub fn random_rotated_dissipators(seed: u64, epsilon: f64) -> Result<LindbladSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angle = || rng.random_range(-PI..=PI);
    let (zeta1, phi1, zeta2, phi2) = (angle(), angle(), angle(), angle());
    Ok(rotated_dissipators([zeta1, phi1, zeta2, phi2], epsilon)?.note("seed", seed))
}

/// [`random_rotated_dissipators`] with explicit angles `[ζ', φ', ζ, φ]`.
pub fn rotated_dissipators(angles: [f64; 4], epsilon: f64) -> Result<LindbladSpec> {
    let [zeta1, phi1, zeta2, phi2] = angles;
    let r1 = rz(zeta1).dot(&ry(phi1));
    let r2 = rz(zeta2).dot(&ry(phi2));
    let l1 = conjugate_by(&r1, &projector_up());
    let lowered = conjugate_by(&r2, &sigma_minus());
    let l2 = linalg::kron(&lowered.view(), &projector_down().view());
    let spec = LindbladSpec::new(
        vec![
            JumpOperator::new("rotated_projector", l1, 0, 1.0)?,
            JumpOperator::new("rotated_decay", l2, 0, 1.0)?,
        ],
        epsilon,
    )?;
    Ok(spec
        .note("family", "rotated")
        .note("angles", format!("{zeta1:.17e},{phi1:.17e},{zeta2:.17e},{phi2:.17e}")))
}

/// Baths favouring antiferromagnetic x-correlations, plus unit-rate
/// dephasing `σ^z` on every site.
pub fn structured_dissipators(rates: [f64; 4], epsilon: f64) -> Result<LindbladSpec> {
    if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::arg(format!("structured rates must lie in [0, 1], got {rates:?}")));
    }
    let k = |a: Array2<C64>, b: Array2<C64>| linalg::kron(&a.view(), &b.view());
    let ops = vec![
        JumpOperator::new("s+x p-x", k(s_x(true), p_x(false)), 0, rates[0])?,
        JumpOperator::new("p-x s+x", k(p_x(false), s_x(true)), 0, rates[1])?,
        JumpOperator::new("s-x p+x", k(s_x(false), p_x(true)), 0, rates[2])?,
        JumpOperator::new("p+x s-x", k(p_x(true), s_x(false)), 0, rates[3])?,
        JumpOperator::new("dephasing", crate::pauli::Pauli::Z.matrix(), 0, 1.0)?,
    ];
    Ok(LindbladSpec::new(ops, epsilon)?
        .note("family", "structured")
        .note("rates", format!("{:.17e},{:.17e},{:.17e},{:.17e}", rates[0], rates[1], rates[2], rates[3])))
}

/// [`structured_dissipators`] with rates drawn uniformly from `[0, 1]`.
pub fn random_structured_dissipators(seed: u64, epsilon: f64) -> Result<LindbladSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates = [(); 4].map(|_| rng.random_range(0.0..=1.0));
    Ok(structured_dissipators(rates, epsilon)?.note("seed", seed))
}

#[derive(Clone, Debug)]
pub struct Liouvillian {
    superoperator: CsrMatrix,
    sites: usize,
}

fn check_sites(n: usize) -> Result<()> {
    if n > MAX_LIOUVILLE_SITES {
        return Err(Error::Resource(format!(
            "Liouvillian on {n} sites exceeds the dense limit of {MAX_LIOUVILLE_SITES}"
        )));
    }
    if n == 0 {
        return Err(Error::arg("chain needs at least one site"));
    }
    Ok(())
}

pub fn build_liouvillian(h: &OperatorSpec, diss: &LindbladSpec, n: usize) -> Result<Liouvillian> {
    check_sites(n)?;
    let d = 1usize << n;
    let id = CsrMatrix::identity(d);
    let ham = CsrMatrix::from_triplets(d, d, build_triplets(h, n, true)?);
    let mut parts = vec![
        id.kron(&ham.transpose()).scaled(I),
        ham.kron(&id).scaled(-I),
    ];
    if diss.epsilon > 0.0 {
        for op in &diss.operators {
            if op.rate == 0.0 {
                continue;
            }
            let k = op.sites();
            if k > n {
                return Err(Error::arg(format!("{}-site jump operator {} on {n} sites", k, op.name)));
            }
            let weight = c(diss.epsilon * op.rate);
            for j in 0..n {
                let sites: Vec<usize> = (0..k).map(|q| (j + op.offset + q) % n).collect();
                let l = CsrMatrix::embed_local(&op.matrix, &sites, n);
                let ldl = l.adjoint().matmul(&l);
                parts.push(l.kron(&l.conj()).scaled(weight));
                parts.push(ldl.kron(&id).scaled(weight * -0.5));
                parts.push(id.kron(&ldl.transpose()).scaled(weight * -0.5));
            }
        }
    }
    Ok(Liouvillian {
        superoperator: CsrMatrix::sum(&parts),
        sites: n,
    })
}

impl Liouvillian {
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Hilbert-space dimension `2^N`.
    pub fn hilbert_dim(&self) -> usize {
        1 << self.sites
    }

    pub fn superoperator(&self) -> &CsrMatrix {
        &self.superoperator
    }

    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let d = self.hilbert_dim();
        let v: Vec<C64> = rho.iter().copied().collect();
        Array2::from_shape_vec((d, d), self.superoperator.matvec(&v)).expect("square")
    }

    /// `max |vec(I)ᵀ 𝓛|`, zero for a trace-preserving generator.
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.hilbert_dim();
        let mut id = vec![ZERO; d * d];
        for i in 0..d {
            id[i * d + i] = ONE;
        }
        self.superoperator.vecmat(&id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖𝓛 vec(ρ)‖₂`.
    pub fn residual(&self, rho: &Array2<C64>) -> f64 {
        self.apply(rho).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    pub residual: f64,
    /// Estimated smallest singular value of the trace-bordered system.
    pub sigma_min: f64,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Picks which diagonal equation is traded for the trace condition, and
    /// the start vector of the conditioning estimate.
    pub seed: u64,
    pub refinement_steps: usize,
    pub power_iterations: usize,
    pub degeneracy_threshold: f64,
    pub residual_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seed: 0,
            refinement_steps: 2,
            power_iterations: 12,
            degeneracy_threshold: 1e-10,
            residual_tolerance: 1e-8,
        }
    }
}

/// Real coordinates of a Hermitian `d x d` matrix: the diagonal, then
/// `(Re ρ_ij, Im ρ_ij)` for `i < j` in row order.
struct HermitianCoords {
    d: usize,
}

impl HermitianCoords {
    fn len(&self) -> usize {
        self.d * self.d
    }

    fn pair(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        self.d + 2 * (i * self.d - i * (i + 1) / 2 + (j - i - 1))
    }

    /// Nonzero entries of `vec(E_p)` for basis element `p`.
    fn basis(&self, p: usize) -> Vec<(usize, C64)> {
        let d = self.d;
        if p < d {
            return vec![(p * d + p, ONE)];
        }
        let q = (p - d) / 2;
        let imag = (p - d) % 2 == 1;
        // invert the triangular pair index
        let mut i = 0;
        let mut start = 0;
        while start + (d - i - 1) <= q {
            start += d - i - 1;
            i += 1;
        }
        let j = i + 1 + (q - start);
        if imag {
            vec![(i * d + j, I), (j * d + i, -I)]
        } else {
            vec![(i * d + j, ONE), (j * d + i, ONE)]
        }
    }

    fn to_matrix(&self, x: &[f64]) -> Array2<C64> {
        let d = self.d;
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            m[[i, i]] = c(x[i]);
            for j in i + 1..d {
                let p = self.pair(i, j);
                m[[i, j]] = C64::new(x[p], x[p + 1]);
                m[[j, i]] = C64::new(x[p], -x[p + 1]);
            }
        }
        m
    }

    /// Coordinates of a Hermitian matrix given as a row-stacked vector.
    fn coords_of(&self, v: &[C64], out: &mut [f64]) {
        let d = self.d;
        for i in 0..d {
            out[i] = v[i * d + i].re;
            for j in i + 1..d {
                let p = self.pair(i, j);
                out[p] = v[i * d + j].re;
                out[p + 1] = v[i * d + j].im;
            }
        }
    }
}

/// Steady state with default solver options.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    steady_state_with(l, &SolverOptions::default())
}

/// Solves `𝓛 vec(ρ) = 0, Tr ρ = 1` as a dense real system in Hermitian
/// coordinates: one diagonal equation (redundant by trace preservation) is
/// replaced by the trace condition.
pub fn steady_state_with(l: &Liouvillian, opts: &SolverOptions) -> Result<SteadyState> {
    let d = l.hilbert_dim();
    let coords = HermitianCoords { d };
    let n = coords.len();
    let anchor = (opts.seed % d as u64) as usize;

    let columns = l.superoperator.transpose();
    let mut a = Array2::<f64>::zeros((n, n).f());
    let mut scratch = vec![ZERO; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut col = vec![0.0; n];
    for p in 0..n {
        for (k, w) in coords.basis(p) {
            for (r, v) in columns.row(k) {
                if scratch[r] == ZERO {
                    touched.push(r);
                }
                scratch[r] += w * v;
            }
        }
        coords.coords_of(&scratch, &mut col);
        a.column_mut(p).assign(&Array1::from(col.clone()));
        for &r in &touched {
            scratch[r] = ZERO;
        }
        touched.clear();
        col.iter_mut().for_each(|x| *x = 0.0);
    }
    for p in 0..n {
        a[[anchor, p]] = if p < d { 1.0 } else { 0.0 };
    }

    // Bordered operator applied through the sparse generator, used for
    // refinement after the dense matrix is consumed by the factorization.
    let bordered = |x: &[f64]| -> Vec<f64> {
        let rho = coords.to_matrix(x);
        let image = l.apply(&rho);
        let mut out = vec![0.0; n];
        coords.coords_of(image.as_slice().unwrap(), &mut out);
        out[anchor] = x[..d].iter().sum();
        out
    };

    let lu = match a.factorize_into() {
        Ok(lu) => lu,
        Err(_) => return Err(Error::Degenerate { sigma: 0.0 }),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
    x /= x.dot(&x).sqrt();
    let mut growth = 0.0;
    for _ in 0..opts.power_iterations {
        let y = lu.solve(&x)?;
        let z = lu.solve_t(&y)?;
        growth = z.dot(&z).sqrt();
        if !growth.is_finite() {
            return Err(Error::Degenerate { sigma: 0.0 });
        }
        x = z / growth;
    }
    let sigma_min = if growth > 0.0 { growth.powf(-0.5) } else { f64::INFINITY };
    if sigma_min < opts.degeneracy_threshold {
        return Err(Error::Degenerate { sigma: sigma_min });
    }

    let mut rhs = Array1::<f64>::zeros(n);
    rhs[anchor] = 1.0;
    let mut sol = lu.solve(&rhs)?;
    for _ in 0..opts.refinement_steps {
        let r: Array1<f64> = &rhs - &Array1::from(bordered(sol.as_slice().unwrap()));
        sol += &lu.solve(&r)?;
    }

    let mut rho = coords.to_matrix(sol.as_slice().unwrap());
    let tr = linalg::trace(&rho.view()).re;
    rho.mapv_inplace(|z| z / tr);
    linalg::hermitize(&mut rho);
    let residual = l.residual(&rho);
    if residual.is_nan() || residual > opts.residual_tolerance {
        return Err(Error::Convergence {
            iterations: opts.refinement_steps,
            residual,
        });
    }
    let rho = DensityMatrix::new(rho)?;
    let min_eig = rho.min_eigenvalue()?;
    if min_eig < -1e-8 {
        return Err(Error::Internal(format!("steady state has eigenvalue {min_eig:.3e}")));
    }
    Ok(SteadyState {
        rho,
        residual,
        sigma_min,
    })
}
