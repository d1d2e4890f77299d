//! (Generalized) Gibbs ensembles `exp(sum_i λ_i C_i) / Z` by dense
//! eigendecomposition, and Pauli-string expectation values of density
//! matrices.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::pauli::{build_dense, enumerate_support_strings, OperatorSpec, PauliLabel, PlacedPauli};

/// Largest chain handled by the dense Gibbs engine.
pub const MAX_GGE_SITES: usize = 12;

/// Lagrange multipliers, one per charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeVector(pub Vec<f64>);

impl LagrangeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        linalg::check_finite(&values, "Lagrange multipliers")?;
        Ok(LagrangeVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        LagrangeVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Dense density matrix on a chain of `sites` spins.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: Array2<C64>,
    sites: usize,
}

impl DensityMatrix {
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c || !r.is_power_of_two() || r < 2 {
            return Err(Error::arg(format!("density matrix must be 2^L square, got {r}x{c}")));
        }
        Ok(DensityMatrix {
            sites: r.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn maximally_mixed(sites: usize) -> Self {
        let dim = 1usize << sites;
        DensityMatrix {
            matrix: Array2::from_diag_elem(dim, C64::new(1.0 / dim as f64, 0.0)),
            sites,
        }
    }

    /// `|ψ><ψ|` for a normalized state vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let dim = psi.len();
        let m = Array2::from_shape_fn((dim, dim), |(i, j)| psi[i] * psi[j].conj());
        DensityMatrix::new(m)
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix.view())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.matrix.view())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::eigvalsh(&self.matrix.view())?[0])
    }

    /// `Tr[ρ P]` for a placed Pauli string.
    pub fn pauli_expectation(&self, p: &PlacedPauli) -> C64 {
        pauli_trace(&self.matrix.view(), p)
    }

    /// `Tr[ρ O]` for an operator spec, periodic boundaries.
    pub fn expectation(&self, spec: &OperatorSpec) -> Result<f64> {
        let mut acc = C64::new(0.0, 0.0);
        for (c, p) in spec.placed_terms(self.sites, true)? {
            acc += self.pauli_expectation(&p) * c;
        }
        Ok(acc.re)
    }
}

fn pauli_trace(rho: &ArrayView2<C64>, p: &PlacedPauli) -> C64 {
    // (ρP)_{bb} = ρ[b, b^flip] * phase(b)
    let mut acc = C64::new(0.0, 0.0);
    for b in 0..rho.nrows() {
        let (image, phase) = p.apply(b);
        acc += rho[[b, image]] * phase;
    }
    acc
}

/// Expectation values `Tr[ρ O_1(α)]` over the canonical labels of one support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationVector {
    pub values: Vec<f64>,
    pub support: usize,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

impl ObservationVector {
    pub fn new(values: Vec<f64>, support: usize) -> Result<Self> {
        let expected = 3 * 4usize.pow(support as u32 - 1);
        if values.len() != expected {
            return Err(Error::arg(format!(
                "support {support} needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(ObservationVector {
            values,
            support,
            provenance: BTreeMap::new(),
        })
    }

    pub fn labels(&self) -> Vec<PauliLabel> {
        enumerate_support_strings(self.support).expect("support validated on construction")
    }

    /// Value of one label, padded or trimmed to this vector's support.
    pub fn get(&self, label: &PauliLabel) -> Result<f64> {
        let padded = label.padded(self.support)?;
        let idx = label_index(&padded)?;
        Ok(self.values[idx])
    }

    pub fn with_provenance(mut self, key: &str, value: impl ToString) -> Self {
        self.provenance.insert(key.to_string(), value.to_string());
        self
    }
}

/// Position of a canonical label inside [`enumerate_support_strings`].
pub fn label_index(label: &PauliLabel) -> Result<usize> {
    use crate::pauli::Pauli;
    let sym = label.symbols();
    let code = |p: Pauli| match p {
        Pauli::I => 0,
        Pauli::X => 1,
        Pauli::Y => 2,
        Pauli::Z => 3,
    };
    if sym[0] == Pauli::I {
        return Err(Error::arg("the identity has no observation slot"));
    }
    let mut idx = code(sym[0]) - 1;
    for &p in &sym[1..] {
        idx = idx * 4 + code(p);
    }
    Ok(idx)
}

/// `Tr[ρ O_1(α)]` for every canonical label of `support`, with `O_1` acting
/// on sites `0..support`.
pub fn observe(rho: &DensityMatrix, support: usize) -> Result<ObservationVector> {
    if support > rho.sites() {
        return Err(Error::arg(format!(
            "support {support} exceeds the {} sites of the state",
            rho.sites()
        )));
    }
    let labels = enumerate_support_strings(support)?;
    let values = labels
        .iter()
        .map(|l| rho.pauli_expectation(&l.placed(0, rho.sites())).re)
        .collect();
    ObservationVector::new(values, support)
}

/// A GGE density matrix together with the parameters that produced it.
#[derive(Clone, Debug)]
pub struct GgeState {
    pub rho: DensityMatrix,
    pub lambda: LagrangeVector,
    pub charge_ids: Vec<String>,
}

fn check_sites(n: usize) -> Result<()> {
    if n == 0 || n > MAX_GGE_SITES {
        return Err(Error::arg(format!("Gibbs engine supports 1..={MAX_GGE_SITES} sites, got {n}")));
    }
    Ok(())
}

fn accumulate_dense(charges: &[OperatorSpec], weights: &[f64], n: usize) -> Result<Array2<C64>> {
    let dim = 1usize << n;
    let mut a = Array2::<C64>::zeros((dim, dim));
    for (c, &w) in charges.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let d = build_dense(c, n, true)?;
        a.scaled_add(C64::new(w, 0.0), &d.matrix);
    }
    let defect = linalg::hermiticity_defect(&a.view());
    let scale = linalg::frobenius(&a.view()).max(1.0);
    if defect > 1e-10 * scale {
        return Err(Error::Internal(format!("accumulated exponent is not Hermitian (defect {defect:.3e})")));
    }
    Ok(a)
}

/// Normalized Boltzmann weights `exp(e - max e) / sum`.
fn boltzmann(energies: &[f64]) -> Vec<f64> {
    let top = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = energies.iter().map(|e| (e - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

/// `ρ = exp(sum_i λ_i C_i) / Tr[...]` on a periodic chain of `n` sites.
pub fn gge_state(charges: &[OperatorSpec], lambda: &LagrangeVector, n: usize) -> Result<GgeState> {
    check_sites(n)?;
    if charges.len() != lambda.len() {
        return Err(Error::arg(format!(
            "{} charges but {} Lagrange multipliers",
            charges.len(),
            lambda.len()
        )));
    }
    let a = accumulate_dense(charges, &lambda.0, n)?;
    let (e, v) = linalg::eigh(&a.view())?;
    let w = boltzmann(e.as_slice().unwrap());
    let mut rho = linalg::reassemble(&v.view(), &w);
    linalg::hermitize(&mut rho);
    Ok(GgeState {
        rho: DensityMatrix::new(rho)?,
        lambda: lambda.clone(),
        charge_ids: (0..charges.len()).map(|i| format!("C{i}")).collect(),
    })
}

/// Gibbs state `exp(λ_0 H) / Z` whose energy `Tr[ρ H]` equals `energy`.
/// Returns `λ_0` (minus the inverse temperature) and the state.
pub fn gibbs_with_energy(h: &OperatorSpec, energy: f64, n: usize) -> Result<(f64, GgeState)> {
    check_sites(n)?;
    let a = accumulate_dense(std::slice::from_ref(h), &[1.0], n)?;
    let (e, v) = linalg::eigh(&a.view())?;
    let e = e.to_vec();
    let (lo, hi) = (e[0], e[e.len() - 1]);
    if !(energy > lo && energy < hi) {
        return Err(Error::arg(format!("energy {energy} outside the open spectral range ({lo}, {hi})")));
    }
    let mean = |l: f64| -> f64 {
        let scaled: Vec<f64> = e.iter().map(|x| l * x).collect();
        boltzmann(&scaled).iter().zip(&e).map(|(w, x)| w * x).sum()
    };
    let (mut a_lo, mut a_hi) = (-1.0, 1.0);
    while mean(a_lo) > energy && a_lo > -1e4 {
        a_lo *= 2.0;
    }
    while mean(a_hi) < energy && a_hi < 1e4 {
        a_hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a_lo + a_hi);
        if mean(mid) < energy {
            a_lo = mid;
        } else {
            a_hi = mid;
        }
        if a_hi - a_lo < 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    let l0 = 0.5 * (a_lo + a_hi);
    let scaled: Vec<f64> = e.iter().map(|x| l0 * x).collect();
    let mut rho = linalg::reassemble(&v.view(), &boltzmann(&scaled));
    linalg::hermitize(&mut rho);
    Ok((
        l0,
        GgeState {
            rho: DensityMatrix::new(rho)?,
            lambda: LagrangeVector(vec![l0]),
            charge_ids: vec!["C0".into()],
        },
    ))
}

/// `<v_k| P |v_k>` for every column `v_k` of `v`.
fn diagonal_elements(v: &ArrayView2<C64>, p: &PlacedPauli) -> Array1<f64> {
    let (dim, cols) = v.dim();
    let mut acc = vec![C64::new(0.0, 0.0); cols];
    for b in 0..dim {
        let (image, phase) = p.apply(b);
        let src = v.row(b);
        let dst = v.row(image);
        for ((a, &x), &y) in acc.iter_mut().zip(src.iter()).zip(dst.iter()) {
            *a += y.conj() * phase * x;
        }
    }
    acc.into_iter().map(|z| z.re).collect()
}

/// Gibbs-state expectation values `Tr[O_1(α) e^{H}] / Tr[e^{H}]` of the
/// given labels for the operator `coeffs` (inverse temperature absorbed).
pub fn thermal_expectations(coeffs: &OperatorSpec, labels: &[PauliLabel], n: usize) -> Result<Vec<f64>> {
    check_sites(n)?;
    let a = accumulate_dense(std::slice::from_ref(coeffs), &[1.0], n)?;
    let (e, v) = linalg::eigh(&a.view())?;
    let w = Array1::from(boltzmann(e.as_slice().unwrap()));
    labels
        .iter()
        .map(|l| {
            if l.support() > n {
                return Err(Error::arg(format!("label {l} longer than the chain")));
            }
            Ok(diagonal_elements(&v.view(), &l.placed(0, n)).dot(&w))
        })
        .collect()
}

/// Observation vector of the Gibbs state of `coeffs` at `λ_0 = 1`.
pub fn thermal_oracle(coeffs: &OperatorSpec, support: usize, n: usize) -> Result<ObservationVector> {
    if support > n {
        return Err(Error::arg(format!("support {support} exceeds chain length {n}")));
    }
    let labels = enumerate_support_strings(support)?;
    let values = thermal_expectations(coeffs, &labels, n)?;
    ObservationVector::new(values, support)
}

/// Joint eigenbasis of a commuting charge set, cached so that observation
/// vectors for many Lagrange vectors cost one matrix-vector product each.
#[derive(Clone, Debug)]
pub struct GibbsSpectrum {
    sites: usize,
    support: usize,
    /// Eigenvalue of charge `i` on joint eigenvector `k`.
    charge_values: Array2<f64>,
    /// `<v_k| O_1(α) |v_k>` for every canonical label `α`.
    label_diagonals: Array2<f64>,
}

/// Incommensurate weights for the generic combination that is diagonalized.
const GENERIC_WEIGHTS: [f64; 6] = [
    1.0,
    0.577_215_664_901_532_9,
    std::f64::consts::FRAC_1_PI,
    0.207_879_576_350_761_9,
    0.141_421_356_237_309_5,
    0.101_321_183_642_337_8,
];

impl GibbsSpectrum {
    pub fn new(charges: &[OperatorSpec], n: usize, support: usize) -> Result<Self> {
        check_sites(n)?;
        if charges.is_empty() || charges.len() > GENERIC_WEIGHTS.len() {
            return Err(Error::arg(format!("1..={} charges supported", GENERIC_WEIGHTS.len())));
        }
        if support > n {
            return Err(Error::arg(format!("support {support} exceeds chain length {n}")));
        }
        let labels = enumerate_support_strings(support)?;
        let dense: Vec<Array2<C64>> = charges
            .iter()
            .map(|c| build_dense(c, n, true).map(|d| d.matrix))
            .collect::<Result<_>>()?;
        let mut generic = Array2::<C64>::zeros(dense[0].dim());
        for (d, &w) in dense.iter().zip(&GENERIC_WEIGHTS) {
            generic.scaled_add(C64::new(w, 0.0), d);
        }
        let (_, v) = linalg::eigh(&generic.view())?;
        let dim = v.nrows();
        let mut charge_values = Array2::<f64>::zeros((charges.len(), dim));
        for (i, d) in dense.iter().enumerate() {
            let cv = d.dot(&v);
            let scale = linalg::frobenius(&d.view()) / (dim as f64).sqrt();
            for k in 0..dim {
                let col = v.column(k);
                let img = cv.column(k);
                let value: C64 = col.iter().zip(img.iter()).map(|(a, b)| a.conj() * b).sum();
                let residual = img
                    .iter()
                    .zip(col.iter())
                    .map(|(b, a)| (b - a * value.re).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if residual > 1e-8 * scale.max(1.0) {
                    return Err(Error::Internal(format!(
                        "charges are not jointly diagonal (charge {i}, vector {k}, residual {residual:.2e})"
                    )));
                }
                charge_values[[i, k]] = value.re;
            }
        }
        let mut label_diagonals = Array2::<f64>::zeros((labels.len(), dim));
        for (a, l) in labels.iter().enumerate() {
            label_diagonals
                .row_mut(a)
                .assign(&diagonal_elements(&v.view(), &l.placed(0, n)));
        }
        Ok(GibbsSpectrum {
            sites: n,
            support,
            charge_values,
            label_diagonals,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn n_charges(&self) -> usize {
        self.charge_values.nrows()
    }

    fn weights(&self, lambda: &LagrangeVector) -> Result<Array1<f64>> {
        if lambda.len() != self.n_charges() {
            return Err(Error::arg(format!(
                "{} charges but {} Lagrange multipliers",
                self.n_charges(),
                lambda.len()
            )));
        }
        let exponent = self.charge_values.t().dot(&Array1::from(lambda.0.clone()));
        Ok(Array1::from(boltzmann(exponent.as_slice().unwrap())))
    }

    pub fn observe(&self, lambda: &LagrangeVector) -> Result<ObservationVector> {
        let w = self.weights(lambda)?;
        let values = self.label_diagonals.dot(&w).to_vec();
        ObservationVector::new(values, self.support)
    }

    /// `<C_i>` for every charge.
    pub fn charge_expectations(&self, lambda: &LagrangeVector) -> Result<Vec<f64>> {
        let w = self.weights(lambda)?;
        Ok(self.charge_values.dot(&w).to_vec())
    }

    /// Spectral extent of each charge, useful for choosing Lagrange ranges.
    pub fn charge_ranges(&self) -> Vec<(f64, f64)> {
        self.charge_values
            .axis_iter(Axis(0))
            .map(|row| {
                row.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{ising_charge, ising_hamiltonian, Term};

    fn taylor_expm(a: &Array2<C64>) -> Array2<C64> {
        // Scaling and squaring with a long Taylor series: independent of eigh.
        let norm = linalg::frobenius(&a.view());
        let mut s = 0;
        while norm / 2f64.powi(s) > 0.5 {
            s += 1;
        }
        let scaled = a.mapv(|z| z / 2f64.powi(s));
        let dim = a.nrows();
        let mut term = linalg::identity(dim);
        let mut sum = linalg::identity(dim);
        for k in 1..30 {
            term = term.dot(&scaled).mapv(|z| z / k as f64);
            sum += &term;
        }
        for _ in 0..s {
            sum = sum.dot(&sum);
        }
        sum
    }

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let charges = [ising_charge(0, 1.0, 0.6), ising_charge(1, 1.0, 0.6)];
        let st = gge_state(&charges, &LagrangeVector::zeros(2), 4).unwrap();
        let mm = DensityMatrix::maximally_mixed(4);
        assert!(linalg::max_abs_diff(&st.rho.matrix().view(), &mm.matrix().view()) < 1e-14);
        let obs = observe(&st.rho, 3).unwrap();
        assert!(obs.values.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn gge_invariants_hold() {
        let charges = [ising_charge(0, 1.0, 0.6), ising_charge(1, 1.0, 0.6), ising_charge(2, 1.0, 0.6)];
        let st = gge_state(&charges, &LagrangeVector::new(vec![-1.7, 0.9, 1.4]).unwrap(), 6).unwrap();
        assert!((st.rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(st.rho.hermiticity_defect() < 1e-12);
        assert!(st.rho.min_eigenvalue().unwrap() >= -1e-12);
    }

    #[test]
    fn product_eigenstate_observations() {
        let mut psi = vec![C64::new(0.0, 0.0); 8];
        psi[0] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let obs = observe(&rho, 3).unwrap();
        assert_eq!(obs.get(&PauliLabel::parse("z").unwrap()).unwrap(), 1.0);
        assert_eq!(obs.get(&PauliLabel::parse("x").unwrap()).unwrap(), 0.0);
        assert_eq!(obs.get(&PauliLabel::parse("zzz").unwrap()).unwrap(), 1.0);
        assert!(observe(&rho, 4).is_err());
    }

    #[test]
    fn gibbs_state_matches_taylor_exponential() {
        let h = ising_hamiltonian(1.0, 0.6, 0.0);
        let st = gge_state(std::slice::from_ref(&h), &LagrangeVector(vec![0.5]), 6).unwrap();
        let a = build_dense(&h, 6, true).unwrap().matrix.mapv(|z| z * 0.5);
        let e = taylor_expm(&a);
        let z = linalg::trace(&e.view());
        let oracle = DensityMatrix::new(e.mapv(|x| x / z)).unwrap();
        let ours = observe(&st.rho, 3).unwrap();
        let theirs = observe(&oracle, 3).unwrap();
        for (a, b) in ours.values.iter().zip(&theirs.values) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn energy_grows_with_lambda() {
        // d<H>/dλ = Var(H) >= 0, checked by finite differences.
        let h = ising_hamiltonian(1.0, 0.6, 0.0);
        let spec = GibbsSpectrum::new(std::slice::from_ref(&h), 8, 2).unwrap();
        let e = |l: f64| spec.charge_expectations(&LagrangeVector(vec![l])).unwrap()[0];
        let mut prev = e(-2.0);
        let mut l = -2.0;
        while l < 2.0 {
            l += 0.1;
            let cur = e(l);
            let fd = (e(l + 1e-4) - e(l - 1e-4)) / 2e-4;
            assert!(fd >= 0.0);
            assert!(cur >= prev);
            prev = cur;
        }
    }

    #[test]
    fn spectral_shift_leaves_state_unchanged() {
        let h = ising_hamiltonian(1.0, 0.6, 0.0);
        let shifted = OperatorSpec::combine(
            &[h.clone(), OperatorSpec::from_pairs([(1.0, "0")]).unwrap()],
            &[1.0, 3.7],
        )
        .unwrap();
        let a = gge_state(&[h], &LagrangeVector(vec![1.3]), 6).unwrap();
        let b = gge_state(&[shifted], &LagrangeVector(vec![1.3]), 6).unwrap();
        assert!(linalg::max_abs_diff(&a.rho.matrix().view(), &b.rho.matrix().view()) < 1e-12);
    }

    #[test]
    fn huge_lambda_does_not_overflow() {
        let h = ising_hamiltonian(1.0, 0.6, 0.0);
        let st = gge_state(&[h], &LagrangeVector(vec![-400.0]), 4).unwrap();
        assert!((st.rho.trace().re - 1.0).abs() < 1e-12);
        assert!(st.rho.matrix().iter().all(|z| z.re.is_finite()));
    }

    #[test]
    fn thermal_oracle_consistency() {
        let h = ising_hamiltonian(1.0, 0.6, 0.0);
        let from_state = observe(&gge_state(std::slice::from_ref(&h), &LagrangeVector(vec![1.0]), 6).unwrap().rho, 3).unwrap();
        let oracle = thermal_oracle(&h, 3, 6).unwrap();
        for (a, b) in from_state.values.iter().zip(&oracle.values) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = OperatorSpec::from_pairs([(0.0, "zz")]).unwrap();
        assert!(thermal_oracle(&zero, 3, 6).unwrap().values.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn thermal_oracle_jacobian_is_symmetric() {
        // d<O_a>/d c_b and d<O_b>/d c_a coincide (both are Kubo-Mori
        // covariances up to the translation factor), checked by central
        // differences.
        let labels = [PauliLabel::parse("zz").unwrap(), PauliLabel::parse("x").unwrap()];
        let at = |czz: f64, cx: f64| {
            let spec = OperatorSpec::from_pairs([(czz, "zz"), (cx, "x")]).unwrap();
            thermal_expectations(&spec, &labels, 6).unwrap()
        };
        let h = 1e-5;
        let (c0, c1) = (0.7, 0.4);
        let d_dzz: Vec<f64> = at(c0 + h, c1).iter().zip(at(c0 - h, c1)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let d_dx: Vec<f64> = at(c0, c1 + h).iter().zip(at(c0, c1 - h)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        assert!((d_dzz[1] - d_dx[0]).abs() < 1e-7, "{} vs {}", d_dzz[1], d_dx[0]);
        // continuity: small perturbations move outputs by O(h)
        let base = at(c0, c1);
        let near = at(c0 + 1e-9, c1);
        assert!(base.iter().zip(near).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn spectrum_matches_direct_state() {
        let charges = [ising_charge(0, 1.0, 0.6), ising_charge(1, 1.0, 0.6), ising_charge(2, 1.0, 0.6)];
        let spec = GibbsSpectrum::new(&charges, 6, 3).unwrap();
        let lambda = LagrangeVector(vec![0.8, -1.1, 0.4]);
        let fast = spec.observe(&lambda).unwrap();
        let st = gge_state(&charges, &lambda, 6).unwrap();
        let slow = observe(&st.rho, 3).unwrap();
        for (a, b) in fast.values.iter().zip(&slow.values) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
        let means = spec.charge_expectations(&lambda).unwrap();
        for (i, c) in charges.iter().enumerate() {
            assert!((means[i] - st.rho.expectation(c).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn charge_expectation_from_observations() {
        // Tr[ρ C] two ways: dense charge vs. weighted sum of observed strings.
        let c2 = ising_charge(2, 1.0, 0.6);
        let charges = [ising_charge(0, 1.0, 0.6), c2.clone()];
        let st = gge_state(&charges, &LagrangeVector(vec![0.6, -0.9]), 8).unwrap();
        let obs = observe(&st.rho, 3).unwrap();
        let via_strings: f64 = c2
            .terms()
            .iter()
            .map(|t: &Term| t.coefficient * obs.get(&t.label).unwrap())
            .sum::<f64>()
            * 8.0;
        let dense = st.rho.expectation(&c2).unwrap();
        assert!((via_strings - dense).abs() < 1e-10);
    }

    #[test]
    fn energy_matching_inverts_temperature() {
        let h = ising_hamiltonian(1.0, 0.6, 0.3);
        let st = gge_state(std::slice::from_ref(&h), &LagrangeVector(vec![-0.7]), 6).unwrap();
        let e = st.rho.expectation(&h).unwrap();
        let (l0, matched) = gibbs_with_energy(&h, e, 6).unwrap();
        assert!((l0 + 0.7).abs() < 1e-9);
        assert!(linalg::max_abs_diff(&matched.rho.matrix().view(), &st.rho.matrix().view()) < 1e-10);
        assert!(gibbs_with_energy(&h, 1e3, 6).is_err());
    }

    #[test]
    fn argument_errors() {
        let h = ising_hamiltonian(1.0, 0.6, 0.0);
        assert!(gge_state(std::slice::from_ref(&h), &LagrangeVector(vec![1.0, 2.0]), 4).is_err());
        assert!(gge_state(std::slice::from_ref(&h), &LagrangeVector(vec![1.0]), 13).is_err());
        assert!(LagrangeVector::new(vec![f64::NAN]).is_err());
        assert!(thermal_oracle(&h, 5, 4).is_err());
    }

    #[test]
    fn label_index_matches_enumeration() {
        for s in 1..=3 {
            for (i, l) in enumerate_support_strings(s).unwrap().iter().enumerate() {
                assert_eq!(label_index(l).unwrap(), i);
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn observations_are_bounded(l0 in -3.0f64..3.0, l1 in -3.0f64..3.0) {
            let charges = [ising_charge(0, 1.0, 0.6), ising_charge(2, 1.0, 0.6)];
            let st = gge_state(&charges, &LagrangeVector(vec![l0, l1]), 5).unwrap();
            let obs = observe(&st.rho, 3).unwrap();
            proptest::prop_assert!(obs.values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }
}
