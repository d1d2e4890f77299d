//! Pauli-string algebra on spin-1/2 chains.
//!
//! Basis convention: site `j` of an `n`-site chain is bit `n - 1 - j` of the
//! computational basis index, so dense matrices follow the usual Kronecker
//! ordering with site 0 leftmost. Bit value 0 is spin up (`σ^z = +1`).

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, I, ONE, ZERO};

/// Largest chain for which dense `2^L x 2^L` operators are built.
pub const MAX_DENSE_SITES: usize = 14;
/// Largest tomography window supported by [`enumerate_support_strings`].
pub const MAX_SUPPORT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => '0',
            Pauli::X => 'x',
            Pauli::Y => 'y',
            Pauli::Z => 'z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Pauli> {
        match c {
            '0' | 'i' | 'I' => Some(Pauli::I),
            'x' | 'X' => Some(Pauli::X),
            'y' | 'Y' => Some(Pauli::Y),
            'z' | 'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn matrix(self) -> Array2<C64> {
        let m = match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        };
        Array2::from_shape_fn((2, 2), |(r, c)| m[r][c])
    }
}

/// A string of Pauli symbols on consecutive sites, e.g. `zxz` or `x00`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliLabel(Vec<Pauli>);

impl PauliLabel {
    /// Builds a canonical label: non-empty, and the first symbol is not the
    /// identity unless every symbol is.
    pub fn new(symbols: Vec<Pauli>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::arg("Pauli label must have at least one symbol"));
        }
        let identity = symbols.iter().all(|&p| p == Pauli::I);
        if symbols[0] == Pauli::I && !identity {
            return Err(Error::arg(format!(
                "Pauli label {} is not left-aligned",
                symbols.iter().map(|p| p.symbol()).collect::<String>()
            )));
        }
        Ok(PauliLabel(symbols))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| Pauli::from_symbol(c).ok_or_else(|| Error::arg(format!("bad Pauli symbol {c:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        PauliLabel::new(symbols)
    }

    /// `S^{ab}_{0,d} = σ^a_0 σ^x_1 ... σ^x_{d-1} σ^b_d`; `d = 0` multiplies on one site.
    pub fn jordan_wigner_string(a: Pauli, b: Pauli, distance: usize) -> Result<Self> {
        if distance == 0 {
            return Err(Error::arg("string operator needs distance >= 1"));
        }
        let mut symbols = vec![Pauli::X; distance + 1];
        symbols[0] = a;
        symbols[distance] = b;
        PauliLabel::new(symbols)
    }

    pub fn support(&self) -> usize {
        self.0.len()
    }

    pub fn symbols(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Drops trailing identities (`x00` -> `x`).
    pub fn trimmed(&self) -> PauliLabel {
        let mut v = self.0.clone();
        while v.len() > 1 && *v.last().unwrap() == Pauli::I {
            v.pop();
        }
        PauliLabel(v)
    }

    /// Pads with trailing identities up to `len` symbols.
    pub fn padded(&self, len: usize) -> Result<PauliLabel> {
        let trimmed = self.trimmed();
        if trimmed.support() > len {
            return Err(Error::arg(format!("label {self} does not fit in support {len}")));
        }
        let mut v = trimmed.0;
        v.resize(len, Pauli::I);
        Ok(PauliLabel(v))
    }

    /// Places the string with its first symbol on `offset` of an `n`-site ring.
    pub fn placed(&self, offset: usize, n: usize) -> PlacedPauli {
        let mut flip = 0usize;
        let mut phase_mask = 0usize;
        let mut n_y = 0u32;
        for (k, &p) in self.0.iter().enumerate() {
            let bit = 1usize << (n - 1 - (offset + k) % n);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    phase_mask |= bit;
                    n_y += 1;
                }
                Pauli::Z => phase_mask |= bit,
            }
        }
        PlacedPauli {
            flip,
            phase_mask,
            i_power: n_y % 4,
        }
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PauliLabel::parse(s)
    }
}

impl Serialize for PauliLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PauliLabel::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A Pauli string placed on a chain, acting on basis indices as a signed
/// permutation: `P|b> = i^k (-1)^{popcount(b & phase_mask)} |b ^ flip>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlacedPauli {
    pub flip: usize,
    pub phase_mask: usize,
    i_power: u32,
}

impl PlacedPauli {
    #[inline]
    pub fn apply(&self, b: usize) -> (usize, C64) {
        let sign = if (b & self.phase_mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
        let phase = match self.i_power {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        };
        (b ^ self.flip, phase)
    }

    /// `<b ^ flip| P |b>` as a real sign when the string has an even number of `y`.
    #[inline]
    pub fn is_real(&self) -> bool {
        self.i_power.is_multiple_of(2)
    }
}

/// All left-aligned, non-identity labels of exactly `support` symbols, in
/// lexicographic order over `0 < x < y < z`.
pub fn enumerate_support_strings(support: usize) -> Result<Vec<PauliLabel>> {
    if !(1..=MAX_SUPPORT).contains(&support) {
        return Err(Error::arg(format!("support must lie in 1..={MAX_SUPPORT}, got {support}")));
    }
    let tail = 4usize.pow(support as u32 - 1);
    let mut out = Vec::with_capacity(3 * tail);
    for first in [Pauli::X, Pauli::Y, Pauli::Z] {
        for code in 0..tail {
            let mut symbols = Vec::with_capacity(support);
            symbols.push(first);
            for k in (0..support - 1).rev() {
                symbols.push(Pauli::ALL[(code >> (2 * k)) & 3]);
            }
            out.push(PauliLabel(symbols));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: f64,
    pub label: PauliLabel,
}

impl Term {
    pub fn new(coefficient: f64, label: &str) -> Result<Self> {
        Ok(Term {
            coefficient,
            label: PauliLabel::parse(label)?,
        })
    }
}

/// A weighted sum of Pauli strings. Translationally invariant specs stand for
/// `sum_j` over every lattice offset; local specs act once from site 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    translationally_invariant: bool,
    support: usize,
    #[serde(rename = "term", default)]
    terms: Vec<Term>,
}

impl OperatorSpec {
    pub fn new(terms: Vec<Term>, translationally_invariant: bool) -> Result<Self> {
        for t in &terms {
            if !t.coefficient.is_finite() {
                return Err(Error::arg(format!("coefficient of {} is not finite", t.label)));
            }
            if t.label.is_identity() && t.label.support() > 1 {
                return Err(Error::arg("identity terms must have support 1"));
            }
        }
        let support = terms.iter().map(|t| t.label.support()).max().unwrap_or(1);
        Ok(OperatorSpec {
            translationally_invariant,
            support,
            terms,
        })
    }

    /// `sum_j sum_a c_a O_j(a)`.
    pub fn translation_invariant(terms: Vec<Term>) -> Result<Self> {
        OperatorSpec::new(terms, true)
    }

    /// Terms acting once, anchored at site 0.
    pub fn local(terms: Vec<Term>) -> Result<Self> {
        OperatorSpec::new(terms, false)
    }

    /// Translationally invariant sum built from `(coefficient, label)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (f64, &'a str)>) -> Result<Self> {
        let terms = pairs
            .into_iter()
            .map(|(c, l)| Term::new(c, l))
            .collect::<Result<Vec<_>>>()?;
        OperatorSpec::translation_invariant(terms)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn support(&self) -> usize {
        self.support
    }

    pub fn is_translationally_invariant(&self) -> bool {
        self.translationally_invariant
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient == 0.0)
    }

    pub fn scaled(&self, s: f64) -> OperatorSpec {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coefficient *= s;
        }
        out
    }

    /// Linear combination `sum_i w_i spec_i` of translationally invariant specs.
    pub fn combine(specs: &[OperatorSpec], weights: &[f64]) -> Result<OperatorSpec> {
        if specs.len() != weights.len() {
            return Err(Error::arg("one weight per operator required"));
        }
        let ti = specs.first().map(|s| s.translationally_invariant).unwrap_or(true);
        if specs.iter().any(|s| s.translationally_invariant != ti) {
            return Err(Error::arg("cannot mix local and translationally invariant specs"));
        }
        let mut terms: Vec<Term> = Vec::new();
        for (spec, &w) in specs.iter().zip(weights) {
            for t in &spec.terms {
                match terms.iter_mut().find(|u| u.label == t.label) {
                    Some(u) => u.coefficient += w * t.coefficient,
                    None => terms.push(Term {
                        coefficient: w * t.coefficient,
                        label: t.label.clone(),
                    }),
                }
            }
        }
        OperatorSpec::new(terms, ti)
    }

    /// Every term placed on an `n`-site chain, with its coefficient.
    pub fn placed_terms(&self, n: usize, periodic: bool) -> Result<Vec<(f64, PlacedPauli)>> {
        self.check_chain(n, periodic)?;
        let mut out = Vec::new();
        for t in &self.terms {
            if t.coefficient == 0.0 {
                continue;
            }
            if self.translationally_invariant {
                let offsets = if periodic { n } else { n + 1 - t.label.support() };
                for j in 0..offsets {
                    out.push((t.coefficient, t.label.placed(j, n)));
                }
            } else {
                out.push((t.coefficient, t.label.placed(0, n)));
            }
        }
        Ok(out)
    }

    fn check_chain(&self, n: usize, periodic: bool) -> Result<()> {
        if n == 0 || n > MAX_DENSE_SITES {
            return Err(Error::arg(format!("chain length must lie in 1..={MAX_DENSE_SITES}, got {n}")));
        }
        if n < self.support {
            return Err(Error::arg(format!("chain of {n} sites cannot hold support {}", self.support)));
        }
        if periodic && self.translationally_invariant && n <= self.support && !self.is_zero() {
            return Err(Error::arg(format!(
                "periodic chain of {n} sites must be longer than the support {}",
                self.support
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("operator spec serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let raw: OperatorSpec = toml::from_str(s).map_err(|e| Error::arg(format!("operator spec: {e}")))?;
        let spec = OperatorSpec::new(raw.terms, raw.translationally_invariant)?;
        if spec.support != raw.support && !spec.terms.is_empty() {
            return Err(Error::arg(format!(
                "declared support {} disagrees with terms (support {})",
                raw.support, spec.support
            )));
        }
        Ok(spec)
    }
}

/// Dense `2^L x 2^L` matrix of an operator on an `L`-site chain.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub matrix: Array2<C64>,
    pub sites: usize,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn build_dense(spec: &OperatorSpec, n: usize, periodic: bool) -> Result<DenseOperator> {
    let placed = spec.placed_terms(n, periodic)?;
    let dim = 1usize << n;
    let mut m = Array2::<C64>::zeros((dim, dim));
    for (c, p) in placed {
        for b in 0..dim {
            let (row, phase) = p.apply(b);
            m[[row, b]] += phase * c;
        }
    }
    Ok(DenseOperator { matrix: m, sites: n })
}

/// Sparse `(row, col, value)` triplets of the same operator as [`build_dense`],
/// with duplicates summed and exact zeros dropped.
pub fn build_triplets(spec: &OperatorSpec, n: usize, periodic: bool) -> Result<Vec<(usize, usize, C64)>> {
    let placed = spec.placed_terms(n, periodic)?;
    let dim = 1usize << n;
    let mut out = Vec::with_capacity(dim * (n + 1));
    for b in 0..dim {
        let mut col: Vec<(usize, C64)> = Vec::new();
        for (c, p) in &placed {
            let (row, phase) = p.apply(b);
            match col.iter_mut().find(|(r, _)| *r == row) {
                Some(e) => e.1 += phase * *c,
                None => col.push((row, phase * *c)),
            }
        }
        out.extend(col.into_iter().filter(|(_, v)| *v != ZERO).map(|(r, v)| (r, b, v)));
    }
    Ok(out)
}

/// Quantum Ising chain `sum_j J z_j z_{j+1} + h_x x_j + h_z z_j`.
pub fn ising_hamiltonian(j: f64, h_x: f64, h_z: f64) -> OperatorSpec {
    OperatorSpec::from_pairs([(j, "zz"), (h_x, "x"), (h_z, "z")]).expect("static labels")
}

/// Local conserved charge `C_k` of the transverse-field Ising chain
/// `sum_j J z_j z_{j+1} + h_x x_j`, with `C_0` the Hamiltonian itself.
///
/// Even `k = 2m` and odd `k = 2m - 1` follow the two charge families built
/// from the string operators `S^{ab}_{i,j}`; odd charges are parity odd and
/// purely imaginary in the computational basis.
pub fn ising_charge(k: usize, j: f64, h_x: f64) -> OperatorSpec {
    use Pauli::{Y, Z};
    let s = |a, b, d| PauliLabel::jordan_wigner_string(a, b, d).expect("distance >= 1");
    let term = |c: f64, l: PauliLabel| Term { coefficient: c, label: l };
    let terms = match k {
        0 => return ising_hamiltonian(j, h_x, 0.0),
        2 => vec![
            term(j, s(Z, Z, 2)),
            term(-h_x, s(Y, Y, 1)),
            term(-h_x, s(Z, Z, 1)),
            term(-j, PauliLabel::parse("x").unwrap()),
        ],
        k if k % 2 == 0 => {
            let m = k / 2;
            vec![
                term(j, s(Z, Z, m + 1)),
                term(-h_x, s(Y, Y, m)),
                term(-h_x, s(Z, Z, m)),
                term(j, s(Y, Y, m - 1)),
            ]
        }
        k => {
            let m = k.div_ceil(2);
            vec![term(j, s(Y, Z, m)), term(-j, s(Z, Y, m))]
        }
    };
    OperatorSpec::translation_invariant(terms).expect("charge terms are canonical")
}

/// Permutation of basis indices implementing the one-site cyclic shift
/// `j -> j + 1 (mod n)`.
pub fn cyclic_shift_permutation(n: usize) -> Vec<usize> {
    let dim = 1usize << n;
    (0..dim)
        .map(|b| {
            // site j is bit n-1-j; moving site j to j+1 moves bit k to k-1.
            let low = b & 1;
            (b >> 1) | (low << (n - 1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, frobenius, hermiticity_defect};
    use ndarray_linalg::{EigValsh, UPLO};

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_support_strings(1).unwrap().len(), 3);
        assert_eq!(enumerate_support_strings(2).unwrap().len(), 12);
        assert_eq!(enumerate_support_strings(3).unwrap().len(), 48);
        let labels: Vec<String> = enumerate_support_strings(1).unwrap().iter().map(|l| l.to_string()).collect();
        assert_eq!(labels, ["x", "y", "z"]);
        let two = enumerate_support_strings(2).unwrap();
        assert_eq!(two[0].to_string(), "x0");
        assert_eq!(two[11].to_string(), "zz");
    }

    #[test]
    fn enumeration_range_checked() {
        assert!(enumerate_support_strings(0).is_err());
        assert!(enumerate_support_strings(7).is_err());
    }

    #[test]
    fn labels_must_be_left_aligned() {
        assert!(PauliLabel::parse("0x").is_err());
        assert!(PauliLabel::parse("000").is_ok());
        assert!(PauliLabel::parse("").is_err());
        assert!(PauliLabel::parse("xq").is_err());
        assert_eq!(PauliLabel::parse("x00").unwrap().trimmed().to_string(), "x");
        assert_eq!(PauliLabel::parse("zz").unwrap().padded(3).unwrap().to_string(), "zz0");
    }

    #[test]
    fn single_sigma_z() {
        let spec = OperatorSpec::local(vec![Term::new(1.0, "z").unwrap()]).unwrap();
        let d = build_dense(&spec, 1, false).unwrap();
        assert_eq!(d.matrix[[0, 0]], ONE);
        assert_eq!(d.matrix[[1, 1]], -ONE);
        assert_eq!(d.matrix[[0, 1]], ZERO);
    }

    #[test]
    fn total_magnetization_on_all_up() {
        let spec = OperatorSpec::from_pairs([(1.0, "z")]).unwrap();
        let d = build_dense(&spec, 3, true).unwrap();
        assert_eq!(d.matrix[[0, 0]], C64::new(3.0, 0.0));
    }

    #[test]
    fn dense_matches_kronecker_products() {
        let spec = ising_hamiltonian(1.0, 0.6, 0.3);
        let d = build_dense(&spec, 3, true).unwrap();
        let z = Pauli::Z.matrix();
        let x = Pauli::X.matrix();
        let id = Pauli::I.matrix();
        let k3 = |a: &Array2<C64>, b: &Array2<C64>, c: &Array2<C64>| {
            crate::linalg::kron(&crate::linalg::kron(&a.view(), &b.view()).view(), &c.view())
        };
        let mut reference = Array2::<C64>::zeros((8, 8));
        let sites = |p: usize, m: &Array2<C64>| -> [Array2<C64>; 3] {
            let mut v = [id.clone(), id.clone(), id.clone()];
            v[p] = m.clone();
            v
        };
        for j in 0..3 {
            let mut zz = [id.clone(), id.clone(), id.clone()];
            zz[j] = z.clone();
            zz[(j + 1) % 3] = z.clone();
            reference = reference + k3(&zz[0], &zz[1], &zz[2]);
            let xs = sites(j, &x);
            reference = reference + k3(&xs[0], &xs[1], &xs[2]).mapv(|v| v * 0.6);
            let zs = sites(j, &z);
            reference = reference + k3(&zs[0], &zs[1], &zs[2]).mapv(|v| v * 0.3);
        }
        assert!(frobenius(&(&d.matrix - &reference).view()) < 1e-13);
    }

    #[test]
    fn ground_state_of_three_site_tfim() {
        // Brute-force oracle: 8x8 eigensolve of the Kronecker-built matrix
        // gives -3.50661...; the dense builder must agree.
        let d = build_dense(&ising_hamiltonian(1.0, 0.6, 0.0), 3, true).unwrap();
        let w = d.matrix.eigvalsh(UPLO::Lower).unwrap();
        let mut brute = f64::INFINITY;
        // Independent route: real symmetric matrix assembled entry by entry.
        let mut h = Array2::<f64>::zeros((8, 8));
        for b in 0..8usize {
            let spin = |s: usize| if b >> (2 - s) & 1 == 0 { 1.0 } else { -1.0 };
            for s in 0..3 {
                h[[b, b]] += spin(s) * spin((s + 1) % 3);
                h[[b ^ (1 << (2 - s)), b]] += 0.6;
            }
        }
        for e in h.eigvalsh(UPLO::Lower).unwrap() {
            brute = brute.min(e);
        }
        assert!((w[0] - brute).abs() < 1e-12, "{} vs {}", w[0], brute);
    }

    #[test]
    fn charge_zero_is_hamiltonian() {
        assert_eq!(ising_charge(0, 1.0, 0.6), ising_hamiltonian(1.0, 0.6, 0.0));
    }

    #[test]
    fn charge_two_without_field() {
        let c2 = ising_charge(2, 1.3, 0.0);
        let nonzero: Vec<(f64, String)> = c2
            .terms()
            .iter()
            .filter(|t| t.coefficient != 0.0)
            .map(|t| (t.coefficient, t.label.to_string()))
            .collect();
        assert_eq!(nonzero, vec![(1.3, "zxz".to_string()), (-1.3, "x".to_string())]);
    }

    #[test]
    fn charges_commute_with_hamiltonian() {
        for n in [6usize, 8] {
            let dense: Vec<_> = (0..5)
                .map(|k| build_dense(&ising_charge(k, 1.0, 0.6), n, true).unwrap().matrix)
                .collect();
            for a in 0..dense.len() {
                for b in a + 1..dense.len() {
                    if ising_charge(a, 1.0, 0.6).support().max(ising_charge(b, 1.0, 0.6).support()) >= n {
                        continue;
                    }
                    let c = commutator(&dense[a].view(), &dense[b].view());
                    assert!(frobenius(&c.view()) < 1e-10, "[C{a}, C{b}] at L={n}");
                }
            }
        }
    }

    #[test]
    fn real_specs_build_hermitian_operators() {
        for k in 0..4 {
            let d = build_dense(&ising_charge(k, 0.8, 1.1), 6, true).unwrap();
            assert!(hermiticity_defect(&d.matrix.view()) < 1e-13);
        }
    }

    #[test]
    fn translation_invariance_of_dense_sum() {
        let spec = ising_charge(2, 1.0, 0.6);
        let n = 6;
        let d = build_dense(&spec, n, true).unwrap().matrix;
        let perm = cyclic_shift_permutation(n);
        let mut shifted = Array2::<C64>::zeros(d.dim());
        for ((r, c), &v) in d.indexed_iter() {
            shifted[[perm[r], perm[c]]] = v;
        }
        assert!(frobenius(&(&shifted - &d).view()) < 1e-12);
    }

    #[test]
    fn chain_length_preconditions() {
        let h = ising_hamiltonian(1.0, 0.6, 0.0);
        assert!(build_dense(&h, 2, true).is_err());
        assert!(build_dense(&h, 2, false).is_ok());
        assert!(build_dense(&h, 15, true).is_err());
        assert!(build_dense(&ising_charge(2, 1.0, 0.6), 2, false).is_err());
    }

    #[test]
    fn triplets_match_dense() {
        let spec = ising_charge(1, 1.0, 0.6);
        let d = build_dense(&spec, 5, true).unwrap().matrix;
        let mut from_triplets = Array2::<C64>::zeros(d.dim());
        for (r, c, v) in build_triplets(&spec, 5, true).unwrap() {
            from_triplets[[r, c]] += v;
        }
        assert!(frobenius(&(&d - &from_triplets).view()) < 1e-14);
    }

    #[test]
    fn toml_round_trip() {
        let spec = ising_charge(3, 1.0, 0.6);
        let text = spec.to_toml();
        assert_eq!(OperatorSpec::from_toml(&text).unwrap(), spec);
        assert!(OperatorSpec::from_toml("translationally_invariant = true\nsupport = 9\n[[term]]\ncoefficient = 1.0\nlabel = \"zz\"\n").is_err());
    }

    proptest::proptest! {
        #[test]
        fn enumerated_labels_are_unique(s in 1usize..=5) {
            let labels = enumerate_support_strings(s).unwrap();
            let set: std::collections::BTreeSet<_> = labels.iter().cloned().collect();
            proptest::prop_assert_eq!(set.len(), labels.len());
            proptest::prop_assert_eq!(labels.len(), 3 * 4usize.pow(s as u32 - 1));
            let mut sorted = labels.clone();
            sorted.sort();
            proptest::prop_assert_eq!(sorted, labels);
        }
    }
}
