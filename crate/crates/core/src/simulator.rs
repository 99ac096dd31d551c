//! State-vector simulation.
//!
//! [`StateVector`] is the general dense simulator for gate circuits. The VQE
//! loop uses a faster equivalent: a real state on the fixed particle-number
//! and spin-projection sector, with each excitation's exponential applied as
//! exact 2x2 rotations and the Hamiltonian compiled to a sparse sector matrix.

use num_complex::Complex64;

use crate::ansatz::{AmplitudeSet, Excitation};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::hamio::Spin;
use crate::pauli::{PauliString, PauliSum};

/// Largest register the dense simulator accepts.
pub const MAX_DENSE_QUBITS: usize = 26;

/// Imaginary residue above which an expectation value is rejected.
pub const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, k: usize) -> Result<Self> {
        if n_qubits > MAX_DENSE_QUBITS {
            return Err(Error::InvalidInput(format!(
                "{n_qubits} qubits exceed the dense limit of {MAX_DENSE_QUBITS}"
            )));
        }
        let mut amps = vec![Complex64::default(); 1 << n_qubits];
        if k >= amps.len() {
            return Err(Error::InvalidInput(format!("basis index {k} out of range")));
        }
        amps[k] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidInput("length must be a power of two".into()));
        }
        Ok(StateVector {
            n_qubits: n.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn pairs(&mut self, q: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        let bit = 1usize << q;
        for base in (0..self.amps.len()).step_by(bit << 1) {
            for k in base..base + bit {
                let (lo, hi) = self.amps.split_at_mut(k + bit);
                f(&mut lo[k], &mut hi[0]);
            }
        }
    }

    pub fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        let (a, b) = g.qubits();
        if a >= self.n_qubits || b.is_some_and(|b| b >= self.n_qubits) {
            return Err(Error::InvalidInput(format!("{g:?} outside the register")));
        }
        match *g {
            Gate::H(q) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                self.pairs(q, |x, y| {
                    let (u, v) = (*x, *y);
                    *x = (u + v) * s;
                    *y = (u - v) * s;
                });
            }
            Gate::Rx(q, t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                let mis = Complex64::new(0.0, -s);
                self.pairs(q, |x, y| {
                    let (u, v) = (*x, *y);
                    *x = u * c + v * mis;
                    *y = u * mis + v * c;
                });
            }
            Gate::Ry(q, t) => {
                let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
                self.pairs(q, |x, y| {
                    let (u, v) = (*x, *y);
                    *x = u * c - v * s;
                    *y = u * s + v * c;
                });
            }
            Gate::Rz(q, t) => {
                let e0 = Complex64::from_polar(1.0, -t / 2.0);
                let e1 = Complex64::from_polar(1.0, t / 2.0);
                self.pairs(q, |x, y| {
                    *x *= e0;
                    *y *= e1;
                });
            }
            Gate::Cnot { control, target } => {
                let cb = 1usize << control;
                let tb = 1usize << target;
                for k in 0..self.amps.len() {
                    if k & cb != 0 && k & tb == 0 {
                        self.amps.swap(k, k | tb);
                    }
                }
            }
        }
        Ok(())
    }

    /// `exp(iθP)|ψ>`.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        self.check(p.n_qubits())?;
        let (c, s) = (theta.cos(), theta.sin());
        let x = p.x_mask() as usize;
        let old = self.amps.clone();
        for (k, a) in self.amps.iter_mut().enumerate() {
            // (P ψ)_k = phase(k ^ x) ψ_{k ^ x}
            let src = k ^ x;
            let (_, ph) = p.apply_to_basis(src as u128);
            *a = old[k] * c + Complex64::new(0.0, s) * ph * old[src];
        }
        Ok(())
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                found: n,
            });
        }
        Ok(())
    }

    /// `<ψ|P|ψ>` for a single string.
    pub fn pauli_expectation(&self, p: &PauliString) -> Complex64 {
        let mut acc = Complex64::default();
        for (k, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let (k2, ph) = p.apply_to_basis(k as u128);
            acc += self.amps[k2 as usize].conj() * ph * a;
        }
        acc
    }

    /// Probability weight outside states with `n` set bits.
    pub fn weight_outside_particle_number(&self, n: u32) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(k, _)| k.count_ones() != n)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// HF determinant: ones exactly at the occupied qubits.
pub fn prepare_hf(n_qubits: usize, occupied: &[usize]) -> Result<StateVector> {
    let mut k = 0usize;
    for &q in occupied {
        if q >= n_qubits {
            return Err(Error::InvalidInput(format!("occupied qubit {q} out of range")));
        }
        k |= 1 << q;
    }
    StateVector::basis(n_qubits, k)
}

/// Run a circuit on a copy of `psi`.
pub fn apply(c: &Circuit, psi: &StateVector) -> Result<StateVector> {
    psi.check(c.n_qubits)?;
    let mut out = psi.clone();
    for g in &c.gates {
        out.apply_gate(g)?;
    }
    Ok(out)
}

/// `<ψ|H|ψ>` evaluated term by term.
pub fn expectation(h: &PauliSum, psi: &StateVector) -> Result<f64> {
    psi.check(h.n_qubits())?;
    let mut acc = Complex64::default();
    for (p, c) in h.iter() {
        acc += c * psi.pauli_expectation(p);
    }
    if acc.im.abs() > HERMITIAN_TOL {
        return Err(Error::NotHermitian(acc.im));
    }
    Ok(acc.re)
}

/// Basis states with fixed α and β occupation counts, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    n_qubits: usize,
    n_alpha: usize,
    n_beta: usize,
    states: Vec<u128>,
}

fn combinations(qubits: &[usize], k: usize, out: &mut Vec<u128>) {
    fn rec(qubits: &[usize], k: usize, start: usize, acc: u128, out: &mut Vec<u128>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for idx in start..=qubits.len() - k {
            rec(qubits, k - 1, idx + 1, acc | (1u128 << qubits[idx]), out);
        }
    }
    if k <= qubits.len() {
        rec(qubits, k, 0, 0, out);
    }
}

impl Sector {
    pub fn new(spins: &[Spin], n_alpha: usize, n_beta: usize) -> Result<Self> {
        let n = spins.len();
        if n > 128 {
            return Err(Error::InvalidInput("more than 128 qubits".into()));
        }
        let alpha: Vec<usize> = (0..n).filter(|&q| spins[q] == Spin::Alpha).collect();
        let beta: Vec<usize> = (0..n).filter(|&q| spins[q] == Spin::Beta).collect();
        if n_alpha > alpha.len() || n_beta > beta.len() {
            return Err(Error::InvalidInput(format!(
                "sector ({n_alpha}α, {n_beta}β) does not fit {} α and {} β orbitals",
                alpha.len(),
                beta.len()
            )));
        }
        let (mut a, mut b) = (Vec::new(), Vec::new());
        combinations(&alpha, n_alpha, &mut a);
        combinations(&beta, n_beta, &mut b);
        let mut states = Vec::with_capacity(a.len() * b.len());
        for &x in &a {
            for &y in &b {
                states.push(x | y);
            }
        }
        states.sort_unstable();
        Ok(Sector {
            n_qubits: n,
            n_alpha,
            n_beta,
            states,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u128] {
        &self.states
    }

    pub fn position(&self, k: u128) -> Option<usize> {
        self.states.binary_search(&k).ok()
    }

    /// Embed a sector vector into the full register.
    pub fn embed(&self, v: &[f64]) -> Result<StateVector> {
        let mut amps = vec![Complex64::default(); 1usize << self.n_qubits];
        for (&k, &x) in self.states.iter().zip(v) {
            amps[k as usize] = Complex64::new(x, 0.0);
        }
        StateVector::from_amplitudes(amps)
    }
}

/// Sign picked up by `a_p` or `a_p†` acting on determinant `k`
/// (parity of occupied qubits above `p`).
#[inline]
pub fn jw_sign(k: u128, p: usize) -> f64 {
    let above = if p >= 127 { 0 } else { k >> (p + 1) };
    if above.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `κ|k> = sign |k'>`, or `None` when `κ|k> = 0`.
pub fn excitation_action(e: &Excitation, k: u128) -> Option<(u128, f64)> {
    let mut state = k;
    let mut sign = 1.0;
    let annihilate = |p: usize, st: &mut u128, sg: &mut f64| -> bool {
        if *st & (1 << p) == 0 {
            return false;
        }
        *sg *= jw_sign(*st, p);
        *st &= !(1 << p);
        true
    };
    let create = |p: usize, st: &mut u128, sg: &mut f64| -> bool {
        if *st & (1 << p) != 0 {
            return false;
        }
        *sg *= jw_sign(*st, p);
        *st |= 1 << p;
        true
    };
    let ok = match *e {
        Excitation::Single { i, a } => {
            annihilate(i, &mut state, &mut sign) && create(a, &mut state, &mut sign)
        }
        Excitation::Double { i, j, a, b } => {
            annihilate(i, &mut state, &mut sign)
                && annihilate(j, &mut state, &mut sign)
                && create(b, &mut state, &mut sign)
                && create(a, &mut state, &mut sign)
        }
    };
    ok.then_some((state, sign))
}

/// Precomputed rotation pairs of one excitation inside a sector.
#[derive(Debug, Clone)]
struct RotationTable {
    from: Vec<u32>,
    to: Vec<u32>,
    sign: Vec<f64>,
}

/// Real symmetric sparse matrix in CSR form on a sector.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    dim: usize,
}

impl SectorOperator {
    /// Compile a Hermitian Pauli sum restricted to `sector`. Matrix elements
    /// must be real (real-orbital Hamiltonians), checked to 1e-10.
    pub fn from_pauli(h: &PauliSum, sector: &Sector) -> Result<Self> {
        if h.n_qubits() != sector.n_qubits() {
            return Err(Error::SizeMismatch {
                expected: sector.n_qubits(),
                found: h.n_qubits(),
            });
        }
        // group strings by their flip mask
        let mut groups: std::collections::BTreeMap<u128, Vec<(PauliString, Complex64)>> =
            Default::default();
        for (p, c) in h.iter() {
            groups.entry(p.x_mask()).or_default().push((*p, *c));
        }
        let dim = sector.len();
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dim];
        for (x, terms) in &groups {
            for (col, &k) in sector.states().iter().enumerate() {
                let Some(row) = sector.position(k ^ x) else { continue };
                let mut v = Complex64::default();
                for (p, c) in terms {
                    let (_, ph) = p.apply_to_basis(k);
                    v += c * ph;
                }
                if v.im.abs() > 1e-10 {
                    return Err(Error::NotHermitian(v.im));
                }
                if v.re != 0.0 {
                    rows[row].push((col as u32, v.re));
                }
            }
        }
        Ok(Self::from_rows(rows))
    }

    pub fn from_rows(mut rows: Vec<Vec<(u32, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in rows.iter_mut() {
            r.sort_unstable_by_key(|e| e.0);
            let mut last: Option<u32> = None;
            for &(c, v) in r.iter() {
                if last == Some(c) {
                    *vals.last_mut().expect("nonempty") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SectorOperator {
            row_ptr,
            cols,
            vals,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&(c as u32)) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[r] = acc;
        }
    }

    pub fn expectation(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            let mut row = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.vals[k] * x[self.cols[k] as usize];
            }
            acc += x[r] * row;
        }
        acc
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                worst = worst.max((self.vals[k] - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// UCCSD state preparation on a sector: `Π_x exp(t_x(κ_x - κ_x†)) |HF>`,
/// applied in amplitude-set order. Equal to the gate circuit of
/// [`crate::circuit::build_uccsd_circuit`] with `trotter_n = 1`, since the Pauli
/// strings of one excitation commute.
#[derive(Debug, Clone)]
pub struct SectorAnsatz {
    sector: Sector,
    hf: usize,
    tables: Vec<RotationTable>,
}

impl SectorAnsatz {
    pub fn new(sector: Sector, occupied: &[usize], excitations: &[Excitation]) -> Result<Self> {
        let hf_state: u128 = occupied.iter().map(|&q| 1u128 << q).sum();
        let hf = sector.position(hf_state).ok_or_else(|| {
            Error::InvalidInput("reference determinant lies outside the sector".into())
        })?;
        let mut tables = Vec::with_capacity(excitations.len());
        for e in excitations {
            if e.max_index() >= sector.n_qubits() {
                return Err(Error::InvalidInput(format!("excitation {e} outside the register")));
            }
            let mut t = RotationTable {
                from: Vec::new(),
                to: Vec::new(),
                sign: Vec::new(),
            };
            for (pos, &k) in sector.states().iter().enumerate() {
                if let Some((k2, s)) = excitation_action(e, k) {
                    let p2 = sector.position(k2).ok_or_else(|| {
                        Error::InvalidInput(format!("excitation {e} leaves the sector"))
                    })?;
                    t.from.push(pos as u32);
                    t.to.push(p2 as u32);
                    t.sign.push(s);
                }
            }
            tables.push(t);
        }
        Ok(SectorAnsatz {
            sector,
            hf,
            tables,
        })
    }

    pub fn sector(&self) -> &Sector {
        &self.sector
    }

    pub fn n_params(&self) -> usize {
        self.tables.len()
    }

    pub fn hf_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.sector.len()];
        v[self.hf] = 1.0;
        v
    }

    /// Apply `exp(t(κ - κ†))` for parameter `idx` in place.
    pub fn apply_one(&self, idx: usize, t: f64, psi: &mut [f64]) {
        if t == 0.0 {
            return;
        }
        let (c, s) = (t.cos(), t.sin());
        let tab = &self.tables[idx];
        for k in 0..tab.from.len() {
            let (a, b) = (tab.from[k] as usize, tab.to[k] as usize);
            let (x, y) = (psi[a], psi[b]);
            let ss = s * tab.sign[k];
            psi[a] = c * x - ss * y;
            psi[b] = ss * x + c * y;
        }
    }

    /// Prepared state for amplitudes `t` (one per excitation, in order).
    pub fn state(&self, t: &[f64]) -> Result<Vec<f64>> {
        if t.len() != self.tables.len() {
            return Err(Error::SizeMismatch {
                expected: self.tables.len(),
                found: t.len(),
            });
        }
        let mut psi = self.hf_vector();
        for (k, &v) in t.iter().enumerate() {
            self.apply_one(k, v, &mut psi);
        }
        Ok(psi)
    }

    pub fn state_for(&self, amps: &AmplitudeSet) -> Result<Vec<f64>> {
        self.state(&amps.values())
    }
}
