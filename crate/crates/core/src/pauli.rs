//! Pauli strings in symplectic form, weighted Pauli sums, and the
//! Jordan–Wigner transformation.
//!
//! Sign convention: qubit `p` holds spin orbital `p`, `|1>` means occupied, and
//! the parity string of a ladder operator runs over the qubits *above* it:
//!
//! ```text
//! a_p  = (X_p + i Y_p)/2 · Z_{p+1} ··· Z_{n-1}
//! a_p† = (X_p - i Y_p)/2 · Z_{p+1} ··· Z_{n-1}
//! ```
//!
//! Since qubit 0 is the highest-energy orbital, the string extends toward the
//! occupied end of the register. For a product `a_a† a_i` the strings cancel
//! outside the interval between the two qubits.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamio::SpinOrbitalHamiltonian;

/// Largest register a [`PauliString`] can address.
pub const MAX_QUBITS: usize = 128;

/// Coefficients below this magnitude are dropped by [`PauliSum::simplify`].
pub const PRUNE_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// A power of `i`: `Phase(k)` is `i^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(pub u8);

impl Phase {
    pub const ONE: Phase = Phase(0);

    pub fn to_complex(self) -> Complex64 {
        match self.0 & 3 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// Tensor product of single-qubit Paulis without phase.
///
/// Qubit `q` carries X if only bit `q` of `x` is set, Z if only bit `q` of
/// `z` is set, and Y if both are set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: u32,
    x: u128,
    z: u128,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString {
            n_qubits: n_qubits as u32,
            x: 0,
            z: 0,
        }
    }

    pub fn from_masks(n_qubits: usize, x: u128, z: u128) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::InvalidInput(format!(
                "{n_qubits} qubits exceed the {MAX_QUBITS}-qubit limit"
            )));
        }
        let mask = if n_qubits == 128 {
            u128::MAX
        } else {
            (1u128 << n_qubits) - 1
        };
        if (x | z) & !mask != 0 {
            return Err(Error::InvalidInput(format!(
                "mask addresses qubits beyond {n_qubits}"
            )));
        }
        Ok(PauliString {
            n_qubits: n_qubits as u32,
            x,
            z,
        })
    }

    /// Build from `(qubit, Pauli)` pairs; later entries overwrite earlier ones.
    pub fn from_ops(n_qubits: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = PauliString::identity(n_qubits);
        for &(q, p) in ops {
            if q >= n_qubits {
                return Err(Error::InvalidInput(format!(
                    "qubit {q} out of range for {n_qubits} qubits"
                )));
            }
            s.set(q, p);
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits as usize
    }

    pub fn x_mask(&self) -> u128 {
        self.x
    }

    pub fn z_mask(&self) -> u128 {
        self.z
    }

    pub fn support(&self) -> u128 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn get(&self, q: usize) -> Pauli {
        let bit = 1u128 << q;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        let bit = 1u128 << q;
        self.x &= !bit;
        self.z &= !bit;
        match p {
            Pauli::I => {}
            Pauli::X => self.x |= bit,
            Pauli::Y => {
                self.x |= bit;
                self.z |= bit
            }
            Pauli::Z => self.z |= bit,
        }
    }

    /// Qubits in the support, ascending.
    pub fn support_qubits(&self) -> Vec<usize> {
        let mut s = self.support();
        let mut out = Vec::with_capacity(s.count_ones() as usize);
        while s != 0 {
            let q = s.trailing_zeros() as usize;
            out.push(q);
            s &= s - 1;
        }
        out
    }

    /// Product `self · other` as a phase-free string and the phase it carries.
    pub fn multiply(&self, other: &PauliString) -> Result<(PauliString, Phase)> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits(),
                found: other.n_qubits(),
            });
        }
        Ok(self.mul_unchecked(other))
    }

    #[inline]
    fn mul_unchecked(&self, other: &PauliString) -> (PauliString, Phase) {
        let (ax, az, bx, bz) = (self.x, self.z, other.x, other.z);
        let a_x = ax & !az;
        let a_y = ax & az;
        let a_z = !ax & az;
        let b_x = bx & !bz;
        let b_y = bx & bz;
        let b_z = !bx & bz;
        // XY = iZ, YZ = iX, ZX = iY and the reverses pick up -i
        let plus = ((a_x & b_y) | (a_y & b_z) | (a_z & b_x)).count_ones();
        let minus = ((a_y & b_x) | (a_z & b_y) | (a_x & b_z)).count_ones();
        let phase = ((plus + 3 * minus) % 4) as u8;
        (
            PauliString {
                n_qubits: self.n_qubits,
                x: ax ^ bx,
                z: az ^ bz,
            },
            Phase(phase),
        )
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Action on a computational basis state: `P|k> = phase · |k'>`.
    #[inline]
    pub fn apply_to_basis(&self, k: u128) -> (u128, Complex64) {
        let y = (self.x & self.z).count_ones();
        let sign = (self.z & k).count_ones();
        (k ^ self.x, Phase(((y + 2 * sign) % 4) as u8).to_complex())
    }

    /// Word such as `X0 Z1 Y2`, or `I` for the identity.
    pub fn word(&self) -> String {
        if self.is_identity() {
            return "I".to_string();
        }
        self.support_qubits()
            .into_iter()
            .map(|q| {
                let c = match self.get(q) {
                    Pauli::X => 'X',
                    Pauli::Y => 'Y',
                    Pauli::Z => 'Z',
                    Pauli::I => unreachable!(),
                };
                format!("{c}{q}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Inverse of [`PauliString::word`].
    pub fn parse_word(n_qubits: usize, word: &str) -> Result<Self> {
        let mut s = PauliString::identity(n_qubits);
        for tok in word.split_whitespace() {
            if tok == "I" {
                continue;
            }
            let (c, q) = tok.split_at(1);
            let q: usize = q
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad Pauli token '{tok}'")))?;
            if q >= n_qubits {
                return Err(Error::InvalidInput(format!("qubit {q} out of range")));
            }
            let p = match c {
                "X" => Pauli::X,
                "Y" => Pauli::Y,
                "Z" => Pauli::Z,
                _ => return Err(Error::InvalidInput(format!("bad Pauli token '{tok}'"))),
            };
            s.set(q, p);
        }
        Ok(s)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.word())
    }
}

/// Weighted sum of Pauli strings with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        let mut s = PauliSum::zero(n_qubits);
        s.add_term(PauliString::identity(n_qubits), Complex64::new(coeff, 0.0));
        s
    }

    pub fn from_term(p: PauliString, coeff: Complex64) -> Self {
        let mut s = PauliSum::zero(p.n_qubits());
        s.add_term(p, coeff);
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, p: PauliString, coeff: Complex64) {
        debug_assert_eq!(p.n_qubits(), self.n_qubits);
        *self.terms.entry(p).or_default() += coeff;
    }

    pub fn add_sum(&mut self, other: &PauliSum, scale: Complex64) {
        for (p, c) in &other.terms {
            self.add_term(*p, c * scale);
        }
    }

    pub fn scaled(&self, factor: Complex64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(p, c)| (*p, c * factor)).collect(),
        }
    }

    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let mut out = PauliSum::zero(self.n_qubits);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (p, ph) = a.mul_unchecked(b);
                out.add_term(p, ca * cb * ph.to_complex());
            }
        }
        Ok(out)
    }

    /// Hermitian adjoint. Pauli strings are self-adjoint, so only coefficients conjugate.
    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect(),
        }
    }

    /// Drop terms whose coefficient magnitude is below `threshold`.
    pub fn simplify(&mut self, threshold: f64) {
        self.terms.retain(|_, c| c.norm() >= threshold);
    }

    pub fn simplified(mut self) -> Self {
        self.simplify(PRUNE_THRESHOLD);
        self
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.re.abs() <= tol)
    }

    /// Text dump, one `coefficient  word` line per term. Complex coefficients
    /// are written as `re,im`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, c) in &self.terms {
            if c.im == 0.0 {
                out.push_str(&format!("{:e}  {}\n", c.re, p.word()));
            } else {
                out.push_str(&format!("{:e},{:e}  {}\n", c.re, c.im, p.word()));
            }
        }
        out
    }

    pub fn from_text(n_qubits: usize, text: &str) -> Result<Self> {
        let mut s = PauliSum::zero(n_qubits);
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (coeff, word) = line
                .split_once(char::is_whitespace)
                .unwrap_or((line, "I"));
            let bad = || Error::parse(no + 1, format!("bad coefficient '{coeff}'"));
            let c = match coeff.split_once(',') {
                Some((re, im)) => Complex64::new(
                    re.parse().map_err(|_| bad())?,
                    im.parse().map_err(|_| bad())?,
                ),
                None => Complex64::new(coeff.parse().map_err(|_| bad())?, 0.0),
            };
            let p = PauliString::parse_word(n_qubits, word)
                .map_err(|e| Error::parse(no + 1, e.to_string()))?;
            s.add_term(p, c);
        }
        Ok(s)
    }
}

/// Jordan–Wigner image of `a_p` (or `a_p†` when `dagger`).
pub fn jw_ladder(p: usize, dagger: bool, n: usize) -> Result<PauliSum> {
    if p >= n || n > MAX_QUBITS {
        return Err(Error::InvalidInput(format!(
            "mode {p} out of range for {n} qubits"
        )));
    }
    let above: u128 = if p + 1 >= 128 {
        0
    } else {
        let all = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
        all & !((1u128 << (p + 1)) - 1)
    };
    let bit = 1u128 << p;
    let x = PauliString {
        n_qubits: n as u32,
        x: bit,
        z: above,
    };
    let y = PauliString {
        n_qubits: n as u32,
        x: bit,
        z: above | bit,
    };
    let mut s = PauliSum::zero(n);
    s.add_term(x, Complex64::new(0.5, 0.0));
    s.add_term(y, Complex64::new(0.0, if dagger { -0.5 } else { 0.5 }));
    Ok(s)
}

fn product(ops: &[(usize, bool)], n: usize) -> Result<PauliSum> {
    let mut acc = PauliSum::identity(n, 1.0);
    for &(p, dagger) in ops {
        acc = acc.mul(&jw_ladder(p, dagger, n)?)?;
    }
    Ok(acc.simplified())
}

/// Pauli expansion of `κ - κ†` for a unit-amplitude excitation.
///
/// Singles use `κ = a_a† a_i`; doubles use `κ = a_a† a_b† a_j a_i` with
/// `occ = [i, j]`, `virt = [a, b]`, `i > j`, `a > b`.
pub fn jw_excitation_generator(occ: &[usize], virt: &[usize], n: usize) -> Result<PauliSum> {
    let ops: Vec<(usize, bool)> = match (occ, virt) {
        (&[i], &[a]) => {
            if i == a {
                return Err(Error::InvalidInput(format!("repeated index {i}")));
            }
            vec![(a, true), (i, false)]
        }
        (&[i, j], &[a, b]) => {
            let all = [i, j, a, b];
            for x in 0..4 {
                for y in x + 1..4 {
                    if all[x] == all[y] {
                        return Err(Error::InvalidInput(format!(
                            "repeated index {} in excitation",
                            all[x]
                        )));
                    }
                }
            }
            if i < j || a < b {
                return Err(Error::InvalidInput(
                    "double excitation indices must satisfy i > j and a > b".into(),
                ));
            }
            vec![(a, true), (b, true), (j, false), (i, false)]
        }
        _ => {
            return Err(Error::InvalidInput(
                "excitation must be a single (i, a) or a double (i, j, a, b)".into(),
            ))
        }
    };
    let kappa = product(&ops, n)?;
    let mut gen = kappa.clone();
    gen.add_sum(&kappa.adjoint(), Complex64::new(-1.0, 0.0));
    Ok(gen.simplified())
}

/// Qubit Hamiltonian `core + Σ h_pq a_p†a_q + ¼ Σ <pq||rs> a_p†a_q†a_s a_r`.
pub fn hamiltonian_to_pauli(h: &SpinOrbitalHamiltonian) -> Result<PauliSum> {
    let n = h.n_spin_orbitals();
    let create: Vec<PauliSum> = (0..n).map(|p| jw_ladder(p, true, n)).collect::<Result<_>>()?;
    let annihilate: Vec<PauliSum> =
        (0..n).map(|p| jw_ladder(p, false, n)).collect::<Result<_>>()?;
    let mut out = PauliSum::identity(n, h.core_energy());

    for p in 0..n {
        for q in 0..n {
            let v = h.h(p, q);
            if v != 0.0 {
                let t = create[p].mul(&annihilate[q])?;
                out.add_sum(&t, Complex64::new(v, 0.0));
            }
        }
    }
    // ¼ Σ_pqrs collapses to Σ_{p<q, r<s} by antisymmetry
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
        .collect();
    let creators: Vec<PauliSum> = pairs
        .iter()
        .map(|&(p, q)| create[p].mul(&create[q]).map(PauliSum::simplified))
        .collect::<Result<_>>()?;
    let annihilators: Vec<PauliSum> = pairs
        .iter()
        .map(|&(r, s)| annihilate[s].mul(&annihilate[r]).map(PauliSum::simplified))
        .collect::<Result<_>>()?;
    for (a, &(p, q)) in pairs.iter().enumerate() {
        for (b, &(r, s)) in pairs.iter().enumerate() {
            let v = h.g(p, q, r, s);
            if v.abs() < 1e-15 {
                continue;
            }
            let t = creators[a].mul(&annihilators[b])?;
            out.add_sum(&t, Complex64::new(v, 0.0));
        }
    }
    // Hermitian by construction; clear rounding residue in imaginary parts
    for c in out.terms.values_mut() {
        if c.im.abs() < 1e-13 {
            c.im = 0.0;
        }
    }
    Ok(out.simplified())
}

/// Number operator `Σ_p a_p† a_p` on `n` qubits.
pub fn number_operator(n: usize) -> Result<PauliSum> {
    let mut out = PauliSum::zero(n);
    for p in 0..n {
        out.add_sum(&product(&[(p, true), (p, false)], n)?, Complex64::new(1.0, 0.0));
    }
    Ok(out.simplified())
}
