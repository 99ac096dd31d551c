//! Gate-level synthesis of UCCSD circuits, a CNOT-cancelling peephole pass,
//! and gate counting.
//!
//! `exp(iθP)` for a Pauli string `P` of weight `w` is built as: basis change
//! (H for X, RX(π/2) for Y), a CNOT ladder from the lowest support qubit up
//! to the highest, `RZ(-2θ)` on the top qubit, and the mirror image. With
//! `RZ(φ) = exp(-iφZ/2)` this costs `2(w-1)` CNOTs.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ansatz::AmplitudeSet;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => (q, None),
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }

    fn touches(&self, q: usize) -> bool {
        let (a, b) = self.qubits();
        a == q || b == Some(q)
    }

    fn max_qubit(&self) -> usize {
        let (a, b) = self.qubits();
        b.map_or(a, |b| a.max(b))
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx(q, t) => Gate::Rx(q, -t),
            Gate::Ry(q, t) => Gate::Ry(q, -t),
            Gate::Rz(q, t) => Gate::Rz(q, -t),
            g => g,
        }
    }
}

/// Whether two gates commute by the rules the cancellation pass knows about.
/// Unknown cases answer `false`.
fn commutes(a: &Gate, b: &Gate) -> bool {
    use Gate::*;
    if !(0..=b.max_qubit()).any(|q| a.touches(q) && b.touches(q)) {
        return true;
    }
    match (*a, *b) {
        (Cnot { control: c1, target: t1 }, Cnot { control: c2, target: t2 }) => {
            c1 != t2 && t1 != c2
        }
        (Cnot { control, target }, g) | (g, Cnot { control, target }) => match g {
            Rz(q, _) => q == control,
            Rx(q, _) => q == target,
            _ => false,
        },
        (Rx(..), Rx(..)) | (Ry(..), Ry(..)) | (Rz(..), Rz(..)) | (H(_), H(_)) => true,
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    /// Index of the source term for each gate, when known.
    pub provenance: Vec<Option<u32>>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate, tag: Option<u32>) -> Result<()> {
        if let Gate::Cnot { control, target } = g {
            if control == target {
                return Err(Error::InvalidInput(format!("CNOT on a single qubit {control}")));
            }
        }
        if let Gate::Rx(_, t) | Gate::Ry(_, t) | Gate::Rz(_, t) = g {
            if !t.is_finite() {
                return Err(Error::InvalidInput("non-finite rotation angle".into()));
            }
        }
        if g.max_qubit() >= self.n_qubits {
            return Err(Error::InvalidInput(format!(
                "gate on qubit {} outside a {}-qubit register",
                g.max_qubit(),
                self.n_qubits
            )));
        }
        self.gates.push(g);
        self.provenance.push(tag);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        self.provenance.extend_from_slice(&other.provenance);
        Ok(())
    }

    /// The circuit implementing the inverse unitary.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            provenance: self.provenance.iter().rev().copied().collect(),
        }
    }

    /// OpenQASM 2 text, one gate per line.
    pub fn to_qasm(&self) -> String {
        let mut s = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        let _ = writeln!(s, "qreg q[{}];", self.n_qubits);
        for g in &self.gates {
            let _ = match *g {
                Gate::H(q) => writeln!(s, "h q[{q}];"),
                Gate::Rx(q, t) => writeln!(s, "rx({t:e}) q[{q}];"),
                Gate::Ry(q, t) => writeln!(s, "ry({t:e}) q[{q}];"),
                Gate::Rz(q, t) => writeln!(s, "rz({t:e}) q[{q}];"),
                Gate::Cnot { control, target } => writeln!(s, "cx q[{control}],q[{target}];"),
            };
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateCounts {
    pub two_qubit: usize,
    pub single_qubit: usize,
}

pub fn count_gates(c: &Circuit) -> GateCounts {
    let two = c.gates.iter().filter(|g| g.is_two_qubit()).count();
    GateCounts {
        two_qubit: two,
        single_qubit: c.gates.len() - two,
    }
}

/// How the parity of a Pauli string's support is collected onto one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Ladder {
    /// CNOT chain from the lowest support qubit up to the highest.
    Staircase,
    /// Every other support qubit targets one pivot directly. The pivot is the
    /// highest bare-Z qubit between the two highest X/Y qubits when there is
    /// one, else the highest qubit. The CNOTs share a target and therefore
    /// commute with each other.
    #[default]
    Star,
}

/// Circuit for `exp(i·angle·P)`.
pub fn synthesize_pauli_exponential(p: &PauliString, angle: f64) -> Result<Circuit> {
    synthesize_with(p, angle, Ladder::default())
}

pub fn synthesize_with(p: &PauliString, angle: f64, ladder: Ladder) -> Result<Circuit> {
    let mut c = Circuit::new(p.n_qubits());
    append_pauli_exponential(&mut c, p, angle, ladder, None)?;
    Ok(c)
}

/// CNOT (control, target) pairs and the qubit receiving the parity.
fn ladder_pairs(p: &PauliString, support: &[usize], ladder: Ladder) -> (Vec<(usize, usize)>, usize) {
    let top = support[support.len() - 1];
    match ladder {
        Ladder::Staircase => (support.windows(2).map(|w| (w[0], w[1])).collect(), top),
        Ladder::Star => {
            // a bare-Z qubit between the two highest X/Y qubits, if any
            let xy: Vec<usize> = support
                .iter()
                .copied()
                .filter(|&q| p.get(q) != Pauli::Z)
                .collect();
            let floor = if xy.len() >= 2 { xy[xy.len() - 2] } else { usize::MAX };
            let pivot = support
                .iter()
                .rev()
                .copied()
                .find(|&q| q > floor && p.get(q) == Pauli::Z)
                .unwrap_or(top);
            let pairs = support
                .iter()
                .filter(|&&q| q != pivot)
                .map(|&q| (q, pivot))
                .collect();
            (pairs, pivot)
        }
    }
}

fn append_pauli_exponential(
    c: &mut Circuit,
    p: &PauliString,
    angle: f64,
    ladder: Ladder,
    tag: Option<u32>,
) -> Result<()> {
    let support = p.support_qubits();
    if support.is_empty() {
        return Err(Error::InvalidInput(
            "identity string has no circuit; fold it into a global phase".into(),
        ));
    }
    for &q in &support {
        match p.get(q) {
            Pauli::X => c.push(Gate::H(q), tag)?,
            Pauli::Y => c.push(Gate::Rx(q, FRAC_PI_2), tag)?,
            _ => {}
        }
    }
    let (pairs, top) = ladder_pairs(p, &support, ladder);
    for &(control, target) in &pairs {
        c.push(Gate::Cnot { control, target }, tag)?;
    }
    c.push(Gate::Rz(top, -2.0 * angle), tag)?;
    for &(control, target) in pairs.iter().rev() {
        c.push(Gate::Cnot { control, target }, tag)?;
    }
    for &q in &support {
        match p.get(q) {
            Pauli::X => c.push(Gate::H(q), tag)?,
            Pauli::Y => c.push(Gate::Rx(q, -FRAC_PI_2), tag)?,
            _ => {}
        }
    }
    Ok(())
}

/// Pauli rotations `(P, φ)` with `exp(t(κ-κ†)) = Π exp(i·φ·P)`, in synthesis order.
///
/// Strings of one excitation commute. They are ordered lexicographically by
/// their X/Y pattern read from the highest qubit down, so neighbours agree on
/// the basis of the ladder's top qubit for as long as possible.
pub fn excitation_rotations(
    e: &crate::ansatz::Excitation,
    amplitude: f64,
    n_qubits: usize,
) -> Result<Vec<(PauliString, f64)>> {
    let gen = e.generator(n_qubits)?;
    let mut out: Vec<(PauliString, f64)> = gen
        .iter()
        .map(|(p, c)| (*p, amplitude * c.im))
        .collect();
    out.sort_by_key(|(p, _)| {
        p.support_qubits()
            .into_iter()
            .rev()
            .map(|q| p.get(q) as u8)
            .collect::<Vec<_>>()
    });
    Ok(out)
}

/// Gate sequence for `(Π_x exp((T_x - T_x†)/n))^n` over the set's order.
pub fn build_uccsd_circuit(amps: &AmplitudeSet, n_qubits: usize, trotter_n: usize) -> Result<Circuit> {
    build_uccsd_circuit_with(amps, n_qubits, trotter_n, Ladder::default())
}

pub fn build_uccsd_circuit_with(
    amps: &AmplitudeSet,
    n_qubits: usize,
    trotter_n: usize,
    ladder: Ladder,
) -> Result<Circuit> {
    if trotter_n == 0 {
        return Err(Error::InvalidInput("trotter_n must be at least 1".into()));
    }
    let mut terms = Vec::with_capacity(amps.len());
    for (k, (e, t)) in amps.iter().enumerate() {
        if e.max_index() >= n_qubits {
            return Err(Error::InvalidInput(format!(
                "excitation {e} outside a {n_qubits}-qubit register"
            )));
        }
        terms.push((k as u32, excitation_rotations(e, t / trotter_n as f64, n_qubits)?));
    }
    let mut c = Circuit::new(n_qubits);
    for _ in 0..trotter_n {
        for (k, rots) in &terms {
            for (p, phi) in rots {
                append_pauli_exponential(&mut c, p, *phi, ladder, Some(*k))?;
            }
        }
    }
    Ok(c)
}

/// Same excitations with every amplitude set to 1, for counting the gates
/// of the parameterized circuit independently of the current values.
pub fn structural_amplitudes(amps: &AmplitudeSet) -> AmplitudeSet {
    amps.with_values(&vec![1.0; amps.len()])
        .expect("length preserved")
}

fn angle_is_trivial(t: f64) -> bool {
    // rotations are 4π-periodic; 2π gives a global phase of -1, which is kept
    let r = t.rem_euclid(4.0 * PI);
    r < 1e-12 || 4.0 * PI - r < 1e-12
}

/// Result of trying to absorb `g` into an earlier gate `h`.
enum Absorb {
    No,
    Cancel,
    Merge(Gate),
}

fn absorb(h: &Gate, g: &Gate) -> Absorb {
    use Gate::*;
    match (*h, *g) {
        (Cnot { control: c1, target: t1 }, Cnot { control: c2, target: t2 })
            if c1 == c2 && t1 == t2 =>
        {
            Absorb::Cancel
        }
        (H(a), H(b)) if a == b => Absorb::Cancel,
        (Rx(a, s), Rx(b, t)) if a == b => merged(Rx(a, s + t), s + t),
        (Ry(a, s), Ry(b, t)) if a == b => merged(Ry(a, s + t), s + t),
        (Rz(a, s), Rz(b, t)) if a == b => merged(Rz(a, s + t), s + t),
        _ => Absorb::No,
    }
}

fn merged(g: Gate, t: f64) -> Absorb {
    if angle_is_trivial(t) {
        Absorb::Cancel
    } else {
        Absorb::Merge(g)
    }
}

/// Streaming peephole canceller. Gates are pushed in circuit order; each new
/// gate walks back over earlier gates it commutes with, looking for a partner
/// to annihilate or merge with.
struct Canceller {
    n_qubits: usize,
    gates: Vec<Option<Gate>>,
    tags: Vec<Option<u32>>,
    per_qubit: Vec<Vec<usize>>,
    changed: bool,
}

impl Canceller {
    fn new(n_qubits: usize) -> Self {
        Canceller {
            n_qubits,
            gates: Vec::new(),
            tags: Vec::new(),
            per_qubit: vec![Vec::new(); n_qubits],
            changed: false,
        }
    }

    fn push(&mut self, g: Gate, tag: Option<u32>) {
        if let Gate::Rx(_, t) | Gate::Ry(_, t) | Gate::Rz(_, t) = g {
            if angle_is_trivial(t) {
                self.changed = true;
                return;
            }
        }
        let (q0, q1) = g.qubits();
        let qs: [Option<usize>; 2] = [Some(q0), q1];
        let gates = &mut self.gates;
        for q in qs.iter().flatten() {
            let list = &mut self.per_qubit[*q];
            while list.last().is_some_and(|&i| gates[i].is_none()) {
                list.pop();
            }
        }
        // walk back through gates sharing a qubit with g, newest first
        let mut ptr = [0usize; 2];
        for (k, q) in qs.iter().enumerate() {
            if let Some(q) = q {
                ptr[k] = self.per_qubit[*q].len();
            }
        }
        let mut outcome = None;
        loop {
            let mut newest: Option<usize> = None;
            for (k, q) in qs.iter().enumerate() {
                let Some(q) = q else { continue };
                let list = &self.per_qubit[*q];
                while ptr[k] > 0 && gates[list[ptr[k] - 1]].is_none() {
                    ptr[k] -= 1;
                }
                if ptr[k] > 0 {
                    let idx = list[ptr[k] - 1];
                    newest = Some(newest.map_or(idx, |n: usize| n.max(idx)));
                }
            }
            let Some(idx) = newest else { break };
            let h = gates[idx].expect("alive");
            match absorb(&h, &g) {
                Absorb::Cancel => {
                    outcome = Some((idx, None));
                    break;
                }
                Absorb::Merge(m) => {
                    outcome = Some((idx, Some(m)));
                    break;
                }
                Absorb::No => {}
            }
            if !commutes(&h, &g) {
                break;
            }
            for (k, q) in qs.iter().enumerate() {
                let Some(q) = q else { continue };
                if ptr[k] > 0 && self.per_qubit[*q][ptr[k] - 1] == idx {
                    ptr[k] -= 1;
                }
            }
        }
        match outcome {
            Some((idx, m)) => {
                gates[idx] = m;
                self.changed = true;
            }
            None => {
                let idx = gates.len();
                gates.push(Some(g));
                self.tags.push(tag);
                for q in qs.iter().flatten() {
                    self.per_qubit[*q].push(idx);
                }
            }
        }
    }

    fn finish(self) -> (Circuit, bool) {
        let mut out = Circuit::new(self.n_qubits);
        for (g, t) in self.gates.into_iter().zip(self.tags) {
            if let Some(g) = g {
                out.gates.push(g);
                out.provenance.push(t);
            }
        }
        (out, self.changed)
    }
}

fn cancel_pass(c: &Circuit) -> (Circuit, bool) {
    let mut k = Canceller::new(c.n_qubits);
    for (g, t) in c.gates.iter().zip(&c.provenance) {
        k.push(*g, *t);
    }
    k.finish()
}

/// Peephole rewriting to a fixed point: identical adjacent CNOTs and H pairs
/// annihilate, same-axis rotations merge, and gates slide past each other
/// where they commute (CNOT past RZ on its control, RX on its target, CNOTs
/// sharing a control or a target, and anything on disjoint qubits).
pub fn cancel_gates(c: &Circuit) -> Circuit {
    let (mut cur, _) = cancel_pass(c);
    loop {
        let (next, changed) = cancel_pass(&cur);
        if !changed {
            return next;
        }
        cur = next;
    }
}

/// Two-qubit and single-qubit tallies of the UCCSD circuit for `amps`,
/// without materializing the uncancelled circuit.
pub fn uccsd_gate_counts(
    amps: &AmplitudeSet,
    n_qubits: usize,
    trotter_n: usize,
    ladder: Ladder,
    cancel: bool,
) -> Result<GateCounts> {
    if !cancel {
        let mut counts = GateCounts::default();
        for (e, t) in amps.iter() {
            for (p, _) in excitation_rotations(e, *t, n_qubits)? {
                let w = p.weight();
                let basis = (p.x_mask().count_ones()) as usize;
                counts.two_qubit += 2 * (w - 1) * trotter_n;
                counts.single_qubit += (2 * basis + 1) * trotter_n;
            }
        }
        return Ok(counts);
    }
    let mut k = Canceller::new(n_qubits);
    let mut buf = Circuit::new(n_qubits);
    for _ in 0..trotter_n {
        for (idx, (e, t)) in amps.iter().enumerate() {
            if e.max_index() >= n_qubits {
                return Err(Error::InvalidInput(format!(
                    "excitation {e} outside a {n_qubits}-qubit register"
                )));
            }
            let rots = excitation_rotations(e, t / trotter_n as f64, n_qubits)?;
            for (p, phi) in &rots {
                buf.gates.clear();
                buf.provenance.clear();
                append_pauli_exponential(&mut buf, p, *phi, ladder, Some(idx as u32))?;
                for (g, tag) in buf.gates.iter().zip(&buf.provenance) {
                    k.push(*g, *tag);
                }
            }
        }
    }
    let (c, _) = k.finish();
    Ok(count_gates(&cancel_gates(&c)))
}

/// One row of a gate-count series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCountRow {
    pub molecule: String,
    pub basis: String,
    pub n_qubits: usize,
    pub cutoff: f64,
    pub cancelled: bool,
    pub two_qubit: usize,
    pub single_qubit: usize,
}

pub fn write_count_rows<W: std::io::Write>(w: W, rows: &[GateCountRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_count_rows<R: std::io::Read>(r: R) -> Result<Vec<GateCountRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize()
        .enumerate()
        .map(|(k, row)| row.map_err(|e| Error::parse(k + 2, e.to_string())))
        .collect()
}
