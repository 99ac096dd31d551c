//! UCCSD excitations, MP2 amplitudes and amplitude pre-screening.
//!
//! Doubles are stored as `(i, j) -> (a, b)` with `i > j`, `a > b`, and stand
//! for `a_a† a_b† a_j a_i`. Spin-complement doubles carry independent
//! amplitudes.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamio::{ActiveSpace, Spin, SpinOrbitalHamiltonian};
use crate::pauli::{jw_excitation_generator, PauliSum};

/// Smallest MP2 denominator magnitude accepted, Hartree.
pub const MIN_DENOMINATOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Excitation {
    Single { i: usize, a: usize },
    Double { i: usize, j: usize, a: usize, b: usize },
}

impl Excitation {
    /// Normalized double: indices are swapped into `i > j`, `a > b`, and the
    /// returned sign tracks the antisymmetry of the operator.
    pub fn double(i: usize, j: usize, a: usize, b: usize) -> Result<(Self, f64)> {
        let all = [i, j, a, b];
        for x in 0..4 {
            for y in x + 1..4 {
                if all[x] == all[y] {
                    return Err(Error::InvalidInput(format!(
                        "repeated index {} in double excitation",
                        all[x]
                    )));
                }
            }
        }
        let mut sign = 1.0;
        let (i, j) = if i > j {
            (i, j)
        } else {
            sign = -sign;
            (j, i)
        };
        let (a, b) = if a > b {
            (a, b)
        } else {
            sign = -sign;
            (b, a)
        };
        Ok((Excitation::Double { i, j, a, b }, sign))
    }

    pub fn is_single(&self) -> bool {
        matches!(self, Excitation::Single { .. })
    }

    pub fn occ(&self) -> Vec<usize> {
        match *self {
            Excitation::Single { i, .. } => vec![i],
            Excitation::Double { i, j, .. } => vec![i, j],
        }
    }

    pub fn virt(&self) -> Vec<usize> {
        match *self {
            Excitation::Single { a, .. } => vec![a],
            Excitation::Double { a, b, .. } => vec![a, b],
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        let mut v = self.occ();
        v.extend(self.virt());
        v
    }

    pub fn max_index(&self) -> usize {
        self.indices().into_iter().max().unwrap_or(0)
    }

    /// True when the excitation conserves the spin projection.
    pub fn is_spin_allowed(&self, spins: &[Spin]) -> bool {
        let sz = |v: Vec<usize>| v.iter().map(|&p| spins[p].ms2()).sum::<i32>();
        sz(self.occ()) == sz(self.virt())
    }

    /// `κ - κ†` as a Pauli sum on `n_qubits`.
    pub fn generator(&self, n_qubits: usize) -> Result<PauliSum> {
        jw_excitation_generator(&self.occ(), &self.virt(), n_qubits)
    }

    fn sort_key(&self) -> (u8, [usize; 4]) {
        match *self {
            Excitation::Double { i, j, a, b } => (0, [b, a, j, i]),
            Excitation::Single { i, a } => (1, [a, i, 0, 0]),
        }
    }

    /// Canonical order: doubles before singles; within each kind, ascending by
    /// the lowest virtual, then the other virtual, then the occupied indices.
    /// Neighbours then share the low end of their Jordan–Wigner ladders.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for Excitation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Excitation::Single { i, a } => write!(f, "{i} -> {a}"),
            Excitation::Double { i, j, a, b } => write!(f, "{i} {j} -> {a} {b}"),
        }
    }
}

/// All spin-conserving singles and doubles of the active space, in canonical order.
pub fn enumerate_excitations(space: &ActiveSpace) -> Vec<Excitation> {
    let spins = &space.spins;
    let mut out = Vec::new();
    for &i in &space.occupied {
        for &a in &space.virtuals {
            let e = Excitation::Single { i, a };
            if e.is_spin_allowed(spins) {
                out.push(e);
            }
        }
    }
    for (x, &i) in space.occupied.iter().enumerate() {
        for &j in &space.occupied[..x] {
            for (y, &a) in space.virtuals.iter().enumerate() {
                for &b in &space.virtuals[..y] {
                    let (e, _) = Excitation::double(i, j, a, b).expect("distinct indices");
                    if e.is_spin_allowed(spins) {
                        out.push(e);
                    }
                }
            }
        }
    }
    out.sort_by(Excitation::canonical_cmp);
    out
}

/// Ordered excitation amplitudes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AmplitudeSet {
    entries: Vec<(Excitation, f64)>,
}

impl AmplitudeSet {
    /// Build from arbitrary entries; the result is in canonical order and
    /// duplicate excitations are rejected.
    pub fn new(mut entries: Vec<(Excitation, f64)>) -> Result<Self> {
        entries.sort_by(|x, y| x.0.canonical_cmp(&y.0));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidInput(format!("duplicate excitation {}", w[0].0)));
            }
        }
        Ok(AmplitudeSet { entries })
    }

    /// Keep the given order instead of sorting.
    pub fn with_order(entries: Vec<(Excitation, f64)>) -> Self {
        AmplitudeSet { entries }
    }

    pub fn zeros(excitations: &[Excitation]) -> Self {
        AmplitudeSet {
            entries: excitations.iter().map(|&e| (e, 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Excitation, f64)> {
        self.entries.iter()
    }

    pub fn excitations(&self) -> Vec<Excitation> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn get(&self, e: &Excitation) -> Option<f64> {
        self.entries.iter().find(|x| x.0 == *e).map(|x| x.1)
    }

    pub fn n_singles(&self) -> usize {
        self.entries.iter().filter(|e| e.0.is_single()).count()
    }

    pub fn n_doubles(&self) -> usize {
        self.len() - self.n_singles()
    }

    /// Same excitations with new values.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        Ok(AmplitudeSet {
            entries: self
                .entries
                .iter()
                .zip(values)
                .map(|(&(e, _), &v)| (e, v))
                .collect(),
        })
    }

    /// One line per entry: `i j a b value` for doubles, `i a value` for singles.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (e, t) in &self.entries {
            match *e {
                Excitation::Single { i, a } => out.push_str(&format!("{i} {a} {t:e}\n")),
                Excitation::Double { i, j, a, b } => {
                    out.push_str(&format!("{i} {j} {a} {b} {t:e}\n"))
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let idx = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(no + 1, format!("bad index '{s}'")))
            };
            let val = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(no + 1, format!("bad amplitude '{s}'")))
            };
            let entry = match toks.len() {
                3 => (
                    Excitation::Single {
                        i: idx(toks[0])?,
                        a: idx(toks[1])?,
                    },
                    val(toks[2])?,
                ),
                5 => {
                    let (e, s) = Excitation::double(
                        idx(toks[0])?,
                        idx(toks[1])?,
                        idx(toks[2])?,
                        idx(toks[3])?,
                    )
                    .map_err(|e| Error::parse(no + 1, e.to_string()))?;
                    (e, s * val(toks[4])?)
                }
                _ => return Err(Error::parse(no + 1, "expected 3 or 5 fields")),
            };
            entries.push(entry);
        }
        AmplitudeSet::new(entries)
    }
}

/// MP2 doubles `t = <ij||ab> / (ε_i + ε_j - ε_a - ε_b)` on every enumerated
/// excitation; singles start at zero.
pub fn mp2_amplitudes(
    h: &SpinOrbitalHamiltonian,
    space: &ActiveSpace,
    eps: &[f64],
) -> Result<AmplitudeSet> {
    let excitations = enumerate_excitations(space);
    let mut entries = Vec::with_capacity(excitations.len());
    for e in excitations {
        let t = match e {
            Excitation::Single { .. } => 0.0,
            Excitation::Double { i, j, a, b } => {
                let d = eps[i] + eps[j] - eps[a] - eps[b];
                if d.abs() < MIN_DENOMINATOR {
                    return Err(Error::DegenerateDenominator {
                        i,
                        j,
                        a,
                        b,
                        denominator: d,
                    });
                }
                h.g(i, j, a, b) / d
            }
        };
        entries.push((e, t));
    }
    Ok(AmplitudeSet::with_order(entries))
}

/// `Σ_{i>j, a>b} t · <ij||ab>`, which equals `Σ |<ij||ab>|² / D` for MP2 amplitudes.
pub fn mp2_energy(amps: &AmplitudeSet, h: &SpinOrbitalHamiltonian) -> f64 {
    amps.iter()
        .map(|&(e, t)| match e {
            Excitation::Double { i, j, a, b } => t * h.g(i, j, a, b),
            Excitation::Single { .. } => 0.0,
        })
        .sum()
}

/// Convenience: MP2 correlation energy of the reference determinant.
pub fn mp2_correlation(h: &SpinOrbitalHamiltonian) -> Result<f64> {
    let space = h.active_space();
    let amps = mp2_amplitudes(h, &space, &h.fock_diagonal())?;
    Ok(mp2_energy(&amps, h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrescreenConfig {
    pub cutoff: f64,
    pub enabled: bool,
}

impl Default for PrescreenConfig {
    fn default() -> Self {
        PrescreenConfig {
            cutoff: 1e-5,
            enabled: true,
        }
    }
}

impl PrescreenConfig {
    pub fn disabled() -> Self {
        PrescreenConfig {
            cutoff: 0.0,
            enabled: false,
        }
    }

    pub fn with_cutoff(cutoff: f64) -> Self {
        PrescreenConfig {
            cutoff,
            enabled: true,
        }
    }
}

/// Result of pre-screening: the variational set and what was dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Prescreened {
    pub kept: AmplitudeSet,
    pub removed: Vec<(Excitation, f64)>,
}

/// Drop doubles with `|t| < cutoff`. Singles are always kept.
pub fn prescreen(amps: &AmplitudeSet, cfg: &PrescreenConfig) -> Prescreened {
    if !cfg.enabled {
        return Prescreened {
            kept: amps.clone(),
            removed: Vec::new(),
        };
    }
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for &(e, t) in amps.iter() {
        if e.is_single() || t.abs() >= cfg.cutoff {
            kept.push((e, t));
        } else {
            removed.push((e, t));
        }
    }
    Prescreened {
        kept: AmplitudeSet::with_order(kept),
        removed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamio::{FixtureManifest, SpinLayout};
    use proptest::prelude::*;

    fn manifest() -> FixtureManifest {
        FixtureManifest::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/fcidump")).unwrap()
    }

    fn space(occ: Vec<usize>, virt: Vec<usize>, spins: Vec<Spin>) -> ActiveSpace {
        ActiveSpace {
            n_occ: occ.len(),
            n_virt: virt.len(),
            frozen: vec![],
            truncated_virtuals: vec![],
            occupied: occ,
            virtuals: virt,
            spins,
        }
    }

    fn interleaved(n: usize) -> Vec<Spin> {
        (0..n)
            .map(|p| if p % 2 == 0 { Spin::Alpha } else { Spin::Beta })
            .collect()
    }

    /// Independent count over all ordered index tuples.
    fn brute_force(sp: &ActiveSpace) -> (usize, usize) {
        let s = &sp.spins;
        let mut singles = 0;
        let mut doubles = 0;
        for &i in &sp.occupied {
            for &a in &sp.virtuals {
                if s[i] == s[a] {
                    singles += 1;
                }
            }
        }
        for &i in &sp.occupied {
            for &j in &sp.occupied {
                for &a in &sp.virtuals {
                    for &b in &sp.virtuals {
                        let sz = |p: usize| s[p].ms2();
                        if i > j && a > b && sz(i) + sz(j) == sz(a) + sz(b) {
                            doubles += 1;
                        }
                    }
                }
            }
        }
        (singles, doubles)
    }

    #[test]
    fn h2_excitations() {
        let sp = space(vec![2, 3], vec![0, 1], interleaved(4));
        let ex = enumerate_excitations(&sp);
        assert_eq!(ex.len(), 3);
        assert_eq!(ex.iter().filter(|e| e.is_single()).count(), 2);
        assert_eq!(ex[0], Excitation::Double { i: 3, j: 2, a: 1, b: 0 });
    }

    #[test]
    fn no_virtuals() {
        let sp = space(vec![0, 1], vec![], interleaved(2));
        assert!(enumerate_excitations(&sp).is_empty());
    }

    #[test]
    fn spin_relabel_invariance() {
        let sp = space(vec![4, 5, 6, 7], vec![0, 1, 2, 3], interleaved(8));
        let flipped: Vec<Spin> = sp
            .spins
            .iter()
            .map(|s| match s {
                Spin::Alpha => Spin::Beta,
                Spin::Beta => Spin::Alpha,
            })
            .collect();
        let sp2 = space(sp.occupied.clone(), sp.virtuals.clone(), flipped);
        assert_eq!(enumerate_excitations(&sp), enumerate_excitations(&sp2));
    }

    #[test]
    fn double_normalization_sign() {
        let (e, s) = Excitation::double(2, 3, 0, 1).unwrap();
        assert_eq!(e, Excitation::Double { i: 3, j: 2, a: 1, b: 0 });
        assert_eq!(s, 1.0);
        let (_, s) = Excitation::double(3, 2, 0, 1).unwrap();
        assert_eq!(s, -1.0);
        assert!(Excitation::double(3, 3, 0, 1).is_err());
    }

    #[test]
    fn mp2_matches_reference() {
        let m = manifest();
        for id in ["h2_sto3g", "h2o_sto3g", "lih_sto3g", "oh_sto3g"] {
            let entry = m.get(id).unwrap();
            let h = m.hamiltonian(entry, SpinLayout::Interleaved).unwrap();
            let e = mp2_correlation(&h).unwrap();
            let want = entry.mp2_correlation.unwrap();
            assert!((e - want).abs() < 1e-8, "{id}: {e} vs {want}");
        }
    }

    #[test]
    fn mp2_is_layout_independent() {
        let m = manifest();
        let entry = m.get("h2o_sto3g").unwrap();
        let a = mp2_correlation(&m.hamiltonian(entry, SpinLayout::Interleaved).unwrap()).unwrap();
        let b = mp2_correlation(&m.hamiltonian(entry, SpinLayout::Blocked).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn mp2_water_bounded_by_fci() {
        let m = manifest();
        let entry = m.get("h2o_sto3g").unwrap();
        let h = m.hamiltonian(entry, SpinLayout::Interleaved).unwrap();
        let kj = crate::units::to_kj_per_mol(mp2_correlation(&h).unwrap());
        assert!(kj < 0.0 && kj > -130.473);
    }

    #[test]
    fn degenerate_denominator() {
        let m = manifest();
        let h = m
            .hamiltonian(m.get("h2_sto3g").unwrap(), SpinLayout::Interleaved)
            .unwrap();
        let space = h.active_space();
        let eps = vec![0.0; 4];
        assert!(matches!(
            mp2_amplitudes(&h, &space, &eps),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn mp2_antisymmetric_before_canonicalization() {
        let m = manifest();
        let h = m
            .hamiltonian(m.get("h2o_sto3g").unwrap(), SpinLayout::Interleaved)
            .unwrap();
        let (i, j, a, b) = (11, 8, 3, 0);
        assert!((h.g(i, j, a, b) + h.g(j, i, a, b)).abs() < 1e-14);
        assert!((h.g(i, j, a, b) + h.g(i, j, b, a)).abs() < 1e-14);
    }

    #[test]
    fn prescreen_limits() {
        let m = manifest();
        let h = m
            .hamiltonian(m.get("h2o_sto3g").unwrap(), SpinLayout::Interleaved)
            .unwrap();
        let amps = mp2_amplitudes(&h, &h.active_space(), &h.fock_diagonal()).unwrap();
        let p0 = prescreen(&amps, &PrescreenConfig::with_cutoff(0.0));
        assert_eq!(p0.kept, amps);
        let pinf = prescreen(&amps, &PrescreenConfig::with_cutoff(f64::INFINITY));
        assert_eq!(pinf.kept.len(), amps.n_singles());
        assert_eq!(pinf.removed.len(), amps.n_doubles());
    }

    #[test]
    fn text_round_trip() {
        let amps = AmplitudeSet::new(vec![
            (Excitation::Single { i: 3, a: 1 }, 0.0),
            (Excitation::Double { i: 3, j: 2, a: 1, b: 0 }, -0.1128),
        ])
        .unwrap();
        let back = AmplitudeSet::from_text(&amps.to_text()).unwrap();
        assert_eq!(back, amps);
        let swapped = AmplitudeSet::from_text("2 3 1 0 0.5\n").unwrap();
        assert_eq!(
            swapped.get(&Excitation::Double { i: 3, j: 2, a: 1, b: 0 }),
            Some(-0.5)
        );
    }

    fn arb_space() -> impl Strategy<Value = ActiveSpace> {
        (2usize..=10, any::<u64>()).prop_flat_map(|(n, seed)| {
            (1..n).prop_map(move |n_occ| {
                let mut idx: Vec<usize> = (0..n).collect();
                let mut s = seed;
                for k in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    idx.swap(k, (s >> 33) as usize % (k + 1));
                }
                let spins = (0..n)
                    .map(|p| if (seed >> p) & 1 == 0 { Spin::Alpha } else { Spin::Beta })
                    .collect();
                let mut occ = idx[..n_occ].to_vec();
                let mut virt = idx[n_occ..].to_vec();
                occ.sort();
                virt.sort();
                space(occ, virt, spins)
            })
        })
    }

    proptest! {
        #[test]
        fn enumeration_matches_brute_force(sp in arb_space()) {
            let ex = enumerate_excitations(&sp);
            let (s, d) = brute_force(&sp);
            prop_assert_eq!(ex.iter().filter(|e| e.is_single()).count(), s);
            prop_assert_eq!(ex.iter().filter(|e| !e.is_single()).count(), d);
            prop_assert!(s <= sp.n_occ * sp.n_virt);
            prop_assert!(d <= sp.n_occ * sp.n_occ * sp.n_virt * sp.n_virt);
        }

        #[test]
        fn prescreen_composes(ts in proptest::collection::vec(-1e-3f64..1e-3, 1..20),
                              c1 in 0.0f64..1e-3, c2 in 0.0f64..1e-3) {
            let entries: Vec<_> = ts.iter().enumerate()
                .map(|(k, &t)| (Excitation::Double { i: 100 + k, j: k, a: 200 + k, b: 50 + k }, t))
                .collect();
            let amps = AmplitudeSet::new(entries).unwrap();
            let a = prescreen(&prescreen(&amps, &PrescreenConfig::with_cutoff(c1)).kept,
                              &PrescreenConfig::with_cutoff(c2)).kept;
            let b = prescreen(&amps, &PrescreenConfig::with_cutoff(c1.max(c2))).kept;
            prop_assert_eq!(a, b);
        }
    }
}
