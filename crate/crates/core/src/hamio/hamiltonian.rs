use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::fcidump::SpatialIntegrals;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    Alpha,
    Beta,
}

impl Spin {
    /// Twice the spin projection: +1 for alpha, -1 for beta.
    pub fn ms2(self) -> i32 {
        match self {
            Spin::Alpha => 1,
            Spin::Beta => -1,
        }
    }
}

/// How spin orbitals are laid out on the qubit register.
///
/// In both layouts qubit 0 holds the highest-energy orbital and the occupied
/// orbitals sit at the top of the register, so the Hartree–Fock state reads
/// `|00..0011..11>` with qubit 0 leftmost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SpinLayout {
    /// Alpha and beta partners of each spatial orbital on adjacent qubits.
    #[default]
    Interleaved,
    /// All alpha orbitals first, then all beta orbitals.
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinOrbital {
    pub spatial: usize,
    pub spin: Spin,
}

/// Electronic Hamiltonian over spin orbitals.
///
/// One-body terms are stored densely; antisymmetrized two-body elements
/// `<pq||rs>` are evaluated on demand from the shared spatial integrals, so
/// folding and truncation only touch the orbital map.
#[derive(Debug, Clone)]
pub struct SpinOrbitalHamiltonian {
    core_energy: f64,
    h: Vec<f64>,
    orbitals: Vec<SpinOrbital>,
    integrals: Arc<SpatialIntegrals>,
    n_electrons: usize,
    ms2: i32,
    occupied: Vec<usize>,
    layout: SpinLayout,
    origin: Vec<usize>,
    frozen: Vec<usize>,
    truncated: Vec<usize>,
}

/// The correlated orbital space handed to the ansatz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSpace {
    pub n_occ: usize,
    pub n_virt: usize,
    /// Original spin-orbital indices removed by core folding.
    pub frozen: Vec<usize>,
    /// Original spin-orbital indices of discarded virtuals.
    pub truncated_virtuals: Vec<usize>,
    /// Occupied spin orbitals of the reduced Hamiltonian (qubit indices).
    pub occupied: Vec<usize>,
    /// Virtual spin orbitals of the reduced Hamiltonian (qubit indices).
    pub virtuals: Vec<usize>,
    pub spins: Vec<Spin>,
}

impl ActiveSpace {
    pub fn n_qubits(&self) -> usize {
        self.n_occ + self.n_virt
    }
}

fn qubit_index(layout: SpinLayout, n_spatial: usize, spatial: usize, spin: Spin) -> usize {
    let level = n_spatial - 1 - spatial;
    match (layout, spin) {
        (SpinLayout::Interleaved, Spin::Alpha) => 2 * level,
        (SpinLayout::Interleaved, Spin::Beta) => 2 * level + 1,
        (SpinLayout::Blocked, Spin::Alpha) => level,
        (SpinLayout::Blocked, Spin::Beta) => n_spatial + level,
    }
}

/// Expand spatial integrals into a spin-orbital Hamiltonian.
///
/// The reference determinant fills the lowest `(n + ms2)/2` alpha and
/// `(n - ms2)/2` beta spatial orbitals in file order.
pub fn to_spin_orbitals(
    si: SpatialIntegrals,
    layout: SpinLayout,
) -> Result<SpinOrbitalHamiltonian> {
    let n = si.n_orbitals;
    let ne = si.n_electrons as i64;
    let ms2 = si.ms2 as i64;
    if (ne + ms2) % 2 != 0 || ms2.abs() > ne {
        return Err(Error::InvalidInput(format!(
            "MS2={ms2} is inconsistent with {ne} electrons"
        )));
    }
    let n_alpha = ((ne + ms2) / 2) as usize;
    let n_beta = ((ne - ms2) / 2) as usize;
    if n_alpha > n || n_beta > n {
        return Err(Error::InvalidInput(format!(
            "{n_alpha} alpha / {n_beta} beta electrons do not fit in {n} orbitals"
        )));
    }

    let n_so = 2 * n;
    let mut orbitals = vec![
        SpinOrbital {
            spatial: 0,
            spin: Spin::Alpha
        };
        n_so
    ];
    for spatial in 0..n {
        for spin in [Spin::Alpha, Spin::Beta] {
            orbitals[qubit_index(layout, n, spatial, spin)] = SpinOrbital { spatial, spin };
        }
    }
    let mut h = vec![0.0; n_so * n_so];
    for p in 0..n_so {
        for q in 0..n_so {
            let (op, oq) = (orbitals[p], orbitals[q]);
            if op.spin == oq.spin {
                h[p * n_so + q] = si.h(op.spin, op.spatial, oq.spatial);
            }
        }
    }
    let mut occupied: Vec<usize> = (0..n_so)
        .filter(|&p| {
            let o = orbitals[p];
            match o.spin {
                Spin::Alpha => o.spatial < n_alpha,
                Spin::Beta => o.spatial < n_beta,
            }
        })
        .collect();
    occupied.sort_unstable();

    Ok(SpinOrbitalHamiltonian {
        core_energy: si.core_energy,
        h,
        orbitals,
        n_electrons: si.n_electrons,
        ms2: si.ms2,
        integrals: Arc::new(si),
        occupied,
        layout,
        origin: (0..n_so).collect(),
        frozen: Vec::new(),
        truncated: Vec::new(),
    })
}

impl SpinOrbitalHamiltonian {
    pub fn n_spin_orbitals(&self) -> usize {
        self.orbitals.len()
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn ms2(&self) -> i32 {
        self.ms2
    }

    pub fn n_alpha(&self) -> usize {
        ((self.n_electrons as i32 + self.ms2) / 2) as usize
    }

    pub fn n_beta(&self) -> usize {
        ((self.n_electrons as i32 - self.ms2) / 2) as usize
    }

    pub fn core_energy(&self) -> f64 {
        self.core_energy
    }

    pub fn layout(&self) -> SpinLayout {
        self.layout
    }

    pub fn orbitals(&self) -> &[SpinOrbital] {
        &self.orbitals
    }

    pub fn spin(&self, p: usize) -> Spin {
        self.orbitals[p].spin
    }

    pub fn spins(&self) -> Vec<Spin> {
        self.orbitals.iter().map(|o| o.spin).collect()
    }

    /// True when alpha and beta orbitals share spatial functions.
    pub fn is_restricted(&self) -> bool {
        !self.integrals.is_unrestricted()
    }

    pub fn occupied(&self) -> &[usize] {
        &self.occupied
    }

    pub fn virtuals(&self) -> Vec<usize> {
        (0..self.n_spin_orbitals())
            .filter(|p| self.occupied.binary_search(p).is_err())
            .collect()
    }

    /// Index of each spin orbital in the unreduced Hamiltonian.
    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    #[inline]
    pub fn h(&self, p: usize, q: usize) -> f64 {
        self.h[p * self.n_spin_orbitals() + q]
    }

    /// Antisymmetrized two-body element `<pq||rs> = <pq|rs> - <pq|sr>`.
    #[inline]
    pub fn g(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let (op, oq, or, os) = (
            self.orbitals[p],
            self.orbitals[q],
            self.orbitals[r],
            self.orbitals[s],
        );
        let mut v = 0.0;
        if op.spin == or.spin && oq.spin == os.spin {
            v += self
                .integrals
                .eri(op.spin, oq.spin, op.spatial, or.spatial, oq.spatial, os.spatial);
        }
        if op.spin == os.spin && oq.spin == or.spin {
            v -= self
                .integrals
                .eri(op.spin, oq.spin, op.spatial, os.spatial, oq.spatial, or.spatial);
        }
        v
    }

    /// Diagonal of the Fock operator built from the reference occupation.
    pub fn fock_diagonal(&self) -> Vec<f64> {
        (0..self.n_spin_orbitals())
            .map(|p| self.h(p, p) + self.occupied.iter().map(|&i| self.g(p, i, p, i)).sum::<f64>())
            .collect()
    }

    /// Mean-field energy of the reference determinant.
    pub fn hf_energy(&self) -> f64 {
        let occ = &self.occupied;
        let one: f64 = occ.iter().map(|&i| self.h(i, i)).sum();
        let two: f64 = occ
            .iter()
            .flat_map(|&i| occ.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.g(i, j, i, j))
            .sum();
        self.core_energy + one + 0.5 * two
    }

    /// Spin orbitals of the `k` lowest-energy occupied spatial orbitals of each spin.
    pub fn core_orbitals(&self, k: usize) -> Vec<usize> {
        let eps = self.fock_diagonal();
        let mut out = Vec::new();
        for spin in [Spin::Alpha, Spin::Beta] {
            let mut occ: Vec<usize> = self
                .occupied
                .iter()
                .copied()
                .filter(|&p| self.spin(p) == spin)
                .collect();
            occ.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));
            out.extend(occ.into_iter().take(k));
        }
        out.sort_unstable();
        out
    }

    /// Fold occupied spin orbitals into the core energy and one-body operator.
    pub fn freeze_core(&self, frozen: &[usize]) -> Result<Self> {
        let frozen: BTreeSet<usize> = frozen.iter().copied().collect();
        for &f in &frozen {
            if f >= self.n_spin_orbitals() || self.occupied.binary_search(&f).is_err() {
                return Err(Error::InvalidInput(format!(
                    "spin orbital {f} is not occupied and cannot be frozen"
                )));
            }
        }
        if frozen.is_empty() {
            return Ok(self.clone());
        }
        let mut core = self.core_energy;
        for &f in &frozen {
            core += self.h(f, f);
            for &g in &frozen {
                core += 0.5 * self.g(f, g, f, g);
            }
        }
        let keep: Vec<usize> = (0..self.n_spin_orbitals())
            .filter(|p| !frozen.contains(p))
            .collect();
        let m = keep.len();
        let mut h = vec![0.0; m * m];
        for (a, &p) in keep.iter().enumerate() {
            for (b, &q) in keep.iter().enumerate() {
                h[a * m + b] =
                    self.h(p, q) + frozen.iter().map(|&f| self.g(p, f, q, f)).sum::<f64>();
            }
        }
        let ms2_removed: i32 = frozen.iter().map(|&f| self.spin(f).ms2()).sum();
        let mut reduced = self.restrict(&keep, h);
        reduced.core_energy = core;
        reduced.n_electrons = self.n_electrons - frozen.len();
        reduced.ms2 = self.ms2 - ms2_removed;
        reduced.frozen.extend(frozen.iter().map(|&f| self.origin[f]));
        reduced.frozen.sort_unstable();
        Ok(reduced)
    }

    /// Keep the `n_keep_virt` lowest-energy virtual spin orbitals and drop the rest.
    ///
    /// Ties in orbital energy (alpha/beta partners of a closed shell) are
    /// broken by spatial index and then spin, so partners are kept together.
    pub fn select_active(&self, n_keep_virt: usize) -> Result<(Self, ActiveSpace)> {
        let virt = self.virtuals();
        if n_keep_virt > virt.len() {
            return Err(Error::InvalidInput(format!(
                "cannot keep {n_keep_virt} of {} virtual spin orbitals",
                virt.len()
            )));
        }
        let eps = self.fock_diagonal();
        let mut ranked = virt.clone();
        ranked.sort_by(|&a, &b| {
            let d = eps[a] - eps[b];
            if d.abs() > 1e-9 {
                d.total_cmp(&0.0)
            } else {
                let (oa, ob) = (self.orbitals[a], self.orbitals[b]);
                (oa.spatial, oa.spin)
                    .cmp(&(ob.spatial, ob.spin))
                    .then(Ordering::Equal)
            }
        });
        let dropped: BTreeSet<usize> = ranked[n_keep_virt..].iter().copied().collect();
        let keep: Vec<usize> = (0..self.n_spin_orbitals())
            .filter(|p| !dropped.contains(p))
            .collect();
        let m = keep.len();
        let mut h = vec![0.0; m * m];
        for (a, &p) in keep.iter().enumerate() {
            for (b, &q) in keep.iter().enumerate() {
                h[a * m + b] = self.h(p, q);
            }
        }
        let mut reduced = self.restrict(&keep, h);
        reduced
            .truncated
            .extend(dropped.iter().map(|&p| self.origin[p]));
        reduced.truncated.sort_unstable();
        let space = reduced.active_space();
        Ok((reduced, space))
    }

    /// The active space described by this Hamiltonian as it stands.
    pub fn active_space(&self) -> ActiveSpace {
        let virtuals = self.virtuals();
        ActiveSpace {
            n_occ: self.occupied.len(),
            n_virt: virtuals.len(),
            frozen: self.frozen.clone(),
            truncated_virtuals: self.truncated.clone(),
            occupied: self.occupied.clone(),
            virtuals,
            spins: self.spins(),
        }
    }

    fn restrict(&self, keep: &[usize], h: Vec<f64>) -> Self {
        let occupied = keep
            .iter()
            .enumerate()
            .filter(|(_, p)| self.occupied.binary_search(p).is_ok())
            .map(|(a, _)| a)
            .collect();
        SpinOrbitalHamiltonian {
            core_energy: self.core_energy,
            h,
            orbitals: keep.iter().map(|&p| self.orbitals[p]).collect(),
            integrals: Arc::clone(&self.integrals),
            n_electrons: self.n_electrons,
            ms2: self.ms2,
            occupied,
            layout: self.layout,
            origin: keep.iter().map(|&p| self.origin[p]).collect(),
            frozen: self.frozen.clone(),
            truncated: self.truncated.clone(),
        }
    }
}
