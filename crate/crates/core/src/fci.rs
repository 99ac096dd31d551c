//! Exact diagonalization in a fixed particle-number / spin-projection sector.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::ansatz::Excitation;
use crate::error::{Error, Result};
use crate::hamio::{Spin, SpinOrbitalHamiltonian};
use crate::simulator::{excitation_action, Sector, SectorOperator};

/// Determinants of one sector; an alias of the simulator's sector type.
pub type DeterminantBasis = Sector;

/// Sector dimension up to which [`ground_state`] uses a dense eigensolver.
pub const DENSE_LIMIT: usize = 400;

/// Residual required from the iterative solver.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Determinants with `n_electrons` electrons and spin projection `ms2 / 2`.
pub fn enumerate_sector(spins: &[Spin], n_electrons: usize, ms2: i32) -> Result<DeterminantBasis> {
    let ne = n_electrons as i64;
    let m = ms2 as i64;
    if (ne + m) % 2 != 0 || m.abs() > ne {
        return Err(Error::InvalidInput(format!(
            "ms2={ms2} is infeasible for {n_electrons} electrons"
        )));
    }
    Sector::new(spins, ((ne + m) / 2) as usize, ((ne - m) / 2) as usize)
}

/// The sector of the Hamiltonian's reference determinant.
pub fn reference_sector(h: &SpinOrbitalHamiltonian) -> Result<DeterminantBasis> {
    Sector::new(&h.spins(), h.n_alpha(), h.n_beta())
}

fn bits(k: u128) -> impl Iterator<Item = usize> {
    let mut rest = k;
    std::iter::from_fn(move || {
        if rest == 0 {
            return None;
        }
        let b = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        Some(b)
    })
}

fn row(h: &SpinOrbitalHamiltonian, basis: &DeterminantBasis, d: u128) -> Vec<(u32, f64)> {
    let n = basis.n_qubits();
    let occ: Vec<usize> = bits(d).collect();
    let full = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let virt: Vec<usize> = bits(!d & full).collect();
    let mut out = Vec::new();
    let mut push = |target: u128, v: f64| {
        if v != 0.0 {
            if let Some(pos) = basis.position(target) {
                out.push((pos as u32, v));
            }
        }
    };

    let mut diag = h.core_energy();
    for (x, &i) in occ.iter().enumerate() {
        diag += h.h(i, i);
        for &j in &occ[..x] {
            diag += h.g(i, j, i, j);
        }
    }
    push(d, diag);

    for &i in &occ {
        for &a in &virt {
            if h.spin(i) != h.spin(a) {
                continue;
            }
            let e = Excitation::Single { i, a };
            let (t, sign) = excitation_action(&e, d).expect("valid single");
            let mut v = h.h(a, i);
            for &j in &occ {
                if j != i {
                    v += h.g(a, j, i, j);
                }
            }
            push(t, sign * v);
        }
    }

    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[..x] {
            let ms_occ = h.spin(i).ms2() + h.spin(j).ms2();
            for (y, &a) in virt.iter().enumerate() {
                for &b in &virt[..y] {
                    if h.spin(a).ms2() + h.spin(b).ms2() != ms_occ {
                        continue;
                    }
                    let e = Excitation::Double { i, j, a, b };
                    let (t, sign) = excitation_action(&e, d).expect("valid double");
                    push(t, sign * h.g(a, b, i, j));
                }
            }
        }
    }
    out
}

/// Slater–Condon Hamiltonian matrix on `basis`.
pub fn build_matrix(h: &SpinOrbitalHamiltonian, basis: &DeterminantBasis) -> Result<SectorOperator> {
    if h.n_spin_orbitals() != basis.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: h.n_spin_orbitals(),
            found: basis.n_qubits(),
        });
    }
    let rows: Vec<Vec<(u32, f64)>> = basis
        .states()
        .par_iter()
        .map(|&d| row(h, basis, d))
        .collect();
    // Rows above hold <D'|H|D> at column D' of row D; the matrix is symmetric,
    // so reading them as rows is the same matrix.
    Ok(SectorOperator::from_rows(rows))
}

/// `S²` on `basis`, pairing alpha and beta spin orbitals by spatial index.
/// Only meaningful for restricted orbitals.
pub fn spin_squared(h: &SpinOrbitalHamiltonian, basis: &DeterminantBasis) -> Result<SectorOperator> {
    let n = h.n_spin_orbitals();
    let mut pairs = Vec::new();
    for p in 0..n {
        if h.spin(p) != Spin::Alpha {
            continue;
        }
        let sp = h.orbitals()[p].spatial;
        let q = (0..n)
            .find(|&q| h.spin(q) == Spin::Beta && h.orbitals()[q].spatial == sp)
            .ok_or_else(|| Error::InvalidInput(format!("alpha orbital {p} has no beta partner")))?;
        pairs.push((p, q));
    }
    let sz = (basis.n_alpha() as f64 - basis.n_beta() as f64) / 2.0;
    let rows: Vec<Vec<(u32, f64)>> = basis
        .states()
        .par_iter()
        .map(|&d| {
            let mut out = vec![(basis.position(d).unwrap() as u32, sz * sz - sz)];
            // S+ S- = Σ_pq a†_pα a_pβ a†_qβ a_qα; S² = S+S- + Sz² - Sz
            for &(qa, qb) in &pairs {
                let Some((d1, s1)) = excitation_action(&Excitation::Single { i: qa, a: qb }, d)
                else {
                    continue;
                };
                for &(pa, pb) in &pairs {
                    if let Some((d2, s2)) =
                        excitation_action(&Excitation::Single { i: pb, a: pa }, d1)
                    {
                        if let Some(pos) = basis.position(d2) {
                            out.push((pos as u32, s1 * s2));
                        }
                    }
                }
            }
            out
        })
        .collect();
    Ok(SectorOperator::from_rows(rows))
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub energy: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn residual(m: &SectorOperator, v: &[f64], e: f64) -> f64 {
    let mut hv = vec![0.0; v.len()];
    m.matvec(v, &mut hv);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - e * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn dense_ground(m: &SectorOperator) -> Eigenpair {
    let n = m.dim();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut col = vec![0.0; n];
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        m.matvec(&unit, &mut col);
        unit[j] = 0.0;
        for i in 0..n {
            a[(i, j)] = col[i];
        }
    }
    let eig = a.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let energy = eig.eigenvalues[k];
    let vector: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let r = residual(m, &vector, energy);
    Eigenpair {
        energy,
        vector,
        residual: r,
        iterations: 1,
    }
}

/// Restarted Lanczos with full reorthogonalization.
fn lanczos_ground(m: &SectorOperator, max_restarts: usize) -> Result<Eigenpair> {
    let n = m.dim();
    let krylov = n.min(120);
    // deterministic start with overlap on every basis state
    let mut start: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 * 1e-3).collect();
    let mut best = (f64::INFINITY, Vec::new(), f64::INFINITY);
    for restart in 0..max_restarts {
        let norm = start.iter().map(|x| x * x).sum::<f64>().sqrt();
        start.iter_mut().for_each(|x| *x /= norm);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; n];
        for k in 0..krylov {
            m.matvec(&basis[k], &mut w);
            let a: f64 = w.iter().zip(&basis[k]).map(|(x, y)| x * y).sum();
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let c: f64 = w.iter().zip(v).map(|(x, y)| x * y).sum();
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if k + 1 == krylov || b < 1e-12 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let dim = alpha.len();
        let t = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let idx = eig.eigenvalues.imin();
        let y: DVector<f64> = eig.eigenvectors.column(idx).into();
        let mut v = vec![0.0; n];
        for (c, b) in y.iter().zip(&basis) {
            v.iter_mut().zip(b).for_each(|(x, z)| *x += c * z);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let e = m.expectation(&v);
        let r = residual(m, &v, e);
        if r < best.2 {
            best = (e, v.clone(), r);
        }
        if r < RESIDUAL_TOL {
            return Ok(Eigenpair {
                energy: e,
                vector: v,
                residual: r,
                iterations: restart + 1,
            });
        }
        start = v;
    }
    Err(Error::NoConvergence {
        residual: best.2,
        iterations: max_restarts,
    })
}

/// Lowest eigenpair of a real symmetric sector matrix.
pub fn ground_state(m: &SectorOperator) -> Result<Eigenpair> {
    if m.dim() == 0 {
        return Err(Error::InvalidInput("empty sector".into()));
    }
    if m.dim() <= DENSE_LIMIT {
        Ok(dense_ground(m))
    } else {
        lanczos_ground(m, 200)
    }
}

/// Add `λ (S² − s(s+1))` to a Hamiltonian matrix.
pub fn with_spin_penalty(
    hm: &SectorOperator,
    s2: &SectorOperator,
    s: f64,
    lambda: f64,
) -> SectorOperator {
    let n = hm.dim();
    let mut rows = vec![Vec::new(); n];
    let mut unit = vec![0.0; n];
    let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
    for (j, r) in rows.iter_mut().enumerate() {
        unit[j] = 1.0;
        hm.matvec(&unit, &mut a);
        s2.matvec(&unit, &mut b);
        unit[j] = 0.0;
        for i in 0..n {
            let mut v = a[i] + lambda * b[i];
            if i == j {
                v -= lambda * s * (s + 1.0);
            }
            if v != 0.0 {
                r.push((i as u32, v));
            }
        }
    }
    SectorOperator::from_rows(rows)
}

/// Ground state of the reference sector.
#[derive(Debug, Clone)]
pub struct FciResult {
    pub energy: f64,
    pub correlation: f64,
    pub spin_squared: Option<f64>,
    pub dimension: usize,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// Penalty weight (Hartree) for spin-targeted solves.
pub const SPIN_PENALTY: f64 = 1.0;

/// FCI in the reference sector. With `multiplicity` set on a restricted
/// Hamiltonian, states of other total spin are pushed up by an `S²` penalty.
pub fn solve(h: &SpinOrbitalHamiltonian, multiplicity: Option<u32>) -> Result<FciResult> {
    let basis = reference_sector(h)?;
    let hm = build_matrix(h, &basis)?;
    let target = multiplicity.filter(|_| h.is_restricted());
    let (pair, s2_value) = match target {
        Some(mult) => {
            let s2 = spin_squared(h, &basis)?;
            let s = (mult as f64 - 1.0) / 2.0;
            let pair = ground_state(&with_spin_penalty(&hm, &s2, s, SPIN_PENALTY))?;
            let s2v = s2.expectation(&pair.vector);
            (pair, Some(s2v))
        }
        None => (ground_state(&hm)?, None),
    };
    let energy = hm.expectation(&pair.vector);
    Ok(FciResult {
        energy,
        correlation: energy - h.hf_energy(),
        spin_squared: s2_value,
        dimension: basis.len(),
        residual: residual(&hm, &pair.vector, energy),
        vector: pair.vector,
    })
}
