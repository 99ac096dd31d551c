//! Small dense-matrix reference used by tests. Everything here is built from
//! explicit 2x2 matrices and Kronecker products, independent of the
//! symplectic arithmetic in `pauli`.
#![allow(dead_code)]

use num_complex::Complex64;

use crate::pauli::{Pauli, PauliString, PauliSum};

pub type Mat = Vec<Vec<Complex64>>;

const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn single(p: Pauli) -> Mat {
    match p {
        Pauli::I => vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(1., 0.)]],
        Pauli::X => vec![vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]],
        Pauli::Y => vec![vec![c(0., 0.), c(0., -1.)], vec![c(0., 1.), c(0., 0.)]],
        Pauli::Z => vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(-1., 0.)]],
    }
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![c(0., 0.); na * nb]; na * nb];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Operator on `n` qubits from one 2x2 factor per qubit; qubit 0 is the
/// least significant bit of the basis index.
pub fn tensor(factors: &[Mat]) -> Mat {
    let mut out = vec![vec![c(1., 0.)]];
    for f in factors.iter().rev() {
        out = kron(&out, f);
    }
    out
}

pub fn pauli_string(p: &PauliString) -> Mat {
    let factors: Vec<Mat> = (0..p.n_qubits()).map(|q| single(p.get(q))).collect();
    tensor(&factors)
}

pub fn pauli_sum(s: &PauliSum) -> Mat {
    let dim = 1usize << s.n_qubits();
    let mut out = zeros(dim);
    for (p, coeff) in s.iter() {
        out = add(&out, &scale(&pauli_string(p), *coeff));
    }
    out
}

/// Fermionic annihilator (or creator) as `Z ⊗ … ⊗ Z ⊗ σ ⊗ I ⊗ … ⊗ I`
/// with the Z factors on qubits above `p`.
pub fn ladder(p: usize, dagger: bool, n: usize) -> Mat {
    let lower = vec![vec![c(0., 0.), c(1., 0.)], vec![c(0., 0.), c(0., 0.)]];
    let sigma = if dagger { adjoint(&lower) } else { lower };
    let factors: Vec<Mat> = (0..n)
        .map(|q| {
            if q < p {
                single(Pauli::I)
            } else if q == p {
                sigma.clone()
            } else {
                single(Pauli::Z)
            }
        })
        .collect();
    tensor(&factors)
}

pub fn gate_matrix(g: &crate::circuit::Gate, n: usize) -> Mat {
    use crate::circuit::Gate;
    let on = |q: usize, m: Mat| {
        let factors: Vec<Mat> = (0..n)
            .map(|k| if k == q { m.clone() } else { single(Pauli::I) })
            .collect();
        tensor(&factors)
    };
    let rot = |axis: Pauli, t: f64| {
        add(
            &scale(&single(Pauli::I), c((t / 2.0).cos(), 0.)),
            &scale(&single(axis), c(0., -(t / 2.0).sin())),
        )
    };
    match *g {
        Gate::H(q) => on(
            q,
            scale(
                &add(&single(Pauli::X), &single(Pauli::Z)),
                c(std::f64::consts::FRAC_1_SQRT_2, 0.),
            ),
        ),
        Gate::Rx(q, t) => on(q, rot(Pauli::X, t)),
        Gate::Ry(q, t) => on(q, rot(Pauli::Y, t)),
        Gate::Rz(q, t) => on(q, rot(Pauli::Z, t)),
        Gate::Cnot { control, target } => {
            let p0 = vec![vec![c(1., 0.), c(0., 0.)], vec![c(0., 0.), c(0., 0.)]];
            let p1 = vec![vec![c(0., 0.), c(0., 0.)], vec![c(0., 0.), c(1., 0.)]];
            let build = |proj: &Mat, tgt: Mat| {
                let factors: Vec<Mat> = (0..n)
                    .map(|k| {
                        if k == control {
                            proj.clone()
                        } else if k == target {
                            tgt.clone()
                        } else {
                            single(Pauli::I)
                        }
                    })
                    .collect();
                tensor(&factors)
            };
            add(&build(&p0, single(Pauli::I)), &build(&p1, single(Pauli::X)))
        }
    }
}

pub fn circuit_unitary(circ: &crate::circuit::Circuit) -> Mat {
    let mut u = identity(1 << circ.n_qubits);
    for g in &circ.gates {
        u = matmul(&gate_matrix(g, circ.n_qubits), &u);
    }
    u
}

pub fn zeros(dim: usize) -> Mat {
    vec![vec![c(0., 0.); dim]; dim]
}

pub fn identity(dim: usize) -> Mat {
    let mut m = zeros(dim);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1., 0.);
    }
    m
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0., 0.) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    add(a, &scale(b, c(-1., 0.)))
}

pub fn scale(a: &Mat, s: Complex64) -> Mat {
    a.iter()
        .map(|r| r.iter().map(|x| x * s).collect())
        .collect()
}

pub fn adjoint(a: &Mat) -> Mat {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| a[j][i].conj()).collect())
        .collect()
}

pub fn anticommutator(a: &Mat, b: &Mat) -> Mat {
    add(&matmul(a, b), &matmul(b, a))
}

pub fn max_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max)
}

pub fn matvec(a: &Mat, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(a: &Mat) -> Mat {
    let norm: f64 = a
        .iter()
        .map(|r| r.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut s = 1.0;
    while norm * s > 0.5 {
        s *= 0.5;
        squarings += 1;
    }
    let a = scale(a, c(s, 0.));
    let n = a.len();
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..30 {
        term = scale(&matmul(&term, &a), c(1.0 / k as f64, 0.));
        result = add(&result, &term);
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// `<v|A|v>` for a normalized state.
pub fn expectation(a: &Mat, v: &[Complex64]) -> Complex64 {
    let av = matvec(a, v);
    v.iter().zip(&av).map(|(x, y)| x.conj() * y).sum()
}

/// Lowest eigenvalue of a Hermitian matrix via nalgebra.
pub fn lowest_eigenvalue(a: &Mat) -> f64 {
    let n = a.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let eig = m.symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_anticommutation() {
        let n = 4;
        let dim = 1 << n;
        for p in 0..n {
            for q in 0..n {
                let ap = ladder(p, false, n);
                let aq_dag = ladder(q, true, n);
                let expect = if p == q { identity(dim) } else { zeros(dim) };
                assert!(max_diff(&anticommutator(&ap, &aq_dag), &expect) < 1e-14);
                let aq = ladder(q, false, n);
                assert!(max_diff(&anticommutator(&ap, &aq), &zeros(dim)) < 1e-14);
            }
        }
    }

    #[test]
    fn expm_of_pauli() {
        let x = single(Pauli::X);
        let t = 0.3;
        let u = expm(&scale(&x, c(0., -t)));
        let want = add(
            &scale(&identity(2), c(t.cos(), 0.)),
            &scale(&x, c(0., -t.sin())),
        );
        assert!(max_diff(&u, &want) < 1e-13);
    }
}
