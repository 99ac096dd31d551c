//! Qubit accounting and the quadratic two-qubit-gate cost model.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuit::GateCountRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelSource {
    Fitted,
    Published,
}

/// `N_two-qubit(n) = a n² + b n + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCostModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Coefficient of determination of the fit; `None` for published models.
    pub r_squared: Option<f64>,
    pub source: ModelSource,
}

impl QuadraticCostModel {
    pub fn published(a: f64, b: f64, c: f64) -> Self {
        QuadraticCostModel {
            a,
            b,
            c,
            r_squared: None,
            source: ModelSource::Published,
        }
    }

    pub fn value(&self, n: f64) -> f64 {
        self.a * n * n + self.b * n + self.c
    }

    /// Rounded model value, floored at zero.
    pub fn predict(&self, n_qubits: usize) -> u64 {
        self.value(n_qubits as f64).round().max(0.0) as u64
    }

    /// Abscissa of the parabola's minimum (meaningful for `a > 0`).
    pub fn vertex(&self) -> f64 {
        -self.b / (2.0 * self.a)
    }
}

/// Per-excitation form `c_s·N_occ·N_virt + c_d·N_occ²·N_virt²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationCostModel {
    /// Average two-qubit gates per single.
    pub c_s: f64,
    /// Average two-qubit gates per double.
    pub c_d: f64,
}

impl ExcitationCostModel {
    pub fn two_qubit(&self, n_occ: usize, n_virt: usize) -> f64 {
        let (o, v) = (n_occ as f64, n_virt as f64);
        self.c_s * o * v + self.c_d * o * o * v * v
    }

    /// The same cost as a quadratic in `n = N_occ + N_virt` at fixed `N_occ`.
    pub fn at_fixed_occupation(&self, n_occ: usize) -> QuadraticCostModel {
        let o = n_occ as f64;
        QuadraticCostModel {
            a: self.c_d * o * o,
            b: self.c_s * o - 2.0 * self.c_d * o.powi(3),
            c: self.c_d * o.powi(4) - self.c_s * o * o,
            r_squared: None,
            source: ModelSource::Published,
        }
    }
}

/// One measured gate count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub n_qubits: usize,
    pub two_qubit: u64,
    pub cutoff: f64,
    pub cancelled: bool,
}

impl From<&GateCountRow> for CostPoint {
    fn from(r: &GateCountRow) -> Self {
        CostPoint {
            n_qubits: r.n_qubits,
            two_qubit: r.two_qubit as u64,
            cutoff: r.cutoff,
            cancelled: r.cancelled,
        }
    }
}

pub fn write_cost_points<W: std::io::Write>(w: W, points: &[CostPoint]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for p in points {
        wr.serialize(p).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))
}

/// Reads any CSV with `n_qubits`, `two_qubit`, `cutoff` and `cancelled` columns.
pub fn read_cost_points<R: std::io::Read>(r: R) -> Result<Vec<CostPoint>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize()
        .enumerate()
        .map(|(k, row)| row.map_err(|e| Error::parse(k + 2, e.to_string())))
        .collect()
}

/// Ordinary least squares of `two_qubit` against `n_qubits`.
pub fn fit_quadratic(points: &[CostPoint]) -> Result<QuadraticCostModel> {
    let mut distinct: Vec<usize> = points.iter().map(|p| p.n_qubits).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::RankDeficient(format!(
            "{} distinct qubit counts, need 3",
            distinct.len()
        )));
    }
    // centre and scale the abscissa for conditioning, then map back
    let m = points.len();
    let mean = points.iter().map(|p| p.n_qubits as f64).sum::<f64>() / m as f64;
    let scale = points
        .iter()
        .map(|p| (p.n_qubits as f64 - mean).abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let x = DMatrix::from_fn(m, 3, |i, j| {
        let u = (points[i].n_qubits as f64 - mean) / scale;
        u.powi(2 - j as i32)
    });
    let y = DVector::from_iterator(m, points.iter().map(|p| p.two_qubit as f64));
    let coef = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let (p, q, r) = (coef[0], coef[1], coef[2]);
    // p u² + q u + r with u = (n - mean)/scale
    let a = p / (scale * scale);
    let b = q / scale - 2.0 * p * mean / (scale * scale);
    let c = r - q * mean / scale + p * mean * mean / (scale * scale);

    let fitted = &x * &coef;
    let ybar = y.mean();
    let ss_res: f64 = (&y - fitted).iter().map(|v| v * v).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(QuadraticCostModel {
        a,
        b,
        c,
        r_squared: Some(r2),
        source: ModelSource::Fitted,
    })
}

/// Published coefficient triples, keyed by species.
pub fn published_models() -> BTreeMap<&'static str, QuadraticCostModel> {
    [
        ("H2O", 59.6, -885.2, 3258.5),
        ("OH", 57.7, -597.4, -117.1),
        ("LiH", 9.7, 103.5, -1171.9),
        ("Li", 1.6, 84.0, -312.0),
        ("N2", 52.6, -1185.4, 8542.9),
        ("H2", 1.6, 23.7, -29.1),
        ("NH3", 151.7, -2215.0, 6026.5),
        (":CH2", 42.6, -476.1, 1015.7),
        ("CH2", 36.5, -413.1, 1468.2),
    ]
    .into_iter()
    .map(|(k, a, b, c)| (k, QuadraticCostModel::published(a, b, c)))
    .collect()
}

/// `2 (n_spatial - n_frozen)`.
pub fn qubits_for_basis(n_spatial: usize, n_frozen: usize) -> Result<usize> {
    if n_frozen > n_spatial {
        return Err(Error::InvalidInput(format!(
            "{n_frozen} frozen orbitals exceed {n_spatial} spatial orbitals"
        )));
    }
    Ok(2 * (n_spatial - n_frozen))
}

/// Basis sets with tabulated function counts.
pub const BASIS_SERIES: [&str; 5] = ["sto-3g", "cc-pvdz", "cc-pvtz", "cc-pvqz", "cc-pv5z"];

/// Spherical basis functions per atom.
pub fn basis_functions(element: &str, basis: &str) -> Result<usize> {
    let idx = BASIS_SERIES
        .iter()
        .position(|b| b.eq_ignore_ascii_case(basis))
        .ok_or_else(|| Error::Missing(format!("basis '{basis}'")))?;
    let row: [usize; 5] = match element {
        "H" => [1, 5, 14, 30, 55],
        "Li" | "C" | "N" | "O" => [5, 14, 30, 55, 91],
        _ => return Err(Error::Missing(format!("element '{element}'"))),
    };
    Ok(row[idx])
}

/// Frozen core orbitals per atom: 1s for second-row atoms except Li.
pub fn frozen_core(element: &str) -> usize {
    match element {
        "C" | "N" | "O" => 1,
        _ => 0,
    }
}

/// Element counts of a species label such as `NH3` or `:CH2`.
pub fn composition(species: &str) -> Result<Vec<(String, usize)>> {
    let s = species.trim_start_matches(':');
    let chars: Vec<char> = s.chars().collect();
    let mut out: Vec<(String, usize)> = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        if !chars[k].is_ascii_uppercase() {
            return Err(Error::InvalidInput(format!("cannot parse species '{species}'")));
        }
        let mut el = chars[k].to_string();
        k += 1;
        while k < chars.len() && chars[k].is_ascii_lowercase() {
            el.push(chars[k]);
            k += 1;
        }
        let start = k;
        while k < chars.len() && chars[k].is_ascii_digit() {
            k += 1;
        }
        let n = if start == k {
            1
        } else {
            chars[start..k].iter().collect::<String>().parse().unwrap()
        };
        match out.iter_mut().find(|(e, _)| *e == el) {
            Some(entry) => entry.1 += n,
            None => out.push((el, n)),
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("empty species label".into()));
    }
    Ok(out)
}

/// Qubits of a species in a basis with all virtuals correlated and the
/// default frozen core.
pub fn species_qubits(species: &str, basis: &str) -> Result<usize> {
    let mut spatial = 0;
    let mut frozen = 0;
    for (el, n) in composition(species)? {
        spatial += n * basis_functions(&el, basis)?;
        frozen += n * frozen_core(&el);
    }
    qubits_for_basis(spatial, frozen)
}

/// "# qubits / # two-qubit gates" rows for a model over a basis series.
pub fn report_table(species: &str, model: &QuadraticCostModel, bases: &[&str]) -> Result<String> {
    let mut out = format!("{species}\n{:<10} {:>8} {:>14}\n", "basis", "qubits", "two-qubit");
    for b in bases {
        let n = species_qubits(species, b)?;
        out += &format!("{:<10} {:>8} {:>14.1e}\n", b, n, model.predict(n) as f64);
    }
    Ok(out)
}
