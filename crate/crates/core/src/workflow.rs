//! Reaction energies, reference data and basis-set bracketing.
//!
//! Species energies are opaque: a reaction is a signed sum over species ids and
//! element balance is not checked.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::{mp2_amplitudes, prescreen, PrescreenConfig};
use crate::circuit::{structural_amplitudes, uccsd_gate_counts, GateCounts, Ladder};
use crate::error::{Error, Result};
use crate::fci;
use crate::hamio::{FixtureManifest, SpinLayout, SpinOrbitalHamiltonian};
use crate::resources::{species_qubits, QuadraticCostModel};
use crate::units::to_kj_per_mol;
use crate::vqe::{self, VqeConfig, VqeResult};

/// Threshold for "chemical accuracy", kJ/mol.
pub const CHEMICAL_ACCURACY: f64 = 4.0;
/// Reference values carry one decimal; errors this close to the threshold count as inside.
pub const ROUNDING_SLACK: f64 = 0.05;

pub const REFERENCE_CSV: &str = include_str!("../data/reference.csv");

pub const REACTIONS: [(&str, &str); 4] = [
    ("h2o_diss", include_str!("../data/reactions/h2o_diss.toml")),
    ("lih_diss", include_str!("../data/reactions/lih_diss.toml")),
    ("haber_bosch", include_str!("../data/reactions/haber_bosch.toml")),
    ("ch2_gap", include_str!("../data/reactions/ch2_gap.toml")),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub species: String,
    /// Products positive, reactants negative.
    pub coefficient: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionSpec {
    pub name: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(rename = "term")]
    pub terms: Vec<Term>,
}

impl ReactionSpec {
    pub fn new(name: &str, terms: &[(&str, i32)]) -> Result<Self> {
        let spec = ReactionSpec {
            name: name.to_string(),
            label: None,
            terms: terms
                .iter()
                .map(|(s, c)| Term {
                    species: s.to_string(),
                    coefficient: *c,
                })
                .collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let spec: ReactionSpec =
            toml::from_str(text).map_err(|e| Error::InvalidInput(format!("reaction spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// One of the bundled study reactions.
    pub fn builtin(name: &str) -> Result<Self> {
        REACTIONS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::parse(text))
            .unwrap_or_else(|| Err(Error::Missing(format!("reaction '{name}'"))))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.terms.iter().any(|t| t.coefficient > 0) || !self.terms.iter().any(|t| t.coefficient < 0) {
            return Err(Error::InvalidInput(format!(
                "reaction '{}' needs at least one reactant and one product",
                self.name
            )));
        }
        Ok(())
    }

    pub fn reversed(&self) -> Self {
        let mut r = self.clone();
        for t in &mut r.terms {
            t.coefficient = -t.coefficient;
        }
        r
    }

    /// Distinct species in order of first appearance.
    pub fn species(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.terms {
            if !out.contains(&t.species.as_str()) {
                out.push(&t.species);
            }
        }
        out
    }
}

/// `Σ coefficient · E(species)`.
pub fn reaction_energy(spec: &ReactionSpec, energies: &HashMap<String, f64>) -> Result<f64> {
    spec.terms.iter().try_fold(0.0, |acc, t| {
        energies
            .get(&t.species)
            .map(|e| acc + t.coefficient as f64 * e)
            .ok_or_else(|| Error::Missing(format!("energy of species '{}'", t.species)))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub species: String,
    pub basis: String,
    pub method: String,
    /// kJ/mol.
    pub total: Option<f64>,
    /// kJ/mol.
    pub correlation: Option<f64>,
    pub source: String,
}

/// Published reference energies keyed by (species or reaction, basis, method).
#[derive(Debug, Clone, Default)]
pub struct ReferenceTable {
    rows: BTreeMap<(String, String, String), ReferenceRow>,
}

pub const METHODS: [&str; 7] = ["HF", "CCSD", "CCSD(T)", "FCI", "BP86", "B3LYP", "M06-2X"];

impl ReferenceTable {
    pub fn from_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows = BTreeMap::new();
        for (k, row) in rd.deserialize::<ReferenceRow>().enumerate() {
            let line = k + 2;
            let row = row.map_err(|e| Error::parse(line, e.to_string()))?;
            if !METHODS.contains(&row.method.as_str()) {
                return Err(Error::parse(line, format!("unknown method '{}'", row.method)));
            }
            if row.total.is_none() && row.correlation.is_none() {
                return Err(Error::parse(line, "row has neither total nor correlation"));
            }
            let key = (row.species.clone(), row.basis.to_ascii_lowercase(), row.method.clone());
            if rows.insert(key, row).is_some() {
                return Err(Error::parse(line, "duplicate key"));
            }
        }
        Ok(ReferenceTable { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(f)
    }

    pub fn bundled() -> Self {
        Self::from_csv(REFERENCE_CSV.as_bytes()).expect("bundled reference table parses")
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &ReferenceRow> {
        self.rows.values()
    }

    pub fn get(&self, species: &str, basis: &str, method: &str) -> Option<&ReferenceRow> {
        self.rows
            .get(&(species.to_string(), basis.to_ascii_lowercase(), method.to_string()))
    }

    fn require(&self, species: &str, basis: &str, method: &str) -> Result<&ReferenceRow> {
        self.get(species, basis, method)
            .ok_or_else(|| Error::Missing(format!("reference row {species}/{basis}/{method}")))
    }

    /// Total energy; correlated rows without a total add the HF row of the same basis.
    pub fn total(&self, species: &str, basis: &str, method: &str) -> Result<f64> {
        let row = self.require(species, basis, method)?;
        match (row.total, row.correlation) {
            (Some(t), _) => Ok(t),
            (None, Some(c)) => Ok(self.total(species, basis, "HF")? + c),
            (None, None) => unreachable!("rejected at load"),
        }
    }

    pub fn correlation(&self, species: &str, basis: &str, method: &str) -> Result<f64> {
        self.require(species, basis, method)?
            .correlation
            .ok_or_else(|| Error::Missing(format!("correlation energy {species}/{basis}/{method}")))
    }
}

/// Hex SHA-256 of a file.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Default-pipeline UCCSD gate counts: MP2 amplitudes, pre-screening, star ladders.
pub fn pipeline_gate_counts(
    h: &SpinOrbitalHamiltonian,
    screen: &PrescreenConfig,
    cancel: bool,
) -> Result<GateCounts> {
    let space = h.active_space();
    let amps = mp2_amplitudes(h, &space, &h.fock_diagonal())?;
    let kept = structural_amplitudes(&prescreen(&amps, screen).kept);
    uccsd_gate_counts(&kept, space.n_qubits(), 1, Ladder::Star, cancel)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpeciesRun {
    pub species: String,
    pub fixture: String,
    pub fixture_sha256: String,
    pub n_qubits: usize,
    pub two_qubit: usize,
    pub vqe: VqeResult,
    /// Hartree.
    pub fci_energy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReactionRun {
    pub reaction: String,
    pub basis: String,
    pub species: Vec<SpeciesRun>,
    pub hf_kj_per_mol: f64,
    pub vqe_kj_per_mol: f64,
    pub fci_kj_per_mol: Option<f64>,
    pub max_qubits: usize,
    pub max_two_qubit: usize,
}

/// Some species failed; the successful runs are kept.
#[derive(Debug)]
pub struct PartialRun {
    pub completed: Vec<SpeciesRun>,
    pub failed: Vec<(String, Error)>,
}

impl fmt::Display for PartialRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} species failed:", self.failed.len())?;
        for (s, e) in &self.failed {
            write!(f, " {s}: {e};")?;
        }
        Ok(())
    }
}

impl std::error::Error for PartialRun {}

pub struct RunOptions {
    pub basis: String,
    pub vqe: VqeConfig,
    pub prescreen: PrescreenConfig,
    pub with_fci: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            basis: "sto-3g".into(),
            vqe: VqeConfig::default(),
            prescreen: PrescreenConfig::default(),
            with_fci: true,
        }
    }
}

fn run_species(species: &str, manifest: &FixtureManifest, opts: &RunOptions) -> Result<SpeciesRun> {
    let entry = manifest.find(species, &opts.basis)?;
    let h = manifest.hamiltonian(entry, SpinLayout::Interleaved)?;
    let space = h.active_space();
    let vqe = vqe::optimize(&h, &space, &opts.vqe, &opts.prescreen)?;
    let fci_energy = if opts.with_fci {
        Some(fci::solve(&h, Some(entry.multiplicity))?.energy)
    } else {
        None
    };
    let counts = pipeline_gate_counts(&h, &opts.prescreen, true)?;
    Ok(SpeciesRun {
        species: species.to_string(),
        fixture: entry.id.clone(),
        fixture_sha256: sha256_file(manifest.path(entry))?,
        n_qubits: space.n_qubits(),
        two_qubit: counts.two_qubit,
        vqe,
        fci_energy,
    })
}

/// Runs every species of `spec` concurrently and composes the reaction energy.
pub fn run_reaction_vqe(
    spec: &ReactionSpec,
    manifest: &FixtureManifest,
    opts: &RunOptions,
) -> std::result::Result<ReactionRun, PartialRun> {
    let results: Vec<(String, Result<SpeciesRun>)> = spec
        .species()
        .into_par_iter()
        .map(|s| (s.to_string(), run_species(s, manifest, opts)))
        .collect();
    let mut completed = Vec::new();
    let mut failed = Vec::new();
    for (s, r) in results {
        match r {
            Ok(run) => completed.push(run),
            Err(e) => failed.push((s, e)),
        }
    }
    if !failed.is_empty() {
        return Err(PartialRun { completed, failed });
    }
    let table = |f: &dyn Fn(&SpeciesRun) -> f64| -> HashMap<String, f64> {
        completed.iter().map(|r| (r.species.clone(), f(r))).collect()
    };
    let compose = |m: HashMap<String, f64>| reaction_energy(spec, &m).expect("all species present");
    let hf = compose(table(&|r| to_kj_per_mol(r.vqe.hf_energy)));
    let vqe = compose(table(&|r| to_kj_per_mol(r.vqe.energy)));
    let fci = opts
        .with_fci
        .then(|| compose(table(&|r| to_kj_per_mol(r.fci_energy.unwrap()))));
    Ok(ReactionRun {
        reaction: spec.name.clone(),
        basis: opts.basis.clone(),
        max_qubits: completed.iter().map(|r| r.n_qubits).max().unwrap_or(0),
        max_two_qubit: completed.iter().map(|r| r.two_qubit).max().unwrap_or(0),
        species: completed,
        hf_kj_per_mol: hf,
        vqe_kj_per_mol: vqe,
        fci_kj_per_mol: fci,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketRow {
    pub basis: String,
    /// CCSD reaction energy, kJ/mol.
    pub worst_case: f64,
    /// CCSD(T) reaction energy, kJ/mol.
    pub best_case: f64,
    pub worst_error: f64,
    pub best_error: f64,
    /// Largest species qubit count.
    pub qubits: usize,
    /// Largest predicted two-qubit count over species.
    pub two_qubit: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketReport {
    pub reaction: String,
    pub target_basis: String,
    /// CCSD(T) value at the largest basis of the series.
    pub target: f64,
    pub rows: Vec<BracketRow>,
    /// First basis whose best-case error is within chemical accuracy.
    pub flagged: Option<usize>,
    pub measured_vqe: Option<f64>,
}

impl BracketReport {
    pub fn flagged_row(&self) -> Option<&BracketRow> {
        self.flagged.map(|k| &self.rows[k])
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{}: target CCSD(T)/{} = {:.1} kJ/mol\n{:<9} {:>9} {:>9} {:>8} {:>8} {:>7} {:>10}\n",
            self.reaction, self.target_basis, self.target, "basis", "CCSD", "CCSD(T)", "err_w", "err_b", "qubits", "two-qubit"
        );
        for (k, r) in self.rows.iter().enumerate() {
            out += &format!(
                "{:<9} {:>9.1} {:>9.1} {:>8.1} {:>8.1} {:>7} {:>10.1e}{}\n",
                r.basis,
                r.worst_case,
                r.best_case,
                r.worst_error,
                r.best_error,
                r.qubits,
                r.two_qubit as f64,
                if self.flagged == Some(k) { "  <- within 4 kJ/mol" } else { "" }
            );
        }
        if let Some(v) = self.measured_vqe {
            out += &format!("measured UCCSD-VQE: {v:.3} kJ/mol\n");
        }
        out
    }
}

/// Worst (CCSD) and best (CCSD(T)) reaction energies per basis against the
/// CCSD(T) value of the last basis, with qubit and gate requirements from `models`.
pub fn bracket_report(
    spec: &ReactionSpec,
    table: &ReferenceTable,
    bases: &[&str],
    models: &BTreeMap<&str, QuadraticCostModel>,
) -> Result<BracketReport> {
    let last = *bases
        .last()
        .ok_or_else(|| Error::InvalidInput("empty basis series".into()))?;
    let target = table.total(&spec.name, last, "CCSD(T)")?;
    let mut rows = Vec::with_capacity(bases.len());
    for b in bases {
        let worst = table.total(&spec.name, b, "CCSD")?;
        let best = table.total(&spec.name, b, "CCSD(T)")?;
        let mut qubits = 0;
        let mut gates = 0;
        for s in spec.species() {
            let q = species_qubits(s, b)?;
            qubits = qubits.max(q);
            // a one-electron species needs no entangling gates
            if s == "H" {
                continue;
            }
            let model = models
                .get(s)
                .ok_or_else(|| Error::Missing(format!("cost model for '{s}'")))?;
            gates = gates.max(model.predict(q));
        }
        rows.push(BracketRow {
            basis: b.to_string(),
            worst_case: worst,
            best_case: best,
            worst_error: worst - target,
            best_error: best - target,
            qubits,
            two_qubit: gates,
        });
    }
    let flagged = rows
        .iter()
        .position(|r| r.best_error.abs() <= CHEMICAL_ACCURACY + ROUNDING_SLACK);
    Ok(BracketReport {
        reaction: spec.name.clone(),
        target_basis: last.to_string(),
        target,
        rows,
        flagged,
        measured_vqe: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resources::{published_models, BASIS_SERIES};
    use proptest::prelude::*;

    fn fixtures() -> FixtureManifest {
        FixtureManifest::load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/fcidump")).unwrap()
    }

    #[test]
    fn spec_parsing_and_validation() {
        for (name, _) in REACTIONS {
            let s = ReactionSpec::builtin(name).unwrap();
            assert_eq!(s.name, name);
        }
        let hb = ReactionSpec::builtin("haber_bosch").unwrap();
        assert_eq!(hb.species(), vec!["N2", "H2", "NH3"]);
        assert!(ReactionSpec::new("x", &[("A", 1), ("B", 2)]).is_err());
        assert!(ReactionSpec::parse("name = 'x'\n[[term]]\nspecies = 'A'\n").is_err());
        assert!(ReactionSpec::builtin("nope").is_err());
    }

    #[test]
    fn reaction_energy_basics() {
        let same = ReactionSpec::new("id", &[("A", 1), ("A", -1)]).unwrap();
        let e: HashMap<String, f64> = [("A".to_string(), -123.4)].into();
        assert_eq!(reaction_energy(&same, &e).unwrap(), 0.0);
        let r = ReactionSpec::new("r", &[("A", -1), ("B", 2)]).unwrap();
        assert!(matches!(reaction_energy(&r, &e), Err(Error::Missing(_))));
    }

    #[test]
    fn table_reaction_values() {
        let t = ReferenceTable::bundled();
        let totals = |method: &str, species: &str| t.total(species, "sto-3g", method).unwrap();
        // HF totals of the species reproduce the reaction entry
        let hb = ReactionSpec::builtin("haber_bosch").unwrap();
        let e: HashMap<String, f64> =
            hb.species().iter().map(|s| (s.to_string(), totals("HF", s))).collect();
        assert!((reaction_energy(&hb, &e).unwrap() - -168.523).abs() < 0.2);
        let h2o = ReactionSpec::builtin("h2o_diss").unwrap();
        let e: HashMap<String, f64> =
            h2o.species().iter().map(|s| (s.to_string(), totals("FCI", s))).collect();
        assert!((reaction_energy(&h2o, &e).unwrap() - 416.140).abs() < 0.2);
        assert_eq!(t.total("h2o_diss", "sto-3g", "FCI").unwrap(), 416.140);
    }

    #[test]
    fn table_integrity() {
        let t = ReferenceTable::bundled();
        assert!(t.len() > 200);
        // perturbative triples lower the correlation energy in every tabulated case
        for r in t.rows().filter(|r| r.method == "CCSD(T)" && r.correlation.is_some()) {
            let cc = t.correlation(&r.species, &r.basis, "CCSD").unwrap();
            assert!(r.correlation.unwrap() <= cc + 1e-9, "{}", r.species);
        }
        let dup = "species,basis,method,total,correlation,source\nA,sto-3g,HF,1,,x\nA,STO-3G,HF,2,,x\n";
        assert!(ReferenceTable::from_csv(dup.as_bytes()).is_err());
        let bad = "species,basis,method,total,correlation,source\nA,sto-3g,MP7,1,,x\n";
        assert!(ReferenceTable::from_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn bracket_flags() {
        let t = ReferenceTable::bundled();
        let models = published_models();
        let expect = [
            ("h2o_diss", "cc-pvqz", 228, 2.9e6),
            ("ch2_gap", "cc-pvtz", 114, 5.0e5),
            ("lih_diss", "cc-pvqz", 170, 3.0e5),
            ("haber_bosch", "cc-pvqz", 288, 1.2e7),
        ];
        for (name, basis, qubits, gates) in expect {
            let spec = ReactionSpec::builtin(name).unwrap();
            let r = bracket_report(&spec, &t, &BASIS_SERIES, &models).unwrap();
            let row = r.flagged_row().unwrap();
            assert_eq!(row.basis, basis, "{name}");
            assert_eq!(row.qubits, qubits, "{name}");
            assert!((row.two_qubit as f64 / gates - 1.0).abs() < 0.05, "{name} {}", row.two_qubit);
        }
        let spec = ReactionSpec::builtin("h2o_diss").unwrap();
        let one = bracket_report(&spec, &t, &["cc-pvtz"], &models).unwrap();
        assert_eq!(one.rows.len(), 1);
        assert_eq!(one.flagged, Some(0));
        let err = bracket_report(&spec, &t, &["cc-pv6z"], &models).unwrap_err();
        assert!(err.to_string().contains("h2o_diss/cc-pv6z/CCSD(T)"));
    }

    #[test]
    fn h_atom_is_exactly_hf() {
        let m = fixtures();
        let spec = ReactionSpec::new("h", &[("H", 1), ("H2", -1), ("H", 1)]).unwrap();
        let run = run_reaction_vqe(&spec, &m, &RunOptions::default()).unwrap();
        let h = run.species.iter().find(|r| r.species == "H").unwrap();
        assert_eq!(h.vqe.n_parameters, 0);
        assert_eq!(h.vqe.correlation, 0.0);
        assert_eq!(h.two_qubit, 0);
        assert!((run.vqe_kj_per_mol - run.fci_kj_per_mol.unwrap()).abs() < 0.01);
    }

    #[test]
    fn partial_results_on_missing_fixture() {
        let m = fixtures();
        let spec = ReactionSpec::new("x", &[("H2", -1), ("XeF6", 1)]).unwrap();
        let err = run_reaction_vqe(&spec, &m, &RunOptions::default()).unwrap_err();
        assert_eq!(err.completed.len(), 1);
        assert_eq!(err.failed[0].0, "XeF6");
    }

    #[test]
    fn digest_of_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        std::fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    proptest! {
        #[test]
        fn linear_and_antisymmetric(ea in -1e5f64..1e5, eb in -1e5f64..1e5, ec in -1e5f64..1e5,
                                    ca in 1i32..4, cb in 1i32..4, k in -3.0f64..3.0) {
            let spec = ReactionSpec::new("r", &[("A", -ca), ("B", cb), ("C", 1)]).unwrap();
            let e: HashMap<String, f64> = [("A", ea), ("B", eb), ("C", ec)].iter().map(|(s, v)| (s.to_string(), *v)).collect();
            let scaled: HashMap<String, f64> = e.iter().map(|(s, v)| (s.clone(), k * v)).collect();
            let r = reaction_energy(&spec, &e).unwrap();
            prop_assert!((reaction_energy(&spec.reversed(), &e).unwrap() + r).abs() < 1e-9 * r.abs().max(1.0));
            prop_assert!((reaction_energy(&spec, &scaled).unwrap() - k * r).abs() < 1e-7 * r.abs().max(1.0));
        }
    }
}
