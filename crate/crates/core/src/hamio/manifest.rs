use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::fcidump::read_fcidump;
use super::hamiltonian::{to_spin_orbitals, SpinLayout, SpinOrbitalHamiltonian};

/// One fixture record of `manifest.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub id: String,
    pub molecule: String,
    pub basis: String,
    pub multiplicity: u32,
    /// "RHF" or "UHF"; open-shell fixtures carry unrestricted orbitals.
    pub reference: String,
    pub frozen_spatial: usize,
    pub n_orbitals: usize,
    /// Size of the full basis when the file keeps only the lowest orbitals.
    #[serde(default)]
    pub truncated_from: Option<usize>,
    pub geometry: String,
    /// Reference values from the generating program, Hartree.
    pub hf_energy: f64,
    #[serde(default)]
    pub mp2_correlation: Option<f64>,
    #[serde(default)]
    pub fci_correlation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub generator: String,
    pub geometry_level: String,
    pub units: String,
    #[serde(rename = "fixture")]
    pub fixtures: Vec<FixtureEntry>,
    #[serde(skip)]
    dir: PathBuf,
}

impl FixtureManifest {
    /// Load `<dir>/manifest.toml`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("manifest.toml");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut manifest: FixtureManifest = toml::from_str(&text)
            .map_err(|e| Error::parse(0, format!("{}: {e}", path.display())))?;
        manifest.dir = dir.to_path_buf();
        Ok(manifest)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, id: &str) -> Result<&FixtureEntry> {
        self.fixtures
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| Error::Missing(format!("fixture '{id}'")))
    }

    /// Fixture for a species in a basis (basis names compare case-insensitively).
    pub fn find(&self, molecule: &str, basis: &str) -> Result<&FixtureEntry> {
        self.fixtures
            .iter()
            .find(|f| f.molecule == molecule && f.basis.eq_ignore_ascii_case(basis))
            .ok_or_else(|| Error::Missing(format!("fixture for {molecule}/{basis}")))
    }

    pub fn path(&self, entry: &FixtureEntry) -> PathBuf {
        self.dir.join(format!("{}.fcidump", entry.id))
    }

    /// Parse the fixture and fold its frozen core.
    pub fn hamiltonian(
        &self,
        entry: &FixtureEntry,
        layout: SpinLayout,
    ) -> Result<SpinOrbitalHamiltonian> {
        let si = read_fcidump(self.path(entry))?;
        let h = to_spin_orbitals(si, layout)?;
        let core = h.core_orbitals(entry.frozen_spatial);
        h.freeze_core(&core)
    }
}
