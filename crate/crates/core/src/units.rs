//! Energy unit conversion. Everything internal is in Hartree.

/// kJ/mol per Hartree.
pub const HARTREE_TO_KJ_PER_MOL: f64 = 2625.4996394799;

/// "Chemical accuracy" threshold in kJ/mol.
pub const CHEMICAL_ACCURACY_KJ_PER_MOL: f64 = 4.0;

#[inline]
pub fn to_kj_per_mol(hartree: f64) -> f64 {
    hartree * HARTREE_TO_KJ_PER_MOL
}

#[inline]
pub fn to_hartree(kj_per_mol: f64) -> f64 {
    kj_per_mol / HARTREE_TO_KJ_PER_MOL
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let e = -76.0123456789;
        assert!((to_hartree(to_kj_per_mol(e)) - e).abs() < 1e-12);
        assert!((to_kj_per_mol(1.0) - 2625.4996394799).abs() < 1e-12);
    }
}
