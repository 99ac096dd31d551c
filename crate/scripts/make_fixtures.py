#!/usr/bin/env python3
"""Regenerate the FCIDUMP fixtures and their manifest.

Requires pyscf. Geometries are B3LYP/def2-QZVPP optimized structures (Angstrom).
Restricted fixtures use RHF orbitals; open-shell fixtures use UHF orbitals and
are written in the IUHF=1 block layout (aaaa, bbbb, aabb, h_a, h_b, core, each
block terminated by a zero-index record).
"""
import os
import sys

import numpy
import pyscf
from pyscf import ao2mo, cc, gto, mcscf, mp, scf
from pyscf.tools import fcidump

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data", "fcidump")

GEOMETRIES = {
    "H2O": "O 0.0044960 0.0057136 0.0; H 0.9646713 -0.0073990 0.0; H -0.2330023 0.9361335 0.0",
    "OH": "O -0.0062713 0.0 0.0; H 0.9674223 0.0 0.0",
    "LiH": "Li -3.2319355 1.1691641 0.0; H -1.6405907 1.1691641 0.0",
    "N2": "N -4.2451484 2.5760816 0.0; N -3.1862016 2.3168784 0.0",
    "H2": "H -4.0759023 2.5346545 0.0; H -3.3554477 2.3583055 0.0",
    "NH3": "N -0.6800848 1.2693644 0.0227335; H 0.3314114 1.2772854 -0.0142918; "
    "H -0.9994515 0.5770216 -0.6429998; H -0.9993852 2.1717686 -0.3063819",
    ":CH2": "C -2.8332513 0.6986016 0.0; H -1.8294369 1.0885324 0.0; H -3.8206119 1.1284960 0.0",
    "CH2": "C -2.8371013 0.5067306 0.0; H -1.9616221 1.1871592 0.0; H -3.6845767 1.2217402 0.0",
    "Li": "Li 0.0 0.0 0.0",
    "H": "H 0.0 0.0 0.0",
}

# (fixture id, molecule, basis, spin (2S), frozen spatial orbitals, kept spatial orbitals or None)
FIXTURES = [
    ("h2_sto3g", "H2", "sto-3g", 0, 0, None),
    ("h_sto3g", "H", "sto-3g", 1, 0, None),
    ("h2o_sto3g", "H2O", "sto-3g", 0, 1, None),
    ("oh_sto3g", "OH", "sto-3g", 1, 1, None),
    ("lih_sto3g", "LiH", "sto-3g", 0, 0, None),
    ("li_sto3g", "Li", "sto-3g", 1, 0, None),
    ("n2_sto3g", "N2", "sto-3g", 0, 2, None),
    ("nh3_sto3g", "NH3", "sto-3g", 0, 1, None),
    ("tch2_sto3g", ":CH2", "sto-3g", 2, 1, None),
    ("sch2_sto3g", "CH2", "sto-3g", 0, 1, None),
    ("h2o_ccpvdz", "H2O", "cc-pvdz", 0, 1, None),
    ("lih_ccpvdz", "LiH", "cc-pvdz", 0, 0, None),
    ("h2o_ccpvtz_t33", "H2O", "cc-pvtz", 0, 1, 33),
]

H2KJ = 2625.4996394799


def fmt(v):
    return "%23.16e" % v


def write_uhf(path, mol, mf, norb):
    ca, cb = mf.mo_coeff[0][:, :norb], mf.mo_coeff[1][:, :norb]
    h = mf.get_hcore()
    ha, hb = ca.T @ h @ ca, cb.T @ h @ cb
    eri_aa = ao2mo.restore(4, ao2mo.kernel(mol, ca), norb)
    eri_bb = ao2mo.restore(4, ao2mo.kernel(mol, cb), norb)
    eri_ab = ao2mo.general(mol, (ca, ca, cb, cb), compact=True)
    tol = 1e-12
    pairs = [(i, j) for i in range(norb) for j in range(i + 1)]
    with open(path, "w") as f:
        f.write(" &FCI NORB=%d,NELEC=%d,MS2=%d,\n" % (norb, mol.nelectron, mol.spin))
        f.write("  ORBSYM=%s\n" % ("1," * norb))
        f.write("  ISYM=1,\n  IUHF=1,\n &END\n")
        for eri in (eri_aa, eri_bb):
            for ij, (i, j) in enumerate(pairs):
                for kl, (k, l) in enumerate(pairs[: ij + 1]):
                    v = eri[ij, kl]
                    if abs(v) > tol:
                        f.write("%s %4d %4d %4d %4d\n" % (fmt(v), i + 1, j + 1, k + 1, l + 1))
            f.write("%s %4d %4d %4d %4d\n" % (fmt(0.0), 0, 0, 0, 0))
        for ij, (i, j) in enumerate(pairs):
            for kl, (k, l) in enumerate(pairs):
                v = eri_ab[ij, kl]
                if abs(v) > tol:
                    f.write("%s %4d %4d %4d %4d\n" % (fmt(v), i + 1, j + 1, k + 1, l + 1))
        f.write("%s %4d %4d %4d %4d\n" % (fmt(0.0), 0, 0, 0, 0))
        for hm in (ha, hb):
            for i, j in pairs:
                if abs(hm[i, j]) > tol:
                    f.write("%s %4d %4d %4d %4d\n" % (fmt(hm[i, j]), i + 1, j + 1, 0, 0))
            f.write("%s %4d %4d %4d %4d\n" % (fmt(0.0), 0, 0, 0, 0))
        f.write("%s %4d %4d %4d %4d\n" % (fmt(mol.energy_nuc()), 0, 0, 0, 0))


def main():
    os.makedirs(OUT, exist_ok=True)
    entries = []
    for fid, name, basis, spin, nfz, keep in FIXTURES:
        mol = gto.M(atom=GEOMETRIES[name], basis=basis, spin=spin, verbose=0)
        unrestricted = spin != 0
        mf = (scf.UHF if unrestricted else scf.RHF)(mol)
        mf.conv_tol = 1e-12
        mf.kernel()
        norb = keep or mol.nao
        path = os.path.join(OUT, fid + ".fcidump")
        if unrestricted:
            write_uhf(path, mol, mf, norb)
        else:
            fcidump.from_mo(mol, path, mf.mo_coeff[:, :norb], tol=1e-12)
        entry = {
            "id": fid,
            "molecule": name,
            "basis": basis,
            "multiplicity": spin + 1,
            "reference": "UHF" if unrestricted else "RHF",
            "frozen_spatial": nfz,
            "n_orbitals": norb,
            "truncated_from": mol.nao if keep else None,
            "geometry": GEOMETRIES[name],
            "hf_energy": mf.e_tot,
        }
        if keep is None and mol.nelectron - 2 * nfz >= 2:
            frozen = nfz if nfz else None
            pt = (mp.UMP2 if unrestricted else mp.MP2)(mf, frozen=frozen).run()
            entry["mp2_correlation"] = pt.e_corr
            if basis == "sto-3g":
                ncas = mol.nao - nfz
                nel = (mol.nelec[0] - nfz, mol.nelec[1] - nfz)
                mc = (mcscf.UCASCI if unrestricted else mcscf.CASCI)(mf, ncas, nel, ncore=nfz)
                if not unrestricted:
                    mc.fix_spin_(ss=0)
                mc.fcisolver.conv_tol = 1e-12
                entry["fci_correlation"] = mc.kernel()[0] - mf.e_tot
        entries.append(entry)
        print(fid, norb, mf.e_tot * H2KJ, file=sys.stderr)

    with open(os.path.join(OUT, "manifest.toml"), "w") as f:
        f.write("# Generated by scripts/make_fixtures.py\n")
        f.write('generator = "pyscf %s"\n' % pyscf.__version__)
        f.write('geometry_level = "B3LYP/def2-QZVPP optimized, Angstrom"\n')
        f.write('units = "Hartree"\n\n')
        for e in entries:
            f.write("[[fixture]]\n")
            for k, v in e.items():
                if v is None:
                    continue
                if isinstance(v, str):
                    f.write('%s = "%s"\n' % (k, v))
                elif isinstance(v, float):
                    f.write("%s = %.12f\n" % (k, v))
                else:
                    f.write("%s = %d\n" % (k, v))
            f.write("\n")


if __name__ == "__main__":
    main()
