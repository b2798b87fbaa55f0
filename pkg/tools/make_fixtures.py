"""Regenerate the bundled FCIDUMP fixtures (needs pyscf; not a package dependency).

    python tools/make_fixtures.py
"""
import json
from pathlib import Path

from pyscf import gto, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parents[1] / "src" / "stagedvqe" / "fixtures"

GEOMETRIES = {
    "H2": "H 0 0 0; H 0 0 0.735",
    "H4": "H 0 0 0; H 0 0 0.735; H 0 0 1.535; H 0 0 2.135",
    "H6": "H 0 0 0; H 0 0 0.735; H 0 0 1.535; H 0 0 2.135; H 0 0 2.835; H 0 0 3.57",
    "LiH": "Li .0 .0 .0; H .0 .0 1.5949",
    "NH3": "N 0.0000 0.0000 0.0000; H 0.0000 -0.9377 -0.3816; "
    "H 0.8121 0.4689 -0.3816; H -0.8121 0.4689 -0.3816",
    "BeH2": "Be 0.0000 0.0000 0.0000; H 0.0000 0.0000 1.3264; H 0.0000 0.0000 -1.3264",
    "H2O": "O 0.0000 0.0000 0.1173; H 0.0000 0.7572 -0.4692; H 0.0000 -0.7572 -0.4692",
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, geometry in GEOMETRIES.items():
        mol = gto.M(atom=geometry, basis="sto-3g", unit="angstrom", verbose=0)
        mf = scf.RHF(mol).run()
        fcidump.from_scf(mf, str(OUT / f"{name}.fcidump"), tol=1e-12)
        meta = {
            "molecule": name,
            "geometry_angstrom": geometry,
            "basis": "sto-3g",
            "method": "RHF",
            "num_spatial_orbitals": int(mol.nao),
            "num_electrons": int(mol.nelectron),
            "hf_energy": float(mf.e_tot),
            "nuclear_repulsion": float(mol.energy_nuc()),
        }
        (OUT / f"{name}.json").write_text(json.dumps(meta, indent=2) + "\n")
        print(name, mol.nao, mol.nelectron, mf.e_tot)


if __name__ == "__main__":
    main()
