"""Build data/smiles_curated.tsv: string, reference validity, expected error category.

Validity flags come from RDKit; categories are the parser's own taxonomy
and are asserted against the hand annotation below.
"""
from pathlib import Path

from rdkit import Chem, RDLogger

RDLogger.DisableLog("rdApp.*")
DATA = Path(__file__).resolve().parent.parent / "data"

INVALID = {
    "empty": [""],
    "syntax": ["=C", "C=", "C==C", "C#", "C()C", "C(=)C", "C=(O)C", "()", "C((C)C", "(C)",
               "C.", "C%", "C-", "CC(=O)=", "C=#C", "C1=", "+C",
               "C(1)", "CC(C)(=)", "C@@", "1CC", "C(C)=", "C=()", "C((C))", "C/"],
    "unknown_atom": ["X", "CXC", "Cl", "S", "CCS", "B", "CBr", "[Xe]", "[S]", "P", "CI", "Si"],
    "bracket": ["[C", "C]", "[]", "[C+5]", "[NH4+2]", "[C++]", "[c", "[N+-]", "[F+2]"],
    "unclosed_ring": ["C1CC", "C1CCC2CC1", "C12CC1", "N1CCO", "C1C", "C2CCC1CC2", "C1=CC=CC=C", "C=1=C"],
    "unbalanced_paren": ["C)(C", "CC)C", "C(C", "C(C(C)", "CC)", "C(O))", "C(", "C1(", "C(C)("],
    "valence": ["C(F)(F)(F)(F)F", "O(C)(C)C", "N(C)(C)(C)C", "F=C", "C=C=C=C=O=C",
                "CC(C)(C)(C)C", "O=O=O", "N#N#N", "C#O=C", "FC(F)(F)(F)F", "C=N#C", "O=N=O",
                "C=N=C", "N(=C)=C", "FF(F)", "[NH4]", "[CH5]", "[OH2]C", "C#C#C",
                "OO(O)O", "[CH9]", "C1CC=1#C"],
    "ring_bond": ["C11", "C1C1", "CC11", "C1=1", "C=1CC#1"],
    "aromatic": ["c", "cc", "CcC", "c1cccc1", "o", "c1ccccc1c", "n1cccc1C"],
}
# Deliberate scope differences from the reference toolkit: elements outside
# C/N/O/F(+H), charges outside -1..+1, and conflicting ring-closure bond
# symbols are rejected here but accepted by RDKit.
OUT_OF_SCOPE = {"Cl", "S", "CCS", "B", "CBr", "[Xe]", "[S]", "P", "CI", "[F+2]",
                "[C+5]", "[C++]", "C=1CC#1"}

VALID_EXTRA = [
    "C", "N", "O", "F", "CC", "C=C", "C#C", "C#N", "O=C=O", "C1=CC=CC=C1", "c1ccccc1",
    "c1ccncc1", "c1cc[nH]c1", "c1ccoc1", "Cc1ccccc1", "C1CC1", "C1CCCCCCCC1", "[NH4+]",
    "[O-]C=O", "C[N+](C)(C)C", "[CH3-]", "[H]", "[2H]C", "C[C@H](N)O", "F/C=C/F", "C-C", "C(C)(C)(C)C",
    "C1CC2CCC1C2", "C12CC1C2", "OC1=CC=CC=C1", "N#CC#N", "C=1CC=1",
    "[C-]#[O+]", "C(=O)O", "CC(=O)N", "OCC(O)CO", "C1OC1", "NC(=N)N", "FC(F)(F)F", "[OH-]",
    "c1ccc2ccccc2c1", "C1=CC2=CC=CC=C2C=C1", "[nH]1cccc1", "O=C1C=CC(=O)C=C1",
    "[OH3+]", "O1CC1=O", "C1=CC1=C", "FO(F)", "CN(=O)=O", "c1ccc1", "C1CC1.O",
]


def main():
    rows = []
    bad = []
    for cat, items in INVALID.items():
        for s in items:
            ok = Chem.MolFromSmiles(s) is not None and s != ""
            if ok != (s in OUT_OF_SCOPE):
                bad.append((s, cat))
            rows.append((s, 0, int(ok), cat))
    held = [l for l in (DATA / "molecules_heldout.txt").read_text().splitlines() if l]
    valid = VALID_EXTRA + held[: 200 - len(rows) - len(VALID_EXTRA)]
    for s in valid:
        m = Chem.MolFromSmiles(s)
        if m is None:
            bad.append((s, "valid"))
        rows.append((s, 1, 1, "ok"))
    if bad:
        raise SystemExit(f"annotation disagrees with reference: {bad}")
    assert len(rows) == 200, len(rows)
    text = "# smiles\texpected_valid\treference_valid\tcategory\n"
    text += "".join(f"{s}\t{v}\t{r}\t{c}\n" for s, v, r, c in rows)
    (DATA / "smiles_curated.tsv").write_text(text)


if __name__ == "__main__":
    main()
