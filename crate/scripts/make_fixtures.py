"""Regenerate the frozen reference fixtures under data/.

Requires RDKit and the molsets wheel (for a pool of real molecules to
fragment). All outputs are deterministic for a fixed seed.

    pip install rdkit
    pip download --no-deps -d /tmp/dl molsets
    python3 scripts/make_fixtures.py /tmp/dl/molsets-0.3.1-py3-none-any.whl
"""
import gzip
import itertools
import random
import sys
import zipfile
from pathlib import Path

from rdkit import Chem, RDLogger
from rdkit.Chem import QED, Crippen

RDLogger.DisableLog("rdApp.*")
OUT = Path(__file__).resolve().parent.parent / "data"
CONF = {6, 7, 8, 9}


def reference_valid(s):
    m = Chem.MolFromSmiles(s)
    return m is not None and m.GetNumAtoms() > 0


def exhaustive():
    rows = []
    for n in range(1, 6):
        for t in itertools.product("CON=1()", repeat=n):
            s = "".join(t)
            rows.append(f"{s}\t{int(reference_valid(s))}")
    (OUT / "smiles_exhaustive.tsv").write_text("\n".join(rows) + "\n")


def small_fragments(pool_wheel, rng, want):
    z = zipfile.ZipFile(pool_wheel)
    text = gzip.decompress(z.read("moses/dataset/data/train.csv.gz")).decode()
    pool = text.splitlines()[1:]
    rng.shuffle(pool)
    seen = set()
    out = []
    for smi in pool:
        m = Chem.MolFromSmiles(smi)
        if m is None or any(a.GetAtomicNum() not in CONF for a in m.GetAtoms()):
            continue
        if any(a.GetFormalCharge() != 0 for a in m.GetAtoms()):
            continue
        cut = [b.GetIdx() for b in m.GetBonds()
               if not b.IsInRing() and b.GetBondType() == Chem.BondType.SINGLE]
        for _ in range(4):
            if not cut:
                break
            chosen = rng.sample(cut, k=min(len(cut), rng.randint(1, 4)))
            frag = Chem.FragmentOnBonds(m, chosen, addDummies=False)
            for piece in Chem.GetMolFrags(frag, asMols=True, sanitizeFrags=False):
                heavy = piece.GetNumHeavyAtoms()
                if heavy < 2 or heavy > 9:
                    continue
                try:
                    piece.UpdatePropertyCache(strict=False)
                    Chem.SanitizeMol(piece)
                    Chem.Kekulize(piece, clearAromaticFlags=True)
                    s = Chem.MolToSmiles(piece, isomericSmiles=False, kekuleSmiles=True)
                except Exception:
                    continue
                if "[" in s or s in seen or not reference_valid(s):
                    continue
                seen.add(s)
                out.append(s)
                if len(out) >= want:
                    return out
    return out


def molecules(pool_wheel):
    rng = random.Random(20171030)
    mols = small_fragments(pool_wheel, rng, 6000)
    (OUT / "molecules_train.txt").write_text("\n".join(mols[:5000]) + "\n")
    (OUT / "molecules_heldout.txt").write_text("\n".join(mols[5000:]) + "\n")
    (OUT / "molecules_500.txt").write_text("\n".join(mols[:500]) + "\n")
    rows = []
    for s in mols[5000:5100]:
        m = Chem.MolFromSmiles(s)
        rows.append(f"{s}\t{Crippen.MolLogP(m):.6f}\t{QED.qed(m):.6f}")
    (OUT / "molecules_reference.tsv").write_text(
        "# smiles\tcrippen_logp\tqed\n" + "\n".join(rows) + "\n")


ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZab"
MAJOR = [0, 2, 4, 5, 7, 9, 11]


def melody(rng):
    # Folk-like line: notes from one major key, mostly stepwise motion,
    # occasional leaps, notes held for one to four sixteenths.
    tonic = rng.randint(48, 59)
    scale = sorted({tonic + 12 * o + d for o in range(3) for d in MAJOR
                    if 48 <= tonic + 12 * o + d <= 83})
    idx = rng.randrange(2, len(scale) - 2)
    toks = []
    while len(toks) < 36:
        if rng.random() < 0.08:
            toks.append(0)
            continue
        toks.append(scale[idx] - 46)
        for _ in range(rng.choice([0, 1, 1, 1, 3])):
            toks.append(1)
        r = rng.random()
        move = rng.choice([-1, 1]) * (1 if r < 0.55 else 2 if r < 0.75 else rng.randint(3, 5))
        idx = max(0, min(len(scale) - 1, idx + move))
    return "".join(ALPHABET[t] for t in toks[:36])


def melodies():
    rng = random.Random(20180514)
    songs = [melody(rng) for _ in range(1000)]
    (OUT / "melodies_1k.txt").write_text("\n".join(songs) + "\n")
    (OUT / "melodies_200.txt").write_text("\n".join(songs[:200]) + "\n")


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    exhaustive()
    molecules(sys.argv[1])
    melodies()
