"""Deterministic synthetic chemistry for fixtures and desk-scale demos.

Each planted target owns a congeneric series: one core with two decoration
sites filled from a shared substituent list. Queries drawn from the same
series are therefore similar to their own target's actives and mostly
dissimilar to other targets'.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chem import canonical_smiles, parse_smiles

TARGET_CORES = (
    "c1cc(<0>)ccc1C(=O)Nc1ccc(<1>)cc1",
    "O=C(N1CCN(<0>)CC1)c1ccc(<1>)o1",
    "c1cc(<1>)c2[nH]c(<0>)nc2c1",
    "O=C(N1CCCCC1)c1cc(<0>)c(<1>)s1",
    "c1cnc2ccc(<0>)cc2c1N<1>",
    "O=S(=O)(Nc1ccc(<0>)cc1)c1ccccc1<1>",
    "O=C1CC(c2ccccc2<1>)=NN1<0>",
    "OC(=O)CC(<0>)c1ccc2OCOc2c1<1>",
    "c1cc(<0>)nn1-c1ccc(<1>)cc1",
    "c1c(<1>)sc(NC(=O)C2CC(<0>)C2)n1",
    "O=C(NC1CCOCC1)c1cc(<0>)cc(<1>)n1",
    "c1ccc2c(c1)CCN(<0>)C2<1>",
)

SUBSTITUENTS = (
    "", "C", "CC", "OC", "F", "Cl", "Br", "C(F)(F)F", "N", "O", "C#N", "C(N)=O",
    "C(=O)OC", "S(C)(=O)=O", "N(C)C", "OCC", "C9CC9", "C(C)C", "NC(C)=O", "CO",
    "c9ccccc9", "c9ccncc9", "OC(F)(F)F", "CCN(C)C", "C(C)(C)C",
)

BACKGROUND_CORES = (
    "c1ccc(<0>)cc1<1>", "C1CCC(<0>)CC1<1>", "c1ccncc1<0>", "O=C(O)c1ccccc1<0>",
    "CC(<0>)C(=O)N<1>", "c1ccc2ccccc2c1<0>", "C1CCOC1<0>", "c1ccoc1<0>",
    "CN1CCCC1<0>", "NC(=O)C(<0>)C<1>", "OCC(<0>)N<1>", "c1ccsc1<0>",
    "C1CCNCC1<0>", "CC(C)(<0>)O", "c1cnccn1<0>",
)


def decorate(template: str, subs) -> str:
    out = template
    for k in range(4):
        sub = subs[k] if k < len(subs) else ""
        branch = f"({sub})" if sub else ""
        out = out.replace(f"(<{k}>)", branch).replace(f"<{k}>", branch)
    return out


def _series(template: str, n: int, rng: np.random.Generator, exclude=()) -> list[str]:
    seen = set(exclude)
    out = []
    combos = [(a, b) for a in SUBSTITUENTS for b in SUBSTITUENTS]
    order = rng.permutation(len(combos))
    for k in order:
        smi = canonical_smiles(parse_smiles(decorate(template, combos[k])))
        if smi in seen:
            continue
        seen.add(smi)
        out.append(smi)
        if len(out) == n:
            break
    if len(out) < n:
        raise ValueError(f"core {template!r} supports only {len(out)} distinct members")
    return out


@dataclass
class PlantedDatabase:
    interactions: list[dict]
    train_cases: list[tuple[str, set]]
    test_cases: list[tuple[str, set]]
    target_ids: list[str]


def planted_database(
    n_targets: int = 10,
    actives_per_target: int = 50,
    train_per_target: int = 4,
    test_per_target: int = 2,
    seed: int = 0,
) -> PlantedDatabase:
    """Interaction rows plus held-out training and test queries with known targets."""
    if n_targets > len(TARGET_CORES):
        raise ValueError(f"at most {len(TARGET_CORES)} planted targets")
    rng = np.random.default_rng([seed, 101])
    rows, train, test, tids = [], [], [], []
    used: set[str] = set()
    for t in range(n_targets):
        tid = f"T{t + 1:03d}"
        tids.append(tid)
        n = actives_per_target + train_per_target + test_per_target
        members = _series(TARGET_CORES[t], n, rng, exclude=used)
        used.update(members)
        for k, smi in enumerate(members[:actives_per_target]):
            rows.append(
                {
                    "compound_id": f"C{t + 1:03d}_{k:03d}",
                    "smiles": smi,
                    "target_id": tid,
                    "activity_type": ("Ki", "IC50", "Kd", "EC50")[k % 4],
                    "relation": "=",
                    "value_nM": float(np.round(10 ** rng.uniform(0, 4.2), 3)),
                    "organism": "Homo sapiens",
                }
            )
        extra = members[actives_per_target:]
        train += [(smi, {tid}) for smi in extra[:train_per_target]]
        test += [(smi, {tid}) for smi in extra[train_per_target:]]
    return PlantedDatabase(rows, train, test, tids)


def background_compounds(n: int = 100, seed: int = 7) -> list[str]:
    """Structurally varied compounds built from generic cores."""
    rng = np.random.default_rng([seed, 202])
    out: list[str] = []
    seen: set[str] = set()
    while len(out) < n:
        core = BACKGROUND_CORES[int(rng.integers(len(BACKGROUND_CORES)))]
        subs = [SUBSTITUENTS[int(rng.integers(len(SUBSTITUENTS)))] for _ in range(2)]
        smi = canonical_smiles(parse_smiles(decorate(core, subs)))
        if smi not in seen:
            seen.add(smi)
            out.append(smi)
    return out


def random_fingerprint_pool(n: int, width: int = 2048, density: float = 0.02, seed: int = 0):
    """Random sparse fingerprints (a cheap pool for sampling tests)."""
    from .fingerprint import FingerprintSet

    rng = np.random.default_rng([seed, 303])
    bits = rng.random((n, width)) < density
    packed = np.packbits(bits, axis=1, bitorder="little")
    return FingerprintSet(packed.view(np.uint64).copy())
