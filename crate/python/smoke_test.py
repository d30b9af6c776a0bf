#!/usr/bin/env python3
"""Smoke test for the regulens_py extension module.

Builds are done with cargo (`cargo build -p regulens-py`); this script finds
the produced cdylib, imports it under the proper module name, and exercises
the main types and operations with known-value checks.
"""

import json
import pathlib
import shutil
import sys
import sysconfig
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libregulens_py.so",
        ROOT / "target" / "debug" / "libregulens_py.so",
        ROOT / "target" / "release" / "libregulens_py.dylib",
        ROOT / "target" / "debug" / "libregulens_py.dylib",
    ]
    built = next((c for c in candidates if c.exists()), None)
    if built is None:
        sys.exit("no built extension found; run `cargo build -p regulens-py` first")
    staging = pathlib.Path(tempfile.mkdtemp(prefix="regulens-py-"))
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy2(built, staging / f"regulens_py{suffix}")
    sys.path.insert(0, str(staging))
    import regulens_py

    return regulens_py


def main():
    rp = load_module()

    # exact measures and densities
    t = rp.MeasureTriple.uniform(4)
    assert t.size == 4
    assert t.measure([0, 1]) == "1/2"
    assert t.measure([]) == "0/1"
    assert t.density([0, 1], [1, 2]) == "1/2"
    assert t.density([0], []) == "0/1"

    # semi-ring cell algebra
    ps = rp.SemiRing.power_set(3)
    assert ps.declared_r == 1
    a = ps.set_cell([0, 1, 2])
    b = ps.set_cell([1])
    pieces = ps.decompose_difference(a, b)
    assert [ps.cell_atoms(p) for p in pieces] == [[0, 2]]

    iv = rp.SemiRing.intervals(8)
    whole = iv.interval_cell(0, 8)
    mid = iv.interval_cell(2, 4)
    assert [repr(p) for p in iv.decompose_difference(whole, mid)] == ["[0,2)", "[4,8)"]

    prod = rp.SemiRing.power(rp.SemiRing.power_set(2), 2)
    sq = prod.product_cell([prod_base_cell(rp, [0, 1]), prod_base_cell(rp, [0, 1])])
    corner = prod.product_cell([prod_base_cell(rp, [0]), prod_base_cell(rp, [0])])
    assert len(prod.decompose_difference(sq, corner)) == 3

    # partitions and energy
    parts = rp.Partition(
        rp.SemiRing.power_set(4),
        [half_cell(rp, [0, 1]), half_cell(rp, [2, 3])],
    )
    assert parts.size == 2
    assert rp.index(t, [0, 1], parts) == "1/2"
    singles = rp.Partition(
        rp.SemiRing.power_set(4), [half_cell(rp, [i]) for i in range(4)]
    )
    assert singles.refines(parts)
    assert not parts.refines(singles)

    # equitable refinement: blocks of 5, no residual
    t10 = rp.MeasureTriple.uniform(10)
    trivial = rp.Partition.trivial(rp.SemiRing.power_set(10))
    q = rp.equitable_refine(t10, trivial, "1/2")
    assert q.size == 2
    assert q.exceptional_flags() == [False, False]

    # defect Cauchy-Schwarz: 2*10 >= 16 + 4/1
    part1, part2 = rp.defect_cs_check(["1", "1"], ["1", "3"], [1], "2")
    assert part1 and part2 == "holds"

    # cell-level regularity: the half graph has a witness at eps = 1/4
    edges = [[i, 4 + j] for i in range(4) for j in range(4) if i + j <= 3]
    regular, deviation = rp.digraph_cell_check(
        8, 2, edges, [[0, 1, 2, 3], [4, 5, 6, 7]], "1/4"
    )
    assert not regular
    num, den = map(int, deviation.split("/"))
    assert num * 4 >= den  # deviation >= 1/4

    # a full decomposition run, validated and deterministic
    digraph_edges = [[i, j] for i in range(10) for j in range(10) if (i * 7 + j) % 3 == 0]
    r1 = rp.digraph_decomposition(10, 2, digraph_edges, "1/2")
    r2 = rp.digraph_decomposition(10, 2, digraph_edges, "1/2")
    assert r1 == r2
    report = json.loads(r1)
    assert report["instance_summary"]["theorem"]["validated"]
    assert report["config"]["certified"]
    assert all(s["regular"] for s in report["per_set"])

    # cube driver over interval classes
    quad = [[i, j] for i in range(4) for j in range(4)]
    cube = json.loads(rp.cube_decomposition(2, 8, quad, "1/2", semiring="intervals"))
    assert cube["instance_summary"]["kind"] == "grid-intervals"
    assert cube["instance_summary"]["theorem"]["validated"]

    # one verification suite through the bindings
    cases, passes, failures, counterexample = rp.run_verify_suite("defect-cs", cases=200)
    assert (cases, passes, failures) == (200, 200, 0), counterexample

    print("smoke test passed")


def prod_base_cell(rp, atoms):
    return rp.SemiRing.power_set(2).set_cell(atoms)


def half_cell(rp, atoms):
    return rp.SemiRing.power_set(4).set_cell(atoms)


if __name__ == "__main__":
    main()
