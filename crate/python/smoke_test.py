#!/usr/bin/env python3
"""Smoke test for the vssdd_py extension module.

Builds the cdylib with cargo, loads it, and exercises the main types on the
four-variable example f = (A and B) or (B and C) or (C and D).
"""

import shutil
import subprocess
import sys
import sysconfig
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_extension() -> Path:
    subprocess.run(
        ["cargo", "build", "-p", "vssdd-py", "--release"],
        cwd=REPO,
        check=True,
    )
    built = REPO / "target" / "release" / "libvssdd_py.so"
    if not built.exists():  # macOS
        built = REPO / "target" / "release" / "libvssdd_py.dylib"
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    stage = Path(tempfile.mkdtemp(prefix="vssdd_py_"))
    target = stage / f"vssdd_py{suffix}"
    shutil.copyfile(built, target)
    return stage


def main() -> None:
    sys.path.insert(0, str(build_extension()))
    import vssdd_py

    vt = vssdd_py.Vtree.balanced(4)
    assert vt.num_vars == 4

    m = vssdd_py.Manager(vt)
    a, b, c, d = (m.literal(v) for v in (1, 2, 3, 4))
    ab = m.apply(a, b, "and")
    bc = m.apply(b, c, "and")
    cd = m.apply(c, d, "and")
    f = m.apply(m.apply(ab, bc, "or"), cd, "or")

    assert m.model_count(f) == 8
    assert m.size(f) <= 9
    assert m.sdd_size(f) == 9

    # Shifted blocks share one structure at offsets 2 and 5.
    assert ab.structure == cd.structure
    assert (ab.offset, cd.offset) == (2, 5)

    # Canonicity: a different construction order gives the identical handle.
    g = m.apply(m.apply(cd, bc, "or"), ab, "or")
    assert g == f and m.equivalent(f, g)

    nf = m.negate(f)
    assert m.model_count(nf) == 8
    assert m.negate(nf) == f
    assert m.satisfiable(f) and not m.valid(f)
    assert m.entails(ab, a) and not m.entails(f, ab)

    fb = m.condition(f, [2])
    aoc = m.apply(a, c, "or")
    assert fb == aoc

    models = m.enumerate_models(f)
    assert len(models) == 8

    text = m.serialize(f)
    again = m.load(text)
    assert again == f
    assert m.export_dot(f).startswith("digraph vssdd {")

    print("smoke test: all assertions passed")


if __name__ == "__main__":
    main()
