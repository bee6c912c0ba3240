"""The engine proper must never consult the big-integer oracle; only
the boundary (stack encode/decode, service verification) and the tests
may.  Anything else would let CRT-side arithmetic leak into paths that
are required to run entirely on table lookups."""

import ast
from pathlib import Path

SRC = Path(__file__).resolve().parent.parent / "src" / "rrns"

ENGINE_MODULES = ["intervals", "primes", "tables", "params", "baseext",
                  "costs", "builder", "engine", "modexp"]


def imported_names(path: Path) -> set[str]:
    tree = ast.parse(path.read_text())
    names = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            names.update(a.name for a in node.names)
        elif isinstance(node, ast.ImportFrom):
            mod = node.module or ""
            names.add(mod)
            names.update(f"{mod}.{a.name}" if mod else a.name
                         for a in node.names)
    return names


def test_engine_modules_do_not_import_oracle():
    for name in ENGINE_MODULES:
        names = imported_names(SRC / f"{name}.py")
        hits = {n for n in names if "oracle" in n}
        assert not hits, f"{name}.py imports {hits}"


def test_engine_modules_exist():
    for name in ENGINE_MODULES + ["oracle", "stack", "service", "cli"]:
        assert (SRC / f"{name}.py").exists()
