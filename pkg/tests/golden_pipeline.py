"""Fixture pipeline behind the checked-in golden outputs.

Run ``python tests/golden_pipeline.py`` to regenerate ``tests/golden`` after an
intentional output change.
"""

import shutil
import sys
from pathlib import Path

HERE = Path(__file__).parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"

STEPS = [
    ("teams", []),
    ("measure", ["--all"]),
    ("distance", ["--enumerate"]),
    ("permtest", ["--permutations", "50", "--seed", "3"]),
    ("permtest_drd", ["--kind", "DRD", "--permutations", "50", "--seed", "3"]),
    ("reconstruct", []),
    ("evaluate", []),
]


def run_pipeline(out: Path) -> None:
    from orgnet.cli import main

    ds = out / "dataset"
    code = main(["ingest", "--org", str(DATA / "f1_org.csv"), "--comm",
                 str(DATA / "c1_comm.csv"), "-o", str(ds), "--team-level", "1",
                 "--min-team-size", "1"])
    if code:
        raise RuntimeError(f"ingest exited {code}")
    for name, args in STEPS:
        cmd = name.split("_")[0]
        code = main([cmd, str(ds), "-o", str(out / name), *args])
        if code:
            raise RuntimeError(f"{name} exited {code}")


def golden_files(root: Path) -> dict[str, bytes]:
    """Every output file below ``root`` except run manifests."""
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and p.name != "manifest.json"}


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else GOLDEN
    if target.exists():
        shutil.rmtree(target)
    run_pipeline(target)
    for p in sorted(target.rglob("manifest.json")):
        p.unlink()
    print(f"wrote {len(golden_files(target))} files to {target}")
