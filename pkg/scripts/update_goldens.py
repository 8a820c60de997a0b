"""Rerun the example pipeline and overwrite tests/golden with its outputs."""

import shutil
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from golden_pipeline import GOLDEN, TEXT_OUTPUTS, hash_manifest, run_pipeline  # noqa: E402


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp)
        codes = run_pipeline(out)
        if any(codes):
            print(f"pipeline failed with exit codes {codes}", file=sys.stderr)
            return 1
        GOLDEN.mkdir(parents=True, exist_ok=True)
        for name in TEXT_OUTPUTS:
            shutil.copyfile(out / name, GOLDEN / name)
        (GOLDEN / "hashes.sha256").write_text(hash_manifest(out), encoding="utf-8")
    print(f"wrote goldens to {GOLDEN}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
