import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "benchmarks"))

import bench_kernels  # noqa: E402


def test_backends_agree_in_benchmark(capsys):
    assert bench_kernels.main(["--repeat", "1"]) == 0
    assert "MISMATCH" not in capsys.readouterr().out
