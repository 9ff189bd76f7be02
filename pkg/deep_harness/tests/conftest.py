import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def exports(tmp_path_factory):
    """Tensor bundle produced by the exporter CLI; the harness consumes the
    files only, never the exporter's code."""
    root = tmp_path_factory.mktemp("bundle")
    data = root / "data"
    series = root / "series.pkl"
    outdir = root / "exports"

    def run(*args):
        proc = subprocess.run([sys.executable, "-m", "lobrep.cli", *args],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        return proc.stdout

    run("synth", "--days", "4", "--events", "2000", "--seed", "7", "--outdir", str(data))
    run("ingest", "--format", "events", "--tick-size", "0.01", "--min-size", "1",
        "--out", str(series), *sorted(str(p) for p in data.glob("events_day*.csv")))
    run("export", "--series", str(series), "--outdir", str(outdir),
        "--set", "schemes=all", "--set", "paradigms=none,ask,bid,both",
        "--set", "k=30", "--set", "alpha=0.001", "--set", "stride=6",
        "--set", "split_by_day=true")
    return outdir
