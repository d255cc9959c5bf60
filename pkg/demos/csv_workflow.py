"""End-to-end CSV workflow: write data files, run the correction, inspect
the artifacts.

This is the same path the `npsimex correct` CLI takes: a main CSV with
replicate columns x1, x2 and outcome y, a JSON config, and an output
directory that receives result.json, the extrapolation trace, and normal
Q-Q data for the empirical error set.

Run: python3 demos/csv_workflow.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np
from scipy.special import expit

from npsimex import DistributionSpec, RandomStream, sample
from npsimex.correct import correct


def write_inputs(root: Path) -> tuple[Path, Path]:
    stream = RandomStream(11)
    n = 5000
    x = sample(DistributionSpec.normal(1.0, np.sqrt(2.0)), n, stream.derive("x"))
    u = sample(DistributionSpec.student_t(5.0), 2 * n, stream.derive("u"))
    u = u.reshape(n, 2)
    y = (stream.derive("y").generator.random(n) < expit(1.0 - x)).astype(int)

    data_path = root / "study.csv"
    with open(data_path, "w", encoding="utf-8") as fh:
        fh.write("y,x1,x2\n")
        for i in range(n):
            fh.write(f"{y[i]},{x[i] + u[i, 0]:.8g},{x[i] + u[i, 1]:.8g}\n")

    config_path = root / "config.json"
    config_path.write_text(json.dumps({
        "estimator": "logistic",
        "methods": ["naive", "P", "NP"],
        "B": 100,
        "extrapolant": "rational",
        "seed": 99,
    }))
    return data_path, config_path


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        data_path, config_path = write_inputs(root)
        out_dir = root / "out"
        doc = correct(data_path, config_path, out_dir=out_dir)

        print("error set summary:")
        for key, value in doc["error_set_summary"].items():
            print(f"  {key:16s} {value}")
        print("\nslope estimates (truth -1):")
        for method, entry in doc["results"].items():
            print(f"  {method:6s} {entry['estimate'][1]:8.4f}")
        print("\nartifacts written:",
              sorted(p.name for p in out_dir.iterdir()))


if __name__ == "__main__":
    main()
