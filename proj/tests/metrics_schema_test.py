# Copyright 2026 The KAHM Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Runs every kahm subcommand that writes metrics and validates the output
against docs/metrics.schema.json."""

import json
import math
import pathlib
import random
import subprocess
import sys
import tempfile

import jsonschema


def write_blobs(path, per_class, seed):
    rng = random.Random(seed)
    centers = [(-0.6, -0.5), (0.6, -0.5), (0.0, 0.6)]
    with open(path, "w") as f:
        f.write("x,y,label\n")
        for i in range(3 * per_class):
            cx, cy = centers[i % 3]
            f.write(f"{cx + rng.gauss(0, 0.2)!r},{cy + rng.gauss(0, 0.2)!r},{'abc'[i % 3]}\n")


def reject_non_finite(token):
    raise ValueError(f"non-finite number {token} in metrics")


def main():
    kahm, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    with tempfile.TemporaryDirectory() as tmp:
        d = pathlib.Path(tmp)
        train, test = str(d / "train.csv"), str(d / "test.csv")
        write_blobs(train, 50, 1)
        write_blobs(test, 30, 2)
        model = str(d / "m.kahm")
        runs = {
            "train": ["train", "--data", train, "--n", "2", "--out", model],
            "train_noisy": ["train", "--data", train, "--n", "2", "--mode", "noisy",
                            "--epsilon", "4", "--out", str(d / "noisy.kahm")],
            "classify": ["classify", "--model", model, "--data", test],
            "mis": ["mis", "--model", model, "--train", train, "--test", test],
            "fabricate": ["fabricate", "--data", train, "--n", "2", "--out", str(d / "f.csv")],
            "fedsim": ["fedsim", "--train", train, "--test", test, "--scenario", "2", "--n", "2",
                       "--distance-table", str(d / "table.csv")],
            "replay": ["fedsim", "--replay", str(d / "table.csv"), "--test", test],
        }
        failures = 0
        for name, args in runs.items():
            metrics = d / f"{name}.json"
            subprocess.run([kahm, *args, "--metrics", str(metrics)], check=True,
                           stdout=subprocess.DEVNULL)
            doc = json.loads(metrics.read_text(), parse_constant=reject_non_finite)
            errors = list(validator.iter_errors(doc))
            for e in errors:
                print(f"{name}: {e.json_path}: {e.message}")
            failures += len(errors)
            print(f"{name}: {'ok' if not errors else 'invalid'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
