# Seeded Monte Carlo runs against the closed-form success probability.
import tempfile
from pathlib import Path

import numpy as np

from telepovm import analysis
from telepovm import harness as hn
from telepovm import protocol as pr

channel = pr.Channel(0.7, 0.5, 0.4, np.sqrt(0.1))

# exact oracle first: all sixteen branches, no sampling
enum = analysis.enumerate_all_branches(pr.Payload(0.5, 0.5, 0.5, 0.5), channel)
print(analysis.format_table(enum))

# random payload per trial, 5000 trials
out = Path(tempfile.mkdtemp())
cfg = hn.ExperimentConfig(channel, payload=None, trials=5000, master_seed=7, output_path=str(out))
summary = hn.run_experiment(cfg)
print(summary.to_json())
print((out / "records.csv").read_text().splitlines()[:4])

# same seed, same records; a single trial can be replayed alone
again = hn.run_trial(cfg, 123)
print(again == hn.read_records(out / "records.csv")[123])
