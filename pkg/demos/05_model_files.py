#!/usr/bin/env python3
"""Model files: exact round trips and single-task extraction.

Models serialize to versioned text with hexadecimal float literals, so a
save/load round trip reproduces predictions bit for bit. A multi-task
model can be sliced down to any one task: the shared structure is kept,
only that task's leaf values survive, and the file shrinks accordingly.
"""

import os
import tempfile

import numpy as np

from mtboost import (
    BoosterParams,
    MTConfig,
    SyntheticSpec,
    apply_bins,
    extract_task,
    fit_bins,
    gen_synthetic,
    load_model,
    predict,
    save_model,
    train,
)

table = gen_synthetic(SyntheticSpec("noisy_tasks", m=1500, d=4, seed=5))
dataset = apply_bins(table, fit_bins(table, 32))
model = train(dataset, BoosterParams(
    objectives=("binary_logloss", "binary_logloss"),
    num_iterations=25, learning_rate=0.1, min_samples_leaf=10, seed=5,
    mt=MTConfig(task_select="uniform_random", n_selected=1),
))

workdir = tempfile.mkdtemp()
full_path = os.path.join(workdir, "full.txt")
save_model(model, full_path)

with open(full_path) as fh:
    head = [next(fh) for _ in range(8)]
print("model file header:")
print("".join("  " + line for line in head))

# Round trip is lossless.
reloaded = load_model(full_path)
x = np.random.default_rng(0).uniform(0, 1, size=(500, 4))
assert np.array_equal(predict(model, x), predict(reloaded, x))
print("save -> load -> predict: bit-identical")

# Extraction keeps only one task's outputs.
aux = extract_task(model, 1)
aux_path = os.path.join(workdir, "aux_only.txt")
save_model(aux, aux_path)
assert np.array_equal(predict(aux, x, task=0), predict(model, x, task=1))
print(f"extracted task 'y_aux': predictions exact, file "
      f"{os.path.getsize(full_path)} -> {os.path.getsize(aux_path)} bytes")
