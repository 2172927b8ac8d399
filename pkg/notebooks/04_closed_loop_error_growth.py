# %% [markdown]
# Closed-loop forecasts feed predictions back into the delay buffer, so small
# one-step errors compound. The absolute error per step, averaged in windows,
# shows how fast each variant drifts on the Hindmarsh-Rose burster.

# %%
import numpy as np

from rffrc.bench import compare, fit_experiment, fixture_dir, load_config

cfg = load_config(fixture_dir() / "hindmarsh_rose.json")
report = compare(fit_experiment(cfg))
edges = [1, 10, 100, 500, 1000, 2000]
for v in ("single", "multi"):
    errors = report.results[v].closed_loop.errors
    print(v)
    for lo, hi in zip(edges[:-1], edges[1:]):
        chunk = errors[lo - 1:hi]
        print(f"  steps {lo:>4d}-{hi:<4d} mean |error| " + "  ".join(f"{e:9.2e}" for e in chunk.mean(axis=0)))

# %% [markdown]
# Teacher forcing replaces each fed-back prediction with the true sample. The
# closed-loop machinery then reproduces batch one-step prediction exactly.

# %%
from rffrc.embedding import build_supervised, delay_from_tail
from rffrc.forecaster import predict_batch, rollout

exp = fit_experiment(cfg)
f = exp.variants["multi"].forecaster
window = exp.data.trajectory.states[exp.data.n_train - cfg.k:]
batch = predict_batch(f, build_supervised(window, cfg.k).inputs)
forced = rollout(f, delay_from_tail(exp.data.train, cfg.k), exp.data.test.T, teacher=exp.data.test.states)
print("bitwise equal:", forced.predictions.tobytes() == batch.tobytes())
