# %% [markdown]
# The fixtures fix lambda = 1e-8 and feed raw state values to the features.
# Hold-out selection of lambda and per-variable z-scoring are both available;
# this script shows what they change on the three systems where the
# multi-scale advantage is weakest under the fixed protocol.

# %%
import numpy as np

from rffrc.bench import compare, fit_experiment, fixture_dir, load_config, prepare
from rffrc.readout import DEFAULT_LAMBDA_GRID

for name in ("rulkov", "morris_lecar", "ricker"):
    base = load_config(fixture_dir() / f"{name}.json")
    first = base.system.names[0]
    for label, changes in (("fixed", {}), ("grid", {"lambda_grid": DEFAULT_LAMBDA_GRID}),
                           ("zscore", {"standardize": True})):
        cfg = base.replace(**changes)
        data = prepare(cfg)
        reps = [compare(fit_experiment(cfg.replace(seed=s), data)) for s in range(3)]
        ratio = np.median([r.ratios("one_step")[first] for r in reps])
        cl = [np.median([r.nrmse(v, "closed_loop")[first] for r in reps]) for v in ("single", "multi")]
        print(f"{name:13s} {label:6s} one-step ratio on {first}: {ratio:6.3g}   "
              f"closed-loop single {cl[0]:9.3g} multi {cl[1]:9.3g}")
