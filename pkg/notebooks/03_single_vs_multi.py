# %% [markdown]
# Single- against multi-scale forecasting on every shipped fixture. Both
# variants see the same trajectory, split, lag order and feature budget; only
# the bandwidth structure differs. Ratios are single / multi, so values above
# one favour the multi-scale map.

# %%
import tempfile

from rffrc.bench import run_suite, fixture_dir

with tempfile.TemporaryDirectory() as out:
    result = run_suite(fixture_dir(), out)

for row in result.rows:
    print(f"\n{row['name']}")
    names = [c.split("_", 3)[-1] for c in row if c.startswith("single_one_step_")]
    for mode in ("one_step", "closed_loop"):
        for v in names:
            s, m = row[f"single_{mode}_{v}"], row[f"multi_{mode}_{v}"]
            print(f"  {mode:11s} {v}: single {s:9.3e}  multi {m:9.3e}  ratio {s / m:7.3g}")
    print(f"  diverged: single={row['single_diverged']} multi={row['multi_diverged']}")
print("\nfailures:", result.failures or "none")
