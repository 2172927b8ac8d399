"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict in ``VERDICTS``; the conftest hook
prints them after the run, and ``python tests/test_acceptance.py`` runs the
checks without pytest. Thresholds are the contract values; nothing here is
tuned to make a check pass.
"""

from __future__ import annotations

import functools
import math
import sys
import tempfile
from pathlib import Path

import mpmath
import numpy as np
import pytest

from rffrc.bench import compare, fit_experiment, fixture_dir, load_config, prepare, run
from rffrc.dynamics import PredatorPreyParams, Trajectory, rk4_step
from rffrc.embedding import build_supervised, delay_from_tail
from rffrc.forecaster import evaluate_one_step, predict_batch, rollout, train
from rffrc.metrics import nrmse_columns
from rffrc.readout import fit
from rffrc.rff import apply, sample_single

SEEDS = range(5)
RUN_BUDGET_S = 60.0
VERDICTS: dict[int, str] = {}

TITLES = {
    1: "kernel approximation",
    2: "ridge oracle equivalence",
    3: "teacher-forcing equivalence",
    4: "linear-system sanity",
    5: "Rulkov one-step direction",
    6: "Morris-Lecar closed-loop stability",
    7: "Ricker one-step direction",
    8: "Hindmarsh-Rose closed-loop ordering",
    9: "predator-prey one-step parity",
    10: "determinism",
    11: "RK4 integrator order",
}


def verdict(n: int, ok: bool, detail: str) -> bool:
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {TITLES[n]}: {detail}"
    VERDICTS[n] = line
    print(line)
    return ok


def _fmt(values) -> str:
    return "[" + ", ".join(f"{v:.3g}" for v in values) + "]"


@functools.lru_cache(maxsize=None)
def fixture(name: str):
    return load_config(fixture_dir() / f"{name}.json")


@functools.lru_cache(maxsize=None)
def seed_reports(name: str):
    """Comparison reports for each seed; the trajectory is simulated once."""
    cfg = fixture(name)
    data = prepare(cfg)
    return tuple(compare(fit_experiment(cfg.replace(seed=s), data)) for s in SEEDS)


# --------------------------------------------------------------------------


def check_kernel_approximation() -> bool:
    rng = np.random.default_rng(1)
    details, ok = [], True
    for sigma in (0.1, 1.0, 10.0):
        # pairs at a distance where the kernel is neither 0 nor 1
        a, b = rng.normal(size=(2, 50, 6)) / math.sqrt(3)
        xs, ys = sigma * a, sigma * b
        exact = np.exp(-np.sum((xs - ys) ** 2, axis=1) / (2 * sigma**2))

        def errors(m, seed):
            spec = sample_single(6, m, sigma, seed)
            est = np.array([apply(spec, x) @ apply(spec, y) for x, y in zip(xs, ys)])
            return np.abs(est - exact)

        frac = float(np.mean(errors(2000, 0) < 0.05))
        ms = [100, 1000, 10000]
        mean_err = [np.mean([errors(m, s).mean() for s in range(5)]) for m in ms]
        slope = float(np.polyfit(np.log(ms), np.log(mean_err), 1)[0])
        ok &= frac >= 0.95 and -0.7 <= slope <= -0.3
        details.append(f"sigma={sigma:g}: {frac:.0%} within 0.05, slope {slope:.2f}")
    return verdict(1, ok, "; ".join(details))


def _ridge_oracle(Z, Y, lam):
    with mpmath.workdps(40):
        Zm = mpmath.matrix(Z.tolist())
        A = Zm.T * Zm + mpmath.mpf(lam) * mpmath.eye(Z.shape[1])
        rhs = Zm.T * mpmath.matrix(Y.tolist())
        cols = [mpmath.lu_solve(A, rhs.column(j)) for j in range(Y.shape[1])]
        return np.array([[float(c[i]) for c in cols] for i in range(Z.shape[1])])


def check_ridge_oracle() -> bool:
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        n, M, d = int(rng.integers(5, 51)), int(rng.integers(2, 51)), int(rng.integers(1, 4))
        lam = float(10 ** rng.uniform(-3, 1))
        Z, Y = rng.normal(size=(n, M)), rng.normal(size=(n, d))
        ref = _ridge_oracle(Z, Y, lam)
        worst = max(worst, np.linalg.norm(fit(Z, Y, lam).W - ref) / np.linalg.norm(ref))
    return verdict(2, worst <= 1e-10, f"worst relative Frobenius error {worst:.2e} over 20 instances")


def check_teacher_forcing() -> bool:
    ok, bad = True, []
    for path in sorted(fixture_dir().glob("*.json")):
        cfg = load_config(path)
        exp = fit_experiment(cfg)
        test = exp.data.model_states(exp.data.test.states)
        window = exp.data.model_states(exp.data.trajectory.states[exp.data.n_train - cfg.k:])
        inputs = build_supervised(window, cfg.k).inputs
        init = delay_from_tail(exp.data.model_states(exp.data.train.states), cfg.k)
        for v, trained in exp.variants.items():
            batch = predict_batch(trained.forecaster, inputs)
            forced = rollout(trained.forecaster, init, test.shape[0], teacher=test)
            same = forced.predictions.tobytes() == batch.tobytes()
            ok &= same
            if not same:
                bad.append(f"{cfg.name}/{v}")
    n = len(list(fixture_dir().glob("*.json")))
    return verdict(3, ok and n == 6, f"{n} fixtures x 2 variants bitwise equal" if ok else f"mismatch in {bad}")


def check_linear_sanity() -> bool:
    def decay(u0, T):
        return Trajectory(("u",), 1.0, (u0 * 0.9 ** np.arange(T))[:, None])

    f = train(decay(1.0, 500), 2, sample_single(2, 200, 1.0, seed=0), 1e-8)
    test = decay(0.8, 60)
    one = float(evaluate_one_step(f, test)[0])
    ro = rollout(f, delay_from_tail(test.states[:2], 2), 50)
    closed = float(nrmse_columns(test.states[2:52], ro.predictions)[0]) if not ro.diverged else math.inf
    return verdict(4, one < 1e-3 and closed < 1e-2, f"one-step {one:.2e} (< 1e-3), H=50 rollout {closed:.2e} (< 1e-2)")


def check_rulkov() -> bool:
    ratios = [r.ratios("one_step")["x"] for r in seed_reports("rulkov")]
    med = float(np.median(ratios))
    return verdict(5, med >= 5.0, f"median single/multi one-step ratio on x {med:.3g} (>= 5); per seed {_fmt(ratios)}")


def check_morris_lecar() -> bool:
    reps = seed_reports("morris_lecar")
    single = [r.nrmse("single", "closed_loop")["V"] for r in reps]
    multi = [r.nrmse("multi", "closed_loop")["V"] for r in reps]
    div = [r.diverged("single") for r in reps]
    s_med, m_med = float(np.median(single)), float(np.median(multi))
    single_bad = s_med > 1.0 or sum(div) > len(div) / 2
    ok = single_bad and m_med < 0.5
    return verdict(
        6, ok,
        f"single V median {s_med:.3g} (> 1 or diverged; diverged {sum(div)}/5), multi V median {m_med:.3g} (< 0.5)",
    )


def check_ricker() -> bool:
    ratios = [r.ratios("one_step")["x"] for r in seed_reports("ricker")]
    med = float(np.median(ratios))
    return verdict(7, med >= 3.0, f"median single/multi one-step ratio on x {med:.3g} (>= 3); per seed {_fmt(ratios)}")


def check_hindmarsh_rose() -> bool:
    reps = seed_reports("hindmarsh_rose")
    names = ("x", "y", "z")
    single = np.median([[r.nrmse("single", "closed_loop")[v] for v in names] for r in reps], axis=0)
    multi = np.median([[r.nrmse("multi", "closed_loop")[v] for v in names] for r in reps], axis=0)
    wins = int(np.sum(multi <= single))
    return verdict(8, wins >= 2, f"multi <= single on {wins}/3 (median single {_fmt(single)}, multi {_fmt(multi)})")


def check_predator_prey() -> bool:
    ratios = seed_reports("predator_prey")[0].ratios("one_step")
    ok = all(r is not None and 0.2 <= r <= 5.0 for r in ratios.values())
    return verdict(9, ok, "single/multi one-step ratios " + ", ".join(f"{k}={v:.3g}" for k, v in ratios.items()) + " (in [0.2, 5])")


def check_determinism() -> bool:
    ok, slowest, mism = True, 0.0, []
    with tempfile.TemporaryDirectory() as tmp:
        for path in sorted(fixture_dir().glob("*.json")):
            cfg = load_config(path)
            outs = []
            for i in range(2):
                rep = run(cfg, out=Path(tmp) / str(i))
                slowest = max(slowest, rep.wall_time)
                root = Path(tmp) / str(i) / cfg.name
                files = sorted(p for p in root.rglob("*") if p.is_file() and p.name != "timing.json")
                outs.append({p.relative_to(root).as_posix(): p.read_bytes() for p in files})
            if outs[0] != outs[1]:
                ok = False
                mism.append(cfg.name)
    detail = "all fixture artifacts byte-identical across reruns" if ok else f"differences in {mism}"
    detail += f"; slowest run {slowest:.1f}s (budget {RUN_BUDGET_S:.0f}s)"
    return verdict(10, ok and slowest < RUN_BUDGET_S, detail)


def _rk4_final(p, y0, T, h):
    y = np.array(y0, dtype=float)
    for i in range(int(round(T / h))):
        y = rk4_step(p, y, i * h, h)
    return y


def check_rk4_order() -> bool:
    p = PredatorPreyParams()
    a, b, c = (_rk4_final(p, (2.0, 1.0), 4.0, 0.2 / s) for s in (1, 2, 4))
    order = math.log2(np.linalg.norm(a - b) / np.linalg.norm(b - c))
    return verdict(11, 3.5 <= order <= 4.5, f"observed order {order:.3f} (in [3.5, 4.5])")


CHECKS = {
    1: check_kernel_approximation,
    2: check_ridge_oracle,
    3: check_teacher_forcing,
    4: check_linear_sanity,
    5: check_rulkov,
    6: check_morris_lecar,
    7: check_ricker,
    8: check_hindmarsh_rose,
    9: check_predator_prey,
    10: check_determinism,
    11: check_rk4_order,
}


@pytest.mark.parametrize("n", sorted(CHECKS), ids=[f"criterion_{n:02d}" for n in sorted(CHECKS)])
def test_criterion(n):
    assert CHECKS[n](), VERDICTS[n]


if __name__ == "__main__":
    results = [CHECKS[n]() for n in sorted(CHECKS)]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
