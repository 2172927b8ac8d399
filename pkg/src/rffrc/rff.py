"""Single- and multi-scale random Fourier feature maps.

A block maps its input span ``v`` to ``sqrt(2/m) * cos(W.T v + b)`` with
``W`` drawn i.i.d. from ``N(0, 1/sigma**2)`` and ``b`` uniform on
``[0, 2 pi)``, so that ``phi(x) . phi(y)`` is an unbiased estimate of the
Gaussian kernel ``exp(-|x - y|**2 / (2 sigma**2))`` on that span.

Random numbers
--------------
Block ``i`` draws from its own PCG64 stream seeded by
``numpy.random.SeedSequence(seed, spawn_key=(i,))``: frequencies first
(``standard_normal``, numpy's ziggurat sampler, row-major ``(span, m)``),
then phases (``random`` scaled by ``2 pi``). Changing one block's bandwidth
or width never perturbs another block, and a one-variable multi-scale map
is bit-identical to the single-scale map with the same seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError, CorruptFileError

__all__ = [
    "RNG_METHOD",
    "FeatureBlock",
    "FeatureMapSpec",
    "MultiScaleConfig",
    "sample_single",
    "sample_multi",
    "apply",
    "apply_batch",
    "block_stream",
]

RNG_METHOD = "numpy-pcg64/seedsequence-spawn-key/ziggurat-normal/uniform-phase-v1"
TWO_PI = 2.0 * np.pi


def block_stream(seed: int, block: int) -> np.random.Generator:
    """Independent generator for feature block ``block`` under ``seed``."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(block),)))
    )


@dataclass(frozen=True)
class FeatureBlock:
    """One cosine block acting on ``U[start:stop]``."""

    start: int
    stop: int
    sigma: float
    W: np.ndarray  # (stop - start, m)
    b: np.ndarray  # (m,)

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @property
    def span(self) -> tuple[int, int]:
        return self.start, self.stop

    @property
    def scale(self) -> float:
        return float(np.sqrt(2.0 / self.m))


def _sample_block(seed, index, start, stop, m, sigma) -> FeatureBlock:
    if int(m) != m or m < 1:
        raise InvalidParameterError(f"feature count must be a positive integer, got {m}")
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidParameterError(f"bandwidth must be positive, got {sigma}")
    rng = block_stream(seed, index)
    W = rng.standard_normal((stop - start, int(m))) / float(sigma)
    b = rng.random(int(m)) * TWO_PI
    b[b >= TWO_PI] = 0.0
    W.setflags(write=False)
    b.setflags(write=False)
    return FeatureBlock(int(start), int(stop), float(sigma), W, b)


@dataclass(frozen=True)
class MultiScaleConfig:
    """Per-variable ``(sigma_i, m_i)`` pairs."""

    sigmas: tuple
    ms: tuple

    def __post_init__(self):
        sigmas = tuple(float(s) for s in self.sigmas)
        ms = tuple(int(m) for m in self.ms)
        if len(sigmas) != len(ms) or not sigmas:
            raise InvalidParameterError("need one (sigma, m) pair per variable")
        if any(not (np.isfinite(s) and s > 0) for s in sigmas):
            raise InvalidParameterError(f"bandwidths must be positive, got {sigmas}")
        if any(m < 1 for m in ms):
            raise InvalidParameterError(f"feature counts must be >= 1, got {ms}")
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "ms", ms)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, int]]) -> "MultiScaleConfig":
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def d(self) -> int:
        return len(self.sigmas)


@dataclass(frozen=True)
class FeatureMapSpec:
    """A frozen feature map: a list of blocks over the delay vector.

    Attributes
    ----------
    variant : {"single", "multi"}
    blocks : tuple of FeatureBlock
    seed : int
    k, d : int
        Lag order and variable count of the delay vectors it accepts.
    """

    variant: str
    blocks: tuple
    seed: int
    k: int
    d: int

    @property
    def M(self) -> int:
        return sum(block.m for block in self.blocks)

    @property
    def input_dim(self) -> int:
        return self.k * self.d

    @property
    def bandwidths(self) -> tuple:
        return tuple(block.sigma for block in self.blocks)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "seed": int(self.seed),
            "k": int(self.k),
            "d": int(self.d),
            "blocks": [
                {"sigma": block.sigma, "m": block.m, "span": [block.start, block.stop]}
                for block in self.blocks
            ],
            "rng_method": RNG_METHOD,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureMapSpec":
        """Rebuild a map by re-deriving every block from the stored seed."""
        try:
            if data["rng_method"] != RNG_METHOD:
                raise CorruptFileError(f"unsupported rng_method {data['rng_method']!r}")
            seed, k, d = int(data["seed"]), int(data["k"]), int(data["d"])
            blocks = tuple(
                _sample_block(seed, i, blk["span"][0], blk["span"][1], blk["m"], blk["sigma"])
                for i, blk in enumerate(data["blocks"])
            )
            spec = cls(str(data["variant"]), blocks, seed, k, d)
        except (KeyError, TypeError, IndexError) as exc:
            raise CorruptFileError(f"malformed feature map description: {exc}") from exc
        _validate(spec)
        return spec

    @classmethod
    def from_json(cls, text: str) -> "FeatureMapSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorruptFileError(str(exc)) from exc
        return cls.from_dict(data)


def _validate(spec: FeatureMapSpec) -> None:
    dk = spec.k * spec.d
    if spec.variant == "single":
        ok = len(spec.blocks) == 1 and spec.blocks[0].span == (0, dk)
    elif spec.variant == "multi":
        ok = len(spec.blocks) == spec.d and all(
            blk.span == (i * spec.k, (i + 1) * spec.k) for i, blk in enumerate(spec.blocks)
        )
    else:
        raise CorruptFileError(f"unknown variant {spec.variant!r}")
    if not ok:
        raise CorruptFileError("block layout does not match the variant")


def sample_single(dk: int, m: int, sigma: float, seed: int, *, k: int | None = None,
                  d: int | None = None) -> FeatureMapSpec:
    """Sample a single-bandwidth map over the whole ``dk``-dimensional input.

    ``k`` and ``d`` are recorded for validation; when omitted the input is
    treated as one variable with ``dk`` lags.
    """
    if k is None and d is None:
        k, d = dk, 1
    elif k is None:
        k = dk // d
    elif d is None:
        d = dk // k
    if k * d != dk:
        raise InvalidParameterError(f"k={k}, d={d} do not factor dk={dk}")
    block = _sample_block(seed, 0, 0, dk, m, sigma)
    return FeatureMapSpec("single", (block,), int(seed), int(k), int(d))


def sample_multi(k: int, cfg: MultiScaleConfig, seed: int) -> FeatureMapSpec:
    """Sample one block per variable, block ``i`` spanning that variable's ``k`` lags."""
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"lag order must be a positive integer, got {k}")
    if not isinstance(cfg, MultiScaleConfig):
        cfg = MultiScaleConfig.from_pairs(cfg)
    blocks = tuple(
        _sample_block(seed, i, i * k, (i + 1) * k, m, sigma)
        for i, (sigma, m) in enumerate(zip(cfg.sigmas, cfg.ms))
    )
    return FeatureMapSpec("multi", blocks, int(seed), int(k), cfg.d)


def _block_features(block: FeatureBlock, U: np.ndarray) -> np.ndarray:
    # Explicit elementwise accumulation over the (short) span: every output
    # entry sees the same operation sequence whatever the number of rows, so
    # a single row and the same row inside a batch agree bit for bit.
    proj = np.broadcast_to(block.b, (U.shape[0], block.m)).copy()
    for j in range(block.start, block.stop):
        proj += U[:, j, None] * block.W[j - block.start]
    np.cos(proj, out=proj)
    proj *= block.scale
    return proj


def apply_batch(spec: FeatureMapSpec, inputs) -> np.ndarray:
    """Feature matrix for a stack of delay vectors.

    Parameters
    ----------
    spec : FeatureMapSpec
    inputs : array_like, shape (n, d*k)

    Returns
    -------
    ndarray, shape (n, M)
    """
    U = np.asarray(inputs, dtype=np.float64)
    if U.ndim != 2 or U.shape[1] != spec.input_dim:
        raise DimensionMismatchError(
            f"expected inputs of shape (n, {spec.input_dim}), got {U.shape}"
        )
    Z = np.empty((U.shape[0], spec.M))
    col = 0
    for block in spec.blocks:
        Z[:, col:col + block.m] = _block_features(block, U)
        col += block.m
    return Z


def apply(spec: FeatureMapSpec, U) -> np.ndarray:
    """Feature vector of one delay vector (length ``d*k``)."""
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 1 or U.shape[0] != spec.input_dim:
        raise DimensionMismatchError(
            f"expected a delay vector of length {spec.input_dim}, got shape {U.shape}"
        )
    return apply_batch(spec, U[None, :])[0]
