"""Word perturbation: corrupt a fraction of characters with rank-k visual neighbors.

A perturbation is parameterized by phi = (n, k, model): floor(n*|w|)
positions are chosen uniformly at random and each selected character is
replaced by its rank-k nearest neighbor in the chosen model's table.
Parameters are drawn from independent Gaussians whose priors contract
across annotation rounds to make later pairs harder to compare.

All randomness flows from integer seeds through numpy Generators, so
(word, phi, table, seed) fully determines every output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownCodepoint
from .index import NeighborTable

DEFAULT_MU_K = 25.0
DEFAULT_VAR_K = 10.0
DEFAULT_MU_N = 0.5
DEFAULT_VAR_N = 0.2

# adaptive-round contraction: means move halfway to the joint midpoint,
# variances shrink by 0.7 down to a floor
ADAPT_ALPHA = 0.5
ADAPT_BETA = 0.7
VAR_MIN_N = 0.01
VAR_MIN_K = 1.0


@dataclass(frozen=True)
class PerturbParams:
    """phi = (n, k, model): corruption fraction, neighbor rank, embedding model."""

    n: float
    k: int
    model_id: str

    def __post_init__(self):
        if not 0.0 <= self.n <= 1.0:
            raise ValueError(f"n must be in [0, 1], got {self.n}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k!r}")

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "model": self.model_id}

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbParams":
        return cls(n=float(d["n"]), k=int(d["k"]), model_id=str(d.get("model", "imgdot")))


@dataclass(frozen=True)
class ParamPrior:
    """Independent Gaussians over k and n."""

    mu_k: float = DEFAULT_MU_K
    var_k: float = DEFAULT_VAR_K
    mu_n: float = DEFAULT_MU_N
    var_n: float = DEFAULT_VAR_N

    def __post_init__(self):
        if self.var_k <= 0 or self.var_n <= 0:
            raise ValueError("variances must be positive")

    def to_dict(self) -> dict:
        return {"mu_k": self.mu_k, "var_k": self.var_k, "mu_n": self.mu_n, "var_n": self.var_n}

    @classmethod
    def from_dict(cls, d: dict) -> "ParamPrior":
        return cls(**{k: float(d[k]) for k in ("mu_k", "var_k", "mu_n", "var_n")})


@dataclass(frozen=True)
class PerturbedWord:
    original: str
    perturbed: str
    params: PerturbParams
    replaced_positions: tuple[int, ...]
    seed: int

    def __post_init__(self):
        if len(self.perturbed) != len(self.original):
            raise ValueError("perturbation must preserve length")

    @property
    def is_identity(self) -> bool:
        """True when floor(n*|w|) selected zero positions despite n possibly > 0."""
        return not self.replaced_positions

    def to_dict(self) -> dict:
        return {"w": self.original, "wi": self.perturbed, "phi": self.params.to_dict(),
                "positions": list(self.replaced_positions), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbedWord":
        return cls(original=d["w"], perturbed=d["wi"], params=PerturbParams.from_dict(d["phi"]),
                   replaced_positions=tuple(d.get("positions", [])), seed=int(d.get("seed", 0)))


def derive_seed(master_seed: int, index: int) -> int:
    """Stable per-item child seed for embarrassingly parallel corpus work."""
    ss = np.random.SeedSequence((master_seed, index))
    return int(ss.generate_state(1, np.uint64)[0])


def perturb_word(w: str, phi: PerturbParams, table: NeighborTable, seed: int) -> PerturbedWord:
    """Replace floor(n*|w|) uniformly chosen positions with rank-k neighbors.

    Substitutions are mutually independent: every selected character maps to
    its own rank-k (clamped) neighbor regardless of the other positions.
    """
    if not w:
        raise ValueError("cannot perturb an empty word")
    for ch in w:
        if ord(ch) not in table:
            raise UnknownCodepoint(ord(ch))
    count = math.floor(phi.n * len(w))
    rng = np.random.default_rng(seed)
    positions = tuple(sorted(int(p) for p in rng.choice(len(w), size=count, replace=False)))
    chars = list(w)
    for pos in positions:
        chars[pos] = chr(table.kth_neighbor(ord(w[pos]), phi.k))
    return PerturbedWord(original=w, perturbed="".join(chars), params=phi,
                         replaced_positions=positions, seed=seed)


def sample_params(prior: ParamPrior, models: list[str], rng: np.random.Generator) -> PerturbParams:
    """Draw phi: k ~ N(mu_k, var_k) rounded and floored at 1, n ~ N(mu_n, var_n)
    clipped to [0, 1], model uniform over ``models``."""
    if not models:
        raise ValueError("models must be nonempty")
    k_raw = rng.normal(prior.mu_k, math.sqrt(prior.var_k))
    n_raw = rng.normal(prior.mu_n, math.sqrt(prior.var_n))
    k = max(1, int(round(k_raw)))
    n = min(1.0, max(0.0, n_raw))
    model = models[int(rng.integers(len(models)))]
    return PerturbParams(n=n, k=k, model_id=model)


@dataclass(frozen=True)
class PerturbedPair:
    w1: PerturbedWord
    w2: PerturbedWord

    @property
    def collision(self) -> bool:
        """Independent draws may coincide; permitted, but flagged."""
        return self.w1.perturbed == self.w2.perturbed

    def __iter__(self):
        return iter((self.w1, self.w2))


def generate_pair(w: str, prior1: ParamPrior, prior2: ParamPrior, models: list[str],
                  tables: dict[str, NeighborTable], seed: int) -> PerturbedPair:
    """Two independently parameterized perturbations of the same word."""
    rng = np.random.default_rng(seed)
    phi1 = sample_params(prior1, models, rng)
    phi2 = sample_params(prior2, models, rng)
    seed1 = int(rng.integers(2**63))
    seed2 = int(rng.integers(2**63))
    return PerturbedPair(
        w1=perturb_word(w, phi1, tables[phi1.model_id], seed1),
        w2=perturb_word(w, phi2, tables[phi2.model_id], seed2),
    )


def adaptive_update(prior1: ParamPrior, prior2: ParamPrior,
                    alpha: float = ADAPT_ALPHA, beta: float = ADAPT_BETA,
                    var_min_n: float = VAR_MIN_N, var_min_k: float = VAR_MIN_K
                    ) -> tuple[ParamPrior, ParamPrior]:
    """Contract the two priors toward their joint midpoint and shrink variances.

    Repeated application converges to a common mean with floored variance,
    which is what makes successive annotation rounds harder.
    """
    mid_k = (prior1.mu_k + prior2.mu_k) / 2.0
    mid_n = (prior1.mu_n + prior2.mu_n) / 2.0

    def contract(p: ParamPrior) -> ParamPrior:
        return ParamPrior(
            mu_k=p.mu_k + alpha * (mid_k - p.mu_k),
            var_k=max(p.var_k * beta, var_min_k),
            mu_n=p.mu_n + alpha * (mid_n - p.mu_n),
            var_n=max(p.var_n * beta, var_min_n),
        )

    return contract(prior1), contract(prior2)
