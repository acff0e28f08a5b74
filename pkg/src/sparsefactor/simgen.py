"""Simulation data generators with SNR-calibrated noise and recorded truth.

Four designs:
  single_latent — one latent factor drives the response and the non-null
                  features of a single assay.
  single_indep  — independent features; the response is a linear combination
                  of the first block of features.
  multi_latent  — K assays, one factor per assay plus one common factor.
  multi_indep   — K assays of independent features; linear response on the
                  first block of each assay.

Noise variances are set from the signal/noise relations
e_y^2 = (sum of squared response coefficients) / SNR_y and, per non-null
feature j, e_xj^2 = (squared loading norm of j) / SNR_x.
"""

import json
from dataclasses import dataclass, asdict

import numpy as np

DESIGNS = ("single_latent", "single_indep", "multi_latent", "multi_indep")


@dataclass(frozen=True)
class SimSpec:
    design: str
    n: int = 100
    p: int = 200  # single-assay width; per-assay width for multi designs
    K: int = 1
    n_nonnull: int = 20  # per assay
    snr_x: float = 2.0
    snr_y: float = 2.0
    seed: int = 0
    test_n: int = 1000

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}; choose from {DESIGNS}")
        if self.n < 2 or self.p < 1 or self.K < 1 or self.test_n < 1:
            raise ValueError("dimensions must be positive (n >= 2)")
        if self.n_nonnull < 1 or self.n_nonnull > self.p:
            raise ValueError("n_nonnull must be in 1..p")
        if self.snr_x <= 0 or self.snr_y <= 0:
            raise ValueError("SNRs must be positive")

    @property
    def is_multi(self):
        return self.design in ("multi_latent", "multi_indep")

    @property
    def is_latent(self):
        return self.design in ("single_latent", "multi_latent")


@dataclass
class SimTruth:
    design: str
    beta_true: object  # scalar/vector (latent) or per-feature coefficient arrays
    alpha_true: object
    gamma_true: object
    U_true: object  # training factor matrix, latent designs only
    nonnull_sets: list  # per assay, 0-based indices
    e_y2: float
    e_x2: object  # per assay, per non-null feature


@dataclass
class SimDataset:
    assays: list  # raw (unstandardized) matrices
    y: np.ndarray
    factors: object  # n x (#factors) for latent designs, else None


def sample_gaussian_mixture(mean_magnitude, count, rng):
    """Draws from the even mixture of N(-mu, 1) and N(+mu, 1)."""
    if mean_magnitude <= 0:
        raise ValueError("mean magnitude must be positive")
    if count == 0:
        return np.zeros(0)
    signs = rng.choice((-1.0, 1.0), size=count)
    return signs * mean_magnitude + rng.standard_normal(count)


def snr_noise_variance(signal_coefficients, snr):
    """Noise variance making Var(signal)/Var(noise) equal the requested SNR."""
    if snr <= 0:
        raise ValueError("SNR must be positive")
    coef = np.asarray(signal_coefficients, dtype=np.float64)
    return float(np.sum(coef**2) / snr)


def _gen_single_latent(spec, rng):
    beta = float(sample_gaussian_mixture(3.0, 1, rng)[0])
    alpha = sample_gaussian_mixture(1.5, spec.n_nonnull, rng)
    e_y2 = snr_noise_variance([beta], spec.snr_y)
    e_x2 = alpha**2 / spec.snr_x

    def draw(n):
        U = rng.standard_normal(n)
        y = beta * U + np.sqrt(e_y2) * rng.standard_normal(n)
        X = np.empty((n, spec.p))
        for j in range(spec.n_nonnull):
            X[:, j] = alpha[j] * U + np.sqrt(e_x2[j]) * rng.standard_normal(n)
        X[:, spec.n_nonnull :] = rng.standard_normal((n, spec.p - spec.n_nonnull))
        return SimDataset(assays=[X], y=y, factors=U.reshape(-1, 1))

    train = draw(spec.n)
    test = draw(spec.test_n)
    truth = SimTruth(
        design=spec.design,
        beta_true=np.array([beta]),
        alpha_true=[alpha],
        gamma_true=None,
        U_true=train.factors,
        nonnull_sets=[np.arange(spec.n_nonnull)],
        e_y2=e_y2,
        e_x2=[e_x2],
    )
    return train, test, truth


def _gen_single_indep(spec, rng):
    beta = np.zeros(spec.p)
    beta[: spec.n_nonnull] = sample_gaussian_mixture(2.0, spec.n_nonnull, rng)
    e_y2 = snr_noise_variance(beta, spec.snr_y)

    def draw(n):
        X = rng.standard_normal((n, spec.p))
        y = X @ beta + np.sqrt(e_y2) * rng.standard_normal(n)
        return SimDataset(assays=[X], y=y, factors=None)

    train = draw(spec.n)
    test = draw(spec.test_n)
    truth = SimTruth(
        design=spec.design,
        beta_true=[beta],
        alpha_true=None,
        gamma_true=None,
        U_true=None,
        nonnull_sets=[np.arange(spec.n_nonnull)],
        e_y2=e_y2,
        e_x2=None,
    )
    return train, test, truth


def _gen_multi_latent(spec, rng):
    K = spec.K
    beta = sample_gaussian_mixture(3.0, K + 1, rng)
    alpha = [sample_gaussian_mixture(1.5, spec.n_nonnull, rng) for _ in range(K)]
    gamma = [sample_gaussian_mixture(1.5, spec.n_nonnull, rng) for _ in range(K)]
    e_y2 = snr_noise_variance(beta, spec.snr_y)
    e_x2 = [(alpha[k] ** 2 + gamma[k] ** 2) / spec.snr_x for k in range(K)]

    def draw(n):
        U = rng.standard_normal((n, K + 1))
        y = U @ beta + np.sqrt(e_y2) * rng.standard_normal(n)
        assays = []
        for k in range(K):
            X = np.empty((n, spec.p))
            for j in range(spec.n_nonnull):
                X[:, j] = (alpha[k][j] * U[:, k] + gamma[k][j] * U[:, K]
                           + np.sqrt(e_x2[k][j]) * rng.standard_normal(n))
            X[:, spec.n_nonnull :] = rng.standard_normal((n, spec.p - spec.n_nonnull))
            assays.append(X)
        return SimDataset(assays=assays, y=y, factors=U)

    train = draw(spec.n)
    test = draw(spec.test_n)
    truth = SimTruth(
        design=spec.design,
        beta_true=beta,
        alpha_true=alpha,
        gamma_true=gamma,
        U_true=train.factors,
        nonnull_sets=[np.arange(spec.n_nonnull) for _ in range(K)],
        e_y2=e_y2,
        e_x2=e_x2,
    )
    return train, test, truth


def _gen_multi_indep(spec, rng):
    K = spec.K
    betas = []
    for _ in range(K):
        b = np.zeros(spec.p)
        b[: spec.n_nonnull] = sample_gaussian_mixture(2.0, spec.n_nonnull, rng)
        betas.append(b)
    e_y2 = snr_noise_variance(np.concatenate(betas), spec.snr_y)

    def draw(n):
        assays = [rng.standard_normal((n, spec.p)) for _ in range(K)]
        y = sum(assays[k] @ betas[k] for k in range(K))
        y = y + np.sqrt(e_y2) * rng.standard_normal(n)
        return SimDataset(assays=assays, y=y, factors=None)

    train = draw(spec.n)
    test = draw(spec.test_n)
    truth = SimTruth(
        design=spec.design,
        beta_true=betas,
        alpha_true=None,
        gamma_true=None,
        U_true=None,
        nonnull_sets=[np.arange(spec.n_nonnull) for _ in range(K)],
        e_y2=e_y2,
        e_x2=None,
    )
    return train, test, truth


_GENERATORS = {
    "single_latent": _gen_single_latent,
    "single_indep": _gen_single_indep,
    "multi_latent": _gen_multi_latent,
    "multi_indep": _gen_multi_indep,
}


def generate(spec):
    """Generate (train, test, truth) deterministically from spec.seed."""
    rng = np.random.default_rng(spec.seed)
    return _GENERATORS[spec.design](spec, rng)


def truth_to_json(truth, include_factors=False):
    """JSON-serializable dict of the generating parameters."""

    def arr(x):
        if x is None:
            return None
        if isinstance(x, (list, tuple)):
            return [arr(e) for e in x]
        return np.asarray(x).tolist()

    out = {
        "design": truth.design,
        "beta_true": arr(truth.beta_true),
        "alpha_true": arr(truth.alpha_true),
        "gamma_true": arr(truth.gamma_true),
        "nonnull_sets": arr(truth.nonnull_sets),
        "e_y2": truth.e_y2,
        "e_x2": arr(truth.e_x2),
    }
    if include_factors:
        out["U_true"] = arr(truth.U_true)
    return out


def write_truth(truth, path, include_factors=False):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth_to_json(truth, include_factors), fh, indent=1)
        fh.write("\n")
