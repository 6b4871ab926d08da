"""Monte Carlo check that the intra-modal diversity measure and the
cross-modal redundancy measure are uncorrelated under orthogonal
sub-space projections.

Token sets are drawn i.i.d. standard normal in the ambient space; the two
projection bases are column-orthonormal and mutually orthogonal, which
makes the projected coordinates independent and the sample covariance of
the two measures statistically indistinguishable from zero. A negative
control reuses the visual basis for both measures and feeds the visual
tokens back in as text, forcing shared variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVector, InvalidPlan, OrthogonalityViolated
from .tensors import NORM_EPS

ORTHO_TOL = 1e-10
KERNELS = ("cosine", "shifted")


@dataclass(frozen=True)
class LemmaTrial:
    """Shape of one covariance experiment: token counts, dimensions, kernel, seed."""

    n_visual: int = 8
    n_text: int = 4
    ambient_dim: int = 16
    visual_subdim: int = 4
    text_subdim: int = 4
    kernel: str = "cosine"
    seed: int = 0

    def __post_init__(self):
        if self.n_visual < 2 or self.n_text < 1:
            raise InvalidPlan("LemmaTrial: need n_visual >= 2 and n_text >= 1")
        if self.visual_subdim + self.text_subdim > self.ambient_dim:
            raise InvalidPlan("LemmaTrial: sub-space dims exceed ambient dimension")
        if self.kernel not in KERNELS:
            raise InvalidPlan(f"LemmaTrial: kernel must be one of {KERNELS}")


def make_orthogonal_bases(rng: np.random.Generator, ambient_dim: int,
                          visual_subdim: int, text_subdim: int) -> tuple[np.ndarray, np.ndarray]:
    """Mutually orthogonal column-orthonormal bases via QR of a Gaussian draw."""
    q, _ = np.linalg.qr(rng.standard_normal((ambient_dim, visual_subdim + text_subdim)))
    return q[:, :visual_subdim].copy(), q[:, visual_subdim:].copy()


def check_orthogonality(w_v: np.ndarray, w_t: np.ndarray) -> None:
    """Abort if either basis is not orthonormal or the bases are not mutually
    orthogonal within 1e-10."""
    for name, w in (("W_V", w_v), ("W_T", w_t)):
        gram = w.T @ w
        if np.max(np.abs(gram - np.eye(w.shape[1]))) > ORTHO_TOL:
            raise OrthogonalityViolated(f"{name} is not column-orthonormal within {ORTHO_TOL}")
    cross = np.max(np.abs(w_v.T @ w_t))
    if cross > ORTHO_TOL:
        raise OrthogonalityViolated(
            f"bases are not mutually orthogonal: max |W_V^T W_T| = {cross:.3e}")


def _kernel(cos: np.ndarray, kernel: str) -> np.ndarray:
    if kernel == "shifted":
        return (1.0 + cos) / 2.0
    return cos


def _normalize(rows: np.ndarray, what: str) -> np.ndarray:
    norms = np.sqrt(np.einsum("...ij,...ij->...i", rows, rows))
    if np.any(norms <= NORM_EPS):
        raise DegenerateVector(f"{what}: projection collapsed a token to near-zero norm")
    return rows / norms[..., None]


def diversity_measure(v: np.ndarray, w_v: np.ndarray, kernel: str = "cosine") -> float:
    """Mean pairwise kernel over projected tokens, diagonal excluded."""
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[0]
    if n < 2:
        raise InvalidPlan("diversity_measure: need at least two tokens")
    proj = _normalize(v @ w_v, "diversity_measure")
    gram = _kernel(np.clip(proj @ proj.T, -1.0, 1.0), kernel)
    off_sum = gram.sum() - np.trace(gram)
    return float(off_sum / (n * (n - 1)))


def cross_redundancy_measure(v: np.ndarray, t_tokens: np.ndarray,
                             w_t: np.ndarray, kernel: str = "cosine") -> float:
    """Mean over visual tokens of the mean kernel to all projected text tokens."""
    v = np.asarray(v, dtype=np.float64)
    t_tokens = np.asarray(t_tokens, dtype=np.float64)
    if v.shape[0] < 1 or t_tokens.shape[0] < 1:
        raise InvalidPlan("cross_redundancy_measure: need at least one token per side")
    pv = _normalize(v @ w_t, "cross_redundancy_measure (visual)")
    pt = _normalize(t_tokens @ w_t, "cross_redundancy_measure (text)")
    cross = _kernel(np.clip(pv @ pt.T, -1.0, 1.0), kernel)
    return float(cross.mean())


def _measure_batch(v: np.ndarray, t_tokens: np.ndarray, w_v: np.ndarray,
                   w_t: np.ndarray, kernel: str) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized (diversity, redundancy) pairs for a batch of trials."""
    n = v.shape[1]
    pv = _normalize(v @ w_v, "diversity batch")
    gram = _kernel(np.clip(np.einsum("bik,bjk->bij", pv, pv), -1.0, 1.0), kernel)
    diag = np.einsum("bii->b", gram)
    d = (gram.sum(axis=(1, 2)) - diag) / (n * (n - 1))

    pvt = _normalize(v @ w_t, "redundancy batch (visual)")
    pt = _normalize(t_tokens @ w_t, "redundancy batch (text)")
    cross = _kernel(np.clip(np.einsum("bik,bjk->bij", pvt, pt), -1.0, 1.0), kernel)
    r = cross.mean(axis=(1, 2))
    return d, r


def covariance_experiment(
    trial: LemmaTrial,
    num_trials: int,
    negative_control: bool = False,
    bootstrap_resamples: int = 1000,
    chunk: int = 10000,
) -> dict:
    """Sample covariance of the two measures over independent trials, with a
    bootstrap standard error. Deterministic for a fixed trial seed.

    ``negative_control=True`` deliberately breaks the orthogonality premise:
    the text basis is replaced by the visual basis and the text set by the
    first tokens of the visual set, so both measures are driven by the same
    projected coordinates.
    """
    if num_trials < 100:
        raise InvalidPlan(f"covariance_experiment: need >= 100 trials, got {num_trials}")
    if bootstrap_resamples < 2:
        raise InvalidPlan("covariance_experiment: need >= 2 bootstrap resamples")

    rng = np.random.default_rng(trial.seed)
    w_v, w_t = make_orthogonal_bases(rng, trial.ambient_dim, trial.visual_subdim, trial.text_subdim)
    if negative_control:
        if trial.text_subdim != trial.visual_subdim:
            raise InvalidPlan("negative control requires matching sub-space dims")
        if trial.n_text > trial.n_visual:
            raise InvalidPlan("negative control requires n_text <= n_visual")
        w_t = w_v
    else:
        check_orthogonality(w_v, w_t)

    d_all = np.empty(num_trials)
    r_all = np.empty(num_trials)
    done = 0
    while done < num_trials:
        b = min(chunk, num_trials - done)
        v = rng.standard_normal((b, trial.n_visual, trial.ambient_dim))
        t_tokens = rng.standard_normal((b, trial.n_text, trial.ambient_dim))
        if negative_control:
            t_tokens = v[:, : trial.n_text, :]
        d, r = _measure_batch(v, t_tokens, w_v, w_t, trial.kernel)
        d_all[done:done + b] = d
        r_all[done:done + b] = r
        done += b

    dm = d_all - d_all.mean()
    rm = r_all - r_all.mean()
    sample_cov = float((dm * rm).sum() / (num_trials - 1))

    boot = np.empty(bootstrap_resamples)
    for i in range(bootstrap_resamples):
        idx = rng.integers(0, num_trials, size=num_trials)
        db = d_all[idx]
        rb = r_all[idx]
        boot[i] = ((db - db.mean()) * (rb - rb.mean())).sum() / (num_trials - 1)
    standard_error = float(boot.std(ddof=1))

    return {
        "sample_covariance": sample_cov,
        "standard_error": standard_error,
        "num_trials": num_trials,
        "diversity_mean": float(d_all.mean()),
        "redundancy_mean": float(r_all.mean()),
        "negative_control": negative_control,
        "kernel": trial.kernel,
        "seed": trial.seed,
        "within_3se": bool(abs(sample_cov) <= 3.0 * standard_error),
    }
