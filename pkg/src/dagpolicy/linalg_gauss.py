"""Small dense Gaussian machinery.

Everything here works on labelled multivariate normals with at most a handful
of variables. Covariances are allowed to be singular: equilibrium joints
always are, because the policy is deterministic in ``theta`` and the forecast
is deterministic in the signal. Every inversion therefore goes through a
Moore-Penrose pseudoinverse built from a symmetric eigendecomposition.

Sampling uses numpy's ``PCG64`` bit generator (``numpy.random.default_rng``)
and its ziggurat ``standard_normal`` transform, mapped through an
eigendecomposition square-root factor of the covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

PINV_RTOL = 1e-12
PSD_RTOL = 1e-10


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def psd_pinv(mat: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Pseudoinverse of a symmetric PSD matrix.

    Eigenvalues below ``rtol * max|eigenvalue|`` are treated as zero.
    """
    mat = np.asarray(mat, dtype=float)
    return _sym_pinv(0.5 * (mat + mat.T), rtol)


def _sym_pinv(mat: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    # Caller guarantees symmetry; this sits in the solver's inner loop.
    if mat.size == 0:
        return np.zeros_like(mat)
    if mat.shape == (1, 1):
        # A scalar has no relative cutoff: it is either zero or inverted.
        x = mat[0, 0]
        return np.array([[1.0 / x]]) if x != 0.0 else np.zeros((1, 1))
    w, v = np.linalg.eigh(mat)
    top = abs(w).max()
    if top == 0.0:
        return np.zeros_like(mat)
    inv = np.divide(1.0, w, out=np.zeros_like(w), where=abs(w) > rtol * top)
    return (v * inv) @ v.T


def psd_sqrt(mat: np.ndarray, rtol: float = PINV_RTOL) -> np.ndarray:
    """Square-root factor ``R`` with ``R @ R.T == mat``.

    Eigenvalues below ``rtol * max|eigenvalue|`` (round-off on singular
    directions, including small negatives) are set to zero so draws stay on
    the support.
    """
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    if not w.size:
        return v
    top = float(np.max(np.abs(w)))
    if w.min() < -PSD_RTOL * top:
        raise ValueError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.where(w > rtol * top, w, 0.0)
    return v * np.sqrt(w)


@dataclass(frozen=True, eq=False)
class GaussianJoint:
    """Multivariate normal over an ordered list of labels."""

    vars: tuple[str, ...]
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        labels = tuple(self.vars)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        k = len(labels)
        if mean.shape != (k,) or cov.shape != (k, k):
            raise ValueError(
                f"shape mismatch: {k} labels, mean {mean.shape}, cov {cov.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("mean and covariance must be finite")
        cov = 0.5 * (cov + cov.T)
        if k:
            w = np.linalg.eigvalsh(cov)
            top = float(np.max(np.abs(w)))
            if w.min() < -PSD_RTOL * top:
                raise ValueError(
                    f"covariance is not PSD (min eigenvalue {w.min():.3e})"
                )
        object.__setattr__(self, "vars", labels)
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "cov", _readonly(cov))

    @classmethod
    def from_factor(cls, labels, mean, load, weights) -> "GaussianJoint":
        """Joint with covariance ``load @ diag(weights) @ load.T``.

        The factored form is PSD by construction when ``weights >= 0``, so the
        eigenvalue check of the general constructor is skipped.
        """
        load = np.asarray(load, dtype=float)
        weights = np.asarray(weights, dtype=float)
        mean = np.array(mean, dtype=float).reshape(-1)
        k = len(labels)
        if load.shape[0] != k or mean.shape != (k,) or np.any(weights < 0):
            raise ValueError("bad factor: shapes must agree and weights be nonnegative")
        cov = (load * weights) @ load.T
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise ValueError("mean and covariance must be finite")
        if len(set(labels)) != k:
            raise ValueError(f"duplicate labels in {tuple(labels)}")
        obj = object.__new__(cls)
        object.__setattr__(obj, "vars", tuple(labels))
        object.__setattr__(obj, "mean", _readonly(mean))
        object.__setattr__(obj, "cov", _readonly(0.5 * (cov + cov.T)))
        return obj

    def __len__(self) -> int:
        return len(self.vars)

    def index(self, labels: Iterable[str]) -> list[int]:
        pos = {v: i for i, v in enumerate(self.vars)}
        out = []
        for lab in labels:
            if lab not in pos:
                raise ValueError(f"unknown variable {lab!r}; have {self.vars}")
            out.append(pos[lab])
        return out

    def marginal(self, labels: Sequence[str]) -> "GaussianJoint":
        idx = self.index(labels)
        return GaussianJoint(
            tuple(labels), self.mean[idx], self.cov[np.ix_(idx, idx)]
        )

    def var(self, label: str) -> float:
        i = self.index([label])[0]
        return float(self.cov[i, i])

    def covariance(self, x: str, y: str) -> float:
        i, j = self.index([x, y])
        return float(self.cov[i, j])

    def max_distance(self, other: "GaussianJoint") -> float:
        """Max-norm distance in mean and covariance after aligning labels."""
        if set(self.vars) != set(other.vars):
            raise ValueError(f"label sets differ: {self.vars} vs {other.vars}")
        o = other.marginal(self.vars)
        return float(
            max(
                np.max(np.abs(self.mean - o.mean), initial=0.0),
                np.max(np.abs(self.cov - o.cov), initial=0.0),
            )
        )


@dataclass(frozen=True, eq=False)
class AffineFunction:
    """``f(x) = coefficients @ x + intercept`` over named inputs."""

    inputs: tuple[str, ...]
    coefficients: np.ndarray
    intercept: float

    def __post_init__(self):
        inputs = tuple(self.inputs)
        coef = np.array(self.coefficients, dtype=float).reshape(-1)
        if coef.shape != (len(inputs),):
            raise ValueError(
                f"{len(inputs)} inputs but {coef.size} coefficients"
            )
        intercept = float(self.intercept)
        if not (np.isfinite(coef).all() and math.isfinite(intercept)):
            raise ValueError("affine function has non-finite entries")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "coefficients", _readonly(coef))
        object.__setattr__(self, "intercept", intercept)

    def coefficient(self, label: str) -> float:
        return float(self.coefficients[self.inputs.index(label)])

    def __call__(self, x):
        """Evaluate at a mapping ``{label: value}`` or an array whose last
        axis follows ``inputs``."""
        if isinstance(x, Mapping):
            x = np.stack([np.asarray(x[k], dtype=float) for k in self.inputs], -1)
        x = np.asarray(x, dtype=float)
        return x @ self.coefficients + self.intercept


def regress(joint: "GaussianJoint", ti: Sequence[int], gi: Sequence[int]):
    """Array form of :func:`condition` on index lists: ``(coef, intercept, resid)``."""
    cov, mean = joint.cov, joint.mean
    if len(ti) == 1 and len(gi) <= 1:
        # Scalar regression, same cutoff semantics as the 1x1 pseudoinverse.
        i = ti[0]
        if not gi:
            return np.zeros((1, 0)), mean[[i]], cov[[i]][:, [i]]
        g = gi[0]
        s_gg, s_tg = float(cov[g, g]), float(cov[i, g])
        b = s_tg / s_gg if s_gg != 0.0 else 0.0
        resid = float(cov[i, i]) - b * s_tg
        return np.array([[b]]), np.array([float(mean[i]) - b * float(mean[g])]), np.array([[resid]])
    rows = cov.take(ti, 0)
    s_tg = rows.take(gi, 1)
    coef = s_tg @ _sym_pinv(cov.take(gi, 0).take(gi, 1))
    intercept = mean.take(ti) - coef @ mean.take(gi)
    resid = rows.take(ti, 1) - coef @ s_tg.T
    return coef, intercept, 0.5 * (resid + resid.T)


def condition(
    joint: GaussianJoint, targets: Sequence[str], given: Sequence[str]
) -> tuple[dict[str, AffineFunction], np.ndarray]:
    """Conditional mean maps ``E[targets | given]`` and residual covariance.

    Uses ``S_tg pinv(S_gg)`` for the regression coefficients, so collinear or
    degenerate conditioning sets return the minimum-norm coefficients; the
    predicted values on the support are unique regardless.
    """
    targets = list(targets)
    given = list(given)
    coef, intercept, resid = regress(joint, joint.index(targets), joint.index(given))
    maps = {
        t: AffineFunction(tuple(given), coef[k], intercept[k])
        for k, t in enumerate(targets)
    }
    return maps, resid


def signal_extraction_weight(var_x: float, var_z: float) -> float:
    """Slope of ``E[X | X + Z]`` for independent zero-mean normals."""
    if var_x < 0 or var_z < 0:
        raise ValueError("variances must be nonnegative")
    total = var_x + var_z
    if total <= 0:
        raise ValueError("at least one variance must be positive")
    return var_x / total


def sample(joint: GaussianJoint, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` rows from ``joint`` (columns follow ``joint.vars``).

    Deterministic given ``seed``: PCG64 via ``default_rng``, ziggurat normals,
    eigendecomposition square-root factor of the covariance.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, len(joint)))
    root = psd_sqrt(np.asarray(joint.cov))
    return joint.mean + z @ root.T
