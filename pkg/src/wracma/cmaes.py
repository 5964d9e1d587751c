"""(mu/mu_w, lambda) CMA-ES with an ask/tell interface and box handling.

The sampler draws raw candidates from N(mean, Sigma), reflects them into the
box by mirroring, and keeps the raw samples so that `tell` updates the
distribution from what was actually drawn.  The coordinate-wise standard
deviation is capped at a configurable fraction of the box width after every
update, which keeps most of the sampling mass inside the box.

The full covariance (including the global step-size scale) is exposed as a
single matrix `covariance`; internally a (sigma, C) split is used for the
standard cumulative step-size adaptation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, CovarianceError


def default_pop_size(dim: int) -> int:
    """Default population size 4 + floor(3 ln dim)."""
    return 4 + int(3 * math.log(dim))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lower, upper], lower_i < upper_i coordinate-wise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        up = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if lo.shape != up.shape or lo.ndim != 1:
            raise ContractError("box bounds must be 1-D arrays of equal length")
        if not np.all(lo < up):
            raise ContractError("box requires lower < upper in every coordinate")
        cube = bool(np.all(lo == lo[0]) and np.all(up == up[0]))
        object.__setattr__(self, "_cube", cube)

    @classmethod
    def cube(cls, dim: int, lower: float, upper: float) -> "Box":
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, points: np.ndarray) -> bool:
        pts = np.asarray(points)
        if pts.size == 0:
            return True
        if self._cube:  # single reduction pair; also rejects NaN
            return bool(pts.min() >= self.lower[0] and pts.max() <= self.upper[0])
        return bool(np.all(pts >= self.lower) and np.all(pts <= self.upper))

    def clamp(self, points: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(points, self.lower), self.upper)

    def uniform(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)


def mirror(v: np.ndarray, box: Box) -> np.ndarray:
    """Reflect `v` into the box with a triangle wave of period 2*(upper-lower).

    Points already inside are returned unchanged (bit for bit); the map is
    idempotent and its image is exactly [lower, upper].  Works on a single
    vector or a batch of rows.
    """
    v = np.asarray(v, dtype=float)
    width = box.width
    reflected = box.upper - np.abs(np.mod(v - box.lower, 2.0 * width) - width)
    # clip guards against rounding just outside the box
    reflected = np.clip(reflected, box.lower, box.upper)
    return np.where((v >= box.lower) & (v <= box.upper), v, reflected)


class SearchDistribution:
    """State of one CMA-ES instance.

    Parameters
    ----------
    mean : array_like
        Initial mean vector.
    step_size : float
        Initial global step size; the initial covariance is step_size**2 * I.
    pop_size : int, optional
        Population size lambda >= 2; defaults to 4 + floor(3 ln dim).
    label : str
        Name used in factorization error messages.
    std_cap_fraction : float
        Coordinate-std cap as a fraction of the box width (see cap_std).
        Half width by default; the min-max solvers configure a quarter,
        which keeps the capped-and-mirrored distribution informative
        instead of effectively uniform over the box.
    """

    def __init__(self, mean, step_size, pop_size=None, label="cma", std_cap_fraction=0.5):
        self.mean = np.array(mean, dtype=float)
        if self.mean.ndim != 1 or self.mean.size < 1:
            raise ContractError("mean must be a non-empty 1-D vector")
        self.dim = self.mean.size
        if step_size <= 0:
            raise ContractError("step_size must be positive")
        self.label = label
        if not 0.0 < std_cap_fraction <= 1.0:
            raise ContractError("std_cap_fraction must be in (0, 1]")
        self.std_cap_fraction = float(std_cap_fraction)
        self.pop_size = int(pop_size) if pop_size is not None else default_pop_size(self.dim)
        if self.pop_size < 2:
            raise ContractError("pop_size must be at least 2")

        d, lam = self.dim, self.pop_size
        self.mu = lam // 2
        w = np.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mu_eff = 1.0 / np.sum(self.weights**2)

        self.c_sigma = (self.mu_eff + 2.0) / (d + self.mu_eff + 5.0)
        self.d_sigma = (
            1.0 + 2.0 * max(0.0, math.sqrt((self.mu_eff - 1.0) / (d + 1.0)) - 1.0) + self.c_sigma
        )
        self.c_c = (4.0 + self.mu_eff / d) / (d + 4.0 + 2.0 * self.mu_eff / d)
        self.c_1 = 2.0 / ((d + 1.3) ** 2 + self.mu_eff)
        self.c_mu = min(
            1.0 - self.c_1,
            2.0 * (self.mu_eff - 2.0 + 1.0 / self.mu_eff) / ((d + 2.0) ** 2 + self.mu_eff),
        )
        self.chi_n = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))

        # dynamic state (theta): evolution paths and iteration counter
        self.sigma = float(step_size)
        self.C = np.eye(d)
        self.p_sigma = np.zeros(d)
        self.p_c = np.zeros(d)
        self.iteration = 0

        self._stale = True
        self._B = None
        self._eig_std = None
        self._inv_sqrt = None
        self._pending = None  # (raw samples, mirrored candidates, box) of last ask

    # -- covariance views ------------------------------------------------

    @property
    def covariance(self) -> np.ndarray:
        """Full covariance Sigma = sigma^2 * C (copy)."""
        return (self.sigma**2) * self.C

    @property
    def coordinate_std(self) -> np.ndarray:
        """sqrt(diag(Sigma)) per coordinate."""
        return self.sigma * np.sqrt(np.diag(self.C))

    def stds_below(self, threshold: float) -> bool:
        """True when every coordinate std is strictly below `threshold`."""
        diag = np.einsum("ii->i", self.C)
        return bool(float(diag.max()) * self.sigma * self.sigma < threshold * threshold)

    def _refresh(self):
        if not self._stale:
            return
        self.C = 0.5 * (self.C + self.C.T)
        try:
            eigvals, B = np.linalg.eigh(self.C)
        except np.linalg.LinAlgError as exc:
            raise CovarianceError(f"covariance factorization failed for '{self.label}'") from exc
        if (
            not np.all(np.isfinite(eigvals))
            or eigvals[-1] <= 0.0
            or eigvals[0] < -1e-12 * eigvals[-1]
            or not np.isfinite(self.sigma)
        ):
            raise CovarianceError(
                f"covariance of '{self.label}' is not positive definite "
                f"(min eigenvalue {eigvals[0]:.3e}, sigma {self.sigma:.3e})"
            )
        floor = eigvals[-1] * 1e-14
        if eigvals[0] < floor:
            # condition-number guard: eigenvalues this far below the dominant
            # scale are pure roundoff; flooring them keeps Sigma factorizable
            eigvals = np.maximum(eigvals, floor)
            self.C = (B * eigvals) @ B.T
        # re-split Sigma = sigma^2 C so that det(C) = 1.  Sigma is untouched;
        # sigma becomes the geometric-mean scale, which together with the
        # coordinate-std cap keeps both split factors bounded (Hadamard), so
        # step-size excursions under noisy rankings cannot accumulate in a
        # degenerate (huge sigma, vanishing C) representation.
        g = math.exp(np.log(eigvals).mean() / 2.0)
        if not 0.999 < g < 1.001:
            eigvals = eigvals / (g * g)
            self.C = self.C / (g * g)
            self.p_c = self.p_c / g
            self.sigma *= g
        self._B = B
        self._eig_std = np.sqrt(eigvals)
        self._inv_sqrt = (B / self._eig_std) @ B.T
        self._stale = False

    # -- ask / tell ------------------------------------------------------

    def ask(self, box: Box | None, rng: np.random.Generator) -> np.ndarray:
        """Sample pop_size candidates from N(mean, Sigma), mirrored into `box`.

        Returns a (pop_size, dim) array.  With box=None the raw samples are
        returned unmapped.  Raw samples are retained for the next `tell`.
        """
        if box is not None and box.dim != self.dim:
            raise ContractError("box dimension does not match distribution")
        self._refresh()
        z = rng.standard_normal((self.pop_size, self.dim))
        raw = self.mean + self.sigma * ((z * self._eig_std) @ self._B.T)
        if box is None or box.contains(raw):
            cand = raw
        else:
            cand = mirror(raw, box)
        self._pending = (raw, cand, box)
        return cand

    def tell(self, candidates: np.ndarray, ranks) -> None:
        """Update mean, covariance and adaptation state from ranked candidates.

        `candidates` must be the array returned by the most recent `ask`, in
        the same order; `ranks` is a permutation of 1..pop_size with rank 1
        the best.  The update uses the retained raw (pre-mirror) samples.
        """
        if self._pending is None:
            raise ContractError("tell called without a pending ask")
        raw, cand, box = self._pending
        if candidates is not cand:
            candidates = np.asarray(candidates, dtype=float)
            if candidates.shape != cand.shape or not np.array_equal(candidates, cand):
                raise ContractError("candidates do not match the most recent ask")
        ranks = np.asarray(ranks)
        if ranks.shape != (self.pop_size,) or not np.array_equal(
            np.sort(ranks), np.arange(1, self.pop_size + 1)
        ):
            raise ContractError("ranks must be a permutation of 1..pop_size")

        order = np.argsort(ranks)
        y = (raw[order[: self.mu]] - self.mean) / self.sigma
        y_w = self.weights @ y
        self.mean = self.mean + self.sigma * y_w

        cs, cc = self.c_sigma, self.c_c
        self.p_sigma = (1.0 - cs) * self.p_sigma + math.sqrt(
            cs * (2.0 - cs) * self.mu_eff
        ) * (self._inv_sqrt @ y_w)
        ps_norm = math.sqrt(float(self.p_sigma @ self.p_sigma))
        h_sig = ps_norm / math.sqrt(
            1.0 - (1.0 - cs) ** (2.0 * (self.iteration + 1))
        ) < (1.4 + 2.0 / (self.dim + 1.0)) * self.chi_n
        self.p_c = (1.0 - cc) * self.p_c + (
            math.sqrt(cc * (2.0 - cc) * self.mu_eff) * y_w if h_sig else 0.0
        )

        rank_mu = (y.T * self.weights) @ y
        self.C = (
            (1.0 - self.c_1 - self.c_mu) * self.C
            + self.c_1
            * (np.outer(self.p_c, self.p_c) + (0.0 if h_sig else cc * (2.0 - cc)) * self.C)
            + self.c_mu * rank_mu
        )
        self.sigma *= math.exp((cs / self.d_sigma) * (ps_norm / self.chi_n - 1.0))

        self.iteration += 1
        self._pending = None
        self._stale = True
        if box is not None:
            self.cap_std(box)
            # translate the mean by the mirror period when it has drifted out;
            # the mirrored sampling distribution is invariant under this shift
            # and the mean stays where reflection arithmetic is well conditioned
            lo = box.lower
            period = 2.0 * box.width
            if np.any(self.mean < lo) or np.any(self.mean >= lo + period):
                self.mean = lo + np.mod(self.mean - lo, period)

    # -- box handling ----------------------------------------------------

    def cap_std(self, box: Box) -> None:
        """Cap each coordinate std at std_cap_fraction of the box width.

        Applies a diagonal similarity D Sigma D with
        D_l = min(1, bound_l / std_l), leaving uncapped coordinates'
        marginal standard deviations untouched.
        """
        bound = self.std_cap_fraction * box.width
        variances = np.einsum("ii->i", self.C) * (self.sigma * self.sigma)
        if np.any(variances > bound * bound):
            factors = np.minimum(1.0, bound / np.sqrt(variances))
            self.scale_stds(factors)

    def scale_stds(self, factors: np.ndarray) -> None:
        """Apply the diagonal similarity Sigma <- D Sigma D, D = diag(factors).

        The geometric mean of the factors is absorbed into the step size so
        that repeated capping cannot drive the (sigma, C) split to float
        extremes; the combined covariance is unchanged either way.
        """
        factors = np.asarray(factors, dtype=float)
        g = float(np.exp(np.log(factors).mean()))
        self.C = self.C * (np.outer(factors, factors) / (g * g))
        self.p_c = self.p_c / g
        self.sigma *= g
        self._stale = True

    # -- copies ------------------------------------------------------------

    def clone(self, fresh_adaptation: bool = True, label: str | None = None) -> "SearchDistribution":
        """Independent copy of mean and covariance.

        With fresh_adaptation the evolution paths and iteration counter are
        re-initialized (warm-start semantics); otherwise the full dynamic
        state is copied bit for bit.
        """
        dup = SearchDistribution(
            self.mean.copy(),
            1.0,
            pop_size=self.pop_size,
            label=label if label is not None else self.label,
            std_cap_fraction=self.std_cap_fraction,
        )
        dup.sigma = self.sigma
        dup.C = self.C.copy()
        if not fresh_adaptation:
            dup.p_sigma = self.p_sigma.copy()
            dup.p_c = self.p_c.copy()
            dup.iteration = self.iteration
        dup._stale = True
        return dup
