"""Type distributions: marginals, exchangeable value models, order statistics.

A value model describes n >= 2 symmetric bidders.  It is either IID
draws from a single marginal, or an exchangeable mixture: first a latent
component is drawn, then all n values are drawn IID from that
component's marginal.  Conditioning one bidder's value updates the
component posterior, which is what makes mixture win probabilities
value-dependent.
"""

import math

import numpy as np
from scipy import stats

from .errors import ConfigError, DomainError, SingularHazard

#: Win probabilities below this are treated as an exact zero for hazards.
_Q_FLOOR = 1e-300
#: Slack allowed when checking that a point lies in the support.
_EDGE_SLACK = 1e-9


class MarginalDist:
    """One bidder's value distribution on a closed interval [lo, hi]."""

    def __init__(self, lo, hi):
        lo, hi = float(lo), float(hi)
        if not (lo < hi and math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigError(f"support must be a finite interval, got [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    def cdf(self, t):
        raise NotImplementedError

    def pdf(self, t):
        raise NotImplementedError

    def ppf(self, q):
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError


class UniformDist(MarginalDist):
    def cdf(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.full_like(t, 1.0 / (self.hi - self.lo))

    def ppf(self, q):
        return self.lo + (self.hi - self.lo) * np.asarray(q, dtype=float)

    def to_config(self):
        return {"family": "uniform"}

    def __repr__(self):
        return f"UniformDist({self.lo}, {self.hi})"


class PowerDist(MarginalDist):
    """CDF ((t-lo)/(hi-lo))^k for k > 0; density k z^(k-1) rescaled."""

    def __init__(self, k, lo, hi):
        super().__init__(lo, hi)
        k = float(k)
        if k <= 0:
            raise ConfigError(f"power exponent must be > 0, got {k}")
        self.k = k

    def _z(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def cdf(self, t):
        return np.power(self._z(t), self.k)

    def pdf(self, t):
        z = self._z(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            # k < 1 genuinely diverges at the lower edge; callers that
            # condition there fall back to a point just inside
            out = self.k * np.power(z, self.k - 1.0) / (self.hi - self.lo)
        return out

    def ppf(self, q):
        return self.lo + (self.hi - self.lo) * np.power(np.asarray(q, dtype=float), 1.0 / self.k)

    def to_config(self):
        return {"family": "power", "k": self.k}

    def __repr__(self):
        return f"PowerDist(k={self.k}, lo={self.lo}, hi={self.hi})"


class TruncatedNormalDist(MarginalDist):
    def __init__(self, mu, sigma, lo, hi):
        super().__init__(lo, hi)
        sigma = float(sigma)
        if sigma <= 0:
            raise ConfigError(f"sigma must be > 0, got {sigma}")
        self.mu = float(mu)
        self.sigma = sigma
        a = (self.lo - self.mu) / sigma
        b = (self.hi - self.mu) / sigma
        self._frozen = stats.truncnorm(a, b, loc=self.mu, scale=sigma)

    def cdf(self, t):
        return self._frozen.cdf(np.asarray(t, dtype=float))

    def pdf(self, t):
        return self._frozen.pdf(np.asarray(t, dtype=float))

    def ppf(self, q):
        return self._frozen.ppf(np.asarray(q, dtype=float))

    def to_config(self):
        return {"family": "truncated_normal", "mu": self.mu, "sigma": self.sigma}

    def __repr__(self):
        return (
            f"TruncatedNormalDist(mu={self.mu}, sigma={self.sigma}, "
            f"lo={self.lo}, hi={self.hi})"
        )


class ValueModel:
    """Exchangeable model for n bidders' values on a common support.

    ``components`` is a sequence of (weight, MarginalDist) pairs; a
    single pair is the IID special case.  All marginals must share the
    same support interval.
    """

    def __init__(self, components, n):
        if not isinstance(n, (int, np.integer)) or n < 2:
            raise ConfigError(f"number of bidders must be an integer >= 2, got {n}")
        comps = [(float(w), d) for w, d in components]
        if not comps:
            raise ConfigError("value model needs at least one component")
        if any(w <= 0 for w, _ in comps):
            raise ConfigError("component weights must be positive")
        total = sum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"component weights must sum to 1, got {total}")
        lo, hi = comps[0][1].lo, comps[0][1].hi
        for _, d in comps:
            if abs(d.lo - lo) > 1e-12 or abs(d.hi - hi) > 1e-12:
                raise ConfigError("all mixture components must share one support")
        self.n = int(n)
        self.weights = np.array([w / total for w, _ in comps])
        self.dists = [d for _, d in comps]
        self.lo = lo
        self.hi = hi

    @classmethod
    def iid(cls, dist, n):
        return cls([(1.0, dist)], n)

    @classmethod
    def mixture(cls, components, n):
        return cls(components, n)

    @property
    def support(self):
        return (self.lo, self.hi)

    @property
    def span(self):
        return self.hi - self.lo

    @property
    def is_iid(self):
        return len(self.dists) == 1

    def _check_in_support(self, t, what="point"):
        arr = np.asarray(t, dtype=float)
        slack = _EDGE_SLACK * self.span
        if np.any(arr < self.lo - slack) or np.any(arr > self.hi + slack):
            raise DomainError(
                f"{what} outside support [{self.lo:g}, {self.hi:g}]"
            )
        return np.clip(arr, self.lo, self.hi)

    def marginal_cdf(self, t):
        t = self._check_in_support(t)
        out = sum(w * d.cdf(t) for w, d in zip(self.weights, self.dists))
        return float(out) if np.ndim(out) == 0 else out

    def marginal_pdf(self, t):
        t = self._check_in_support(t)
        out = sum(w * d.pdf(t) for w, d in zip(self.weights, self.dists))
        return float(out) if np.ndim(out) == 0 else out

    def posterior(self, v):
        """Component weights conditional on observing one value v."""
        v = float(self._check_in_support(v, "conditioning value"))
        if self.is_iid:
            return np.array([1.0])
        dens = np.array([float(d.pdf(v)) for d in self.dists])
        raw = self.weights * dens
        total = raw.sum()
        if total <= 0.0 or not np.isfinite(total):
            # densities can vanish (or blow up) right at a support edge;
            # use the limit from just inside instead
            eps = 1e-9 * self.span
            v_in = min(max(v, self.lo + eps), self.hi - eps)
            dens = np.array([float(d.pdf(v_in)) for d in self.dists])
            raw = self.weights * dens
            total = raw.sum()
            if total <= 0.0 or not np.isfinite(total):
                raise DomainError(f"component densities degenerate at v={v:g}")
        return raw / total

    def win_prob(self, v, t):
        """P(highest of the other n-1 values <= t | own value v)."""
        post = self.posterior(v)
        t = self._check_in_support(t, "threshold")
        out = sum(
            p * np.power(d.cdf(t), self.n - 1) for p, d in zip(post, self.dists)
        )
        return float(out) if np.ndim(out) == 0 else out

    def top_rival_density(self, v, z):
        """Density of the highest rival value at z, conditional on own value v."""
        post = self.posterior(v)
        z = self._check_in_support(z, "rival value")
        out = sum(
            p * (self.n - 1) * np.power(d.cdf(z), self.n - 2) * d.pdf(z)
            for p, d in zip(post, self.dists)
        )
        return float(out) if np.ndim(out) == 0 else out

    def hazard(self, v):
        """d/dt log P(win | own value v, threshold t) at t = v.

        Closed form: the posterior-weighted top-rival density divided by
        the posterior-weighted win probability at t = v.
        """
        v = float(self._check_in_support(v, "value"))
        q = self.win_prob(v, v)
        if q < _Q_FLOOR:
            raise SingularHazard(f"win probability vanishes at v={v:g}")
        return self.top_rival_density(v, v) / q

    def hazard_fd(self, v, step=None):
        """Finite-difference hazard, for cross-checking the closed form."""
        v = float(v)
        h = step if step is not None else 1e-6 * self.span
        q = self.win_prob(v, v)
        if q < _Q_FLOOR:
            raise SingularHazard(f"win probability vanishes at v={v:g}")
        up = self.win_prob(v, min(v + h, self.hi))
        dn = self.win_prob(v, max(v - h, self.lo))
        return (up - dn) / ((min(v + h, self.hi) - max(v - h, self.lo)) * q)

    def kth_win_prob(self, units, v, t):
        """P(k-th highest rival value <= t | own value v) for k = units.

        Equals the probability that fewer than ``units`` of the n-1
        rivals exceed t.  units = 1 reduces to :meth:`win_prob`.
        """
        if not (1 <= units <= self.n - 1):
            raise ConfigError(
                f"order statistic index must be in [1, {self.n - 1}], got {units}"
            )
        post = self.posterior(v)
        t = self._check_in_support(t, "threshold")
        m = self.n - 1
        out = 0.0
        for p, d in zip(post, self.dists):
            F = d.cdf(t)
            tail = sum(
                math.comb(m, j) * np.power(1.0 - F, j) * np.power(F, m - j)
                for j in range(units)
            )
            out = out + p * tail
        return float(out) if np.ndim(out) == 0 else out

    def kth_rival_density(self, units, v, z):
        """Density of the k-th highest rival value at z, for k = units.

        The derivative of :meth:`kth_win_prob` in its threshold;
        units = 1 reduces to :meth:`top_rival_density`.
        """
        if not (1 <= units <= self.n - 1):
            raise ConfigError(
                f"order statistic index must be in [1, {self.n - 1}], got {units}"
            )
        post = self.posterior(v)
        z = self._check_in_support(z, "rival value")
        m = self.n - 1
        coef = units * math.comb(m, units)
        out = sum(
            p
            * coef
            * np.power(1.0 - d.cdf(z), units - 1)
            * np.power(d.cdf(z), m - units)
            * d.pdf(z)
            for p, d in zip(post, self.dists)
        )
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, rng, rounds):
        """Draw ``rounds`` full profiles of n values, shape (rounds, n).

        Mixture components are drawn once per profile, so the sampled
        profiles are exchangeable but not independent across bidders.
        """
        rounds = int(rounds)
        out = np.empty((rounds, self.n))
        if rounds == 0:
            return out
        if self.is_iid:
            out[:] = self.dists[0].ppf(rng.random((rounds, self.n)))
            return out
        comp = rng.choice(len(self.dists), size=rounds, p=self.weights)
        for i, d in enumerate(self.dists):
            mask = comp == i
            cnt = int(mask.sum())
            if cnt:
                out[mask] = d.ppf(rng.random((cnt, self.n)))
        return out

    def to_config(self):
        if self.is_iid:
            return {
                "support": [self.lo, self.hi],
                "n": self.n,
                "kind": "iid",
                "dist": self.dists[0].to_config(),
            }
        return {
            "support": [self.lo, self.hi],
            "n": self.n,
            "kind": "mixture",
            "components": [
                {"weight": float(w), "dist": d.to_config()}
                for w, d in zip(self.weights, self.dists)
            ],
        }

    def __repr__(self):
        return f"ValueModel(n={self.n}, components={len(self.dists)}, support=({self.lo}, {self.hi}))"
