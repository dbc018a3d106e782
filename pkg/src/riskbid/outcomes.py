"""Outside options and winning-payoff models.

The outside option s(v) is what a bidder of type v consumes when she
does not get the good.  The win payoff W describes what getting the
good is worth: either exactly the type v, or v plus scaled noise that
resolves after the auction.  Noise laws expose a fixed quadrature
representation (exact atoms for discrete laws, Gauss-Legendre nodes for
continuous ones) so expectations reduce to dot products.
"""

import numpy as np
from scipy import stats

from .errors import ConfigError

_GL_ORDER = 64


def _gl_nodes(lo, hi):
    """Gauss-Legendre nodes and weights rescaled from [-1,1] to [lo,hi]."""
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


# ---------------------------------------------------------------------------
# outside options


class OutsideOption:
    def value(self, v):
        raise NotImplementedError

    def bound_abs(self, lo, hi):
        """Upper bound for |s(v)| over [lo, hi]; used for bid brackets."""
        grid = np.linspace(lo, hi, 257)
        return float(np.max(np.abs(self.value(grid))))

    def is_constant(self):
        return False

    def to_config(self):
        raise NotImplementedError


class ConstantOutside(OutsideOption):
    def __init__(self, s0=0.0):
        self.s0 = float(s0)

    def value(self, v):
        v = np.asarray(v, dtype=float)
        out = np.full_like(v, self.s0)
        return float(out) if out.ndim == 0 else out

    def bound_abs(self, lo, hi):
        return abs(self.s0)

    def is_constant(self):
        return True

    def to_config(self):
        return {"form": "constant", "s0": self.s0}

    def __repr__(self):
        return f"ConstantOutside({self.s0})"


class AffineOutside(OutsideOption):
    def __init__(self, c0, c1):
        self.c0 = float(c0)
        self.c1 = float(c1)

    def value(self, v):
        out = self.c0 + self.c1 * np.asarray(v, dtype=float)
        return float(out) if out.ndim == 0 else out

    def bound_abs(self, lo, hi):
        return max(abs(self.value(lo)), abs(self.value(hi)))

    def is_constant(self):
        return self.c1 == 0.0

    def to_config(self):
        return {"form": "affine", "c0": self.c0, "c1": self.c1}

    def __repr__(self):
        return f"AffineOutside({self.c0}, {self.c1})"


class TableOutside(OutsideOption):
    """Piecewise-linear interpolation through (v, s) points; flat outside."""

    def __init__(self, points):
        pts = [(float(v), float(s)) for v, s in points]
        if len(pts) < 2:
            raise ConfigError("table outside option needs at least two points")
        vs = np.array([p[0] for p in pts])
        ss = np.array([p[1] for p in pts])
        if np.any(np.diff(vs) <= 0):
            raise ConfigError("table abscissae must be strictly increasing")
        if not np.all(np.isfinite(ss)):
            raise ConfigError("table values must be finite")
        self.vs = vs
        self.ss = ss

    def value(self, v):
        out = np.interp(np.asarray(v, dtype=float), self.vs, self.ss)
        return float(out) if out.ndim == 0 else out

    def is_constant(self):
        return bool(np.all(self.ss == self.ss[0]))

    def to_config(self):
        return {
            "form": "table",
            "points": [[float(v), float(s)] for v, s in zip(self.vs, self.ss)],
        }

    def __repr__(self):
        return f"TableOutside({list(zip(self.vs, self.ss))})"


# ---------------------------------------------------------------------------
# noise laws (standardized; a separate scale multiplies them)


class NoiseDist:
    #: quadrature nodes and weights; weights sum to 1
    def atoms(self):
        raise NotImplementedError

    def sample(self, rng, size):
        raise NotImplementedError

    def span(self):
        return float(self.support[1] - self.support[0])

    def mean(self):
        pts, wts = self.atoms()
        return float(np.dot(wts, pts))

    def to_config(self):
        raise NotImplementedError


class DiscreteNoise(NoiseDist):
    def __init__(self, points, probs):
        points = np.asarray(points, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if points.ndim != 1 or points.size == 0 or points.shape != probs.shape:
            raise ConfigError("discrete noise needs matching point/prob vectors")
        if np.any(probs < 0) or probs.sum() <= 0:
            raise ConfigError("discrete noise probabilities must be nonnegative")
        if not np.all(np.isfinite(points)):
            raise ConfigError("discrete noise points must be finite")
        self.points = points
        self.probs = probs / probs.sum()
        self.support = (float(points.min()), float(points.max()))

    def atoms(self):
        return self.points, self.probs

    def sample(self, rng, size):
        return rng.choice(self.points, size=size, p=self.probs)

    def to_config(self):
        return {
            "kind": "discrete",
            "points": [float(p) for p in self.points],
            "probs": [float(p) for p in self.probs],
        }

    def __repr__(self):
        return f"DiscreteNoise({list(self.points)}, {list(self.probs)})"


class UniformNoise(NoiseDist):
    def __init__(self, lo, hi):
        lo, hi = float(lo), float(hi)
        if not lo < hi:
            raise ConfigError(f"uniform noise needs lo < hi, got [{lo}, {hi}]")
        self.support = (lo, hi)
        pts, wts = _gl_nodes(lo, hi)
        self._pts = pts
        self._wts = wts / (hi - lo)  # density 1/(hi-lo); weights sum to 1

    def atoms(self):
        return self._pts, self._wts

    def sample(self, rng, size):
        lo, hi = self.support
        return lo + (hi - lo) * rng.random(size)

    def to_config(self):
        return {"kind": "uniform", "lo": self.support[0], "hi": self.support[1]}

    def __repr__(self):
        return f"UniformNoise({self.support[0]}, {self.support[1]})"


class TruncatedNormalNoise(NoiseDist):
    """Normal(mu, sigma) truncated to [lo, hi], integrated on fixed nodes."""

    def __init__(self, mu, sigma, lo, hi):
        lo, hi = float(lo), float(hi)
        sigma = float(sigma)
        if not lo < hi:
            raise ConfigError(f"truncation needs lo < hi, got [{lo}, {hi}]")
        if sigma <= 0:
            raise ConfigError(f"sigma must be > 0, got {sigma}")
        self.mu = float(mu)
        self.sigma = sigma
        self.support = (lo, hi)
        a, b = (lo - self.mu) / sigma, (hi - self.mu) / sigma
        self._frozen = stats.truncnorm(a, b, loc=self.mu, scale=sigma)
        pts, raw = _gl_nodes(lo, hi)
        wts = raw * self._frozen.pdf(pts)
        self._pts = pts
        self._wts = wts / wts.sum()  # remove the residual quadrature bias

    def atoms(self):
        return self._pts, self._wts

    def sample(self, rng, size):
        return self._frozen.ppf(rng.random(size))

    def to_config(self):
        return {
            "kind": "truncated_normal",
            "mu": self.mu,
            "sigma": self.sigma,
            "lo": self.support[0],
            "hi": self.support[1],
        }

    def __repr__(self):
        return (
            f"TruncatedNormalNoise(mu={self.mu}, sigma={self.sigma}, "
            f"lo={self.support[0]}, hi={self.support[1]})"
        )


# ---------------------------------------------------------------------------
# win payoffs


class WinPayoff:
    """Value of getting the good for type v: W = v + scale * noise."""

    def offsets(self):
        """(offsets, weights): W takes value v + offset with the given weight."""
        raise NotImplementedError

    def sample(self, rng, v):
        raise NotImplementedError

    def mean_offset(self):
        d, w = self.offsets()
        return float(np.dot(w, d))

    def min_offset(self):
        d, _ = self.offsets()
        return float(np.min(d))

    def noise_span(self):
        return 0.0

    def is_degenerate(self):
        return False

    def to_config(self):
        raise NotImplementedError


class DeterministicWin(WinPayoff):
    def offsets(self):
        return np.array([0.0]), np.array([1.0])

    def sample(self, rng, v):
        return np.asarray(v, dtype=float).copy()

    def is_degenerate(self):
        return True

    def to_config(self):
        return {"form": "deterministic"}

    def __repr__(self):
        return "DeterministicWin()"


class NoisyWin(WinPayoff):
    def __init__(self, noise, scale):
        scale = float(scale)
        if scale < 0:
            raise ConfigError(f"noise scale must be >= 0, got {scale}")
        self.noise = noise
        self.scale = scale

    def offsets(self):
        pts, wts = self.noise.atoms()
        return self.scale * pts, wts

    def sample(self, rng, v):
        v = np.asarray(v, dtype=float)
        return v + self.scale * self.noise.sample(rng, v.shape)

    def noise_span(self):
        lo, hi = self.noise.support
        return self.scale * (hi - lo)

    def is_degenerate(self):
        return self.scale == 0.0

    def to_config(self):
        return {
            "form": "additive_noise",
            "scale": self.scale,
            "noise": self.noise.to_config(),
        }

    def __repr__(self):
        return f"NoisyWin({self.noise!r}, scale={self.scale})"
