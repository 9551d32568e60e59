"""Seeded, splittable random streams and the elementary samplers built on them.

Every variate is produced by inverse-CDF transformation of :meth:`SeededStream.uniform01`,
so the number of raw draws consumed by any sampler is fixed and a stream can be
replayed exactly.  The underlying bit generator is numpy's PCG64 (period
2**128); independent streams are obtained by spawning a ``SeedSequence`` keyed
on ``(seed, stream_id)``.
"""

import math

import numpy as np

from . import special
from .errors import DegenerateIntervalError, DomainError

__all__ = ["SeededStream", "TAIL_SWITCH"]

# Both truncation endpoints this many sigmas above the mean -> survival parametrization.
TAIL_SWITCH = 6.0

_MASK64 = (1 << 64) - 1
_TWO_M52 = 2.0 ** -52


class SeededStream:
    """A single-owner stream of uniform variates.

    Parameters
    ----------
    seed : int
        Master seed, reduced modulo ``2**64``.
    stream_id : int
        Stream index, typically the replicate number.  Distinct ids under one
        seed give statistically independent, non-overlapping streams.

    Notes
    -----
    Streams are not thread-safe.  Create one per worker; they can be moved
    between threads but never shared.
    """

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self._bitgen = np.random.PCG64(seq)
        self.draws = 0

    def __repr__(self):
        return f"SeededStream(seed={self.seed}, stream_id={self.stream_id}, draws={self.draws})"

    def spawn(self, stream_id):
        """A fresh stream sharing this stream's master seed."""
        return SeededStream(self.seed, stream_id)

    # -- uniforms ---------------------------------------------------------

    def uniform01(self, size=None):
        """Uniform variates strictly inside (0, 1).

        Each value is ``(k + 1/2) / 2**52`` for a 52-bit integer ``k``, so both
        0 and 1 are unreachable and ``log(u)``, ``log(1 - u)`` are finite.
        """
        n = 1 if size is None else int(np.prod(size))
        raw = self._bitgen.random_raw(n) >> np.uint64(12)
        self.draws += n
        u = (raw.astype(np.float64) + 0.5) * _TWO_M52
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def sorted_uniforms(self, n, size=None):
        """``n`` strictly ascending uniforms, optionally in a batch.

        The endpoints 0 and 1 are *not* included.  A row containing a tie
        is redrawn in full.

        Parameters
        ----------
        n : int
            Number of order statistics per row, ``n >= 1``.
        size : int, optional
            Number of independent rows.  When given the result has shape
            ``(size, n)``.
        """
        if n < 1:
            raise DomainError("sorted_uniforms needs n >= 1")
        rows = 1 if size is None else int(size)
        u = np.sort(self.uniform01((rows, n)), axis=1)
        if n > 1:
            tied = np.nonzero(np.any(np.diff(u, axis=1) <= 0.0, axis=1))[0]
            for r in tied:
                row = u[r]
                while np.any(np.diff(row) <= 0.0):
                    row = np.sort(self.uniform01(n))
                u[r] = row
        return u[0] if size is None else u

    # -- continuous variates ----------------------------------------------

    def std_normal(self, size=None):
        """Standard normal variates by inverse CDF."""
        return special.std_normal_quantile(self.uniform01(size))

    def exponential1(self, size=None):
        """Unit-rate exponential variates, ``-log(u)``."""
        return -np.log(self.uniform01(size))

    def truncated_normal(self, mu, sigma, lo, hi, size=None):
        """Normal(mu, sigma) restricted to ``[lo, hi]`` by inverse CDF.

        When both standardized endpoints exceed :data:`TAIL_SWITCH` the
        upper-tail survival function is used instead of the CDF, which keeps
        full relative precision deep in the tail.

        Raises
        ------
        DegenerateIntervalError
            If the probability mass of ``[lo, hi]`` underflows to zero.
        """
        if not sigma > 0.0:
            raise DomainError("sigma must be positive")
        if not lo < hi:
            raise DomainError("truncated_normal needs lo < hi")
        a = (lo - mu) / sigma
        b = (hi - mu) / sigma
        u = self.uniform01(size)
        if a >= TAIL_SWITCH:
            sa, sb = special.std_normal_sf(a), special.std_normal_sf(b)
            mass = sa - sb
            if not mass > 0.0:
                raise DegenerateIntervalError(
                    f"normal mass of [{lo}, {hi}] underflows (upper tail)"
                )
            z = -special.std_normal_quantile(sa - u * mass)
        else:
            pa, pb = special.std_normal_cdf(a), special.std_normal_cdf(b)
            mass = pb - pa
            if not mass > 0.0:
                raise DegenerateIntervalError(f"normal mass of [{lo}, {hi}] underflows")
            # pa + u*mass can round onto 0 or 1 only when an endpoint is infinite.
            p = np.clip(pa + u * mass, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
            z = special.std_normal_quantile(p)
        return np.clip(mu + sigma * z, lo, hi)

    def gaussian_in_ball(self, d, tau, r2_max, size=None):
        """``N(0, I/tau)`` in ``R^d`` conditioned on ``|x|^2 <= r2_max``.

        Direction comes from a normalized vector of ``d`` standard normals; the
        squared radius is ``chi2_d`` truncated to ``[0, tau * r2_max]``,
        obtained by inverting the regularized lower incomplete gamma and then
        rescaled by ``1/tau``.  Consumes ``d + 1`` uniforms per point.

        Returns
        -------
        numpy.ndarray
            Shape ``(d,)`` when ``size`` is None, else ``(size, d)``.
        """
        d = int(d)
        if d < 1:
            raise DomainError("dimension must be >= 1")
        if not tau > 0.0 or not r2_max > 0.0:
            raise DomainError("tau and r2_max must be positive")
        k = 1 if size is None else int(size)
        z = self.std_normal((k, d))
        direction = z / np.linalg.norm(z, axis=1, keepdims=True)
        u = self.uniform01(k)
        half_d = 0.5 * d
        if math.isinf(r2_max):
            mass, x_max = 1.0, None
        else:
            x_max = 0.5 * tau * r2_max
            mass = float(special.reg_lower_gamma(half_d, x_max))
            if not mass > 0.0:
                raise DegenerateIntervalError(
                    f"chi2_{d} mass below {tau * r2_max} underflows"
                )
        half_chi2 = special.reg_lower_gamma_inv(half_d, u * mass, x_max=x_max)
        r2 = 2.0 * half_chi2 / tau
        if x_max is not None:
            r2 = np.minimum(r2, r2_max)
        x = direction * np.sqrt(r2)[:, None]
        return x[0] if size is None else x
