"""Self-similar profiles of the quadratic toy model.

The ansatz ``F_n(t) = beta_n sqrt(n) / t`` turns the toy model into the
algebraic system ``f_n(beta) = 0`` with::

    f_n = 2 b_n^2 + 4 b_n sum_{k=2}^{n-1} b_k - 4 b_n b_{2n-1}
          - 2 sum_{k>n} b_k b_{k+1-n} - sqrt(n) b_n

Two truncations are handled here.  The *parametric* one keeps
``beta_2..beta_N`` as unknowns, fixes ``lambda = (b_{2N}, .., b_{3N-2})`` as
parameters and zeroes everything else; the *full* one zeroes every
``b_k`` with ``k >= N`` and solves rows ``2..N-1``.  Both are evaluated by the
same routine on a full coefficient vector ``b`` indexed by frequency.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

NEWTON_TOL = 1e-12
NEWTON_MAXIT = 50
MAX_HALVINGS = 10
DEDUP_TOL = 1e-8
# a root component below this is treated as zero
ZERO_TOL = 1e-10


class SelfSimilarError(ValueError):
    pass


class ConvergenceError(SelfSimilarError):
    pass


@dataclass
class BetaProfile:
    """Coefficients ``beta_2..beta_N`` and parameters ``lambda``.

    ``free`` is the number of leading ``beta`` entries that are unknowns:
    ``N - 1`` for the parametric truncation and ``N - 2`` for the full one
    (where ``beta_N`` is pinned to zero and ``lambda`` vanishes).
    """

    N: int
    beta: np.ndarray
    lam: np.ndarray
    residual_norm: float = math.nan
    free: int = -1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if self.N < 4:
            raise SelfSimilarError(f"N must be at least 4, got {self.N}")
        if self.beta.shape != (self.N - 1,) or self.lam.shape != (self.N - 1,):
            raise SelfSimilarError("beta and lambda must both have N - 1 entries")
        if self.free < 0:
            self.free = self.N - 1
        if math.isnan(self.residual_norm):
            self.residual_norm = float(np.max(np.abs(residual(self))))

    @property
    def positive_flags(self) -> np.ndarray:
        return self.beta[: self.free] > 0

    @property
    def positive(self) -> bool:
        return bool(self.positive_flags.all())

    @property
    def fully_nonzero(self) -> bool:
        return bool(np.all(np.abs(self.beta[: self.free]) > ZERO_TOL))

    def full_vector(self) -> np.ndarray:
        return _assemble(self.beta, self.lam, self.N)

    def to_dict(self) -> dict:
        d = {
            "N": self.N,
            "beta": self.beta.tolist(),
            "lambda": self.lam.tolist(),
            "residual_norm": self.residual_norm,
            "positive": self.positive,
            "positive_flags": self.positive_flags.tolist(),
        }
        d.update(self.meta)
        return d

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


class PositivityViolation(SelfSimilarError):
    """Newton converged, but to a profile with a non-positive coefficient."""

    def __init__(self, profile: BetaProfile):
        bad = [j + 2 for j, ok in enumerate(profile.positive_flags) if not ok]
        super().__init__(f"converged profile has non-positive beta_j for j = {bad}")
        self.profile = profile


# -- residual and Jacobian on the full coefficient vector --------------------


def _assemble(beta, lam, N) -> np.ndarray:
    """Full vector ``b[0..3N-2]`` (entries 0, 1 unused) over a leading batch axis."""
    beta = np.asarray(beta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    shape = np.broadcast_shapes(beta.shape[:-1], lam.shape[:-1])
    b = np.zeros(shape + (3 * N - 1,))
    b[..., 2 : N + 1] = beta
    b[..., 2 * N : 3 * N - 1] = lam
    return b


def _rows(b: np.ndarray, n_hi: int) -> np.ndarray:
    """``f_n`` for ``n = 2..n_hi`` over the full range of ``b``."""
    L = b.shape[-1] - 1
    out = np.empty(b.shape[:-1] + (n_hi - 1,))
    cum = np.cumsum(b, axis=-1)
    for n in range(2, n_hi + 1):
        bn = b[..., n]
        s = cum[..., n - 1] - cum[..., 1]
        b2 = b[..., 2 * n - 1] if 2 * n - 1 <= L else 0.0
        k = np.arange(n + 1, L + 1)
        tail = np.sum(b[..., k] * b[..., k + 1 - n], axis=-1)
        out[..., n - 2] = 2 * bn * bn + 4 * bn * s - 4 * bn * b2 - 2 * tail - math.sqrt(n) * bn
    return out


def _jac(b: np.ndarray, n_hi: int) -> np.ndarray:
    """``d f_n / d b_m`` for ``n = 2..n_hi`` and every index ``m`` of ``b``."""
    L = b.shape[-1] - 1
    J = np.zeros(b.shape[:-1] + (n_hi - 1, L + 1))
    for n in range(2, n_hi + 1):
        r = n - 2
        bn = b[..., n]
        s = np.sum(b[..., 2:n], axis=-1)
        b2 = b[..., 2 * n - 1] if 2 * n - 1 <= L else 0.0
        J[..., r, n] += 4 * bn + 4 * s - 4 * b2 - math.sqrt(n)
        J[..., r, 2:n] += 4 * bn[..., None]
        if 2 * n - 1 <= L:
            J[..., r, 2 * n - 1] -= 4 * bn
        for k in range(n + 1, L + 1):
            J[..., r, k] -= 2 * b[..., k + 1 - n]
            J[..., r, k + 1 - n] -= 2 * b[..., k]
    return J


def residual(p: BetaProfile) -> np.ndarray:
    """``f_n`` for ``n = 2..N`` (the sum over ``k > n`` runs to ``3N - 2``)."""
    return _rows(_assemble(p.beta, p.lam, p.N), p.N)


def residual_split(p: BetaProfile) -> np.ndarray:
    """Same rows with the tail sum split into its ``k <= N`` and ``k > 2N`` parts."""
    N = p.N
    b = p.full_vector()
    out = np.empty(N - 1)
    for n in range(2, N + 1):
        bn = b[n]
        s = math.fsum(b[2:n])
        own = b[2 * n - 1] if 2 * n - 1 <= N else 0.0
        low = math.fsum(b[k] * b[k + 1 - n] for k in range(n + 1, N + 1))
        par = math.fsum(b[k] * b[k + 1 - n] for k in range(2 * N + 1, 3 * N - 1))
        out[n - 2] = 2 * bn * bn + 4 * bn * s - 4 * bn * own - 2 * low - 2 * par - math.sqrt(n) * bn
    return out


def jacobian_beta(p: BetaProfile) -> np.ndarray:
    N = p.N
    return _jac(_assemble(p.beta, p.lam, N), N)[:, 2 : N + 1]


def jacobian_lambda(p: BetaProfile) -> np.ndarray:
    N = p.N
    return _jac(_assemble(p.beta, p.lam, N), N)[:, 2 * N : 3 * N - 1]


# -- anchor and continuation -------------------------------------------------


def gamma_anchor(lambda1: float, lambda2: float) -> float:
    return (math.sqrt(2) + math.sqrt(2 + 16 * lambda1 * lambda2)) / 4


def particular_solution(lambda1: float, lambda2: float, N: int) -> BetaProfile:
    """The explicit root ``beta = (gamma, 0, ..)``, ``lambda = (lambda1, lambda2, 0, ..)``."""
    if not (lambda1 > 0 and lambda2 > 0):
        raise SelfSimilarError("lambda1 and lambda2 must be positive")
    beta = np.zeros(N - 1)
    beta[0] = gamma_anchor(lambda1, lambda2)
    lam = np.zeros(N - 1)
    lam[:2] = lambda1, lambda2
    return BetaProfile(N, beta, lam)


def _check_hypothesis(lambda1_0, lambda2_0, N):
    if N < 4:
        raise SelfSimilarError(f"N must be at least 4, got {N}")
    if not (lambda1_0 > 0 and lambda2_0 > 0):
        raise SelfSimilarError("lambda1_0 and lambda2_0 must be positive")
    if not lambda1_0 * lambda2_0 > N / 4:
        raise SelfSimilarError(f"need lambda1_0 * lambda2_0 > N/4: {lambda1_0 * lambda2_0} <= {N / 4}")


def _newton(beta, lam, N, tol=NEWTON_TOL, maxit=NEWTON_MAXIT):
    """Plain Newton on ``beta``; returns (beta, residual max-norm, iterations)."""
    beta = beta.copy()
    for it in range(maxit + 1):
        b = _assemble(beta, lam, N)
        f = _rows(b, N)
        r = float(np.max(np.abs(f)))
        if not math.isfinite(r):
            break
        if r <= tol:
            return beta, r, it
        if it == maxit:
            break
        J = _jac(b, N)[:, 2 : N + 1]
        try:
            beta -= np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            break
    raise ConvergenceError("Newton did not converge")


def solve_beta(lam, N: int, start) -> BetaProfile:
    """Newton solve for ``beta`` at fixed parameters ``lam``, from ``start``."""
    lam = np.asarray(lam, dtype=float)
    beta, r, its = _newton(np.asarray(start, dtype=float), lam, N)
    return BetaProfile(N, beta, lam, r, meta={"newton_iterations": its})


def continue_solution(lambda1_0: float, lambda2_0: float, N: int, delta: float) -> BetaProfile:
    """Newton-continue the anchor to ``lambda = lambda0 + delta * (1, .., 1)``.

    ``delta`` is halved (up to ten times) while Newton fails.  A converged
    profile with any ``beta_j <= 0`` raises :class:`PositivityViolation`,
    which carries the profile.
    """
    _check_hypothesis(lambda1_0, lambda2_0, N)
    if not delta > 0:
        raise SelfSimilarError("delta must be positive")
    p0 = particular_solution(lambda1_0, lambda2_0, N)
    for halvings in range(MAX_HALVINGS + 1):
        lam = p0.lam + delta
        try:
            beta, r, its = _newton(p0.beta, lam, N)
        except ConvergenceError:
            delta /= 2
            continue
        p = BetaProfile(N, beta, lam, r, meta={"delta": delta, "halvings": halvings, "newton_iterations": its})
        if not p.positive:
            raise PositivityViolation(p)
        return p
    raise ConvergenceError(f"delta too large: Newton failed after {MAX_HALVINGS} halvings (last delta {delta:g})")


def ift_slope_pattern(lambda1_0: float, lambda2_0: float, N: int) -> np.ndarray:
    """Sensitivity ``d beta / d lambda`` at the anchor, ``-J_beta^{-1} J_lambda``.

    ``J_beta`` is upper bidiagonal there, so its inverse is
    ``A diag(1 / J_nn)`` with ``A_ij = prod_{l=i}^{j-1} c_l`` and
    ``c_l = -J_{l,l+1} / J_{l,l}``.  That product form is checked against a
    dense solve before returning.
    """
    _check_hypothesis(lambda1_0, lambda2_0, N)
    p = particular_solution(lambda1_0, lambda2_0, N)
    Jb, Jl = jacobian_beta(p), jacobian_lambda(p)
    d = np.diag(Jb)
    c = -np.diag(Jb, 1) / d[:-1]
    m = N - 1
    A = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            A[i, j] = A[i, j - 1] * c[j - 1]
    inv = A / d[None, :]
    S = -inv @ Jl
    dense = -np.linalg.solve(Jb, Jl)
    if not np.allclose(S, dense, rtol=1e-10, atol=1e-14):
        raise SelfSimilarError("bidiagonal inverse disagrees with the dense solve")
    return S


def coupling_ratios(lambda1_0: float, lambda2_0: float, N: int) -> np.ndarray:
    """``c_n = 2 gamma / (4 gamma - sqrt n)`` for ``n = 2..N-1``."""
    g = gamma_anchor(lambda1_0, lambda2_0)
    n = np.arange(2, N)
    return 2 * g / (4 * g - np.sqrt(n))


# -- full truncation: multi-start enumeration --------------------------------


def _full_batch(x: np.ndarray, N: int) -> np.ndarray:
    b = np.zeros(x.shape[:-1] + (N,))
    b[..., 2:N] = x
    return b


def enumerate_full_truncation(N: int, n_starts: int = 10_000, seed: int = 0) -> list[BetaProfile]:
    """Distinct real roots with ``beta_k = 0`` for ``k >= N`` (rows ``2..N-1``).

    Starts are uniform in ``[-3, 3]^(N-2)`` from ``numpy.random.default_rng(seed)``;
    all starts are iterated together.  Converged roots are polished, then
    merged when within ``1e-8`` in max-norm.  Profiles are sorted
    lexicographically and carry the start count in ``meta``.
    """
    if not 4 <= N <= 8:
        raise SelfSimilarError(f"enumeration supports 4 <= N <= 8, got {N}")
    if n_starts < 1:
        raise SelfSimilarError("n_starts must be positive")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-3.0, 3.0, size=(n_starts, N - 2))
    alive = np.ones(n_starts, dtype=bool)
    for _ in range(4 * NEWTON_MAXIT):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        b = _full_batch(x[idx], N)
        f = _rows(b, N - 1)
        J = _jac(b, N - 1)[..., 2:N]
        ok = np.isfinite(f).all(axis=1) & (np.abs(np.linalg.det(J)) > 1e-300)
        step = np.zeros_like(f)
        if ok.any():
            step[ok] = np.linalg.solve(J[ok], f[ok][..., None])[..., 0]
        x[idx] -= step
        done = np.max(np.abs(step), axis=1) <= 1e-15 * (1 + np.max(np.abs(x[idx]), axis=1))
        alive[idx[done | ~ok | (np.max(np.abs(x[idx]), axis=1) > 1e6)]] = False

    roots: list[np.ndarray] = []
    for xi in x:
        if not np.all(np.isfinite(xi)):
            continue
        try:
            beta, _, _ = _newton(np.append(xi, 0.0), np.zeros(N - 1), N, maxit=5)
        except ConvergenceError:
            continue
        root = beta[: N - 2]
        if not any(np.max(np.abs(root - r)) <= DEDUP_TOL for r in roots):
            roots.append(root)
    roots.sort(key=tuple)
    out = []
    for r in roots:
        r = np.where(np.abs(r) <= ZERO_TOL, 0.0, r)
        p = BetaProfile(N, np.append(r, 0.0), np.zeros(N - 1), free=N - 2, meta={"n_starts": n_starts, "seed": seed})
        out.append(p)
    return out


# -- time-domain check -------------------------------------------------------


def toy_model_rhs(F: dict[int, float], n: int) -> float:
    """Toy-model rate ``dF_n/dt`` for a sparse spectrum ``{frequency: F}`` with ``F_1 = 1``."""

    def g(k):
        return F.get(k, 0.0)

    Fn = g(n)
    gain_own = 4 * Fn * g(2 * n - 1) / math.sqrt(n * (2 * n - 1))
    loss = 4 * Fn / math.sqrt(n) * math.fsum(g(k) / math.sqrt(k) for k in range(2, n))
    self_loss = 2 * Fn * Fn / n
    top = max(F, default=0)
    gain = 2 * math.fsum(g(k) * g(k + 1 - n) / math.sqrt(k * (k + 1 - n)) for k in range(n + 1, top + 1))
    return gain_own - loss - self_loss + gain


def profile_to_spectrum(p: BetaProfile, t: float) -> dict[int, float]:
    """``F_n(t) = beta_n sqrt(n) / t`` on the support of the profile."""
    b = p.full_vector()
    return {k: b[k] * math.sqrt(k) / t for k in range(2, b.size) if b[k] != 0.0}


def time_domain_defect(p: BetaProfile, t: float) -> np.ndarray:
    """``dF_n/dt - toy RHS`` for ``n = 2..N`` along the self-similar ansatz."""
    F = profile_to_spectrum(p, t)
    b = p.full_vector()
    return np.array([-b[n] * math.sqrt(n) / t**2 - toy_model_rhs(F, n) for n in range(2, p.N + 1)])
