"""Extended-precision Hausdorff-moment machinery.

Moment computation, shifted-Legendre algebra on [0,1], Hilbert-matrix
conditioning, the quantitative moment stability bounds, and reconstruction of
a function from finitely many moments.  The severe ill-posedness of the
problem (the inverse Hilbert matrix grows like e^{3.5(N+1)}) makes extended
precision mandatory: exact rational arithmetic where possible, mpmath with an
auto-sized mantissa otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath as mp
import numpy as np

from . import polyx
from .gridfn import Box, Interval, SampledFunction
from .multiplier import adaptive_gauss, trig_interp


@dataclass(frozen=True)
class PrecisionConfig:
    bits: int = 256
    exact: bool = False

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError("precision requires at least 64 mantissa bits")


def required_bits(N: int, n_dim: int = 1) -> int:
    """Mantissa bits needed to survive the e^{3.5 n (N+1)} conditioning."""
    return math.ceil(3.5 * n_dim * (N + 1) / math.log(2.0)) + 64


@dataclass
class MomentSequence:
    interval: Interval
    N: int
    values: list
    weights: list | None = None
    precision_bits: int = 256
    quad_error: float = 0.0

    def __post_init__(self):
        if len(self.values) != self.N + 1:
            raise ValueError("moment sequence must hold N+1 values")

    def to_csv_rows(self):
        rows = [("j", "re", "im", "precision_bits")]
        for j, v in enumerate(self.values):
            vc = complex(v)
            rows.append((j, repr(vc.real), repr(vc.imag), self.precision_bits))
        return rows


# ---------------------------------------------------------------------------
# Shifted-Legendre system on [0, 1]
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def legendre_coeff_matrix(N: int):
    """Exact C[m][l] = (2m+1)(-1)^l (m+l)! / ((m-l)! (l!)^2), 0 <= l <= m <= N."""
    C = []
    for m in range(N + 1):
        row = []
        for l in range(m + 1):
            num = Fraction((2 * m + 1) * math.factorial(m + l),
                           math.factorial(m - l) * math.factorial(l) ** 2)
            row.append(num if (m + l) % 2 == 0 else -num)
        row += [Fraction(0)] * (N - m)
        C.append(row)
    return tuple(tuple(r) for r in C)


@lru_cache(maxsize=64)
def hilbert_matrix(N: int):
    return tuple(tuple(Fraction(1, m + l + 1) for l in range(N + 1)) for m in range(N + 1))


@dataclass(frozen=True)
class LegendreSystem:
    """Raw coefficients C per the product formula, orthonormal rows C/sqrt(2m+1).

    The raw rows give ||L_m||^2 = 2m+1 on (0,1); the normalized rows are the
    orthonormal system for which the Gram identity Chat^T Chat = H_N^{-1}
    holds exactly (computed rationally as sum_m C[m,j] C[m,k] / (2m+1)).
    """

    N: int
    precision_bits: int = 256

    @property
    def C(self):
        return legendre_coeff_matrix(self.N)

    @property
    def H(self):
        return hilbert_matrix(self.N)

    def normalizer_sq(self, m: int) -> int:
        return 2 * m + 1

    def gram_exact(self):
        """Chat^T Chat as exact rationals."""
        C = self.C
        N = self.N
        out = [[Fraction(0)] * (N + 1) for _ in range(N + 1)]
        for j in range(N + 1):
            for k in range(N + 1):
                out[j][k] = sum(C[m][j] * C[m][k] / Fraction(2 * m + 1) for m in range(N + 1))
        return out

    def hilbert_inverse_exact(self):
        """H_N^{-1} via the closed binomial formula (exact integers)."""
        n = self.N + 1
        out = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                v = Fraction((i + j + 1) * math.comb(n + i, n - j - 1)
                             * math.comb(n + j, n - i - 1) * math.comb(i + j, i) ** 2)
                out[i][j] = v if (i + j) % 2 == 0 else -v
        return out

    def raw_polynomial(self, m: int):
        """Exact monomial coefficients of L_m on [0,1] (norm sqrt(2m+1))."""
        return list(self.C[m][: m + 1])


def legendre_ode_residual(m: int):
    """Exact residual of -(x(1-x) L_m')' - m(m+1) L_m (list of Fractions)."""
    sys = LegendreSystem(max(m, 1))
    L = sys.raw_polynomial(m)
    Lp = polyx.p_deriv(L)
    inner = polyx.p_mul([Fraction(0), Fraction(1), Fraction(-1)], Lp)  # x(1-x) L'
    lhs = polyx.p_scale(polyx.p_deriv(inner), Fraction(-1))
    rhs = polyx.p_scale(L, Fraction(m * (m + 1)))
    return polyx.p_add(lhs, polyx.p_scale(rhs, Fraction(-1)))


# ---------------------------------------------------------------------------
# Hilbert-matrix conditioning
# ---------------------------------------------------------------------------

def hilbert_inverse_sigma_max(N: int, prec: PrecisionConfig = PrecisionConfig()) -> mp.mpf:
    """sigma_max(H_N^{-1}) = 1/lambda_min(H_N), resolved to 1e-6 relative.

    Full symmetric eigendecomposition for N <= 12; inverse power iteration on
    an LU factorization of H_N otherwise.  Precision escalates automatically.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    if N > 40:
        raise ValueError("N > 40 not supported under the default precision policy")

    def compute(bits):
        with mp.workprec(bits):
            H = mp.matrix(N + 1)
            for i in range(N + 1):
                for j in range(N + 1):
                    H[i, j] = mp.mpf(1) / (i + j + 1)
            if N <= 12:
                ev = mp.eigsy(H, eigvals_only=True)
                lam_min = min(ev)
            else:
                lam_min = _inverse_power_lambda_min(H, bits)
            return mp.mpf(1) / lam_min

    bits = max(prec.bits, required_bits(N))
    prev = compute(bits)
    for _ in range(4):
        cur = compute(bits + 64)
        if mp.almosteq(cur, prev, rel_eps=mp.mpf(10) ** -8):
            return cur
        prev, bits = cur, bits + 64
    raise ArithmeticError("sigma_max failed to stabilize under precision escalation")


def _inverse_power_lambda_min(H, bits):
    n = H.rows
    with mp.workprec(bits):
        lu = mp.lu(H)
        v = mp.matrix([mp.mpf(1) / (i + 1) for i in range(n)])
        lam = mp.mpf(0)
        for _ in range(400):
            w = mp.lu_solve(H, v)
            nw = mp.norm(w)
            w = w / nw
            new_lam = (w.T * (H * w))[0]
            if lam and mp.almosteq(new_lam, lam, rel_eps=mp.mpf(10) ** -30):
                return new_lam
            lam, v = new_lam, w
        return lam


# ---------------------------------------------------------------------------
# Moment computation
# ---------------------------------------------------------------------------

def compute_moments(f, I: Interval, N: int, prec: PrecisionConfig = PrecisionConfig()) -> MomentSequence:
    """Plain moments f_j = int_I x^j f(x) dx, j = 0..N.

    f may be a polynomial (list of coefficients, exact if Fractions) or a
    SampledFunction (high-order quadrature with an error estimate attached).
    """
    if N < 0:
        raise ValueError("moment order must be nonnegative")
    if isinstance(f, SampledFunction):
        vals, err = _sampled_moments(f, I, N)
        return MomentSequence(I, N, vals, precision_bits=prec.bits, quad_error=err)
    coeffs = list(f)
    exact = all(isinstance(c, (Fraction, int)) for c in coeffs)
    if exact:
        a, b = Fraction(I.a).limit_denominator(10**12), Fraction(I.b).limit_denominator(10**12)
        vals = [polyx.p_moment(polyx.as_exact(coeffs), j, a, b) for j in range(N + 1)]
        return MomentSequence(I, N, vals, precision_bits=prec.bits)
    with mp.workprec(prec.bits):
        a, b = mp.mpf(I.a), mp.mpf(I.b)
        vals = [polyx.p_moment([mp.mpf(c) for c in coeffs], j, a, b) for j in range(N + 1)]
    return MomentSequence(I, N, vals, precision_bits=prec.bits)


def _sampled_moments(f: SampledFunction, I: Interval, N: int):
    def build(j):
        return lambda y: trig_interp(f, y) * y**j

    vals = [complex(adaptive_gauss(build(j), I.a, I.b)) for j in range(N + 1)]
    coarse = [complex(adaptive_gauss(build(j), I.a, I.b, order=32, max_depth=6))
              for j in range(N + 1)]
    err = max(abs(v - c) for v, c in zip(vals, coarse))
    vals = [v.real if abs(v.imag) < 1e-13 * (abs(v) + 1e-300) else v for v in vals]
    return vals, err


def unit_interval_moments(m: MomentSequence):
    """Moments of the affine pullback F(t) = f(x0 + lam t) onto (0,1).

    F_j = lam^{-j-1} sum_k binom(j,k) (-x0)^{j-k} f_k, exact when possible.
    """
    I = m.interval
    exact = all(isinstance(v, (Fraction, int)) for v in m.values)
    if exact:
        x0 = Fraction(I.a).limit_denominator(10**12)
        lam = Fraction(I.b).limit_denominator(10**12) - x0
        out = []
        for j in range(m.N + 1):
            s = sum(math.comb(j, k) * (-x0) ** (j - k) * m.values[k] for k in range(j + 1))
            out.append(s / lam ** (j + 1))
        return out, True
    with mp.workprec(m.precision_bits):
        x0, lam = mp.mpf(I.a), mp.mpf(I.b) - mp.mpf(I.a)
        out = []
        for j in range(m.N + 1):
            s = mp.mpf(0) if not any(isinstance(v, complex) for v in m.values) else mp.mpc(0)
            for k in range(j + 1):
                vk = m.values[k]
                vk = _to_mp(vk)
                s += mp.binomial(j, k) * (-x0) ** (j - k) * vk
            out.append(s / lam ** (j + 1))
        return out, False


def reconstruct_from_moments(m: MomentSequence, N: int):
    """Orthogonal projection onto span{L-hat_0..N} on I from the moments.

    Returns monomial coefficients (in the unit-interval variable t, together
    with the affine map) of sum_k lambda_k L-hat_k where lambda_k are the
    Legendre coefficients assembled from the moments.  Exact rational when the
    moments are rational: the reconstruction equals
    sum_k (C F)_k L_k / (2k+1), which removes all square roots.
    """
    if m.N < N:
        raise ValueError("moment sequence shorter than requested order")
    bits_needed = required_bits(N)
    if not all(isinstance(v, (Fraction, int)) for v in m.values) and m.precision_bits < bits_needed:
        raise ArithmeticError(
            f"insufficient precision: need at least {bits_needed} bits for N={N}")
    F, exact = unit_interval_moments(m)
    C = legendre_coeff_matrix(N)
    if exact:
        coeffs = [Fraction(0)] * (N + 1)
        for k in range(N + 1):
            lam_k = sum(C[k][l] * F[l] for l in range(k + 1))
            scale = lam_k / Fraction(2 * k + 1)
            for l in range(k + 1):
                coeffs[l] += scale * C[k][l]
        return coeffs, m.interval
    with mp.workprec(m.precision_bits):
        coeffs = [mp.mpf(0)] * (N + 1)
        for k in range(N + 1):
            lam_k = sum(_to_mp(C[k][l]) * F[l] for l in range(k + 1))
            scale = lam_k / (2 * k + 1)
            for l in range(k + 1):
                coeffs[l] = coeffs[l] + scale * _to_mp(C[k][l])
        return coeffs, m.interval


def _to_mp(v):
    if isinstance(v, Fraction):
        return mp.mpf(v.numerator) / mp.mpf(v.denominator)
    if isinstance(v, complex):
        return mp.mpc(v)
    if isinstance(v, (mp.mpf, mp.mpc)):
        return v
    return mp.mpf(v)


def eval_reconstruction(coeffs, interval: Interval, x):
    """Evaluate a unit-interval reconstruction at physical points x."""
    t = (np.asarray(x, dtype=float) - interval.a) / interval.length
    if any(isinstance(c, (complex, mp.mpc)) for c in coeffs):
        cf = [complex(c) for c in coeffs]
    else:
        cf = [float(c) for c in coeffs]
    return polyx.p_eval(cf, t)


# ---------------------------------------------------------------------------
# Stability bounds
# ---------------------------------------------------------------------------

def _box_constant(I, n_dim: int) -> float:
    """C = 3.5 n for the unit box, 6.5 n - 2 log|I| for sub-boxes."""
    if isinstance(I, Interval):
        vol = I.length
        unit = I.a == 0.0 and I.b == 1.0
    else:
        vol = I.volume
        unit = all(f.a == 0.0 and f.b == 1.0 for f in I.factors)
    if unit:
        return 3.5 * n_dim
    return 6.5 * n_dim - 2.0 * math.log(vol)


def verify_festmom(f, I, N: int):
    """Both sides of the moment stability bound; moments taken in the unit-
    interval pullback variable of each box factor (the rescaled estimate).

    Returns (lhs, rhs, holds) with lhs = ||f||^2_{L2(I)} and
    rhs = e^{C(N+1)} sum_{|j| <= N} |f_j|^2 + ||grad f||^2_{L2(I)} / (4(N+1)^2).
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    if isinstance(I, Interval):
        if not (0.0 <= I.a < I.b <= 1.0):
            raise ValueError("interval must lie inside (0,1)")
        coeffs = polyx.as_exact(list(f))
        a = Fraction(I.a).limit_denominator(10**12)
        b = Fraction(I.b).limit_denominator(10**12)
        lhs = polyx.p_l2sq(coeffs, a, b)
        lam = b - a
        pulled = polyx.p_compose_affine(coeffs, a, lam)  # f(a + lam t)
        msum = sum((lam * polyx.p_moment(pulled, j, Fraction(0), Fraction(1))) ** 2
                   for j in range(N + 1))
        grad = polyx.p_l2sq(polyx.p_deriv(coeffs), a, b)
        C = _box_constant(I, 1)
        rhs = math.exp(C * (N + 1)) * float(msum) + float(grad) / (4.0 * (N + 1) ** 2)
        lhs = float(lhs)
        return lhs, rhs, lhs <= rhs * (1 + 1e-12)
    if isinstance(I, Box) and len(I.factors) == 2:
        fx, fy = I.factors
        for fac in (fx, fy):
            if not (0.0 <= fac.a < fac.b <= 1.0):
                raise ValueError("box must lie inside the unit square")
        c = [[Fraction(v) for v in row] for row in f]
        box = ((Fraction(fx.a).limit_denominator(10**12), Fraction(fx.b).limit_denominator(10**12)),
               (Fraction(fy.a).limit_denominator(10**12), Fraction(fy.b).limit_denominator(10**12)))
        lhs = float(polyx.p2_l2sq(c, box))
        (ax, bx), (ay, by) = box
        lx, ly = bx - ax, by - ay
        msum = Fraction(0)
        for jx in range(N + 1):
            for jy in range(N + 1):
                mom = _p2_pullback_moment(c, box, jx, jy)
                msum += mom * mom
        gx = polyx.p2_l2sq(polyx.p2_partial(c, 0), box)
        gy = polyx.p2_l2sq(polyx.p2_partial(c, 1), box)
        C = _box_constant(I, 2)
        rhs = math.exp(C * (N + 1)) * float(msum) + float(gx + gy) / (4.0 * (N + 1) ** 2)
        return lhs, rhs, lhs <= rhs * (1 + 1e-12)
    raise ValueError("verify_festmom supports intervals and 2D boxes")


def _p2_pullback_moment(c, box, jx, jy):
    """int_I f(x,y) tx^jx ty^jy dx dy with t the unit-box pullback coordinates."""
    (ax, bx), (ay, by) = box
    lx, ly = bx - ax, by - ay
    tx = [-ax / lx, 1 / lx]  # (x - ax)/lx as a polynomial in x
    ty = [-ay / ly, 1 / ly]
    px = [Fraction(1)]
    for _ in range(jx):
        px = polyx.p_mul(px, tx)
    py = [Fraction(1)]
    for _ in range(jy):
        py = polyx.p_mul(py, ty)
    weight = [[a * b for b in py] for a in px]
    return polyx.p2_integral(polyx.p2_mul(c, weight), box)


def weighted_moment_bounds(f, I: Interval, gamma, signed: bool,
                           C0: float = 1.0, series_terms: int = 400):
    """Both sides of the weighted moment bounds.

    Positive weights (signed=False):
        ||f||_{L2(I)} <= C0 e^{C r} / min_{j<=N_f} gamma_j * ||G||_{L2(I)},
        G(x) = sum_j gamma_j f_j x^j,  r = ||f'|| / ||f||,  C = 6.5 - 2 log|I|.
    Signed weights (signed=True) add the gradient term ||G'|| / (N_f + 1).
    """
    if not (0.0 <= I.a < I.b <= 1.0):
        raise ValueError("interval must lie inside (0,1)")
    coeffs = [float(c) for c in f]
    l2 = math.sqrt(max(polyx.p_l2sq(coeffs, I.a, I.b), 0.0))
    if l2 == 0.0:
        return 0.0, 0.0, True
    grad = math.sqrt(max(polyx.p_l2sq(polyx.p_deriv(coeffs), I.a, I.b), 0.0))
    r = grad / l2
    Nf = max(1, round(r)) - 1
    gam = [float(gamma(j)) if callable(gamma) else float(gamma[j]) for j in range(series_terms)]
    if any(g == 0 for g in gam[: Nf + 1]):
        raise ValueError("weights must be nonzero up to N_f")
    if not signed and any(g <= 0 for g in gam):
        raise ValueError("unsigned bound requires positive weights")
    moms = [float(polyx.p_moment(coeffs, j, I.a, I.b)) for j in range(series_terms)]
    wmoms = [g * m for g, m in zip(gam, moms)]

    def G(x):
        return polyx.p_eval(wmoms, np.asarray(x, dtype=float))

    Gnorm = math.sqrt(abs(adaptive_gauss(lambda x: G(x) ** 2, I.a, I.b, rtol=1e-10)))
    Cbox = 6.5 - 2.0 * math.log(I.length)
    front = C0 * math.exp(Cbox * r) / min(abs(g) for g in gam[: Nf + 1])
    if not signed:
        rhs = front * Gnorm
    else:
        dmoms = [j * wmoms[j] for j in range(1, series_terms)]

        def Gp(x):
            return polyx.p_eval(dmoms, np.asarray(x, dtype=float))

        Gpnorm = math.sqrt(abs(adaptive_gauss(lambda x: Gp(x) ** 2, I.a, I.b, rtol=1e-10)))
        rhs = front * (Gnorm + Gpnorm / (Nf + 1))
    return l2, rhs, l2 <= rhs * (1 + 1e-9)
