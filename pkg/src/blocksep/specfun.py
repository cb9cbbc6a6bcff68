"""Orthogonal polynomials and closed-form eigenfunctions.

Laguerre and Jacobi values come from the standard three-term recurrences and
stay exact on Fraction inputs.  The exceptional (X1-type) Jacobi polynomial
of degree n is constructed as the one-dimensional nullspace of the linear
system obtained by inserting a degree-n polynomial ansatz into the angular
equation for the trigonometric potential, with the closed-form eigenvalue
(A + 3(n-1))^2; the normalization is fixed by making the coefficient vector
primitive with a positive leading entry.  Eigenfunctions are assembled as
plain callables on Cartesian coordinates; all downstream checks are
normalization independent (operator residuals and ratios).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InadmissibleParametersError
from .models import (
    COULOMB,
    OSCILLATOR,
    Constant,
    Hierarchy,
    Model2F11,
    ModelSpec,
    Zero,
)


# -- classical families ------------------------------------------------------------


def laguerre(n: int, alpha, x):
    """Generalized Laguerre value L_n^(alpha)(x) by the three-term recurrence."""
    if n < 0:
        raise InadmissibleParametersError("Laguerre degree must be non-negative")
    prev = 1
    if n == 0:
        return prev if not isinstance(x, np.ndarray) else np.ones_like(x) * prev
    cur = 1 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur


def jacobi(n: int, alpha, beta, x):
    """Jacobi value P_n^(alpha, beta)(x) by the three-term recurrence."""
    if n < 0:
        raise InadmissibleParametersError("Jacobi degree must be non-negative")
    one = 1 if not isinstance(x, np.ndarray) else np.ones_like(x)
    if n == 0:
        return one
    prev = one
    cur = (alpha - beta) / 2 + (alpha + beta + 2) / 2 * x
    for k in range(2, n + 1):
        a = 2 * k * (k + alpha + beta) * (2 * k + alpha + beta - 2)
        if a == 0:
            raise InadmissibleParametersError(
                f"Jacobi recurrence degenerates at n={k} for alpha+beta={alpha + beta}"
            )
        b = (2 * k + alpha + beta - 1) * (alpha**2 - beta**2)
        c = (2 * k + alpha + beta - 1) * (2 * k + alpha + beta) * (2 * k + alpha + beta - 2)
        d = 2 * (k + alpha - 1) * (k + beta - 1) * (2 * k + alpha + beta)
        prev, cur = cur, ((b + c * x) * cur - d * prev) / a
    return cur


def chebyshev_t(n: int, x):
    """T_n up to normalization (Jacobi with alpha = beta = -1/2)."""
    return jacobi(n, Fraction(-1, 2), Fraction(-1, 2), x)


# -- exceptional family -------------------------------------------------------------


def _x1_params(alpha: Fraction, beta: Fraction):
    A = Fraction(3, 2) * (alpha + beta + 1)
    B = Fraction(3, 2) * (beta - alpha)
    return A, B


@lru_cache(maxsize=None)
def x1_jacobi_coefficients(n: int, alpha: Fraction, beta: Fraction) -> tuple:
    """Exact coefficient vector (c_0..c_n) of the degree-n exceptional polynomial.

    Solves the nullspace of the polynomial identity obtained from the angular
    equation in s = sin(3 phi) with eigenvalue (A + 3(n-1))^2.
    """
    if n < 1:
        raise InadmissibleParametersError("the exceptional family starts at degree 1")
    alpha = Fraction(alpha)
    beta = Fraction(beta)
    if alpha <= -1 or beta <= -1:
        raise InadmissibleParametersError("need alpha, beta > -1")
    if alpha == beta:
        raise InadmissibleParametersError("need alpha != beta (B would vanish)")
    A, B = _x1_params(alpha, beta)
    J = n - 1
    E = (A + 3 * J) ** 2

    # polynomial helpers over Fraction coefficient lists (index = power of s)
    def pmul(a, b):
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai == 0:
                continue
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
        return out

    def padd(a, b):
        out = [Fraction(0)] * max(len(a), len(b))
        for i, ai in enumerate(a):
            out[i] += ai
        for j, bj in enumerate(b):
            out[j] += bj
        return out

    def pscale(a, c):
        return [x * c for x in a]

    delta = [2 * A - 3, -2 * B]
    one_m_s2 = [Fraction(1), Fraction(0), Fraction(-1)]
    u = [Fraction(2, 3) * B, -Fraction(1, 3) * (2 * A + 3)]
    delta2 = pmul(delta, delta)

    # rows: coefficient of s^k in the identity; cols: c_0..c_n
    rows = {}

    def add_contrib(poly_in_s, col, shift):
        # poly_in_s multiplies s^shift * c_col
        for k, v in enumerate(poly_in_s):
            if v == 0:
                continue
            rows.setdefault(k + shift, {})
            rows[k + shift][col] = rows[k + shift].get(col, Fraction(0)) + v

    for m in range(n + 1):
        # Q'' term: m(m-1) s^(m-2)
        if m >= 2:
            add_contrib(pscale(pmul(one_m_s2, delta2), m * (m - 1)), m, m - 2)
        # 4B Q' delta (1-s^2)
        if m >= 1:
            add_contrib(pscale(pmul(one_m_s2, delta), 4 * B * m), m, m - 1)
        # 8B^2 Q (1-s^2)
        add_contrib(pscale(one_m_s2, 8 * B * B), m, m)
        # u * (Q' delta^2 + 2B Q delta)
        if m >= 1:
            add_contrib(pscale(pmul(u, delta2), m), m, m - 1)
        add_contrib(pscale(pmul(u, delta), 2 * B), m, m)
        # (E - A^2)/9 Q delta^2
        add_contrib(pscale(delta2, Fraction(E - A * A, 9)), m, m)
        # -2(2A-3) Q delta
        add_contrib(pscale(delta, -2 * (2 * A - 3)), m, m)
        # +2((2A-3)^2 - 4B^2) Q
        add_contrib([2 * ((2 * A - 3) ** 2 - 4 * B * B)], m, m)

    # assemble and find the nullspace by Gaussian elimination
    keys = sorted(rows)
    mat = [[rows[k].get(c, Fraction(0)) for c in range(n + 1)] for k in keys]
    ncols = n + 1
    r = 0
    pivots = []
    for c in range(ncols):
        pr = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        pv = mat[r][c]
        mat[r] = [v / pv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    if len(free) != 1:
        raise InadmissibleParametersError(
            f"no unique degree-{n} polynomial eigenfunction for alpha={alpha}, beta={beta}"
        )
    fc = free[0]
    coeffs = [Fraction(0)] * ncols
    coeffs[fc] = Fraction(1)
    for i, c in enumerate(pivots):
        coeffs[c] = -mat[i][fc]
    if coeffs[n] == 0:
        raise InadmissibleParametersError("nullspace vector has degree below n")
    # primitive integer normalization, positive leading coefficient
    den = 1
    for v in coeffs:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = [v * den for v in coeffs]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v.numerator))
    ints = [v / g for v in ints]
    if ints[n] < 0:
        ints = [-v for v in ints]
    return tuple(ints)


def x1_jacobi(n: int, alpha, beta, x):
    """Value of the degree-n exceptional Jacobi polynomial at x."""
    coeffs = x1_jacobi_coefficients(n, Fraction(alpha), Fraction(beta))
    if isinstance(x, np.ndarray):
        out = np.zeros_like(np.asarray(x, dtype=float))
        for c in reversed(coeffs):
            out = out * x + float(c)
        return out
    if isinstance(x, Fraction):
        out = Fraction(0)
        for c in reversed(coeffs):
            out = out * x + c
        return out
    out = 0.0
    for c in reversed(coeffs):
        out = out * x + float(c)
    return out


def model2_angular_factor(A: Fraction, B: Fraction, J1: int):
    """h(phi) for the trigonometric potential as a function of s = sin(3 phi)."""
    A = Fraction(A)
    B = Fraction(B)
    alpha = A / 3 - B / 3 - Fraction(1, 2)
    beta = A / 3 + B / 3 - Fraction(1, 2)
    p = float((A - B) / 6)
    q = float((A + B) / 6)
    Af, Bf = float(A), float(B)

    def h_of_s(s):
        s = np.asarray(s, dtype=float)
        return (
            (1 - s) ** p
            * (1 + s) ** q
            / (2 * Af - 3 - 2 * Bf * s)
            * x1_jacobi(J1 + 1, alpha, beta, s)
        )

    return h_of_s


# -- eigenfunction specification -------------------------------------------------------


@dataclass(frozen=True)
class EigenfunctionSpec:
    """Quantum numbers for one closed-form eigenfunction.

    angular[i] is an int (harmonic degree l_i) for zero/constant blocks and a
    tuple of non-negative ints (J_1..J_{d_i-1}) for a trigonometric block.
    radial holds the per-block oscillator numbers k_i, or (N_r,) for the
    Coulomb family; hyper_J holds the Coulomb inter-block numbers.
    """

    model: ModelSpec
    angular: tuple
    radial: tuple
    hyper_J: tuple = ()

    def __post_init__(self):
        part = self.model.partition
        if len(self.angular) != part.N:
            raise InadmissibleParametersError(f"need {part.N} angular entries")
        fam = self.model.family
        if fam == OSCILLATOR and len(self.radial) != part.N:
            raise InadmissibleParametersError(f"need {part.N} radial numbers")
        if fam == COULOMB:
            if len(self.radial) != 1:
                raise InadmissibleParametersError("coulomb radial numbers are (N_r,)")
            if len(self.hyper_J) != part.N - 1:
                raise InadmissibleParametersError(f"need {part.N - 1} inter-block numbers")
        for v in self.radial + self.hyper_J:
            if not isinstance(v, int) or v < 0:
                raise InadmissibleParametersError("quantum numbers are non-negative integers")
        for i, a in enumerate(self.angular):
            d = part.block_sizes[i]
            pot = self._potential(i)
            if isinstance(pot, Hierarchy):
                if not isinstance(a, tuple) or len(a) != d - 1:
                    raise InadmissibleParametersError(
                        f"block {i + 1} needs a tuple of {d - 1} angular numbers"
                    )
                if not all(isinstance(v, int) and v >= 0 for v in a):
                    raise InadmissibleParametersError("angular numbers are non-negative ints")
            else:
                if not isinstance(a, int) or a < 0:
                    raise InadmissibleParametersError("harmonic degree must be a non-negative int")
                if d == 1 and a != 0:
                    raise InadmissibleParametersError("size-1 blocks admit only l = 0")

    def _potential(self, i: int):
        if i < len(self.model.potentials):
            return self.model.potentials[i]
        return Zero()


def _constant_value(pot) -> float:
    if isinstance(pot, Zero):
        return 0.0
    if isinstance(pot, Constant):
        if isinstance(pot.value, str):
            raise InadmissibleParametersError(
                f"eigenfunction assembly needs a numeric value for {pot.value!r}"
            )
        return float(pot.value)
    raise InadmissibleParametersError(f"unsupported potential {pot!r}")


def block_lambda(es: EigenfunctionSpec, i: int) -> float:
    """Angular eigenvalue of block i: [-L^2 + f_i] on the block factor.

    The Coulomb family adds its (d_i-1)(d_i-3)/4 curvature shift separately.
    """
    part = es.model.partition
    d = part.block_sizes[i]
    pot = es._potential(i)
    a = es.angular[i]
    if isinstance(pot, Hierarchy):
        lvl = pot.levels[0]
        if not isinstance(lvl, Model2F11):
            raise InadmissibleParametersError(
                "closed-form eigenfunctions need a trigonometric innermost level"
            )
        A = float(lvl.A)
        J1 = a[0]
        total_J = sum(a)
        return (2 * total_J + (d - 2) / 2.0 + A + J1) ** 2 - (d - 2) ** 2 / 4.0
    return a * (a + d - 2) + _constant_value(pot)


def _coulomb_lambda(es: EigenfunctionSpec, i: int) -> float:
    part = es.model.partition
    d = part.block_sizes[i]
    return block_lambda(es, i) + (d - 1) * (d - 3) / 4.0


def oscillator_gamma(es: EigenfunctionSpec, i: int) -> float:
    d = es.model.partition.block_sizes[i]
    disc = 1 + 4 * block_lambda(es, i) + (d - 1) * (d - 3)
    if disc < 0:
        raise InadmissibleParametersError(f"negative discriminant in block {i + 1}")
    return 0.5 * (1 + math.sqrt(disc))


def coulomb_gamma(es: EigenfunctionSpec, j: int) -> float:
    disc = 1 + 4 * _coulomb_lambda(es, j)
    if disc < 0:
        raise InadmissibleParametersError(f"negative discriminant in block {j + 1}")
    return math.sqrt(disc) / 2.0


def oscillator_energy(es: EigenfunctionSpec) -> float:
    """Eigenvalue of the assembled oscillator eigenfunction."""
    omega = _omega(es.model)
    return sum(
        omega * (4 * k + 2 * oscillator_gamma(es, i) + 1) for i, k in enumerate(es.radial)
    )


def coulomb_kappa(es: EigenfunctionSpec) -> float:
    N = es.model.partition.N
    return (
        2 * sum(es.hyper_J)
        + N
        - 0.5
        + sum(coulomb_gamma(es, j) for j in range(N))
    )


def coulomb_energy_value(es: EigenfunctionSpec) -> float:
    eta = _eta(es.model)
    kappa = coulomb_kappa(es)
    N_r = es.radial[0]
    return -(eta**2) / (4.0 * (N_r + kappa) ** 2)


def _omega(model: ModelSpec) -> float:
    if isinstance(model.omega2, str):
        raise InadmissibleParametersError("eigenfunction work needs a numeric omega^2")
    w2 = float(model.omega2)
    if w2 <= 0:
        raise InadmissibleParametersError("omega^2 must be positive")
    return math.sqrt(w2)


def _eta(model: ModelSpec) -> float:
    if isinstance(model.eta, str):
        raise InadmissibleParametersError("eigenfunction work needs a numeric eta")
    return float(model.eta)


# -- assembly ---------------------------------------------------------------------------


def _block_subnorms(ys):
    """Running sub-norms s_k = |(y_1..y_k)| for k = 1..d (s_1 = |y_1|)."""
    out = []
    acc = 0.0
    for y in ys:
        acc = acc + y * y
        out.append(np.sqrt(acc))
    return out


def _zonal_harmonic(d: int, l: int, ys):
    """Rotation-axis harmonic of degree l depending on the last angle only."""
    if d == 1 or l == 0:
        return np.ones_like(ys[0])
    s = _block_subnorms(ys)
    r = s[-1]
    c = ys[-1] / r
    if d == 2:
        return chebyshev_t(l, c)
    a = (d - 3) / 2.0
    return jacobi(l, a, a, c)


def _model2_block_factor(es: EigenfunctionSpec, i: int, ys):
    """Angular factor for a trigonometric block: h(phi_1) times the tower."""
    pot = es._potential(i)
    lvl = pot.levels[0]
    Js = es.angular[i]
    A = Fraction(lvl.A)
    d = len(ys)
    s = _block_subnorms(ys)
    h = model2_angular_factor(lvl.A, lvl.B, Js[0])
    sin_phi1 = ys[0] / s[1 if d > 1 else 0]
    s3 = 3 * sin_phi1 - 4 * sin_phi1**3
    out = h(s3)
    AJ = float(A) + Js[0]
    for a in range(2, d):  # angles phi_2..phi_{d-1}
        c_prev = sum(Js[:a - 1]) + (a - 2) / 2.0 + AJ
        sin_pa = s[a - 1] / s[a]
        cos_pa = ys[a] / s[a]
        out = out * sin_pa ** (c_prev + 0.5 - (a - 1) / 2.0)
        out = out * jacobi(Js[a - 1], c_prev, -0.5, 2 * cos_pa**2 - 1)
    return out


def assemble_eigenfunction(es: EigenfunctionSpec):
    """Callable scalar field Psi(x) for the closed-form eigenfunction."""
    model = es.model
    part = model.partition
    if model.family == OSCILLATOR:
        omega = _omega(model)
        gammas = [oscillator_gamma(es, i) for i in range(part.N)]

        def psi(coords):
            coords = [np.asarray(c, dtype=float) for c in coords]
            out = 1.0
            for i in range(part.N):
                ys = [coords[k] for k in part.block_range(i)]
                d = part.block_sizes[i]
                r2 = sum(y * y for y in ys)
                r = np.sqrt(r2)
                g = gammas[i]
                k = es.radial[i]
                out = out * r ** (g - (d - 1) / 2.0) * np.exp(-omega * r2 / 2.0)
                out = out * laguerre(k, g - 0.5, omega * r2)
                pot = es._potential(i)
                if isinstance(pot, Hierarchy):
                    out = out * _model2_block_factor(es, i, ys)
                else:
                    out = out * _zonal_harmonic(d, es.angular[i], ys)
            return out

        return psi

    # coulomb family
    eta = _eta(model)
    gammas = [coulomb_gamma(es, j) for j in range(part.N)]
    kappa = coulomb_kappa(es)
    E = coulomb_energy_value(es)
    if E >= 0:
        raise InadmissibleParametersError("bound states need E < 0")
    sqrtE = math.sqrt(-E)
    N = part.N
    N_r = es.radial[0]

    def kappa_i(i: int) -> float:
        return 2 * sum(es.hyper_J[:i]) + i + sum(gammas[: i + 1])

    def psi(coords):
        coords = [np.asarray(c, dtype=float) for c in coords]
        radii = []
        out = 1.0
        for i in range(N):
            ys = [coords[k] for k in part.block_range(i)]
            d = part.block_sizes[i]
            r = np.sqrt(sum(y * y for y in ys))
            radii.append(r)
            out = out * r ** (-(d - 1) / 2.0)
            pot = es._potential(i)
            if isinstance(pot, Hierarchy):
                out = out * _model2_block_factor(es, i, ys)
            else:
                out = out * _zonal_harmonic(d, es.angular[i], ys)
        t = _block_subnorms(radii)
        r_full = t[-1]
        out = out * r_full ** (-(N - 1) / 2.0)
        out = out * r_full**kappa * np.exp(-sqrtE * r_full)
        out = out * laguerre(N_r, 2 * kappa - 1, 2 * sqrtE * r_full)
        for i in range(1, N):  # theta_i, i = 1..N-1 (1-based)
            sin_t = t[i - 1] / t[i]
            cos_t = radii[i] / t[i]
            km1 = kappa_i(i - 1)
            out = out * sin_t ** (km1 + 1 - i / 2.0)
            out = out * cos_t ** (gammas[i] + 0.5)
            out = out * jacobi(es.hyper_J[i - 1], km1, gammas[i], 2 * cos_t**2 - 1)
        return out

    return psi
