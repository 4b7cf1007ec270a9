"""Planar area-preserving maps onto superellipse level sets and the product
ball containment check.

The profile function is G(q, p) = c * (|q|^u + |p|^v)^(1/n_exp) with
u = alpha * n_exp, v = beta * n_exp, 1/alpha + 1/beta = 1, and c chosen so
that area{G <= A} = A for every A (homogeneity makes one normalization
suffice).  The planar map sends the circle of enclosed area a onto the level
curve {G = a}; angles are matched through the cumulative area flux of the
level-scaling flow, the 1-form (1/u) x dy - (1/v) y dx along the curve.
Equal flux fractions are what make the map area preserving: for u = v this
form is proportional to the swept sector area, but for alpha != 2 the level
family scales anisotropically and plain sector-area matching distorts areas
by up to a factor max(u, v)/min(u, v).  Green's theorem fixes the total:
the flux around a full curve equals (enclosed area)/n_exp, which the builder
checks against the independent area quadrature.

Applying the map to every complex coordinate z_j = q_j + i p_j sends the
round ball B^{2N}(R) into the product of an l_alpha and an l_beta ball once
R^2 <= (4/pi)(1 - N eps), where eps is the measured rectangle defect of the
level curves.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson, quad
from scipy.interpolate import PchipInterpolator


class EmbeddingError(ValueError):
    pass


@dataclass
class EmbeddingProfile:
    alpha: float
    beta: float
    n_exp: int
    u: float
    v: float
    c_n: float                     # normalization constant = unit-curve area
    sigma_quarter: float           # sector area of one quarter of the unit curve
    sigma_knots: np.ndarray        # cumulative sector area along the quarter
    x_knots: np.ndarray
    y_knots: np.ndarray
    area_table: np.ndarray         # rows (A, measured sublevel area)
    segments: int
    _x_of_sigma: PchipInterpolator = field(init=False, repr=False)
    _y_of_sigma: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        self._x_of_sigma = PchipInterpolator(self.sigma_knots, self.x_knots)
        self._y_of_sigma = PchipInterpolator(self.sigma_knots, self.y_knots)

    def level_value(self, q, p):
        """G(q, p) = c_n (|q|^u + |p|^v)^(1/n_exp)."""
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        return self.c_n * (np.abs(q) ** self.u + np.abs(p) ** self.v) ** (
            1.0 / self.n_exp
        )

    def describe(self) -> dict:
        return {
            "alpha": self.alpha,
            "n_exp": self.n_exp,
            "segments": self.segments,
            "c_n": self.c_n,
        }


# ---------------------------------------------------------------------------
# profile construction


def build_profile(alpha: float, n_exp: int, segments: int = 4096,
                  area_levels: int = 9) -> EmbeddingProfile:
    """Tabulate the unit superellipse |x|^u + |y|^v = 1 (Simpson on two graph
    branches split where x^u = y^v = 1/2), accumulating the sector area for
    the normalization constant and the scaling-flow flux for the angle
    parametrization."""
    alpha = float(alpha)
    if not alpha > 1.0:
        raise EmbeddingError("alpha must exceed 1")
    n_exp = int(n_exp)
    if n_exp < 1:
        raise EmbeddingError("n_exp must be a positive integer")
    beta = alpha / (alpha - 1.0)
    u = alpha * n_exp
    v = beta * n_exp
    half = max(segments // 2, 64)

    # branch A: from (1, 0) up to the split point, parametrized by y
    y_mid = 0.5 ** (1.0 / v)
    ya = np.linspace(0.0, y_mid, half + 1)
    xa = (1.0 - ya**v) ** (1.0 / u)
    dxa = np.zeros_like(ya)
    dxa[1:] = -(v / u) * ya[1:] ** (v - 1.0) * (1.0 - ya[1:] ** v) ** (1.0 / u - 1.0)
    area_a = cumulative_simpson(0.5 * (xa - ya * dxa), x=ya, initial=0.0)
    flux_a = cumulative_simpson((1.0 / u) * xa - (1.0 / v) * ya * dxa,
                                x=ya, initial=0.0)

    # branch B: from the split point to (0, 1); x decreases along the curve,
    # so integrate on the increasing grid and flip the cumulative value
    x_mid = 0.5 ** (1.0 / u)
    xg = np.linspace(0.0, x_mid, half + 1)
    yg = (1.0 - xg**u) ** (1.0 / v)
    dyg = np.zeros_like(xg)
    dyg[1:] = -(u / v) * xg[1:] ** (u - 1.0) * (1.0 - xg[1:] ** u) ** (1.0 / v - 1.0)
    cum_area_b = cumulative_simpson(0.5 * (yg - xg * dyg), x=xg, initial=0.0)
    cum_flux_b = cumulative_simpson((1.0 / v) * yg - (1.0 / u) * xg * dyg,
                                    x=xg, initial=0.0)
    area_b = area_a[-1] + (cum_area_b[-1] - cum_area_b)
    flux_b = flux_a[-1] + (cum_flux_b[-1] - cum_flux_b)

    sigma = np.concatenate([flux_a, flux_b[::-1][1:]])
    area = np.concatenate([area_a, area_b[::-1][1:]])
    xs = np.concatenate([xa, xg[::-1][1:]])
    ys = np.concatenate([ya, yg[::-1][1:]])
    keep = np.concatenate([[True], np.diff(sigma) > 0])
    sigma, xs, ys = sigma[keep], xs[keep], ys[keep]
    sigma_quarter = float(sigma[-1])
    c_n = 4.0 * float(area[-1])  # area of the unit curve normalizes the levels
    # Green's theorem: the flux of (1/u) x dy - (1/v) y dx around the curve
    # is area / n_exp; disagreement signals a quadrature bug
    if abs(4.0 * sigma_quarter - c_n / n_exp) > 1e-9 * c_n:
        raise EmbeddingError("flux/area quadratures disagree")

    profile = EmbeddingProfile(
        alpha=alpha, beta=beta, n_exp=n_exp, u=u, v=v, c_n=c_n,
        sigma_quarter=sigma_quarter, sigma_knots=sigma, x_knots=xs, y_knots=ys,
        area_table=np.zeros((0, 2)), segments=segments,
    )
    levels = np.linspace(0.5, 4.5, area_levels)
    table = np.array([[A, measured_sublevel_area(profile, A)] for A in levels])
    profile.area_table = table
    return profile


def measured_sublevel_area(profile: EmbeddingProfile, A: float) -> float:
    """Independent quadrature of area{G <= A} (adaptive 1-d integral)."""
    if A <= 0:
        return 0.0
    s = (A / profile.c_n) ** profile.n_exp
    xmax = s ** (1.0 / profile.u)

    def height(x):
        return (s - x**profile.u) ** (1.0 / profile.v)

    val, _ = quad(height, 0.0, xmax, epsabs=1e-12, epsrel=1e-12, limit=200)
    return 4.0 * val


def closed_form_unit_area(alpha: float, n_exp: int) -> float:
    """Gamma-function area of {|x|^u + |y|^v <= 1}; test oracle for c_n."""
    beta = alpha / (alpha - 1.0)
    u = alpha * n_exp
    v = beta * n_exp
    return 4.0 * math.exp(
        math.lgamma(1.0 + 1.0 / u)
        + math.lgamma(1.0 + 1.0 / v)
        - math.lgamma(1.0 + 1.0 / u + 1.0 / v)
    )


# ---------------------------------------------------------------------------
# the planar map


def planar_map(profile: EmbeddingProfile, z) -> tuple[np.ndarray, np.ndarray]:
    """f(z) for complex z (q + i p): the circle of enclosed area pi |z|^2 is
    carried onto the level curve {G = pi |z|^2} at equal swept-area angle.

    Returns (q, p) arrays of the same shape as z.
    """
    z = np.asarray(z, dtype=complex)
    qz = np.real(z)
    pz = np.imag(z)
    a = math.pi * (qz**2 + pz**2)
    theta = np.mod(np.arctan2(pz, qz), 2.0 * np.pi)
    tau = theta / (2.0 * np.pi)
    quadrant = np.minimum((tau * 4.0).astype(int), 3)
    frac = tau * 4.0 - quadrant
    sq = profile.sigma_quarter
    mirrored = (quadrant == 1) | (quadrant == 3)
    sigma_loc = np.where(mirrored, (1.0 - frac) * sq, frac * sq)
    X = profile._x_of_sigma(sigma_loc)
    Y = profile._y_of_sigma(sigma_loc)
    sign_x = np.where((quadrant == 1) | (quadrant == 2), -1.0, 1.0)
    sign_y = np.where(quadrant >= 2, -1.0, 1.0)
    ratio = a / profile.c_n
    scale_q = ratio ** (1.0 / profile.alpha)
    scale_p = ratio ** (1.0 / profile.beta)
    q = sign_x * X * scale_q
    p = sign_y * Y * scale_p
    return q, p


def planar_map_inverse(profile: EmbeddingProfile, q, p,
                       iters: int = 60) -> np.ndarray:
    """Inverse of the planar map from the same tables (bisection on the
    curve angle within the quadrant, which is monotone in the flux
    parameter)."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    A = profile.level_value(q, p)
    r = np.sqrt(A / math.pi)
    sq = profile.sigma_quarter
    ratio = A / profile.c_n
    with np.errstate(divide="ignore", invalid="ignore"):
        X = np.where(A > 0, np.abs(q) / ratio ** (1.0 / profile.alpha), 0.0)
        Y = np.where(A > 0, np.abs(p) / ratio ** (1.0 / profile.beta), 0.0)
    target = np.arctan2(Y, X)
    lo = np.zeros_like(X)
    hi = np.full_like(X, sq)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ang = np.arctan2(profile._y_of_sigma(mid), profile._x_of_sigma(mid))
        take = ang < target  # angle increases along the quarter
        lo = np.where(take, mid, lo)
        hi = np.where(take, hi, mid)
    sigma_loc = 0.5 * (lo + hi)
    frac = sigma_loc / sq
    qpos = q >= 0
    ppos = p >= 0
    quadrant = np.where(qpos & ppos, 0,
                np.where(~qpos & ppos, 1, np.where(~qpos & ~ppos, 2, 3)))
    frac = np.where((quadrant == 1) | (quadrant == 3), 1.0 - frac, frac)
    theta = 2.0 * np.pi * (quadrant + frac) / 4.0
    return r * np.exp(1j * theta)


# ---------------------------------------------------------------------------
# certificates


def eps_rect_check(profile: EmbeddingProfile, r_max: float,
                   n_radial: int = 64, n_angular: int = 512) -> float:
    """Smallest eps with |q(z)|^alpha <= pi |z|^2 / 4 + eps and the same for
    |p(z)|^beta, measured on a polar grid up to |z| = r_max."""
    r = np.linspace(0.0, r_max, n_radial + 1)[1:]
    th = 2.0 * np.pi * np.arange(n_angular) / n_angular
    Z = r[:, None] * np.exp(1j * th[None, :])
    q, p = planar_map(profile, Z)
    target = math.pi * np.abs(Z) ** 2 / 4.0
    excess_q = np.abs(q) ** profile.alpha - target
    excess_p = np.abs(p) ** profile.beta - target
    return float(max(excess_q.max(), excess_p.max(), 0.0))


def jacobian_grid_check(profile: EmbeddingProfile, r_max: float = 1.0,
                        n_radial: int = 24, n_angular: int = 96,
                        axis_margin: float = 1e-3, h: float = 1e-4) -> dict:
    """max |det Df - 1| on a polar grid, excluding an ``axis_margin``
    neighborhood of the axes (finite-difference Jacobian)."""
    r = np.linspace(0.15 * r_max, r_max, n_radial)
    th = 2.0 * np.pi * np.arange(n_angular) / n_angular
    Z = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    keep = (np.abs(np.real(Z)) > axis_margin + 2 * h) & (
        np.abs(np.imag(Z)) > axis_margin + 2 * h
    )
    Z = Z[keep]

    def F(zz):
        q, p = planar_map(profile, zz)
        return q, p

    q_xp, p_xp = F(Z + h)
    q_xm, p_xm = F(Z - h)
    q_yp, p_yp = F(Z + 1j * h)
    q_ym, p_ym = F(Z - 1j * h)
    dqdx = (q_xp - q_xm) / (2 * h)
    dpdx = (p_xp - p_xm) / (2 * h)
    dqdy = (q_yp - q_ym) / (2 * h)
    dpdy = (p_yp - p_ym) / (2 * h)
    det = dqdx * dpdy - dqdy * dpdx
    return {
        "max_abs_det_minus_1": float(np.max(np.abs(det - 1.0))),
        "points": int(Z.size),
    }


def oddness_check(profile: EmbeddingProfile, count: int = 4096,
                  seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    z = rng.normal(size=count) + 1j * rng.normal(size=count)
    q1, p1 = planar_map(profile, z)
    q2, p2 = planar_map(profile, -z)
    return float(max(np.max(np.abs(q1 + q2)), np.max(np.abs(p1 + p2))))


def sample_ball(dim: int, radius: float, count: int, rng: np.random.Generator):
    x = rng.normal(size=(count, dim))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / dim)
    return x * r[:, None]


def product_embedding_check(alpha: float, copies: int, n_exp: int,
                            radius: float | None = None, samples: int = 10**6,
                            seed: int = 0, profile: EmbeddingProfile | None = None,
                            r_factor: float = 1.0, tol: float = 1e-9,
                            block: int = 1 << 16) -> dict:
    """Map sampled points of B^{2N}(R) coordinate-pair-wise and test
    containment in the l_alpha x l_beta product.

    Default R = r_factor * sqrt((4/pi)(1 - N eps)) with eps measured on the
    grid; at r_factor <= 1 the containment fraction must be 1.0.
    """
    N = int(copies)
    if profile is None:
        profile = build_profile(alpha, n_exp)
    beta = profile.beta
    eps = eps_rect_check(profile, r_max=math.sqrt(4.0 / math.pi))
    if radius is None:
        inner = (4.0 / math.pi) * (1.0 - N * eps)
        if inner <= 0:
            raise EmbeddingError("eps too large: no certified radius")
        radius = r_factor * math.sqrt(inner)
    rng = np.random.default_rng(seed)
    contained = 0
    worst = {"excess": -math.inf, "point": None}
    done = 0
    while done < samples:
        m = min(block, samples - done)
        x = sample_ball(2 * N, radius, m, rng)
        sum_q = np.zeros(m)
        sum_p = np.zeros(m)
        for j in range(N):
            zj = x[:, N + j] + 1j * x[:, j]  # (q_j, p_j) pair as q + i p
            qj, pj = planar_map(profile, zj)
            sum_q += np.abs(qj) ** profile.alpha
            sum_p += np.abs(pj) ** beta
        ok = (sum_q <= 1.0 + tol) & (sum_p <= 1.0 + tol)
        contained += int(np.count_nonzero(ok))
        excess = np.maximum(sum_q, sum_p) - 1.0
        k = int(np.argmax(excess))
        if excess[k] > worst["excess"]:
            worst = {"excess": float(excess[k]), "point": x[k].tolist()}
        done += m
    return {
        "alpha": alpha,
        "beta": beta,
        "n_exp": n_exp,
        "copies": N,
        "eps": eps,
        "radius": radius,
        "samples": samples,
        "contained_fraction": contained / samples,
        "worst_excess": worst["excess"],
        "worst_point": worst["point"],
        "seed": seed,
    }


# ---------------------------------------------------------------------------
# caching


def profile_cache_key(alpha: float, n_exp: int, segments: int) -> str:
    raw = f"{float(alpha)!r}|{int(n_exp)}|{int(segments)}"
    return hashlib.sha256(raw.encode()).hexdigest()[:16]


def save_profile(profile: EmbeddingProfile, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    key = profile_cache_key(profile.alpha, profile.n_exp, profile.segments)
    path = directory / f"profile_{key}.npz"
    np.savez_compressed(
        path,
        alpha=profile.alpha, beta=profile.beta, n_exp=profile.n_exp,
        u=profile.u, v=profile.v, c_n=profile.c_n,
        sigma_quarter=profile.sigma_quarter, sigma_knots=profile.sigma_knots,
        x_knots=profile.x_knots, y_knots=profile.y_knots,
        area_table=profile.area_table, segments=profile.segments,
    )
    return path


def load_profile(path) -> EmbeddingProfile:
    d = np.load(path)
    return EmbeddingProfile(
        alpha=float(d["alpha"]), beta=float(d["beta"]), n_exp=int(d["n_exp"]),
        u=float(d["u"]), v=float(d["v"]), c_n=float(d["c_n"]),
        sigma_quarter=float(d["sigma_quarter"]), sigma_knots=d["sigma_knots"],
        x_knots=d["x_knots"], y_knots=d["y_knots"], area_table=d["area_table"],
        segments=int(d["segments"]),
    )


def load_or_build_profile(alpha: float, n_exp: int, segments: int = 4096,
                          cache_dir=None) -> EmbeddingProfile:
    if cache_dir is not None:
        key = profile_cache_key(alpha, n_exp, segments)
        path = Path(cache_dir) / f"profile_{key}.npz"
        if path.exists():
            return load_profile(path)
        profile = build_profile(alpha, n_exp, segments)
        save_profile(profile, cache_dir)
        return profile
    return build_profile(alpha, n_exp, segments)
