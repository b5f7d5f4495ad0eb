"""Analytic error bounds for the kinetic reductions and their numerical checks.

:func:`compute_bound_report` gathers the scalar constants (norms of a, b^-1,
nu; kappa; mu; alpha; beta; b_min) and evaluates every smallness hypothesis
the bounds rely on. The ``check_*`` functions compare measured errors from
:mod:`quetron.analysis` with the bounds, skipping a check whose hypotheses
are unmet. :func:`randomized_audit` and :func:`scaling_slope_study` run
those checks and the relaxation metrics over many networks.
"""

import logging
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigvals, svdvals
from scipy.stats import linregress

from quetron.analysis import evolution_error, relaxation_metrics, relaxation_rate
from quetron.errors import InsufficientDataError, SpecValidationError
from quetron.kinetic import compute_N, compute_N0
from quetron.linalg import deflation_basis, operator_norm, restrict_to_inequality
from quetron.liouvillian import assemble_blocks
from quetron.models import (
    NOISE_FLOOR,
    SCHUR_RTOL,
    AuditResult,
    BoundCheck,
    BoundReport,
    LiouvillianBlocks,
    NetworkSpec,
    RelaxationMetrics,
    ScalingFamily,
    ScalingStudy,
    SlopeFit,
)
from quetron.network import is_connected, random_network
from quetron.parallel import ordered_map

logger = logging.getLogger(__name__)

RELAXATION_CHECKS = ("relaxation_M_N", "relaxation_N_N0", "relaxation_N_N0_local",
                     "relaxation_triangle", "network_difference")
EVOLUTION_CHECKS = ("evolution_M_N", "evolution_N_N0", "evolution_N_N0_local")
LEMMA_CHECKS = ("resolvent_right_small", "resolvent_right_large", "resolvent_sliver_small",
                "resolvent_sliver_small_gap", "resolvent_sliver_large")
CHANNELS = {"MN": "delta_tau_rel", "MN0": "delta_tau0_rel", "NN0": "delta_tau1_rel"}
# M and N share one Schur reduction, so these errors are rounding only
ROUNDING_CHANNELS = ("MN", "local_MN")


def bound_precondition(spec: NetworkSpec) -> Optional[str]:
    """Name the first unmet precondition of the bound analysis, or None.

    Raises:
        SpecValidationError: For complex couplings, which are never supported
    """
    if not spec.is_real:
        raise SpecValidationError("bounds are only established for real couplings V_kl")
    if spec.n < 2:
        return "network needs at least two sites"
    if np.any(spec.dephasing <= 0):
        return "every dephasing rate gamma_k must be positive"
    if not spec.is_lossless:
        return "loss rates kappa_k must be zero"
    if not is_connected(spec):
        return "network must be connected"
    return None


def compute_bound_report(spec: NetworkSpec, blocks: Optional[LiouvillianBlocks] = None) -> BoundReport:
    """Compute the bound constants and hypothesis flags.

    Raises:
        SpecValidationError: If the spec is not connected, real, lossless and
            dephased on every site
    """
    unmet = bound_precondition(spec)
    if unmet:
        raise SpecValidationError(f"bound analysis precondition unmet: {unmet}")
    if blocks is None:
        blocks = assemble_blocks(spec)
    b = blocks.b
    N = compute_N(spec, blocks)

    norm_a = operator_norm(blocks.a)
    norm_binv = 1.0 / float(svdvals(b)[-1])
    norm_b0inv = 1.0 / float(svdvals(blocks.b0)[-1])
    norm_nu = operator_norm(blocks.nu)
    kappa = norm_a ** 2 * norm_binv ** 2
    kappa0 = norm_a ** 2 * norm_b0inv ** 2
    mu = relaxation_rate(N)
    mu0 = relaxation_rate(compute_N0(spec))
    alpha = min(0.5 / norm_binv, 0.25 * mu / kappa)
    alpha_hat = min(0.5 / norm_binv, 0.125 * mu / kappa) - mu
    b_min = float(np.min(np.abs(eigvals(b).real)))
    beta = max(1.0, 1.0 / (alpha * b_min * norm_binv ** 2))
    norm_N = operator_norm(restrict_to_inequality(N))

    hypotheses = {
        "nu_small": norm_nu <= 0.5 / norm_binv,
        "nu_small_local": norm_nu <= 0.5 / norm_b0inv,
        "network_gap_small": 2.0 * kappa * norm_nu <= 0.5 * mu,
        "network_gap_small_local": 2.0 * kappa0 * norm_nu <= 0.5 * mu0,
        "mu_below_alpha": mu < alpha,
        "network_below_half_alpha": norm_N <= 0.5 * alpha,
        "sliver_admissible": alpha_hat > 0 and mu < alpha_hat and b_min > 0.5 * mu,
        "evolution_gap_small": 2.0 * kappa * norm_nu <= 0.25 * mu,
        "evolution_gap_small_local": 2.0 * kappa0 * norm_nu <= 0.25 * mu0,
    }
    return BoundReport(
        norm_a=norm_a,
        norm_binv=norm_binv,
        norm_b0inv=norm_b0inv,
        norm_nu=norm_nu,
        kappa=kappa,
        kappa0=kappa0,
        mu=mu,
        mu0=mu0,
        alpha=alpha,
        alpha_hat=alpha_hat,
        beta=beta,
        b_min=b_min,
        hypotheses={key: bool(value) for key, value in hypotheses.items()},
    )


def _unmet(report: BoundReport, needed: Sequence[str]) -> List[str]:
    return [name for name in needed if not report.hypotheses.get(name, False)]


def _check(
    name: str,
    report: BoundReport,
    needed: Sequence[str],
    measured: np.ndarray,
    bound: np.ndarray,
    points: Optional[np.ndarray] = None,
    rtol: float = 0.0
) -> BoundCheck:
    """Compare measured values with bound values and keep the worst point."""
    unmet = _unmet(report, needed)
    if unmet:
        logger.warning("skipping %s: unmet %s", name, ", ".join(unmet))
        return BoundCheck(name=name, status="skipped", reason="unmet: " + ", ".join(unmet))
    measured = np.atleast_1d(np.asarray(measured, dtype=float))
    bound = np.broadcast_to(np.asarray(bound, dtype=float), measured.shape)
    with np.errstate(divide="ignore"):
        margins = np.where(measured > 0, bound / np.where(measured > 0, measured, 1.0), np.inf)
    worst = int(np.argmin(margins))
    passed = bool(np.all(measured <= bound * (1.0 + rtol)))
    if not passed:
        worst = int(np.argmax(measured - bound * (1.0 + rtol)))
    return BoundCheck(
        name=name,
        status="pass" if passed else "fail",
        bound=float(bound[worst]),
        measured=float(measured[worst]),
        margin=float(margins[worst]),
        t=None if points is None else float(points[worst]),
    )


def _skipped(names: Sequence[str], reason: str) -> List[BoundCheck]:
    return [BoundCheck(name=name, status="skipped", reason=reason) for name in names]


def check_relaxation_bounds(
    spec: NetworkSpec,
    report: Optional[BoundReport] = None,
    metrics: Optional[RelaxationMetrics] = None
) -> List[BoundCheck]:
    """Check the relaxation-time bounds.

    Checks Delta tau <= (4/pi) kappa mu^-1 (1 + beta) for the quantum versus
    exact kinetic network, Delta tau_1 <= 4 kappa mu^-2 ||nu|| (and its
    (kappa0, mu0) variant), the triangle inequality
    Delta tau_0 <= Delta tau + Delta tau_1, and
    ||N - N0|| <= 2 ||a||^2 ||b0^-1||^2 ||nu||.
    """
    unmet = bound_precondition(spec)
    if unmet:
        return _skipped(RELAXATION_CHECKS, unmet)
    blocks = assemble_blocks(spec)
    report = report or compute_bound_report(spec, blocks)
    metrics = metrics or relaxation_metrics(spec)
    kappa, mu, norm_nu = report.kappa, report.mu, report.norm_nu
    difference = operator_norm(compute_N(spec, blocks).data - compute_N0(spec).data)
    return [
        _check("relaxation_M_N", report, ("mu_below_alpha", "network_below_half_alpha"),
               metrics.delta_tau, 4.0 / np.pi * kappa / mu * (1.0 + report.beta)),
        _check("relaxation_N_N0", report, ("nu_small", "network_gap_small"),
               metrics.delta_tau1, 4.0 * kappa / mu ** 2 * norm_nu),
        _check("relaxation_N_N0_local", report, ("nu_small_local", "network_gap_small_local"),
               metrics.delta_tau1, 4.0 * report.kappa0 / report.mu0 ** 2 * norm_nu),
        _check("relaxation_triangle", report, (),
               metrics.delta_tau0, metrics.delta_tau + metrics.delta_tau1, rtol=1e-9),
        _check("network_difference", report, ("nu_small_local",),
               difference, 2.0 * report.kappa0 * norm_nu, rtol=1e-9),
    ]


def default_time_grid(report: BoundReport, count: int = 40) -> np.ndarray:
    """t = 0 followed by log-spaced times from the coherence scale to ten relaxation times."""
    fastest = 0.1 * report.norm_binv
    return np.concatenate(([0.0], np.geomspace(fastest, 10.0 / report.mu, count)))


def check_evolution_bounds(
    spec: NetworkSpec,
    t_grid: Optional[np.ndarray] = None,
    report: Optional[BoundReport] = None
) -> List[BoundCheck]:
    """Check the propagator-difference bounds on a time grid.

    M versus N:  e^{-mu t/2} 4 (4 kappa + 2 kappa ln(2 alpha_hat/mu)
    + ||a||^2 / (alpha_hat (b_min - mu/2))).
    N versus N0: 32 e^{-mu t/2} kappa ||nu|| / mu, also with (kappa0, mu0).
    """
    unmet = bound_precondition(spec)
    if unmet:
        return _skipped(EVOLUTION_CHECKS, unmet)
    report = report or compute_bound_report(spec)
    t_grid = default_time_grid(report) if t_grid is None else np.asarray(t_grid, dtype=float)
    errors = evolution_error(spec, t_grid)
    kappa, mu, alpha_hat = report.kappa, report.mu, report.alpha_hat
    decay = np.exp(-0.5 * mu * t_grid)

    checks = []
    if report.hypotheses["sliver_admissible"]:
        constant = 4.0 * (
            4.0 * kappa
            + 2.0 * kappa * np.log(2.0 * alpha_hat / mu)
            + report.norm_a ** 2 / (alpha_hat * (report.b_min - 0.5 * mu))
        )
        checks.append(_check("evolution_M_N", report, ("sliver_admissible",),
                             errors.err_N, decay * constant, t_grid))
    else:
        checks.append(_check("evolution_M_N", report, ("sliver_admissible",), 0.0, 0.0))
    checks.append(_check("evolution_N_N0", report, ("nu_small", "evolution_gap_small"),
                         errors.err_N_N0, 32.0 * decay * kappa * report.norm_nu / mu, t_grid))
    checks.append(_check("evolution_N_N0_local", report, ("nu_small_local", "evolution_gap_small_local"),
                         errors.err_N_N0,
                         32.0 * np.exp(-0.5 * report.mu0 * t_grid) * report.kappa0 * report.norm_nu / report.mu0,
                         t_grid))
    return checks


def resolvent_difference(blocks: LiouvillianBlocks, z: complex) -> float:
    """||S(z)|| on I with S(z) = (z - a^T (b - z)^-1 a)^-1 - (z - a^T b^-1 a)^-1."""
    n = blocks.n
    Q = deflation_basis(n)
    b = blocks.b + blocks.c2
    identity = np.eye(b.shape[0])
    shifted = blocks.a.T @ np.linalg.solve(b - z * identity, blocks.a)
    static = blocks.a.T @ np.linalg.solve(b, blocks.a)
    inner = np.eye(n - 1)
    first = np.linalg.inv(z * inner - Q.T @ shifted @ Q)
    second = np.linalg.inv(z * inner - Q.T @ static @ Q)
    return operator_norm(first - second)


def check_lemma_bounds(
    spec: NetworkSpec,
    report: Optional[BoundReport] = None,
    points: int = 40
) -> List[BoundCheck]:
    """Spot-check the resolvent-difference estimates along both contours.

    On the imaginary axis z = iy: ||S|| <= 4 kappa mu^-2 |z| for |z| <= alpha
    and ||S|| <= 4 beta kappa / |z| beyond. On the shifted line
    z = iy - mu/2: ||S|| <= 16 kappa mu^-2 |z| and ||S|| <= 4 kappa |z| / y^2
    for |y| <= alpha_hat, and ||S|| <= 4 ||a||^2 / (y^2 (b_min - mu/2)) beyond.
    """
    unmet = bound_precondition(spec)
    if unmet:
        return _skipped(LEMMA_CHECKS, unmet)
    blocks = assemble_blocks(spec)
    report = report or compute_bound_report(spec, blocks)
    kappa, mu, alpha, alpha_hat = report.kappa, report.mu, report.alpha, report.alpha_hat
    far = 1e3 * max(alpha, operator_norm(blocks.b))

    def curve(ys: np.ndarray, shift: float) -> Tuple[np.ndarray, np.ndarray]:
        zs = 1j * ys - shift
        return zs, np.array([resolvent_difference(blocks, z) for z in zs])

    ys = np.geomspace(1e-3 * alpha, alpha, points)
    zs, values = curve(ys, 0.0)
    checks = [_check("resolvent_right_small", report, ("mu_below_alpha", "network_below_half_alpha"),
                     values, 4.0 * kappa / mu ** 2 * np.abs(zs), ys)]
    ys = np.geomspace(alpha, far, points)
    zs, values = curve(ys, 0.0)
    checks.append(_check("resolvent_right_large", report, ("mu_below_alpha", "network_below_half_alpha"),
                         values, 4.0 * report.beta * kappa / np.abs(zs), ys))

    if not report.hypotheses["sliver_admissible"]:
        checks.extend(_skipped(LEMMA_CHECKS[2:], "unmet: sliver_admissible"))
        return checks
    ys = np.geomspace(1e-2 * mu, alpha_hat, points)
    zs, values = curve(ys, 0.5 * mu)
    checks.append(_check("resolvent_sliver_small", report, ("sliver_admissible",),
                         values, 16.0 * kappa / mu ** 2 * np.abs(zs), ys))
    checks.append(_check("resolvent_sliver_small_gap", report, ("sliver_admissible",),
                         values, 4.0 * kappa * np.abs(zs) / ys ** 2, ys))
    ys = np.geomspace(alpha_hat, far, points)
    zs, values = curve(ys, 0.5 * mu)
    checks.append(_check("resolvent_sliver_large", report, ("sliver_admissible",),
                         values, 4.0 * report.norm_a ** 2 / (ys ** 2 * (report.b_min - 0.5 * mu)), ys))
    return checks


def audit_spec(
    spec: NetworkSpec,
    t_grid: Optional[np.ndarray] = None,
    lemmas: bool = False
) -> BoundReport:
    """Run every bound check on one network.

    A spec failing the connectivity, dephasing or loss preconditions yields
    a report without constants whose checks are all skipped.

    Raises:
        SpecValidationError: For complex couplings
    """
    unmet = bound_precondition(spec)
    if unmet:
        logger.warning("bound checks skipped: %s", unmet)
        names = RELAXATION_CHECKS + EVOLUTION_CHECKS + (LEMMA_CHECKS if lemmas else ())
        return BoundReport(precondition=unmet, checks=_skipped(names, unmet))
    report = compute_bound_report(spec)
    checks = check_relaxation_bounds(spec, report) + check_evolution_bounds(spec, t_grid, report)
    if lemmas:
        checks += check_lemma_bounds(spec, report)
    return report.model_copy(update={"checks": checks})


def closed_form_highly_connected(n: int, theta: float, gamma: float) -> Dict[str, float]:
    """Analytic constants of the ideal all-to-all network (couplings theta, gaps zero)."""
    return {
        "norm_a": np.sqrt(2.0 * n) * theta,
        "norm_b0inv": 1.0 / gamma,
        "kappa0": 2.0 * n * theta ** 2 / gamma ** 2,
        "mu0": 2.0 * n * theta ** 2 / gamma,
        "alpha": gamma / 4.0,
        "beta": 4.0,
    }


def closed_form_chain(n: int, theta: float, gamma: float, e: float) -> Dict[str, object]:
    """Analytic constants of the ideal ring with link gap gamma * e.

    ``norm_b0inv_links`` and ``kappa0_links`` restrict b0 to the coherences
    of coupled pairs; ``alpha`` is the large-n estimate.
    """
    rate = 2.0 * theta ** 2 / (gamma * (1.0 + e ** 2))
    p = np.arange(n)
    return {
        "norm_a": np.sqrt(8.0) * theta,
        "norm_b0inv_links": 1.0 / (gamma * np.sqrt(1.0 + e ** 2)),
        "kappa0_links": 8.0 * theta ** 2 / (gamma ** 2 * (1.0 + e ** 2)),
        "spectrum": -2.0 * rate * (1.0 - np.cos(2.0 * np.pi * p / n)),
        "mu0": 2.0 * rate * (1.0 - np.cos(2.0 * np.pi / n)),
        "alpha": gamma * (2.0 * np.pi / n) ** 2 / 16.0,
    }


def fit_slope(x: Sequence[float], y: Sequence[float], floor: float = NOISE_FLOOR, min_points: int = 4) -> SlopeFit:
    """Least-squares slope of log10(y) against log10(x).

    Points with y at or below ``floor`` (or non-finite) are excluded.

    Raises:
        InsufficientDataError: If fewer than ``min_points`` points remain
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(y) & (y > floor) & (x > 0)
    if keep.sum() < min_points:
        raise InsufficientDataError(
            f"slope fit needs {min_points} points above {floor:g}, got {int(keep.sum())}"
        )
    if not keep.all():
        logger.warning("slope fit dropped %d points at the noise floor", int((~keep).sum()))
    lx, ly = np.log10(x[keep]), np.log10(y[keep])
    fit = linregress(lx, ly)
    residuals = ly - (fit.intercept + fit.slope * lx)
    return SlopeFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        rvalue=float(fit.rvalue),
        stderr=float(fit.stderr),
        residuals=residuals.tolist(),
        used_points=int(keep.sum()),
        excluded_points=int((~keep).sum()),
    )


def fit_channel(channel: str, ratios: Sequence[float], values: Sequence[float]) -> Tuple[Optional[SlopeFit], Optional[str]]:
    """Slope of one error channel, or the reason it is excluded.

    Channels in ``ROUNDING_CHANNELS`` are never fitted. A value above
    ``SCHUR_RTOL`` on one of them means M and N disagree and is logged.

    Returns:
        Tuple of (fit or None, exclusion reason or None)
    """
    if channel in ROUNDING_CHANNELS:
        worst = float(np.max(values, initial=0.0))
        if worst > SCHUR_RTOL:
            logger.warning("%s reaches %.3e; M and N should agree up to rounding", channel, worst)
        return None, f"zero up to rounding (max {worst:.1e})"
    try:
        return fit_slope(ratios, values), None
    except InsufficientDataError as exc:
        logger.warning("no slope for channel %s: %s", channel, exc)
        return None, None


def _metrics_at(family: ScalingFamily, ratio: float) -> RelaxationMetrics:
    return relaxation_metrics(family.at_ratio(ratio).instantiate())


def scaling_slope_study(
    family: ScalingFamily,
    theta_grid: Sequence[float],
    workers: int = 1,
    progress: bool = False
) -> ScalingStudy:
    """Relaxation errors along a grid of Theta/Gamma with Gamma fixed, and their slopes.

    Args:
        family: Network family; its gamma is kept and theta replaced
        theta_grid: Theta/Gamma values spanning at least two decades
        workers: Worker processes
        progress: Show a progress bar

    Raises:
        InsufficientDataError: If the grid has fewer than four points or
            spans less than two decades
    """
    ratios = sorted(float(value) for value in theta_grid)
    if len(ratios) < 4:
        raise InsufficientDataError(f"slope study needs at least 4 grid points, got {len(ratios)}")
    if np.log10(ratios[-1] / ratios[0]) < 2.0 - 1e-9:
        raise InsufficientDataError("slope study grid must span at least two decades")
    metrics = ordered_map(partial(_metrics_at, family), ratios, workers, desc=family.name, progress=progress)
    slopes, excluded = {}, {}
    for channel, field in CHANNELS.items():
        slopes[channel], reason = fit_channel(channel, ratios, [getattr(item, field) for item in metrics])
        if reason is not None:
            excluded[channel] = reason
    return ScalingStudy(family=family.name, ratios=ratios, metrics=metrics, slopes=slopes, excluded=excluded)


def _audit_draw(seed: np.random.SeedSequence, n_range: Tuple[int, int], ratio: float) -> Tuple[int, BoundReport]:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    spec = random_network(n, rng).with_rates(theta=ratio, gamma=1.0)
    return n, audit_spec(spec)


def randomized_audit(
    draws: int,
    seed: int,
    n_range: Tuple[int, int] = (3, 7),
    theta_over_gamma: float = 1e-3,
    workers: int = 1,
    progress: bool = False
) -> AuditResult:
    """Run every bound check on random connected real networks.

    Each draw gets its own child seed spawned from ``seed``, so results do
    not depend on the worker count.
    """
    children = np.random.SeedSequence(seed).spawn(draws)
    outcomes = ordered_map(
        partial(_audit_draw, n_range=n_range, ratio=theta_over_gamma),
        children, workers, desc="audit", progress=progress,
    )
    result = AuditResult(seed=seed, sizes=[n for n, _ in outcomes], reports=[r for _, r in outcomes])
    for index, check in result.failures:
        logger.warning("draw %d: %s failed (measured %.3e > bound %.3e)", index, check.name, check.measured, check.bound)
    return result
