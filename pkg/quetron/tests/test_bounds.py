"""Tests for the bound constants, bound checks and slope studies."""

import logging

import numpy as np
import pytest

from quetron.analysis import relaxation_metrics
from quetron.bounds import (
    EVOLUTION_CHECKS,
    LEMMA_CHECKS,
    RELAXATION_CHECKS,
    audit_spec,
    bound_precondition,
    check_lemma_bounds,
    closed_form_chain,
    closed_form_highly_connected,
    compute_bound_report,
    default_time_grid,
    fit_channel,
    fit_slope,
    randomized_audit,
    scaling_slope_study,
)
from quetron.errors import InsufficientDataError, SpecValidationError
from quetron.experiments.fmo_sweep import run_fmo_sweep
from quetron.experiments.networks import run_dim_scan
from quetron.kinetic import compute_N0
from quetron.models import ExperimentConfig, NetworkSpec
from quetron.network import circular_chain, highly_connected, network_family


def coupled_pair_spec(dephasing=(1.0, 1.0, 1.0), loss=(0.0, 0.0, 0.0), connected=True, coupling=0.01):
    couplings = np.zeros((3, 3), dtype=complex)
    couplings[0, 1] = coupling
    couplings[1, 0] = np.conj(coupling)
    if connected:
        couplings[1, 2] = couplings[2, 1] = 0.01
    return NetworkSpec(n=3, energies=[0.0, 0.5, 1.0], couplings=couplings, dephasing=list(dephasing), loss=list(loss))


class TestClosedForms:
    """Test cases for the analytic constants of the ideal families."""

    @pytest.mark.parametrize("n", [4, 6, 8, 12])
    def test_highly_connected(self, n):
        """Norms, kappa0 and mu0 match the closed forms."""
        theta, gamma = 1e-3, 2.0
        report = compute_bound_report(highly_connected(n, theta=theta, gamma=gamma))
        expected = closed_form_highly_connected(n, theta, gamma)
        for key in ("norm_a", "norm_b0inv", "kappa0", "mu0"):
            assert getattr(report, key) == pytest.approx(expected[key], rel=1e-10)

    def test_highly_connected_alpha_and_beta(self):
        """alpha and beta approach Gamma/4 and 4 for small Theta/Gamma."""
        report = compute_bound_report(highly_connected(4, theta=1e-3))
        expected = closed_form_highly_connected(4, 1e-3, 1.0)
        assert report.alpha == pytest.approx(expected["alpha"], rel=1e-3)
        assert report.beta == pytest.approx(expected["beta"], rel=1e-3)

    @pytest.mark.parametrize("n", [4, 6, 10])
    def test_chain(self, n):
        """||a|| and the N0 spectrum of the ideal ring."""
        theta, gamma, e = 1e-2, 1.0, 1.5
        spec = circular_chain(n, theta=theta, gamma=gamma, e=e)
        expected = closed_form_chain(n, theta, gamma, e)
        report = compute_bound_report(spec)
        assert report.norm_a == pytest.approx(expected["norm_a"], rel=1e-10)
        assert report.mu0 == pytest.approx(expected["mu0"], rel=1e-10)
        spectrum = np.sort(np.linalg.eigvalsh(compute_N0(spec).data))
        scale = np.abs(expected["spectrum"]).max()
        np.testing.assert_allclose(spectrum, np.sort(expected["spectrum"]), atol=1e-12 * scale)


class TestPreconditions:
    """Test cases for bound_precondition and skipped checks."""

    def test_connected_real_network_qualifies(self):
        """No unmet precondition for a dephased lossless connected network."""
        assert bound_precondition(coupled_pair_spec()) is None

    @pytest.mark.parametrize("kwargs, fragment", [
        ({"dephasing": (1.0, 0.0, 1.0)}, "dephasing"),
        ({"loss": (0.0, 0.1, 0.0)}, "loss"),
        ({"connected": False}, "connected"),
    ])
    def test_unmet_precondition_skips_everything(self, kwargs, fragment):
        """The report names the failed condition and skips every check."""
        report = audit_spec(coupled_pair_spec(**kwargs), lemmas=True)
        assert fragment in report.precondition
        assert report.kappa is None
        assert len(report.checks) == len(RELAXATION_CHECKS + EVOLUTION_CHECKS + LEMMA_CHECKS)
        assert all(check.status == "skipped" for check in report.checks)

    def test_complex_couplings_raise(self):
        """Complex couplings are outside the bound analysis altogether."""
        spec = coupled_pair_spec(coupling=0.01 + 0.005j)
        with pytest.raises(SpecValidationError, match="real"):
            audit_spec(spec)

    def test_report_refuses_unmet_precondition(self):
        """Constants are only computed when the preconditions hold."""
        with pytest.raises(SpecValidationError, match="precondition"):
            compute_bound_report(coupled_pair_spec(loss=(0.1, 0.0, 0.0)))


class TestChecks:
    """Test cases for the bound checks on small networks."""

    @pytest.fixture
    def spec(self):
        return highly_connected(4, theta=1e-3)

    def test_hypotheses_hold_for_weak_coupling(self, spec):
        """Every smallness hypothesis holds at Theta/Gamma = 1e-3."""
        report = compute_bound_report(spec)
        assert all(report.hypotheses.values()), report.hypotheses

    def test_all_checks_pass(self, spec):
        """Relaxation and evolution bounds hold on the ideal network."""
        report = audit_spec(spec)
        names = [check.name for check in report.checks]
        assert names == list(RELAXATION_CHECKS + EVOLUTION_CHECKS)
        assert report.failed == []
        assert all(check.status == "pass" for check in report.checks)

    def test_margins_are_recorded(self, spec):
        """Passed checks carry measured, bound and a margin of at least one up to rounding."""
        for check in audit_spec(spec).checks:
            assert check.bound is not None and check.measured is not None
            assert check.margin >= 1.0 - 1e-8

    def test_lemma_checks(self, spec):
        """The resolvent estimates hold along both contours."""
        checks = check_lemma_bounds(spec, points=15)
        assert [check.name for check in checks] == list(LEMMA_CHECKS)
        assert all(check.status == "pass" for check in checks)

    def test_time_grid(self, spec):
        """The default grid starts at zero and reaches ten relaxation times."""
        report = compute_bound_report(spec)
        grid = default_time_grid(report, count=10)
        assert grid[0] == 0.0
        assert len(grid) == 11
        assert grid[-1] == pytest.approx(10.0 / report.mu)
        assert np.all(np.diff(grid) > 0)


class TestSlopeFit:
    """Test cases for fit_slope."""

    def test_exact_power_law(self):
        """y = 3 x^2 gives slope 2 and intercept log10(3)."""
        x = np.geomspace(1e-3, 1e-1, 9)
        fit = fit_slope(x, 3.0 * x ** 2)
        assert fit.slope == pytest.approx(2.0, abs=1e-12)
        assert fit.intercept == pytest.approx(np.log10(3.0), abs=1e-12)
        assert fit.used_points == 9
        assert fit.excluded_points == 0

    def test_floor_points_excluded(self):
        """Values at the noise floor do not enter the fit."""
        x = np.geomspace(1e-3, 1e-1, 6)
        y = x.copy()
        y[:2] = 1e-14
        fit = fit_slope(x, y)
        assert fit.used_points == 4
        assert fit.excluded_points == 2
        assert fit.slope == pytest.approx(1.0, abs=1e-12)

    def test_too_few_points(self):
        """Fewer than four usable points is an error."""
        with pytest.raises(InsufficientDataError):
            fit_slope([1.0, 10.0, 100.0], [1.0, 2.0, 3.0])
        with pytest.raises(InsufficientDataError):
            fit_slope(np.geomspace(1, 100, 5), np.zeros(5))


class TestScalingStudy:
    """Test cases for scaling_slope_study."""

    @pytest.fixture
    def family(self):
        return network_family("highly-ideal", 4, 1e-3, 1.0)

    def test_grid_too_short(self, family):
        """Three points are not enough."""
        with pytest.raises(InsufficientDataError, match="4 grid points"):
            scaling_slope_study(family, [1e-3, 1e-2, 1e-1])

    def test_grid_too_narrow(self, family):
        """One decade is not enough."""
        with pytest.raises(InsufficientDataError, match="two decades"):
            scaling_slope_study(family, np.geomspace(1e-3, 1e-2, 6))

    @pytest.mark.slow
    @pytest.mark.parametrize("name, expected", [
        ("highly-ideal", 2.0),
        ("highly-random", 1.0),
        ("chain-ideal", 2.0),
        ("chain-random", 2.0),
    ])
    def test_family_slopes(self, name, expected):
        """Errors against the local network fall off with the expected power."""
        family = network_family(name, 5 if name.startswith("highly") else 6, 1e-3, 1.0, seed=3)
        study = scaling_slope_study(family, np.geomspace(1e-4, 1e-2, 9))
        assert study.slopes["MN0"].slope == pytest.approx(expected, abs=0.3)
        assert all(item.delta_tau_rel < 1e-8 for item in study.metrics)

    def test_rounding_channel_is_excluded(self, family):
        """The M versus N error is never fitted; the other channels are."""
        study = scaling_slope_study(family, np.geomspace(1e-4, 1e-2, 5))
        assert study.slopes["MN"] is None
        assert study.excluded["MN"].startswith("zero up to rounding")
        assert set(study.excluded) == {"MN"}
        assert study.slopes["NN0"].slope == pytest.approx(2.0, abs=0.1)

    def test_mismatch_is_logged(self, caplog):
        """A rounding channel above tolerance is reported, still without a slope."""
        with caplog.at_level(logging.WARNING, logger="quetron.bounds"):
            fit, reason = fit_channel("MN", [1e-4, 1e-3, 1e-2, 1e-1], [1e-3, 1e-3, 1e-3, 1e-3])
        assert fit is None
        assert "1.0e-03" in reason
        assert "should agree" in caplog.text


class TestRelaxationAtWeakCoupling:
    """Regression cases for relaxation errors at small Theta/Gamma."""

    @pytest.mark.parametrize("ratio", [1e-4, 3.2e-4, 1e-3, 1e-2])
    def test_quantum_and_kinetic_differences_coincide(self, ratio):
        """M vs N0 equals N vs N0 because M and N relax identically."""
        spec = network_family("chain-random", 6, ratio, 1.0, seed=3).instantiate()
        metrics = relaxation_metrics(spec)
        assert abs(metrics.delta_tau0 - metrics.delta_tau1) <= 1e-6 * metrics.delta_tau1
        assert metrics.delta_tau_rel < 1e-8

    def test_compliant_network_passes(self):
        """A very weakly coupled random ring passes the M vs N relaxation check."""
        report = audit_spec(network_family("chain-random", 6, 3e-5, 1.0, seed=3).instantiate())
        check = next(check for check in report.checks if check.name == "relaxation_M_N")
        assert check.status == "pass"
        assert check.measured < 1e-3 * check.bound


class TestAudit:
    """Test cases for randomized_audit."""

    def test_small_audit_passes(self):
        """A handful of weakly coupled networks satisfy every bound."""
        result = randomized_audit(draws=5, seed=1)
        assert len(result.reports) == 5
        assert all(3 <= n <= 7 for n in result.sizes)
        assert result.failures == []

    def test_deterministic(self):
        """The same seed draws the same networks and measurements."""
        first = randomized_audit(draws=3, seed=42, n_range=(3, 4))
        second = randomized_audit(draws=3, seed=42, n_range=(3, 4))
        assert first.sizes == second.sizes
        for a, b in zip(first.reports, second.reports):
            assert [c.measured for c in a.checks] == [c.measured for c in b.checks]

    def test_worker_count_does_not_matter(self):
        """Process pools return the same draws in the same order."""
        serial = randomized_audit(draws=4, seed=8, n_range=(3, 4))
        pooled = randomized_audit(draws=4, seed=8, n_range=(3, 4), workers=2)
        assert serial.sizes == pooled.sizes
        for a, b in zip(serial.reports, pooled.reports):
            assert [c.measured for c in a.checks] == [c.measured for c in b.checks]

    @pytest.mark.slow
    def test_hundred_draws(self):
        """One hundred random networks, no failed check."""
        assert randomized_audit(draws=100, seed=0).failures == []


@pytest.mark.slow
class TestExperiments:
    """Long-running reproductions of the reference sweeps."""

    def test_dim_scan_highly_connected(self, tmp_path):
        """The N versus N0 error grows quadratically with n on the all-to-all network."""
        config = ExperimentConfig(command="dim-scan", family="highly-ideal", out_dir=str(tmp_path))
        outcome = run_dim_scan(config)
        assert outcome["fit"].slope == pytest.approx(2.0, abs=0.4)

    def test_dim_scan_chain_levels_off(self, tmp_path):
        """On the ring the error stops growing for large n."""
        config = ExperimentConfig(command="dim-scan", family="chain-ideal", out_dir=str(tmp_path))
        outcome = run_dim_scan(config)
        assert outcome["local_slopes"][-1] < 0.5

    def test_fmo_sweep(self, tmp_path):
        """Efficiency peaks near the physiological dephasing and N tracks M."""
        config = ExperimentConfig(command="fmo-sweep", out_dir=str(tmp_path))
        outcome = run_fmo_sweep(config)
        assert 100.0 <= outcome["peak_gamma"] <= 300.0
        assert outcome["max_relerr_N"] < 1e-2
        assert all(row[5] < 1e-2 for row in outcome["rows"] if row[0] >= 2.0)
