"""Data models for quetron.

This module defines the core data structures shared by the solvers: the
network specification, the packed density vector, the block form of the
Lindblad generator, kinetic rate matrices and the result records produced by
the analysis and bound-checking layers. All models use Pydantic for
validation; array-valued fields are stored as read-only NumPy arrays.
"""

from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from quetron.errors import SpecValidationError

HERMITIAN_RTOL = 1e-12
CONDITION_LIMIT = 1e12
NOISE_FLOOR = 1e-12
SCHUR_RTOL = 1e-8
CM_PER_S = 2.9978e10

ARRAY_CONFIG = ConfigDict(frozen=True, arbitrary_types_allowed=True)


def _frozen(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


class NetworkSpec(BaseModel):
    """Parameters of an n-site single-exciton network.

    Energies, couplings and rates share one unit (cm^-1 unless converted on
    load). Sites are 0-based in arrays and 1-based in files and messages.

    Attributes:
        n: Number of sites
        energies: On-site energies E_k, shape (n,)
        couplings: Hermitian coupling matrix V with zero diagonal, shape (n, n)
        dephasing: Pure dephasing rates gamma_k >= 0, shape (n,)
        loss: Total loss rates kappa_k >= 0, shape (n,)
        trapping: Part of each loss rate that counts as productive trapping,
            0 <= trapping_k <= loss_k, shape (n,)
    """
    model_config = ARRAY_CONFIG

    n: int = Field(ge=1, description="Number of sites")
    energies: np.ndarray
    couplings: np.ndarray
    dephasing: np.ndarray
    loss: np.ndarray
    trapping: Optional[np.ndarray] = None

    @field_validator("energies", "dephasing", "loss", "trapping", mode="before")
    @classmethod
    def _real_vector(cls, value):
        if value is None:
            return None
        array = np.asarray(value)
        if np.iscomplexobj(array):
            if np.any(array.imag != 0):
                raise SpecValidationError("site parameters must be real")
            array = array.real
        return _frozen(array, float)

    @field_validator("couplings", mode="before")
    @classmethod
    def _complex_matrix(cls, value):
        return _frozen(value, complex)

    @model_validator(mode="after")
    def _check_consistency(self) -> "NetworkSpec":
        n = self.n
        for name in ("energies", "dephasing", "loss"):
            shape = getattr(self, name).shape
            if shape != (n,):
                raise SpecValidationError(f"{name} has shape {shape}, expected ({n},)")
        if self.couplings.shape != (n, n):
            raise SpecValidationError(
                f"couplings has shape {self.couplings.shape}, expected ({n}, {n})"
            )
        for name in ("energies", "dephasing", "loss"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise SpecValidationError(f"{name} contains non-finite values")
        if not np.all(np.isfinite(self.couplings)):
            raise SpecValidationError("couplings contain non-finite values")

        diagonal = np.abs(np.diag(self.couplings))
        if np.any(diagonal != 0):
            k = int(np.argmax(diagonal))
            raise SpecValidationError(
                f"coupling diagonal must be zero; V[{k + 1},{k + 1}] = {self.couplings[k, k]}"
            )
        skew = np.abs(self.couplings - self.couplings.conj().T)
        scale = max(float(np.max(np.abs(self.couplings), initial=0.0)), 1.0)
        if np.max(skew, initial=0.0) > HERMITIAN_RTOL * scale:
            k, l = np.unravel_index(int(np.argmax(skew)), skew.shape)
            raise SpecValidationError(
                f"couplings are not Hermitian: V[{k + 1},{l + 1}] = {self.couplings[k, l]} "
                f"but V[{l + 1},{k + 1}] = {self.couplings[l, k]}"
            )
        for name in ("dephasing", "loss"):
            values = getattr(self, name)
            if np.any(values < 0):
                k = int(np.argmin(values))
                raise SpecValidationError(f"{name}[{k + 1}] = {values[k]} is negative")

        if self.trapping is None:
            object.__setattr__(self, "trapping", _frozen(np.zeros(n), float))
        if self.trapping.shape != (n,):
            raise SpecValidationError(f"trapping has shape {self.trapping.shape}, expected ({n},)")
        if np.any(self.trapping < 0) or np.any(self.trapping > self.loss):
            raise SpecValidationError("trapping rates must satisfy 0 <= trapping_k <= loss_k")
        return self

    @property
    def is_real(self) -> bool:
        """True when every coupling is real."""
        return bool(np.all(self.couplings.imag == 0))

    @property
    def is_lossless(self) -> bool:
        return bool(np.all(self.loss == 0))

    def hamiltonian(self) -> np.ndarray:
        """Return H + V as a dense complex (n, n) matrix."""
        return np.diag(self.energies).astype(complex) + self.couplings

    def require_bound_mode(self) -> None:
        """Check the assumptions used by the relaxation analysis and bounds.

        Raises:
            SpecValidationError: If couplings are complex, any dephasing rate is
                zero or any loss rate is nonzero
        """
        if not self.is_real:
            raise SpecValidationError("bound analysis requires real couplings")
        if np.any(self.dephasing <= 0):
            k = int(np.argmin(self.dephasing))
            raise SpecValidationError(
                f"bound analysis requires gamma_k > 0; gamma[{k + 1}] = {self.dephasing[k]}"
            )
        if not self.is_lossless:
            raise SpecValidationError("bound analysis requires zero loss")

    def with_rates(self, theta: float = 1.0, gamma: float = 1.0) -> "NetworkSpec":
        """Return a copy with couplings scaled by theta and energies and rates by gamma."""
        return NetworkSpec(
            n=self.n,
            energies=self.energies * gamma,
            couplings=self.couplings * theta,
            dephasing=self.dephasing * gamma,
            loss=self.loss * gamma,
            trapping=self.trapping * gamma,
        )


class ScalingFamily(BaseModel):
    """A base network together with the scales Theta and Gamma.

    Attributes:
        base: Unit network, with couplings measured in Theta and everything
            else in Gamma
        theta: Coupling scale, > 0
        gamma: Dephasing and energy scale, > 0
        name: Family label used in reports
    """
    model_config = ARRAY_CONFIG

    base: NetworkSpec
    theta: float = Field(gt=0)
    gamma: float = Field(gt=0)
    name: str = "custom"

    @property
    def ratio(self) -> float:
        """Theta / Gamma."""
        return self.theta / self.gamma

    def instantiate(self) -> NetworkSpec:
        return self.base.with_rates(theta=self.theta, gamma=self.gamma)

    def at_ratio(self, ratio: float) -> "ScalingFamily":
        """Return the family with Gamma fixed and Theta = ratio * Gamma."""
        return ScalingFamily(base=self.base, theta=ratio * self.gamma, gamma=self.gamma, name=self.name)


class DensityVector(BaseModel):
    """Real packed representation of an n x n density matrix.

    Attributes:
        n: Number of sites
        data: Real vector of length n^2; populations first, then
            (sqrt2 Re rho_kl, sqrt2 Im rho_kl) for k < l in lexicographic order
    """
    model_config = ARRAY_CONFIG

    n: int = Field(ge=1)
    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def _real_data(cls, value):
        return _frozen(value, float)

    @model_validator(mode="after")
    def _check_length(self) -> "DensityVector":
        if self.data.shape != (self.n * self.n,):
            raise SpecValidationError(
                f"density vector has shape {self.data.shape}, expected ({self.n * self.n},)"
            )
        return self

    @property
    def populations(self) -> np.ndarray:
        return self.data[:self.n]


class LiouvillianBlocks(BaseModel):
    """Block form of the generator in the packed coordinates.

    M = [[c1, -a^T], [a, b0 + nu + c2]] where rows and columns are ordered
    populations first, then coherence pairs.

    Attributes:
        n: Number of sites
        a: Population-to-coherence block, shape (n^2 - n, n)
        b0: Dephasing and energy-gap block, 2x2 block diagonal
        nu: Coherence-to-coherence coupling block, skew-symmetric for real V
        c1: Population loss block, diagonal
        c2: Coherence loss block, diagonal
        M: Assembled generator, shape (n^2, n^2)
    """
    model_config = ARRAY_CONFIG

    n: int
    a: np.ndarray
    b0: np.ndarray
    nu: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    M: np.ndarray

    @property
    def b(self) -> np.ndarray:
        """b0 + nu."""
        return self.b0 + self.nu


class TildeBlocks(BaseModel):
    """Blocks after the unitary change of coherence basis.

    Attributes:
        a_t: Transformed coupling block U^H a
        b0_t: Diagonal with entries alpha_kl = -gamma_kl + i E_kl and conj(alpha_kl)
        nu_t: Transformed coherence coupling U^H nu U
        U: The block-diagonal unitary I kron U0
    """
    model_config = ARRAY_CONFIG

    a_t: np.ndarray
    b0_t: np.ndarray
    nu_t: np.ndarray
    U: np.ndarray


KineticKind = Literal["N0", "N", "Nk", "PartialSum", "Generalized"]


class KineticMatrix(BaseModel):
    """A classical rate matrix on populations.

    Attributes:
        data: Real (n, n) matrix
        kind: Which reduction produced the matrix
        order: Series order for ``Nk`` and ``PartialSum``
    """
    model_config = ARRAY_CONFIG

    data: np.ndarray
    kind: KineticKind
    order: Optional[int] = None

    @field_validator("data", mode="before")
    @classmethod
    def _real_matrix(cls, value):
        return _frozen(value, float)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])


class RelaxationMetrics(BaseModel):
    """Relaxation times and their differences between the three models.

    Attributes:
        tau: Kinetic relaxation time ||N^-1|| on the inequality subspace
        tau0: Same for N0
        mu: 1 / tau
        mu0: 1 / tau0
        delta_tau: Quantum relaxation operator versus N
        delta_tau0: Quantum relaxation operator versus N0
        delta_tau1: N versus N0
        delta_tau_rel: delta_tau / tau
        delta_tau0_rel: delta_tau0 / tau0
        delta_tau1_rel: delta_tau1 / tau
    """
    tau: float
    tau0: float
    mu: float
    mu0: float
    delta_tau: float
    delta_tau0: float
    delta_tau1: float
    delta_tau_rel: float
    delta_tau0_rel: float
    delta_tau1_rel: float


class EvolutionError(BaseModel):
    """Operator-norm differences of the population propagators over time."""
    model_config = ARRAY_CONFIG

    t_grid: np.ndarray
    err_N: np.ndarray
    err_N0: np.ndarray
    err_N_N0: np.ndarray


BoundStatus = Literal["pass", "fail", "skipped"]


class BoundCheck(BaseModel):
    """Outcome of comparing one measured quantity with its analytic bound.

    Attributes:
        name: Check identifier
        status: pass, fail or skipped
        bound: Analytic upper bound at the worst point
        measured: Measured value at the worst point
        margin: bound / measured (inf when measured is zero)
        t: Time or |y| at which the worst margin occurred, if applicable
        reason: Why the check was skipped
    """
    name: str
    status: BoundStatus
    bound: Optional[float] = None
    measured: Optional[float] = None
    margin: Optional[float] = None
    t: Optional[float] = None
    reason: Optional[str] = None


class BoundReport(BaseModel):
    """Constants entering the analytic bounds, plus the checks performed.

    When a precondition (connectivity, positive dephasing, zero loss) is
    unmet the constants are left empty, ``precondition`` names the failed
    condition and every check is skipped.
    """
    norm_a: Optional[float] = None
    norm_binv: Optional[float] = None
    norm_b0inv: Optional[float] = None
    norm_nu: Optional[float] = None
    kappa: Optional[float] = None
    kappa0: Optional[float] = None
    mu: Optional[float] = None
    mu0: Optional[float] = None
    alpha: Optional[float] = None
    alpha_hat: Optional[float] = None
    beta: Optional[float] = None
    b_min: Optional[float] = None
    precondition: Optional[str] = None
    hypotheses: Dict[str, bool] = {}
    checks: List[BoundCheck] = []

    @property
    def failed(self) -> List[BoundCheck]:
        return [check for check in self.checks if check.status == "fail"]


class SlopeFit(BaseModel):
    """Least-squares fit of log10(y) against log10(x).

    Attributes:
        slope: Fitted slope
        intercept: Fitted intercept in log10 units
        rvalue: Correlation coefficient
        stderr: Standard error of the slope
        residuals: Residuals of the used points
        used_points: Number of points above the noise floor
        excluded_points: Number of points dropped
    """
    slope: float
    intercept: float
    rvalue: float
    stderr: float
    residuals: List[float] = []
    used_points: int
    excluded_points: int = 0


class ExperimentConfig(BaseModel):
    """Options shared by the command-line experiments.

    Attributes:
        command: Experiment to run
        spec_path: YAML network specification
        family: Built-in network family name
        n: Number of sites for built-in families
        theta: Coupling scale
        gamma: Dephasing scale
        e: Energy-gap parameter of circular chains, in units of Gamma
        grid: (low, high, count) for log-spaced sweeps
        n_range: (low, high, step) for the dimension scan
        seed: Master seed for random families
        out_dir: Output directory
        dump_m: Write the generator M
        dump_n: Write N
        dump_n0: Write N0
        dump_nk: Write N_k up to this order
        workers: Worker processes for grid sweeps
        draws: Number of random networks in an audit
        t_max: Final time for simulate
        steps: Number of time samples for simulate
    """
    command: str
    spec_path: Optional[str] = None
    family: Optional[str] = None
    n: Optional[int] = Field(None, ge=1)
    theta: float = Field(1e-3, gt=0)
    gamma: float = Field(1.0, gt=0)
    e: float = 1.0
    grid: Optional[Tuple[float, float, int]] = None
    n_range: Optional[Tuple[int, int, int]] = None
    seed: int = 0
    out_dir: str = "results"
    dump_m: bool = False
    dump_n: bool = False
    dump_n0: bool = False
    dump_nk: Optional[int] = Field(None, ge=0)
    workers: int = Field(1, ge=1)
    draws: int = Field(100, ge=1)
    t_max: Optional[float] = Field(None, gt=0)
    steps: int = Field(101, ge=2)

    @field_validator("grid")
    @classmethod
    def _check_grid(cls, value):
        if value is None:
            return value
        low, high, count = value
        if low <= 0 or high <= low:
            raise ValueError("grid needs 0 < low < high")
        if count < 2:
            raise ValueError(f"grid needs at least 2 points, got {count}")
        return value

    @field_validator("n_range")
    @classmethod
    def _check_n_range(cls, value):
        if value is None:
            return value
        low, high, step = value
        if low < 2 or high < low or step < 1:
            raise ValueError("n range needs 2 <= low <= high and step >= 1")
        return value


class ScalingStudy(BaseModel):
    """Relaxation errors along a Theta/Gamma grid with fitted log-log slopes.

    Attributes:
        family: Family label
        ratios: Theta/Gamma values
        metrics: One RelaxationMetrics per ratio
        slopes: Fitted slope per channel (MN, MN0, NN0); None when the
            channel is excluded or too few points remain above the noise floor
        excluded: Channels that vanish up to rounding, with the reason they
            carry no slope
    """
    family: str
    ratios: List[float]
    metrics: List[RelaxationMetrics]
    slopes: Dict[str, Optional[SlopeFit]] = {}
    excluded: Dict[str, str] = {}


class AuditResult(BaseModel):
    """Bound checks over many random networks.

    Attributes:
        seed: Master seed
        sizes: Site count of each draw
        reports: One BoundReport per draw
    """
    seed: int
    sizes: List[int]
    reports: List[BoundReport]

    @property
    def failures(self) -> List[Tuple[int, BoundCheck]]:
        """(draw index, check) for every failed check."""
        return [(index, check) for index, report in enumerate(self.reports) for check in report.failed]
