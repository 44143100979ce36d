"""
Spectra of finite unitary / Hermitian matrices as multisets, Schatten norms and the
perturbation inequalities between them.

The finite matrix stands in for an operator on a Hilbert space: the reference operator's
whole spectrum is declared essential (the compact set K of the model) and the spectra of
perturbed operators are taken in the quotient by K.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from ..config import settings
from ..exceptions import NormalityError, NumericError, ParameterError
from ..models import TWO_PI, BasedSpace, CompactSet, Multiset, NormSpec
from . import quotient_spaces as qs
from .assignment import bottleneck_assignment, hungarian
from .multisets import build_multiset, distance_phi
from .symmetric_norms import eval_norm

logger = logging.getLogger(__name__)


class OperatorKind(str, Enum):
    UNITARY = "unitary"
    HERMITIAN = "hermitian"


def _defect(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2)) if A.size else 0.0


def is_unitary(A: np.ndarray, tol: Optional[float] = None) -> bool:
    tol = settings.TOL_UNITARY if tol is None else tol
    A = np.asarray(A)
    return _defect(A.conj().T @ A - np.eye(A.shape[0])) <= tol


def is_hermitian(A: np.ndarray, tol: Optional[float] = None) -> bool:
    tol = settings.TOL_UNITARY if tol is None else tol
    A = np.asarray(A)
    return _defect(A - A.conj().T) <= tol


def is_normal(A: np.ndarray, tol: Optional[float] = None) -> bool:
    tol = settings.TOL_NORMAL if tol is None else tol
    A = np.asarray(A)
    return _defect(A.conj().T @ A - A @ A.conj().T) <= tol


def _square(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError(f"Expected a square matrix, got shape {A.shape}")
    return A


def check_kind(A: np.ndarray, kind: OperatorKind, label: str = "matrix") -> np.ndarray:
    A = _square(A)
    if kind == OperatorKind.UNITARY and not is_unitary(A):
        raise NormalityError(f"{label} is not unitary within {settings.TOL_UNITARY}")
    if kind == OperatorKind.HERMITIAN and not is_hermitian(A):
        raise NormalityError(f"{label} is not Hermitian within {settings.TOL_UNITARY}")
    return A


@dataclass
class OperatorModel:
    """Reference operator of dimension d plus its designated essential set K."""
    dimension: int
    kind: OperatorKind
    reference: np.ndarray
    essential_set: CompactSet

    def __post_init__(self):
        self.reference = check_kind(self.reference, self.kind, "reference")
        if self.reference.shape[0] != self.dimension:
            raise ParameterError(f"Reference is {self.reference.shape[0]}x{self.reference.shape[0]}, "
                                 f"model dimension {self.dimension}")
        if self.essential_set.is_empty:
            raise ParameterError("Essential set must be nonempty")
        expected = "circle" if self.kind == OperatorKind.UNITARY else "line"
        if self.essential_set.space != expected:
            raise ParameterError(f"A {self.kind.value} model needs an essential set on the {expected}")
        coords = _coordinates(_eigenvalues(self.reference, self.kind), self.kind)
        distances = np.asarray(qs.distance_to_set(coords, self.essential_set))
        if np.any(distances > settings.TOL_BASE):
            raise ParameterError("Every eigenvalue of the reference must lie in the essential set")

    @property
    def space(self) -> BasedSpace:
        return BasedSpace.quotient(self.essential_set)

    @classmethod
    def unitary_identity(cls, dimension: int) -> "OperatorModel":
        """U0 = I with K = {1}: spectra live on the circle based at angle 0."""
        return cls(dimension=dimension, kind=OperatorKind.UNITARY, reference=np.eye(dimension, dtype=np.complex128),
                   essential_set=CompactSet.point("circle", 0.0))

    @classmethod
    def hermitian_zero(cls, dimension: int) -> "OperatorModel":
        return cls(dimension=dimension, kind=OperatorKind.HERMITIAN, reference=np.zeros((dimension, dimension), dtype=np.complex128),
                   essential_set=CompactSet.point("line", 0.0))


@dataclass
class SampledOperatorPath:
    model: OperatorModel
    params: np.ndarray
    matrices: List[np.ndarray]
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=np.float64)
        if len(self.params) != len(self.matrices):
            raise ParameterError(f"{len(self.params)} parameters for {len(self.matrices)} matrices")
        if len(self.params) < 2:
            raise ParameterError("An operator path needs at least 2 samples")
        if np.any(np.diff(self.params) <= 0):
            raise ParameterError("Parameters must be strictly increasing")
        checked = []
        for j, A in enumerate(self.matrices):
            A = check_kind(A, self.model.kind, f"matrix {j}")
            if A.shape[0] != self.model.dimension:
                raise ParameterError(f"Matrix {j} has dimension {A.shape[0]}, model {self.model.dimension}")
            checked.append(A)
        self.matrices = checked

    def spectra(self) -> List[Multiset]:
        return [operator_spectrum(A, self.model) for A in self.matrices]

    def step_norms(self, p: float) -> np.ndarray:
        """||A_{j+1} - A_j||_p for consecutive samples."""
        return np.array([schatten_norm(b - a, p) for a, b in zip(self.matrices, self.matrices[1:])])

    def reversed(self) -> "SampledOperatorPath":
        params = self.params[0] + self.params[-1] - self.params[::-1]
        return SampledOperatorPath(self.model, params, self.matrices[::-1], dict(self.meta, reversed=True))

    def concatenate(self, other: "SampledOperatorPath") -> "SampledOperatorPath":
        if schatten_norm(self.matrices[-1] - other.matrices[0], math.inf) > settings.TOL_UNITARY:
            raise ParameterError("Paths are not concatenable: end of the first differs from start of the second")
        shifted = other.params[1:] - other.params[0] + self.params[-1]
        return SampledOperatorPath(self.model, np.concatenate([self.params, shifted]),
                                   self.matrices + other.matrices[1:], {"parts": [self.meta, other.meta]})


# ---------------------------------------------------------------------------------------
# spectra and norms
# ---------------------------------------------------------------------------------------

def _eigenvalues(A: np.ndarray, kind: OperatorKind) -> np.ndarray:
    try:
        if kind == OperatorKind.HERMITIAN:
            return sla.eigvalsh(A)
        return sla.eigvals(A)
    except (sla.LinAlgError, ValueError) as e:
        raise NumericError(f"Eigensolver failed: {e}")


def _coordinates(eigs: np.ndarray, kind: OperatorKind) -> np.ndarray:
    if kind == OperatorKind.HERMITIAN:
        return np.real(eigs)
    return np.angle(eigs) % TWO_PI


def operator_spectrum(A: np.ndarray, model: OperatorModel) -> Multiset:
    """
    sigma(A) = {[z_1]_K, [z_2]_K, ...}*: eigenvalues in the quotient by the essential set.
    Unitary eigenvalues are projected radially onto the circle after a dense eigensolve.
    """
    A = _square(A)
    if A.shape[0] != model.dimension:
        raise ParameterError(f"Matrix has dimension {A.shape[0]}, model {model.dimension}")
    if not is_normal(A):
        raise NormalityError(f"Matrix is not normal within {settings.TOL_NORMAL}")
    # eigvalsh reads one triangle only; unitary inputs are caught by the modulus check below
    if model.kind == OperatorKind.HERMITIAN:
        check_kind(A, model.kind)
    eigs = _eigenvalues(A, model.kind)
    if model.kind == OperatorKind.UNITARY:
        drift = np.abs(np.abs(eigs) - 1.0)
        if drift.size and drift.max() > settings.TOL_EIG_MODULUS:
            raise NumericError(f"Unitary eigenvalue off the circle by {drift.max():.3g}")
    return build_multiset(model.space, _coordinates(eigs, model.kind))


def schatten_norm(A: np.ndarray, p: float) -> float:
    """Phi_p of the singular values."""
    spec = NormSpec.schatten(p)
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    try:
        singular = sla.svdvals(A)
    except (sla.LinAlgError, ValueError) as e:
        raise NumericError(f"SVD failed: {e}")
    return eval_norm(spec, singular)


def operator_norm_power_iteration(A: np.ndarray, maxiter: int = 1000, rtol: float = 1e-12,
                                  rng: Optional[np.random.Generator] = None) -> float:
    """Largest singular value by power iteration on A*A."""
    A = np.asarray(A, dtype=np.complex128)
    if not np.any(A):
        return 0.0
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    value = math.inf
    for _ in range(maxiter):
        w = A.conj().T @ (A @ v)
        new_value = math.sqrt(np.linalg.norm(w))
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        if abs(new_value - value) <= rtol * new_value:
            return new_value
        value = new_value
    logger.debug(f"Power iteration stopped after {maxiter} iterations")
    return value


# ---------------------------------------------------------------------------------------
# inequalities
# ---------------------------------------------------------------------------------------

@dataclass
class InequalityCheck:
    lhs: float
    rhs: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def _check(lhs: float, rhs: float) -> InequalityCheck:
    return InequalityCheck(lhs=float(lhs), rhs=float(rhs), holds=bool(lhs <= rhs + settings.TOL_INEQUALITY))


def verify_bhatia_sinha(U: np.ndarray, V: np.ndarray, p: float, model: OperatorModel) -> InequalityCheck:
    """d_p(sigma(U), sigma(V)) <= (pi/2) ||U - V||_p."""
    U = check_kind(U, OperatorKind.UNITARY, "U")
    V = check_kind(V, OperatorKind.UNITARY, "V")
    if U.shape != V.shape:
        raise ParameterError(f"Dimensions differ: {U.shape} vs {V.shape}")
    lhs = distance_phi(operator_spectrum(U, model), operator_spectrum(V, model), NormSpec.schatten(p))
    return _check(lhs, (math.pi / 2.0) * schatten_norm(U - V, p))


def _matched_eigen_distance(lam: np.ndarray, mu: np.ndarray, p: float) -> float:
    """min over permutations pi of Phi_p(|lam_i - mu_pi(i)|)."""
    cost = np.abs(lam[:, None] - mu[None, :])
    if math.isinf(p):
        return bottleneck_assignment(cost)[1]
    assignment, _, _ = hungarian(cost ** p)
    return eval_norm(NormSpec.schatten(p), cost[np.arange(len(lam)), assignment])


def verify_hoffman_wielandt(N: np.ndarray, M: np.ndarray) -> InequalityCheck:
    """min_pi (sum |lam_i - mu_pi(i)|^2)^(1/2) <= ||N - M||_2 for normal N, M."""
    N, M = _square(N), _square(M)
    if N.shape != M.shape:
        raise ParameterError(f"Dimensions differ: {N.shape} vs {M.shape}")
    for label, A in (("N", N), ("M", M)):
        if not is_normal(A):
            raise NormalityError(f"{label} is not normal within {settings.TOL_NORMAL}")
    lhs = _matched_eigen_distance(_eigenvalues(N, OperatorKind.UNITARY), _eigenvalues(M, OperatorKind.UNITARY), 2.0)
    return _check(lhs, schatten_norm(N - M, 2.0))


def verify_kato_selfadjoint(H: np.ndarray, G: np.ndarray, p: float, model: OperatorModel) -> InequalityCheck:
    """d_p(sigma(H), sigma(G)) <= ||H - G||_p over R/K."""
    H = check_kind(H, OperatorKind.HERMITIAN, "H")
    G = check_kind(G, OperatorKind.HERMITIAN, "G")
    if H.shape != G.shape:
        raise ParameterError(f"Dimensions differ: {H.shape} vs {G.shape}")
    lhs = distance_phi(operator_spectrum(H, model), operator_spectrum(G, model), NormSpec.schatten(p))
    return _check(lhs, schatten_norm(H - G, p))


def verify_bhatia_davis(N: np.ndarray, M: np.ndarray, p: float) -> InequalityCheck:
    """
    Eigenvalue matching bound with constant 1 for normal N, M with N - M normal.
    Only commuting pairs are accepted, where the difference is normal automatically.
    """
    N, M = _square(N), _square(M)
    for label, A in (("N", N), ("M", M)):
        if not is_normal(A):
            raise NormalityError(f"{label} is not normal within {settings.TOL_NORMAL}")
    if _defect(N @ M - M @ N) > settings.TOL_NORMAL:
        raise ParameterError("Only commuting normal pairs are supported")
    lam = _eigenvalues(N, OperatorKind.UNITARY)
    mu = _eigenvalues(M, OperatorKind.UNITARY)
    return _check(_matched_eigen_distance(lam, mu, p), schatten_norm(N - M, p))


# ---------------------------------------------------------------------------------------
# random matrices
# ---------------------------------------------------------------------------------------

def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of R fixed."""
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases[None, :]


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (Z + Z.conj().T) / 2.0


def random_normal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Q diag(z) Q* with Haar Q and complex Gaussian z."""
    Q = haar_unitary(d, rng)
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return (Q * z[None, :]) @ Q.conj().T


def random_integer_hermitian(d: int, rng: np.random.Generator, low: int = -2, high: int = 2) -> np.ndarray:
    """Hermitian matrix with integer eigenvalues drawn from [low, high]."""
    Q = haar_unitary(d, rng)
    eigs = rng.integers(low, high + 1, size=d).astype(np.float64)
    A = (Q * eigs[None, :]) @ Q.conj().T
    return (A + A.conj().T) / 2.0


# ---------------------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------------------

@dataclass
class PathRecipe:
    """
    exp_loop:    U(t) = U0 exp(2 pi i t A), A Hermitian with integer spectrum.
    random_loop: U(t) = U0 exp(2 pi i t A) exp(i a P(t)), A a random integer-spectrum generator
                 and P(t) a random Hermitian trigonometric polynomial vanishing at t = 0 and 1.
    segment:     U(t) = U_start exp(t log(U_start* U_end)).
    Parameters t always run over [0, 1].
    """
    kind: str
    generator: Optional[np.ndarray] = None
    seed: Optional[int] = None
    amplitude: float = 0.3
    start: Optional[np.ndarray] = None
    end: Optional[np.ndarray] = None

    @classmethod
    def exp_loop(cls, generator) -> "PathRecipe":
        return cls(kind="exp_loop", generator=np.asarray(generator, dtype=np.complex128))

    @classmethod
    def random_loop(cls, seed: int, amplitude: float = 0.3) -> "PathRecipe":
        return cls(kind="random_loop", seed=int(seed), amplitude=float(amplitude))

    @classmethod
    def segment(cls, start, end) -> "PathRecipe":
        return cls(kind="segment", start=np.asarray(start, dtype=np.complex128),
                   end=np.asarray(end, dtype=np.complex128))


def _integer_spectrum(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if not is_hermitian(A):
        raise NormalityError("Loop generator is not Hermitian")
    eigs, Q = sla.eigh(A)
    rounded = np.round(eigs)
    if np.max(np.abs(eigs - rounded), initial=0.0) > 1e-8:
        raise ParameterError("Loop generator must have an integer spectrum to close the loop")
    return rounded, Q


def _loop_factor(eigs: np.ndarray, Q: np.ndarray, t: float) -> np.ndarray:
    return (Q * np.exp(2j * math.pi * t * eigs)[None, :]) @ Q.conj().T


def _recipe_sampler(recipe: PathRecipe, model: OperatorModel) -> Tuple[Callable[[float], np.ndarray], Dict]:
    U0 = model.reference
    d = model.dimension
    if model.kind != OperatorKind.UNITARY:
        raise ParameterError("Path recipes generate unitary paths")

    if recipe.kind == "exp_loop":
        A = _square(recipe.generator)
        if A.shape[0] != d:
            raise ParameterError(f"Generator has dimension {A.shape[0]}, model {d}")
        eigs, Q = _integer_spectrum(A)
        meta = {"recipe": "exp_loop", "expected_sf": int(eigs.sum())}
        return (lambda t: U0 @ _loop_factor(eigs, Q, t)), meta

    if recipe.kind == "random_loop":
        rng = np.random.default_rng(recipe.seed)
        eigs, Q = _integer_spectrum(random_integer_hermitian(d, rng))
        B = [random_hermitian(d, rng, scale=1.0 / math.sqrt(d)) for _ in range(2)]
        C = [random_hermitian(d, rng, scale=1.0 / math.sqrt(d)) for _ in range(2)]

        def sampler(t: float) -> np.ndarray:
            P = sum(b * math.sin(2 * math.pi * k * t) + c * (1.0 - math.cos(2 * math.pi * k * t))
                    for k, (b, c) in enumerate(zip(B, C), start=1))
            return U0 @ _loop_factor(eigs, Q, t) @ sla.expm(1j * recipe.amplitude * P)

        meta = {"recipe": "random_loop", "seed": recipe.seed, "amplitude": recipe.amplitude,
                "expected_sf": int(eigs.sum())}
        return sampler, meta

    if recipe.kind == "segment":
        start = check_kind(recipe.start, OperatorKind.UNITARY, "segment start")
        end = check_kind(recipe.end, OperatorKind.UNITARY, "segment end")
        W = sla.logm(start.conj().T @ end)
        W = (W - W.conj().T) / 2.0
        return (lambda t: start @ sla.expm(t * W)), {"recipe": "segment"}

    raise ParameterError(f"Unknown path recipe: {recipe.kind}")


def sample_recipe(recipe: PathRecipe, model: OperatorModel, params: Sequence[float],
                  at: Optional[Sequence[float]] = None) -> SampledOperatorPath:
    """Evaluate a recipe at `at` (default: `params`) and label the samples with `params`."""
    sampler, meta = _recipe_sampler(recipe, model)
    at = params if at is None else at
    matrices = []
    for t in at:
        U = sampler(float(t))
        if recipe.kind != "segment" and (float(t) == 0.0 or float(t) == 1.0):
            U = model.reference.copy()
        matrices.append(U)
    return SampledOperatorPath(model=model, params=np.asarray(params, dtype=np.float64), matrices=matrices, meta=meta)


def generate_path(recipe: PathRecipe, model: OperatorModel, steps: int) -> SampledOperatorPath:
    if steps < 2:
        raise ParameterError(f"steps must be at least 2, got {steps}")
    return sample_recipe(recipe, model, np.linspace(0.0, 1.0, steps))


def reparametrize(recipe: PathRecipe, model: OperatorModel, steps: int,
                  fn: Callable[[np.ndarray], np.ndarray]) -> SampledOperatorPath:
    """Same loop run along t -> fn(t); fn must map [0, 1] onto itself monotonically."""
    params = np.linspace(0.0, 1.0, steps)
    at = np.asarray(fn(params), dtype=np.float64)
    if abs(at[0]) > 1e-12 or abs(at[-1] - 1.0) > 1e-12 or np.any(np.diff(at) < 0):
        raise ParameterError("Reparametrization must be a monotone map of [0, 1] onto itself")
    at[0], at[-1] = 0.0, 1.0
    path = sample_recipe(recipe, model, params, at=at)
    path.meta["reparametrized"] = True
    return path


def refine(recipe: PathRecipe, model: OperatorModel, steps: int, factor: int = 2) -> SampledOperatorPath:
    if factor < 1:
        raise ParameterError(f"Refinement factor must be positive, got {factor}")
    return generate_path(recipe, model, (steps - 1) * factor + 1)


def branch_point_family(steps: int, omega: float = 3.0, basepoint: complex = 0j
                        ) -> Tuple[List[Multiset], np.ndarray]:
    """
    Spectra of the non-normal family [[0, z], [1, 0]] along z(t) = t e^{i omega t}, t in [-1, 1].
    The eigenvalues +-sqrt(z) admit no global continuous labelling through z = 0, yet the
    multiset path is continuous.
    """
    if steps < 2:
        raise ParameterError(f"steps must be at least 2, got {steps}")
    space = BasedSpace.plane(basepoint)
    params = np.linspace(-1.0, 1.0, steps)
    samples = []
    for t in params:
        z = t * np.exp(1j * omega * t)
        eigs = _eigenvalues(np.array([[0.0, z], [1.0, 0.0]], dtype=np.complex128), OperatorKind.UNITARY)
        samples.append(build_multiset(space, list(eigs)))
    return samples, params
