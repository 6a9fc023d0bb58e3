"""Matrix Lie groups: basis, structure constants, exp and the adjoint matrix.

Algebra elements are plain component vectors ``xi`` (length ``dim_algebra``)
with respect to the basis ``E_a``; group elements are ``n x n`` arrays.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, RepresentationError

log = logging.getLogger(__name__)

# tolerance used when expanding a matrix in the algebra basis
EXPANSION_TOL = 1e-10
# structure constants vs commutator disagreement that triggers replacement
CLOSURE_TOL = 1e-12

CONSTRAINTS = (None, "orthogonal", "special_euclidean")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LieGroupSpec:
    """A matrix Lie group given by a basis of its Lie algebra.

    ``structure_constants[c, a, b]`` holds C^c_{ab}, so that
    ``[E_a, E_b] = C^c_{ab} E_c``.  ``kind`` selects closed-form
    exponentials ("so3", "u1"); ``constraint`` names the defining
    matrix constraint used for drift checks and re-projection.
    """

    name: str
    basis: np.ndarray
    structure_constants: np.ndarray
    kind: str = "generic"
    constraint: str | None = None
    _pinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        basis = _frozen(self.basis)
        C = _frozen(self.structure_constants)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise InputError(f"basis must have shape (m, n, n), got {basis.shape}")
        m = basis.shape[0]
        if C.shape != (m, m, m):
            raise InputError(f"structure constants must have shape {(m, m, m)}, got {C.shape}")
        if self.constraint not in CONSTRAINTS:
            raise InputError(f"unknown group constraint {self.constraint!r}")
        flat = basis.reshape(m, -1).T
        if np.linalg.matrix_rank(flat) < m:
            raise InputError("basis matrices are linearly dependent")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "structure_constants", C)
        object.__setattr__(self, "_pinv", _frozen(np.linalg.pinv(flat)))

    @property
    def dim_algebra(self) -> int:
        return self.basis.shape[0]

    @property
    def matrix_size(self) -> int:
        return self.basis.shape[1]

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.matrix_size)

    def to_dict(self) -> dict:
        """JSON-compatible form: row-major basis, sparse indexed C list."""
        C = self.structure_constants
        entries = [[int(c), int(a), int(b), float(C[c, a, b])]
                   for c, a, b in zip(*np.nonzero(C))]
        return {
            "name": self.name,
            "kind": self.kind,
            "constraint": self.constraint,
            "matrix_size": self.matrix_size,
            "basis": [E.reshape(-1).tolist() for E in self.basis],
            "structure_constants": entries,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LieGroupSpec":
        n = int(d["matrix_size"])
        basis = np.array(d["basis"], dtype=float)
        if basis.ndim != 2 or basis.shape[1] != n * n:
            raise InputError(f"basis entries must be flat lists of {n * n} numbers")
        basis = basis.reshape(-1, n, n)
        C = None
        if d.get("structure_constants") is not None:
            m = basis.shape[0]
            C = np.zeros((m, m, m))
            for entry in d["structure_constants"]:
                c, a, b, val = entry
                C[int(c), int(a), int(b)] = float(val)
        return from_basis(d.get("name", "custom"), basis, C,
                          kind=d.get("kind", "generic"),
                          constraint=d.get("constraint"))


def commutator_constants(basis) -> np.ndarray:
    """Structure constants read off from matrix commutators of the basis."""
    basis = np.asarray(basis, dtype=float)
    m = basis.shape[0]
    pinv = np.linalg.pinv(basis.reshape(m, -1).T)
    comm = np.einsum("aij,bjk->abik", basis, basis)
    comm = comm - comm.transpose(1, 0, 2, 3)
    return np.einsum("cp,abp->cab", pinv, comm.reshape(m, m, -1))


def from_basis(name, basis, structure_constants=None, kind="generic",
               constraint=None) -> LieGroupSpec:
    """Build a validated spec; the commutators win over a conflicting C."""
    derived = commutator_constants(basis)
    if structure_constants is None:
        C = derived
    else:
        C = np.asarray(structure_constants, dtype=float)
        if C.shape != derived.shape:
            raise InputError(f"structure constants must have shape {derived.shape}")
        worst = float(np.max(np.abs(C - derived), initial=0.0))
        if worst > CLOSURE_TOL:
            log.warning("structure constants of %s disagree with commutators by %.3g; "
                        "using the commutator values", name, worst)
            C = derived
    spec = LieGroupSpec(name, basis, C, kind=kind, constraint=constraint)
    _, closure, _ = _residuals(spec)
    if closure > EXPANSION_TOL:
        raise RepresentationError(f"basis of {name} is not closed under commutators "
                                  f"(residual {closure:.3g})")
    return spec


def hat_so3(v) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def so3() -> LieGroupSpec:
    basis = np.array([hat_so3(e) for e in np.eye(3)])
    eps = np.zeros((3, 3, 3))
    eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
    eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
    # C^c_{ab} = eps_{abc}
    C = eps.transpose(2, 0, 1)
    return LieGroupSpec("so3", basis, C, kind="so3", constraint="orthogonal")


def u1() -> LieGroupSpec:
    basis = np.array([[[0.0, -1.0], [1.0, 0.0]]])
    return LieGroupSpec("u1", basis, np.zeros((1, 1, 1)), kind="u1",
                        constraint="orthogonal")


def se2() -> LieGroupSpec:
    """SE(2) in 3x3 homogeneous form: rotation, x-translation, y-translation."""
    basis = np.zeros((3, 3, 3))
    basis[0, 0, 1], basis[0, 1, 0] = -1.0, 1.0
    basis[1, 0, 2] = 1.0
    basis[2, 1, 2] = 1.0
    return from_basis("se2", basis, constraint="special_euclidean")


BUILTIN_GROUPS = {"so3": so3, "u1": u1, "se2": se2}


def builtin_group(name: str) -> LieGroupSpec:
    try:
        return BUILTIN_GROUPS[name]()
    except KeyError:
        raise InputError(f"unknown group {name!r}; known: {sorted(BUILTIN_GROUPS)}") from None


def _check_vec(spec: LieGroupSpec, xi, label="xi") -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (spec.dim_algebra,):
        raise InputError(f"{label} must have shape ({spec.dim_algebra},), got {xi.shape}")
    return xi


def hat(spec: LieGroupSpec, xi) -> np.ndarray:
    """Matrix xi^a E_a."""
    return np.tensordot(_check_vec(spec, xi), spec.basis, axes=1)


def vee(spec: LieGroupSpec, X) -> np.ndarray:
    """Components of a matrix in the basis; raises if X is not in the algebra."""
    X = np.asarray(X, dtype=float)
    n = spec.matrix_size
    if X.shape != (n, n):
        raise InputError(f"expected a {n}x{n} matrix, got {X.shape}")
    flat = X.reshape(-1)
    xi = spec._pinv @ flat
    resid = np.max(np.abs(spec.basis.reshape(spec.dim_algebra, -1).T @ xi - flat))
    if resid > EXPANSION_TOL * max(1.0, float(np.max(np.abs(flat)))):
        raise RepresentationError(f"matrix is not in the algebra of {spec.name} "
                                  f"(expansion residual {resid:.3g})")
    return xi


def bracket(spec: LieGroupSpec, xi, eta) -> np.ndarray:
    """[xi, eta]^c = C^c_{ab} xi^a eta^b."""
    xi = _check_vec(spec, xi)
    eta = _check_vec(spec, eta, "eta")
    return np.einsum("cab,a,b->c", spec.structure_constants, xi, eta)


def ad_matrix(spec: LieGroupSpec, xi) -> np.ndarray:
    """Matrix of ad_xi acting on component vectors: [c, b] = C^c_{ab} xi^a."""
    return np.einsum("cab,a->cb", spec.structure_constants, _check_vec(spec, xi))


def _expm_taylor(X: np.ndarray) -> np.ndarray:
    # scaling and squaring, 13-term Taylor at norm <= 0.5
    norm = float(np.max(np.sum(np.abs(X), axis=1)))
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    Y = X / (2.0 ** s)
    E = np.eye(X.shape[0])
    term = np.eye(X.shape[0])
    for k in range(1, 14):
        term = term @ Y / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def _exp_so3(v: np.ndarray) -> np.ndarray:
    theta = math.sqrt(float(v @ v))
    K = hat_so3(v)
    if theta < 1e-8:
        # series to O(theta^4); error below 1e-17 here
        return np.eye(3) + K + 0.5 * (K @ K)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * (K @ K)


def exponential(spec: LieGroupSpec, xi, t: float = 1.0) -> np.ndarray:
    """exp(t * xi^a E_a)."""
    xi = _check_vec(spec, xi)
    if not np.all(np.isfinite(xi)) or not math.isfinite(t):
        raise InputError("exponential of a non-finite algebra element")
    v = t * xi
    if spec.kind == "so3":
        return _exp_so3(v)
    if spec.kind == "u1":
        c, s = math.cos(v[0]), math.sin(v[0])
        return np.array([[c, -s], [s, c]])
    return _expm_taylor(np.tensordot(v, spec.basis, axes=1))


def adjoint_matrix(spec: LieGroupSpec, g) -> np.ndarray:
    """Matrix A of Ad_{g^{-1}} on component vectors.

    Column ``a`` holds the components of ``g^{-1} E_a g``, so
    ``A(g1 g2) = A(g2) A(g1)`` and the moving-frame components of a
    body-fixed vector ``w`` are ``A @ w``.
    """
    g = np.asarray(g, dtype=float)
    n, m = spec.matrix_size, spec.dim_algebra
    if g.shape != (n, n):
        raise InputError(f"group element must be {n}x{n}, got {g.shape}")
    ginv = np.linalg.inv(g)
    conj = (ginv @ spec.basis @ g).reshape(m, -1)
    A = spec._pinv @ conj.T
    resid = np.max(np.abs(spec.basis.reshape(m, -1).T @ A - conj.T))
    if resid > EXPANSION_TOL * max(1.0, float(np.max(np.abs(conj)))):
        raise RepresentationError(f"conjugated basis leaves the algebra of {spec.name} "
                                  f"(residual {resid:.3g})")
    return A


def constraint_residual(spec: LieGroupSpec, g) -> float:
    """Distance of g from the group's defining constraint (0 if none)."""
    g = np.asarray(g, dtype=float)
    if spec.constraint == "orthogonal":
        return float(np.max(np.abs(g.T @ g - np.eye(len(g)))))
    if spec.constraint == "special_euclidean":
        R = g[:-1, :-1]
        last = np.zeros(len(g))
        last[-1] = 1.0
        return float(max(np.max(np.abs(R.T @ R - np.eye(len(R)))),
                         np.max(np.abs(g[-1] - last))))
    return 0.0


def _polar(R: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(R)
    return U @ Vt


def project_to_group(spec: LieGroupSpec, g) -> np.ndarray:
    """Nearest group element for constrained groups (identity map otherwise)."""
    g = np.array(g, dtype=float)
    if spec.constraint == "orthogonal":
        return _polar(g)
    if spec.constraint == "special_euclidean":
        g[:-1, :-1] = _polar(g[:-1, :-1])
        g[-1] = 0.0
        g[-1, -1] = 1.0
    return g


@dataclass(frozen=True)
class StructureReport:
    antisymmetry: float
    closure: float
    jacobi: float

    def ok(self, tol: float = 1e-12) -> bool:
        return max(self.antisymmetry, self.closure, self.jacobi) <= tol


def _residuals(spec: LieGroupSpec):
    C = spec.structure_constants
    anti = float(np.max(np.abs(C + C.transpose(0, 2, 1)), initial=0.0))
    E = spec.basis
    comm = np.einsum("aij,bjk->abik", E, E)
    comm = comm - comm.transpose(1, 0, 2, 3)
    closure = float(np.max(np.abs(comm - np.einsum("cab,cik->abik", C, E)), initial=0.0))
    jac = (np.einsum("ead,dbc->eabc", C, C)
           + np.einsum("ebd,dca->eabc", C, C)
           + np.einsum("ecd,dab->eabc", C, C))
    return anti, closure, float(np.max(np.abs(jac), initial=0.0))


def check_structure(spec: LieGroupSpec) -> StructureReport:
    """Max residuals of antisymmetry, commutator closure and Jacobi."""
    return StructureReport(*_residuals(spec))
