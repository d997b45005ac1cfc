"""Normalized ensembles, eigendecompositions and Green's functions.

Index convention for the block linearization ``X``: rows ``0..M-1`` are
black vertices, rows ``M..M+N-1`` are white vertices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure, MismatchReport, PoleProximity
from .graphs import GraphConfig

POLE_TOL = 1e-12
ZERO_TOL = 1e-6  # eigenvalues of X below this are treated as kernel
CLUSTER_TOL = 1e-6


@dataclass(frozen=True)
class NormalizedEnsemble:
    config: GraphConfig
    H: np.ndarray
    X: np.ndarray
    X_small: np.ndarray
    X_large: np.ndarray


def normalize(A, config: GraphConfig) -> NormalizedEnsemble:
    """Centered, scaled biadjacency ``H = (A - (d_b/N) J) / sqrt(d_w)``.

    The shift ``d_b/N`` is the common value ``A`` would have if its edges were
    spread evenly, so ``H`` annihilates the constant vectors on both sides.
    """
    A = np.asarray(A, dtype=float)
    M, N = config.M, config.N
    if A.shape != (M, N):
        raise ValueError(f"adjacency shape {A.shape} != ({M}, {N})")
    H = (A - config.d_b / N) / math.sqrt(config.d_w)
    X = np.zeros((M + N, M + N))
    X[:M, M:] = H
    X[M:, :M] = H.T
    return NormalizedEnsemble(config, H, X, H.T @ H, H @ H.T)


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_dim: int
    _sq: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_sq", self.eigenvectors ** 2)

    def _weights(self, z) -> np.ndarray:
        z = complex(z)
        gap = np.abs(self.eigenvalues - z)
        if gap.size and gap.min() < POLE_TOL:
            raise PoleProximity(f"z = {z} within {gap.min():.3g} of the spectrum")
        return 1.0 / (self.eigenvalues - z)

    def green(self, z) -> np.ndarray:
        w = self._weights(z)
        U = self.eigenvectors
        # real and imaginary parts as two real products
        return (U * w.real) @ U.T + 1j * ((U * w.imag) @ U.T)

    def green_diag(self, z) -> np.ndarray:
        return self._sq @ self._weights(z)

    def green_row(self, i: int, z) -> np.ndarray:
        w = self._weights(z)
        return (self.eigenvectors[i] * w) @ self.eigenvectors.T

    def trace(self, z) -> complex:
        return complex(self._weights(z).sum())


def eigendecompose(S, residual_tol: float = 1e-8, gram_tol: float = 1e-9) -> SpectralData:
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if S.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {S.shape}")
    if n and np.abs(S - S.T).max() > 1e-12 * max(1.0, np.abs(S).max()):
        raise ValueError("matrix is not symmetric")
    try:
        lam, U = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    if n:
        recon = np.abs((U * lam) @ U.T - S).max()
        gram = np.abs(U.T @ U - np.eye(n)).max()
        if not (recon <= residual_tol * n and gram <= gram_tol):
            raise ConvergenceFailure(f"reconstruction {recon:.3g}, Gram defect {gram:.3g}")
    return SpectralData(lam, U, n)


@dataclass(frozen=True)
class EnsembleSpectra:
    """Eigendata of ``X``, ``H^T H`` and ``H H^T`` for one ensemble."""

    ensemble: NormalizedEnsemble
    X: SpectralData
    small: SpectralData
    large: SpectralData


def decompose_all(ens: NormalizedEnsemble) -> EnsembleSpectra:
    return EnsembleSpectra(ens, eigendecompose(ens.X), eigendecompose(ens.X_small),
                           eigendecompose(ens.X_large))


def green_entry(spec: SpectralData, i: int, j: int, z) -> complex:
    w = spec._weights(z)
    U = spec.eigenvectors
    return complex(np.sum(U[i] * U[j] * w))


def green_matrix(spec: SpectralData, z) -> np.ndarray:
    return spec.green(z)


# -- partial Stieltjes transforms -------------------------------------------

@dataclass(frozen=True)
class GreenEvaluation:
    z: complex
    s_small: complex
    s_large: complex
    s_b: complex
    s_w: complex
    Gamma: float | None = None

    CSV_HEADER = ("re_z", "im_z", "re_s_small", "im_s_small", "re_s_b", "im_s_b",
                  "re_s_w", "im_s_w", "Gamma")

    def csv_row(self) -> tuple:
        z = complex(self.z)
        return (z.real, z.imag, self.s_small.real, self.s_small.imag, self.s_b.real,
                self.s_b.imag, self.s_w.real, self.s_w.imag,
                float("nan") if self.Gamma is None else self.Gamma)


def stieltjes_all(spectra: EnsembleSpectra, z, with_gamma: bool = False) -> GreenEvaluation:
    """``s_*``, ``s_{*,+}`` from eigenvalues; ``s_b``, ``s_w`` from the diagonal of ``G``."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("stieltjes_all needs Im z > 0")
    M = spectra.ensemble.config.M
    N = spectra.ensemble.config.N
    s_small = spectra.small.trace(z) / N
    s_large = spectra.large.trace(z) / M
    diag = spectra.X.green_diag(z)
    gamma = gamma_value(spectra.X, z) if with_gamma else None
    return GreenEvaluation(z, s_small, s_large, complex(diag[:M].mean()), complex(diag[M:].mean()), gamma)


# -- exact identities -------------------------------------------------------------

@dataclass(frozen=True)
class WardResult:
    residual: float
    max_entry: float
    entry_bound_ok: bool


def ward_check(spec: SpectralData, i: int, z) -> WardResult:
    """``|sum_k |G_ik|^2 - Im G_ii / eta|`` for row ``i`` of ``G``."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("ward_check needs Im z > 0")
    row = spec.green_row(i, z)
    residual = abs(float(np.sum(np.abs(row) ** 2)) - row[i].imag / z.imag)
    biggest = float(np.abs(row).max())
    return WardResult(residual, biggest, biggest <= (1 + 1e-12) / z.imag)


def resolvent_identity_check(S, S_tilde, z) -> float:
    """Max-norm of ``G - G~ - G (S~ - S) G~`` from dense inverses."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("resolvent_identity_check needs Im z > 0")
    S = np.asarray(S, dtype=float)
    St = np.asarray(S_tilde, dtype=float)
    eye = np.eye(S.shape[0])
    G = np.linalg.inv(S - z * eye)
    Gt = np.linalg.inv(St - z * eye)
    return float(np.abs(G - Gt - G @ (St - S) @ Gt).max())


def gamma_value(spec: SpectralData, z) -> float:
    return max(1.0, float(np.abs(spec.green(z)).max()))


@dataclass(frozen=True)
class GammaReport:
    E: float
    etas: np.ndarray
    Gamma: np.ndarray
    Gamma_star: np.ndarray
    kappa: float
    worst_scaling_ratio: float

    @property
    def scaling_ok(self) -> bool:
        return self.worst_scaling_ratio <= 1 + 1e-12


def gamma_max(spec: SpectralData, E: float, eta_grid, kappa: float = 2.0) -> GammaReport:
    """``Gamma`` on the grid, its running sup over larger ``eta``, and the check
    ``Gamma(E + i eta/kappa) <= kappa Gamma(E + i eta)`` at every grid point."""
    etas = np.asarray(eta_grid, dtype=float)
    if np.any(etas <= 0) or np.any(np.diff(etas) <= 0):
        raise ValueError("eta_grid must be positive and ascending")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    G = np.array([gamma_value(spec, E + 1j * eta) for eta in etas])
    star = np.maximum.accumulate(G[::-1])[::-1]
    worst = max(gamma_value(spec, E + 1j * eta / kappa) / (kappa * g) for eta, g in zip(etas, G))
    return GammaReport(float(E), etas, G, star, float(kappa), float(worst))


def trivial_eigenpair_check(A, config: GraphConfig) -> tuple[float, float]:
    """``(|X_A e - sqrt(d_b d_w) e|, |X e|)`` for ``e`` proportional to ``(1_M, sqrt(M/N) 1_N)``."""
    A = np.asarray(A, dtype=float)
    M, N = config.M, config.N
    XA = np.zeros((M + N, M + N))
    XA[:M, M:] = A
    XA[M:, :M] = A.T
    e = np.concatenate([np.ones(M), math.sqrt(M / N) * np.ones(N)])
    e /= np.linalg.norm(e)
    lam = math.sqrt(config.d_b * config.d_w)
    X = normalize(A, config).X
    return float(np.linalg.norm(XA @ e - lam * e)), float(np.linalg.norm(X @ e))


def green_relations_check(spectra: EnsembleSpectra, z) -> tuple[float, float]:
    """Max deviation of ``G_kk(z)`` from ``z [G_*(z^2)]_kk`` (white ``k``) and
    of ``G_ii(z)`` from ``z [G_{*,+}(z^2)]_ii`` (black ``i``)."""
    z = complex(z)
    M = spectra.ensemble.config.M
    diag = spectra.X.green_diag(z)
    white = np.abs(diag[M:] - z * spectra.small.green_diag(z * z)).max()
    black = np.abs(diag[:M] - z * spectra.large.green_diag(z * z)).max()
    return float(white), float(black)


# -- spectral correspondence ---------------------------------------------------------

@dataclass(frozen=True)
class CorrespondenceReport:
    residuals: dict
    tol: float

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v <= self.tol]

    @property
    def passed(self) -> bool:
        return not self.failures


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Index groups of sorted ``values`` with consecutive gaps ``<= tol``."""
    if values.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    return np.split(np.arange(values.size), breaks)


def _subspace_gap(U: np.ndarray, W: np.ndarray) -> float:
    """``max |W - U U^T W|`` for orthonormal ``U``, ``W``; ``inf`` on a dimension mismatch."""
    if U.shape[1] != W.shape[1]:
        return math.inf
    if W.shape[1] == 0:
        return 0.0
    return float(np.abs(W - U @ (U.T @ W)).max())


def correspondence_check(spectra: EnsembleSpectra, tol: float = 1e-8,
                         raise_on_failure: bool = True) -> CorrespondenceReport:
    """Spectrum of ``X`` against those of ``H^T H`` and ``H H^T``.

    * ``I``: eigenvalues of ``X`` are ``±sqrt`` of those of ``H^T H`` padded
      with ``M - N`` zeros (compared as squares), and ``sigma(X) = -sigma(X)``.
    * ``II``: ``sigma(H H^T) = sigma(H^T H)`` plus ``M - N`` zeros.
    * ``III``: for each nonzero eigenpair ``(l^2, v)`` of ``H^T H``, the vectors
      ``(H v / l, ±v)/sqrt(2)`` are eigenvectors of ``X`` at ``±l`` and
      ``H v / l`` is an eigenvector of ``H H^T``.
    * ``IV``: on each nonzero cluster, the eigenspace of ``X`` equals the span
      of those vectors.
    * ``V``: padded kernel vectors ``(v, 0)`` of ``H H^T`` are in the kernel of ``X``.
    * ``VI``: the kernel of ``X`` is spanned by the padded kernels of ``H H^T``
      and ``H^T H`` (the latter holds ``(0, 1_N)``).

    Eigenspaces are compared as subspaces, so degenerate clusters need no
    matching of individual vectors.
    """
    ens = spectra.ensemble
    H = ens.H
    M, N = ens.config.M, ens.config.N
    lamX = spectra.X.eigenvalues
    mu_s = spectra.small.eigenvalues
    mu_l = spectra.large.eigenvalues
    res: dict[str, float] = {}

    padded = np.concatenate([mu_s, mu_s, np.zeros(M - N)])
    res["I_squares"] = float(np.abs(np.sort(lamX ** 2) - np.sort(padded)).max())
    res["I_symmetry"] = float(np.abs(lamX + lamX[::-1]).max())
    res["II"] = float(np.abs(mu_l - np.sort(np.concatenate([mu_s, np.zeros(M - N)]))).max())

    sing = np.sqrt(np.clip(mu_s, 0.0, None))
    nonzero = sing > ZERO_TOL
    V = spectra.small.eigenvectors
    l_all = sing[nonzero]
    vs_all = V[:, nonzero]
    vb_all = (H @ vs_all) / l_all
    # X (vb, ±vs) = (±H vs, H^T vb); the top block equals ±l vb by construction
    worst3 = max(
        float(np.abs(H.T @ vb_all - vs_all * l_all).max(initial=0.0)),
        float(np.abs(ens.X_large @ vb_all - vb_all * l_all ** 2).max(initial=0.0)),
    )
    worst4 = 0.0
    UX = spectra.X.eigenvectors
    for idx in _clusters(l_all, CLUSTER_TOL):
        l = l_all[idx]
        vs, vb = vs_all[:, idx], vb_all[:, idx]
        lo, hi = l[0] - CLUSTER_TOL, l[-1] + CLUSTER_TOL
        for sign in (1.0, -1.0):
            W = np.vstack([vb, sign * vs]) / math.sqrt(2)
            a, b = (np.searchsorted(lamX, lo), np.searchsorted(lamX, hi, side="right")) if sign > 0 \
                else (np.searchsorted(lamX, -hi), np.searchsorted(lamX, -lo, side="right"))
            worst4 = max(worst4, _subspace_gap(UX[:, a:b], W))
    res["III"] = worst3
    res["IV"] = worst4

    kl = spectra.large.eigenvectors[:, np.sqrt(np.clip(mu_l, 0.0, None)) <= ZERO_TOL]
    ks = V[:, ~nonzero]
    pad_l = np.vstack([kl, np.zeros((N, kl.shape[1]))])
    pad_s = np.vstack([np.zeros((M, ks.shape[1])), ks])
    # X (v, 0) = (0, H^T v)
    res["V"] = float(np.abs(H.T @ kl).max()) if kl.size else 0.0
    kX = spectra.X.eigenvectors[:, np.abs(lamX) <= ZERO_TOL]
    res["VI"] = _subspace_gap(kX, np.hstack([pad_l, pad_s]))

    report = CorrespondenceReport(res, tol)
    if raise_on_failure and not report.passed:
        raise MismatchReport([f"{k}: {res[k]:.3g}" for k in report.failures])
    return report


# -- eigenvector statistics -------------------------------------------------------

def delocalization_statistic(spec: SpectralData, xi: float) -> np.ndarray:
    """``sqrt(n) |u|_inf / (xi |u|_2)`` for every eigenvector ``u``."""
    U = spec.eigenvectors
    n = U.shape[0]
    return math.sqrt(n) * np.abs(U).max(axis=0) / (xi * np.linalg.norm(U, axis=0))


def spectrum_rows(spec: SpectralData):
    return [(i, float(v)) for i, v in enumerate(spec.eigenvalues)]
