"""Monte Carlo experiments comparing sampled-graph spectra with the MP law.

Each experiment maps over samples; sample ``k`` draws its graph from the
switching chain with stream ``k`` of the master seed (see ``rng``), so
records do not depend on the worker count.  Every sample first passes the
exact-identity suite (``check_identities``).
"""
from __future__ import annotations

import json
import math
import statistics
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import mp_law, spectral
from .errors import ConfigError, MismatchReport
from .graphs import GraphConfig, adjacency, validate_config
from .mp_law import ControlParams, MPParams
from .rng import spawn_generators
from .switching import default_chain_steps, run_chain

IDENTITY_TOL = 1e-8
IDENTITY_Z = (0.5 + 0.2j, 1.0 + 1.0j)


@dataclass(frozen=True)
class ExperimentSpec:
    """Inputs of one experiment.

    Every ``z`` must satisfy ``Im z >= xi**2 / N`` unless
    ``override_eta_floor`` is set, and ``|Re z| > epsilon``.
    """

    config: GraphConfig
    samples: int = 1
    seed: int = 0
    chain_steps: int | None = None
    z_grid: tuple = ()
    epsilon: float = 0.0
    xi: float | None = None
    override_eta_floor: bool = False
    kernel: str = "mixed"
    name: str = "experiment"

    def __post_init__(self):
        object.__setattr__(self, "z_grid", tuple(complex(z) for z in self.z_grid))
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.chain_steps is not None and self.chain_steps < 0:
            raise ConfigError("chain_steps must be >= 0")
        floor = self.eta_floor
        for z in self.z_grid:
            if z.imag <= 0:
                raise ConfigError(f"z = {z} is not in the upper half-plane")
            if not self.override_eta_floor and z.imag < floor:
                raise ConfigError(f"Im z = {z.imag:.6g} below the floor xi^2/N = {floor:.6g}")
            if abs(z.real) <= self.epsilon:
                raise ConfigError(f"|Re z| = {abs(z.real):.6g} not above epsilon = {self.epsilon}")

    @property
    def control(self) -> ControlParams:
        return ControlParams(self.config.N, self.config.d_b, self.gamma, self.xi)

    @property
    def gamma(self) -> float:
        return self.config.N / self.config.M

    @property
    def eta_floor(self) -> float:
        return self.control.xi ** 2 / self.config.N

    @property
    def steps(self) -> int:
        return default_chain_steps(self.config) if self.chain_steps is None else self.chain_steps

    def to_dict(self) -> dict:
        d = asdict(self)
        d["config"] = self.config.as_dict()
        d["z_grid"] = [[z.real, z.imag] for z in self.z_grid]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        c = d.pop("config")
        config = validate_config(c["M"], c["N"], c["d_b"], c["d_w"])
        z = tuple(complex(*p) if isinstance(p, (list, tuple)) else complex(p) for p in d.pop("z_grid", ()))
        known = {f for f in cls.__dataclass_fields__} - {"config", "z_grid"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown spec fields: {sorted(unknown)}")
        return cls(config=config, z_grid=z, **d)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        return cls.from_dict(json.loads(text))


def z_schedule(N: int, energies, eta_exponents=(0.25, 0.5)) -> tuple:
    """``E + i N**(-a)`` for every energy and exponent."""
    return tuple(complex(E, N ** -a) for a in eta_exponents for E in energies)


@dataclass(frozen=True)
class RunRecord:
    experiment: str
    sample: int
    config: str
    seed: int
    z: complex | None
    quantity: str
    value: float
    bound_name: str
    bound: float
    index: int | None = None

    CSV_HEADER = ("experiment", "sample", "config", "seed", "re_z", "im_z", "index",
                  "quantity", "value", "bound_name", "bound", "ratio")

    @property
    def ratio(self) -> float:
        if self.bound == 0 or math.isnan(self.bound):
            return float("nan")
        return self.value / self.bound

    def csv_row(self) -> tuple:
        re = im = None
        if self.z is not None:
            re, im = float(self.z.real), float(self.z.imag)
        return (self.experiment, self.sample, self.config, self.seed, re, im, self.index,
                self.quantity, float(self.value), self.bound_name, float(self.bound), self.ratio)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list
    identities: list = field(default_factory=list)

    def rows(self):
        return [r.csv_row() for r in self.records]

    def select(self, quantity: str, bound_name: str | None = None) -> list:
        return [r for r in self.records
                if r.quantity == quantity and (bound_name is None or r.bound_name == bound_name)]

    def summary(self) -> dict:
        """Median and max of values and ratios per (quantity, bound, z)."""
        groups = defaultdict(list)
        for r in self.records:
            key = (r.quantity, r.bound_name, None if r.z is None else (r.z.real, r.z.imag))
            groups[key].append(r)
        out = []
        for (q, b, z), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or (0, 0))):
            vals = [r.value for r in rs]
            ratios = [r.ratio for r in rs if not math.isnan(r.ratio)]
            out.append({
                "quantity": q, "bound_name": b, "z": None if z is None else list(z), "count": len(rs),
                "median_value": statistics.median(vals), "max_value": max(vals),
                "median_ratio": statistics.median(ratios) if ratios else None,
                "max_ratio": max(ratios) if ratios else None,
            })
        return {"experiment": self.spec.name, "spec": self.spec.to_dict(), "groups": out}


# -- per-sample pipeline --------------------------------------------------------

def _config_label(c: GraphConfig) -> str:
    return f"{c.M}-{c.N}-{c.d_b}-{c.d_w}"


def sample_spectra(spec: ExperimentSpec, k: int):
    """Graph ``k`` of the experiment, its adjacency and all three eigendecompositions."""
    gen = spawn_generators(spec.seed, spec.samples)[k]
    graph = run_chain(spec.config, spec.steps, gen, spec.kernel)
    A = adjacency(graph)
    spectra = spectral.decompose_all(spectral.normalize(A, spec.config))
    return graph, A, spectra


def check_identities(spectra: spectral.EnsembleSpectra, A, z_points=IDENTITY_Z,
                     tol: float = IDENTITY_TOL) -> dict:
    """Ward, resolvent, correspondence, green-relation and trivial-eigenpair residuals.

    Raises ``MismatchReport`` if any exceeds ``tol``.
    """
    cfg = spectra.ensemble.config
    M, N = cfg.M, cfg.N
    n = M + N
    rows = range(n) if n <= 200 else sorted({0, M - 1, M, n - 1})
    res = {}
    res["ward"] = max(spectral.ward_check(spectra.X, i, z).residual for i in rows for z in z_points)
    S = spectra.ensemble.X_small
    bump = np.zeros_like(S)
    bump[0, 0] = 1.0
    res["resolvent"] = max(spectral.resolvent_identity_check(S, S + bump, z) for z in z_points)
    corr = spectral.correspondence_check(spectra, tol, raise_on_failure=False)
    res.update({f"correspondence_{k}": v for k, v in corr.residuals.items()})
    res["green_relations"] = max(max(spectral.green_relations_check(spectra, z)) for z in z_points)
    res["trivial_A"], res["trivial_X"] = spectral.trivial_eigenpair_check(A, cfg)
    bad = [f"{k}: {v:.3g}" for k, v in res.items() if not v <= tol]
    if bad:
        raise MismatchReport(bad)
    return res


def _map(fn, spec: ExperimentSpec, workers: int, *args):
    ks = range(spec.samples)
    if workers <= 1 or spec.samples == 1:
        return [fn(spec, k, *args) for k in ks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, [spec] * spec.samples, ks, *[[a] * spec.samples for a in args]))


def _collect(spec: ExperimentSpec, outputs) -> ExperimentResult:
    records, identities = [], []
    for recs, ids in outputs:
        records.extend(recs)
        identities.append(ids)
    return ExperimentResult(spec, records, identities)


def _offdiag_max(G: np.ndarray) -> float:
    a = np.abs(G)
    np.fill_diagonal(a, 0.0)
    return float(a.max()) if a.size > 1 else 0.0


# -- local law ---------------------------------------------------------------------

def _local_law_sample(spec: ExperimentSpec, k: int):
    _, A, S = sample_spectra(spec, k)
    ids = check_identities(S, A)
    ctl = spec.control
    mp = ctl.mp
    xi = ctl.xi
    M = spec.config.M
    label = _config_label(spec.config)
    out = []

    def rec(z, q, v, name, b):
        out.append(RunRecord(spec.name, k, label, spec.seed, z, q, float(v), name, float(b)))

    for z in spec.z_grid:
        w = z * z
        Fz = float(mp_law.F(z, xi * ctl.Phi(z), mp))
        Fw = abs(z) * float(mp_law.F(w, xi * ctl.Phi(w), mp))
        off_sq = xi * float(ctl.Phi(w)) / abs(z)
        off_lin = xi * float(ctl.Phi(z))
        mv = mp_law.m_variants(z, mp)

        Gs = S.small.green(z)
        Gl = S.large.green(z)
        rec(z, "G_small_diag", np.abs(np.diag(Gs) - mv.m_inf).max(), "F_z(xi*Phi(z))", Fz)
        rec(z, "G_small_offdiag", _offdiag_max(Gs), "xi*Phi(z^2)/|z|", off_sq)
        rec(z, "G_small_offdiag", _offdiag_max(Gs), "xi*Phi(z)", off_lin)
        rec(z, "G_large_diag", np.abs(np.diag(Gl) - mv.m_inf_plus).max(), "F_z(xi*Phi(z))", Fz)
        rec(z, "G_large_offdiag", _offdiag_max(Gl), "xi*Phi(z^2)/|z|", off_sq)
        rec(z, "G_large_offdiag", _offdiag_max(Gl), "xi*Phi(z)", off_lin)

        ev = spectral.stieltjes_all(S, z)
        rec(z, "s_small", abs(ev.s_small - mv.m_inf), "F_z(xi*Phi(z))", Fz)
        rec(z, "s_large", abs(ev.s_large - mv.m_inf_plus), "F_z(xi*Phi(z))", Fz)

        # diagonal blocks of G(z) are z G_*(z^2) (white) and z G_{*,+}(z^2) (black)
        diag = S.X.green_diag(z)
        rec(z, "G_white_diag", np.abs(diag[M:] - mv.m_lin).max(), "|z|*F_{z^2}(xi*Phi(z^2))", Fw)
        rec(z, "G_black_diag", np.abs(diag[:M] - mv.m_lin_plus).max(), "|z|*F_{z^2}(xi*Phi(z^2))", Fw)
        rec(z, "G_white_offdiag", abs(z) * _offdiag_max(S.small.green(w)), "xi*Phi(z)", off_lin)
        rec(z, "G_black_offdiag", abs(z) * _offdiag_max(S.large.green(w)), "xi*Phi(z)", off_lin)
        rec(z, "s_b", abs(ev.s_b - mv.m_lin_plus), "|z|*F_{z^2}(xi*Phi(z^2))", Fw)
        rec(z, "s_w", abs(ev.s_w - mv.m_lin), "|z|*F_{z^2}(xi*Phi(z^2))", Fw)
    return out, ids


def local_law_run(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Green-function deviations from the limiting transforms, each with its bound."""
    if not spec.z_grid:
        raise ConfigError("local_law_run needs a z grid")
    return _collect(spec, _map(_local_law_sample, spec, workers))


# -- eigenvectors and eigenvalues ---------------------------------------------------

def _delocalization_sample(spec: ExperimentSpec, k: int):
    _, A, S = sample_spectra(spec, k)
    ids = check_identities(S, A)
    xi = spec.control.xi
    stat = spectral.delocalization_statistic(S.small, xi)
    label = _config_label(spec.config)
    recs = [RunRecord(spec.name, k, label, spec.seed, None, "delocalization", float(v),
                      "O(1) normalized by xi/sqrt(N)", 1.0, index=i) for i, v in enumerate(stat)]
    return recs, ids


def delocalization_run(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """``sqrt(N) |u|_inf / (xi |u|_2)`` for every eigenvector of ``H^T H``."""
    return _collect(spec, _map(_delocalization_sample, spec, workers))


def bulk_indices(N: int, kappa: float) -> range:
    """1-based indices ``i`` with ``kappa N <= i <= (1 - kappa) N``."""
    return range(max(1, math.ceil(kappa * N)), math.floor((1 - kappa) * N) + 1)


def _rigidity_sample(spec: ExperimentSpec, k: int, kappa: float, locations):
    _, A, S = sample_spectra(spec, k)
    ids = check_identities(S, A)
    ctl = spec.control
    idx = np.array(bulk_indices(spec.config.N, kappa)) - 1
    dev = np.abs(S.small.eigenvalues[idx] - locations[idx])
    j = int(np.argmax(dev))
    bound = ctl.xi ** 2 / ctl.D ** 0.25
    rec = RunRecord(spec.name, k, _config_label(spec.config), spec.seed, None, "rigidity_max",
                    float(dev[j]), "xi^2/D^(1/4)", bound, index=int(idx[j]) + 1)
    return [rec], ids


def rigidity_run(spec: ExperimentSpec, kappa: float = 0.1, workers: int = 1) -> ExperimentResult:
    """Max bulk distance between ascending eigenvalues of ``H^T H`` and classical locations."""
    if not 0 < kappa < 0.5:
        raise ConfigError("kappa must lie in (0, 1/2)")
    locations = mp_law.classical_locations(spec.config.N, MPParams(spec.gamma))
    return _collect(spec, _map(_rigidity_sample, spec, workers, kappa, locations))


def ks_distance(eigenvalues, params) -> float:
    """Kolmogorov-Smirnov distance of the empirical law of ``eigenvalues`` to MP."""
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    n = lam.size
    cdf = np.array([mp_law.mp_cdf(x, params) for x in lam])
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.abs(upper - cdf).max(), np.abs(lower - cdf).max()))


def default_intervals(params, bins: int = 10) -> tuple:
    p = mp_law._params(params)
    edges = np.linspace(p.lambda_minus, p.lambda_plus, bins + 1)
    return tuple((float(a), float(b)) for a, b in zip(edges[:-1], edges[1:]))


def _esd_sample(spec: ExperimentSpec, k: int, intervals):
    _, A, S = sample_spectra(spec, k)
    ids = check_identities(S, A)
    mp = MPParams(spec.gamma)
    lam = S.small.eigenvalues
    label = _config_label(spec.config)
    recs = [RunRecord(spec.name, k, label, spec.seed, None, "ks_distance", ks_distance(lam, mp),
                      "none (MP CDF reference)", float("nan"))]
    n = lam.size
    for i, (a, b) in enumerate(intervals):
        frac = np.count_nonzero((lam >= a) & (lam < b)) / n
        mass = mp_law.mp_cdf(b, mp) - mp_law.mp_cdf(a, mp)
        recs.append(RunRecord(spec.name, k, label, spec.seed, None, f"mass[{a:.6g},{b:.6g})",
                              float(frac), "integral of rho_mp", float(mass), index=i))
    return recs, ids


def esd_compare_run(spec: ExperimentSpec, intervals=None, workers: int = 1) -> ExperimentResult:
    """KS distance and interval masses of all ``N`` eigenvalues of ``H^T H`` against MP."""
    intervals = default_intervals(spec.gamma) if intervals is None else tuple(intervals)
    return _collect(spec, _map(_esd_sample, spec, workers, intervals))


# -- self-consistent equations ------------------------------------------------------

def _sce_sample(spec: ExperimentSpec, k: int):
    _, A, S = sample_spectra(spec, k)
    ids = check_identities(S, A)
    ctl = spec.control
    mp = ctl.mp
    label = _config_label(spec.config)
    out = []
    for z in spec.z_grid:
        ev = spectral.stieltjes_all(S, z)
        bound = (1 + abs(z)) * ctl.xi * float(ctl.Phi(z))
        name = "(1+|z|)*xi*Phi(z)"
        for q, fn, s in (("sce_small", mp_law.sce_residual_small, ev.s_small),
                         ("sce_large", mp_law.sce_residual_large, ev.s_large),
                         ("sce_black", mp_law.sce_residual_black, ev.s_b),
                         ("sce_white", mp_law.sce_residual_white, ev.s_w)):
            out.append(RunRecord(spec.name, k, label, spec.seed, z, q, abs(fn(s, z, mp)), name, bound))
        gap, Fr = mp_law.stability_gap(ev.s_small, z, mp, spec.epsilon)
        out.append(RunRecord(spec.name, k, label, spec.seed, z, "stability_gap", gap,
                             "F_z(|R|/(1+|z|))", Fr))
    return out, ids


def sce_stability_run(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Residuals of the four averaged equations and the stability gap of ``s_*``."""
    if not spec.z_grid:
        raise ConfigError("sce_stability_run needs a z grid")
    return _collect(spec, _map(_sce_sample, spec, workers))


def identities_run(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Exact-identity residuals only, one record per identity and sample."""
    return _collect(spec, _map(_identities_sample, spec, workers))


def _identities_sample(spec: ExperimentSpec, k: int):
    _, A, S = sample_spectra(spec, k)
    ids = check_identities(S, A)
    label = _config_label(spec.config)
    recs = [RunRecord(spec.name, k, label, spec.seed, None, q, float(v), "tolerance", IDENTITY_TOL)
            for q, v in ids.items()]
    return recs, ids


def with_config(spec: ExperimentSpec, config: GraphConfig, **changes) -> ExperimentSpec:
    return replace(spec, config=config, **changes)
