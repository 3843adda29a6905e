"""Positivity decision by coefficient decoupling.

The semigroup of an elliptic system is positive exactly when every
symmetrized coefficient C_kl + C_lk is, at (almost) every point, a real
diagonal matrix; the system is then equivalent to m independent scalar
equations with real coefficients.  This module probes the symmetrized
coefficients (directly, or through the form with dilated tent pairs), decides
the dichotomy, extracts the scalar systems on the positive side, and
constructs a certified witness pair with a(u+, u-) > 0 on the negative side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import affine_tensor, form_value
from .coefficients import (
    ConstantField,
    EllipticSystem,
    GridSampledField,
    check_ellipticity,
    field_bound,
    realify_matrix,
)
from .errors import (
    ContractViolation,
    GeometryError,
    IndeterminateDecision,
    UnsupportedContract,
    WitnessNotLocalized,
)
from .multop import MultWitness, find_witness, is_multiplication
from .tents import build_test_pair

#: Dilation schedule: delta_max * 2**-j for j = 0..6.
DEFAULT_SCHEDULE_STEPS = 7


def default_decision_tol(sys):
    return 1e-8 * max(1.0, sys.bound())


def boundary_distance(box, x0):
    return min(min(x0[i] - a, b - x0[i]) for i, (a, b) in enumerate(box))


def default_delta_max(box, x0):
    dist = boundary_distance(box, x0)
    if dist <= 0:
        raise GeometryError(f"probe point {x0} is not interior")
    return 0.5 * dist


def delta_schedule(box, x0, steps=DEFAULT_SCHEDULE_STEPS):
    dmax = default_delta_max(box, x0)
    return tuple(dmax * 2.0 ** (-j) for j in range(steps))


def system_form_evaluator(sys, nodes=None):
    """Elementary-tensor form evaluator backed by exact quadrature."""

    def evaluate(phi, f, psi, g):
        return form_value(sys, (phi, f), (psi, g), nodes=nodes)

    return evaluate


@dataclass(frozen=True)
class ProbeResult:
    """Symmetrized-coefficient estimate recovered from the form at a point."""

    x0: np.ndarray
    ktilde: int
    ltilde: int
    estimate: np.ndarray        # m x m, approximates C_kl(x0) + C_lk(x0)
    deltas: tuple
    history: tuple              # (delta, m x m estimate) per scheduled delta
    extrapolated: bool
    converged: bool


def probe(form_eval, m, d, box, x0, ktilde, ltilde, deltas=None,
          richardson=True, divergence_factor=10.0):
    """Recover C_kl(x0) + C_lk(x0) from the form by dilated tent pairs.

    The pair uses tau = 1 off the diagonal and tau = 2 on it, so the scaled
    form value delta**(2-d) * a(phi_delta x f, psi_delta x g) converges to the
    symmetrized pairing for every basis pair; the output is always the full
    symmetrized matrix.
    """
    x0 = np.asarray(x0, dtype=float)
    if deltas is None:
        deltas = delta_schedule(box, x0)
    deltas = tuple(float(dd) for dd in deltas)
    dist = boundary_distance(box, x0)
    for dd in deltas:
        if dd <= 0 or dd > dist:
            raise GeometryError(
                f"dilation {dd} does not keep the support inside the box"
            )
    tau = 2.0 if ktilde == ltilde else 1.0
    pair = build_test_pair(tau, ktilde, ltilde, d)
    basis = np.eye(m)
    history = []
    for dd in deltas:
        dil = pair.dilated(x0, dd)
        est = np.empty((m, m), dtype=complex)
        for i in range(m):
            for j in range(m):
                val = form_eval(dil.phi, basis[j], dil.psi, basis[i])
                est[i, j] = dd ** (2 - d) * val
        history.append((dd, est))
    diffs = [float(np.abs(history[s][1] - history[s - 1][1]).max())
             for s in range(1, len(history))]
    scale = max(1.0, float(np.abs(history[-1][1]).max()))
    converged = True
    if diffs:
        tiny = 1e-12 * scale
        if diffs[-1] > tiny and diffs[-1] > divergence_factor * max(diffs[0], tiny):
            converged = False
    estimate = history[-1][1]
    extrapolated = False
    if richardson and len(history) >= 2:
        estimate = 2.0 * history[-1][1] - history[-2][1]
        extrapolated = True
    return ProbeResult(x0, ktilde, ltilde, estimate, deltas, tuple(history),
                       extrapolated, converged)


def probe_system(sys, x0, ktilde, ltilde, deltas=None, richardson=True):
    return probe(system_form_evaluator(sys), sys.m, sys.d, sys.box, x0,
                 ktilde, ltilde, deltas=deltas, richardson=richardson)


# -- witnesses ----------------------------------------------------------------

@dataclass(frozen=True)
class WitnessCertificate:
    """Disjointly supported pair u+ = phi_delta x f, u- = psi_delta x 1_B
    whose form value is positive, certifying that the semigroup is not
    positive."""

    x0: np.ndarray
    ktilde: int
    ltilde: int
    mult_witness: MultWitness
    pair: object                # dilated TestPair
    delta: float
    value: float                # Re a(u+, u-) > 0
    threshold: float            # 0.5 * delta**(d-2) * tau**2
    kind: str = "lattice"

    @property
    def f(self):
        return self.mult_witness.f

    @property
    def indicator(self):
        m = len(self.mult_witness.f)
        one_b = np.zeros(m)
        for i in self.mult_witness.B:
            one_b[i] = 1.0
        return one_b


@dataclass(frozen=True)
class NonrealWitness:
    """Real input pair whose form value has nonzero imaginary part.

    Certifies failure of real invariance: positivity requires the form to be
    real on real states.  Arises when the symmetrized coefficient is diagonal
    but not real, where no disjointly supported pair can have positive value.
    """

    x0: np.ndarray
    ktilde: int
    ltilde: int
    row: int
    col: int
    pair: object
    delta: float
    value_imag: float
    kind: str = "nonreal"


def construct_witness(sys, x0, ktilde, ltilde, Q, delta0=None, max_steps=40):
    """Build a certified witness pair from a non-diagonal symmetrized matrix.

    The tent pair is built with tau equal to the witness pairing of the
    realified Q; the dilation shrinks geometrically until the exactly
    evaluated form value clears the threshold 0.5 * delta**(d-2) * tau**2.
    """
    x0 = np.asarray(x0, dtype=float)
    d = sys.d
    Q_real = realify_matrix(np.asarray(Q, dtype=complex)).real
    witness = find_witness(Q_real)
    if witness is None:
        raise ValueError("symmetrized matrix is diagonal after realification; "
                         "no disjointly supported witness exists")
    tau = float(witness.pairing.real)
    pair = build_test_pair(tau, ktilde, ltilde, d)
    if delta0 is None:
        delta0 = default_delta_max(sys.box, x0)
    delta = float(delta0)
    last_err = None
    for _ in range(max_steps):
        if delta > boundary_distance(sys.box, x0):
            delta *= 0.5
            continue
        dil = pair.dilated(x0, delta)
        one_b = np.zeros(sys.m)
        for i in witness.B:
            one_b[i] = 1.0
        try:
            value = form_value(sys, (dil.phi, witness.f), (dil.psi, one_b)).real
        except UnsupportedContract as exc:     # sampled field, support too wide
            last_err = exc
            delta *= 0.5
            continue
        threshold = 0.5 * delta ** (d - 2) * tau ** 2
        if value >= threshold * (1.0 - 1e-9):
            return WitnessCertificate(x0, ktilde, ltilde, witness, dil, delta,
                                      float(value), float(threshold))
        delta *= 0.5
    raise WitnessNotLocalized(
        f"no dilation certified a witness at {x0} within {max_steps} halvings"
        + (f" ({last_err})" if last_err else "")
    )


def construct_nonreal_witness(sys, x0, ktilde, ltilde, Q, delta0=None,
                              max_steps=40):
    """Witness for a symmetrized matrix that is diagonal but not real."""
    x0 = np.asarray(x0, dtype=float)
    d = sys.d
    Q = np.asarray(Q, dtype=complex)
    im = np.abs(Q.imag)
    row, col = np.unravel_index(np.argmax(im), im.shape)
    target = float(Q.imag[row, col])
    if target == 0.0:
        raise ValueError("symmetrized matrix is real; no nonreal witness")
    tau = 2.0 if ktilde == ltilde else 1.0
    pair = build_test_pair(tau, ktilde, ltilde, d)
    if delta0 is None:
        delta0 = default_delta_max(sys.box, x0)
    delta = float(delta0)
    basis = np.eye(sys.m)
    for _ in range(max_steps):
        if delta > boundary_distance(sys.box, x0):
            delta *= 0.5
            continue
        dil = pair.dilated(x0, delta)
        try:
            value = form_value(sys, (dil.phi, basis[col]), (dil.psi, basis[row]))
        except UnsupportedContract:
            delta *= 0.5
            continue
        if abs(value.imag) >= 0.5 * delta ** (d - 2) * abs(target):
            return NonrealWitness(x0, ktilde, ltilde, int(row), int(col),
                                  dil, delta, float(value.imag))
        delta *= 0.5
    raise WitnessNotLocalized(
        f"no dilation certified a nonreal witness at {x0}"
    )


# -- the decision --------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    """Outcome of the decoupling decision.

    Exactly one of ``scalar_systems`` (positive side) and ``witness``
    (negative side) is present.
    """

    decision: str               # 'positive-decoupled' | 'not-positive'
    scalar_systems: tuple       # m scalar systems, or None
    witness: object             # WitnessCertificate | NonrealWitness | None
    tol: float
    probe_points: np.ndarray
    diagnostics: dict

    @property
    def positive(self):
        return self.decision == "positive-decoupled"


def default_probe_points(sys, per_dim=3):
    """Interior tensor points at relative offsets 1/4, 1/2, 3/4; cell centers
    for grid-sampled coefficients."""
    for k in range(sys.d):
        for l in range(sys.d):
            fld = sys.coefficient(k, l)
            if isinstance(fld, GridSampledField):
                return fld.cell_centers()
    return sys.interior_tensor_points(per_dim)


def extract_scalar_systems(sys):
    """The m scalar systems with coefficients Re (C_kl e_n, e_n)."""
    out = []
    for n in range(sys.m):
        coeffs = tuple(
            tuple(sys.coefficient(k, l).diagonal_scalar(n) for l in range(sys.d))
            for k in range(sys.d)
        )
        out.append(EllipticSystem(sys.box, 1, coeffs, sys.bc, sys.mu))
    return out


def _symmetrized_at(sys, x0, k, l, via_probe, probe_kwargs):
    if via_probe:
        res = probe_system(sys, x0, k, l, **probe_kwargs)
        if not res.converged:
            raise IndeterminateDecision(
                f"probe did not converge at {x0} for target ({k}, {l})",
                diagnostics={"history": res.history},
            )
        return res.estimate
    return sys.symmetrized(k, l, x0)


def _scan_point(sys, x0, tol, via_probe, probe_kwargs):
    """First real-diagonality failure at one point, or None."""
    for k in range(sys.d):
        for l in range(k, sys.d):
            Q = _symmetrized_at(sys, x0, k, l, via_probe, probe_kwargs)
            diagonal = is_multiplication(Q, tol)
            real = float(np.abs(Q.imag).max(initial=0.0)) <= tol
            if not (diagonal and real):
                return (x0, k, l, Q, diagonal, real)
    return None


def decide_decoupling(sys, probe_points=None, tol=None, via_probe=False,
                      probe_kwargs=None, require_elliptic=True, workers=1):
    """Decide positivity of the semigroup by testing every symmetrized
    coefficient for real diagonality at every probe point.

    On success the scalar systems are extracted and their uniform bound and
    pointwise coercivity are recorded; on failure a witness is constructed at
    the first failure in scan order (points lexicographic, then k <= l).
    Points are scanned concurrently when ``workers > 1``; the reduction is
    ordered, so the reported failure does not depend on the worker count.
    """
    if require_elliptic:
        report = check_ellipticity(sys)
        if not report.passed:
            raise ContractViolation(
                f"system fails its declared coercivity: lambda_min = "
                f"{report.lambda_min:.6g} < mu = {sys.mu}"
            )
    if probe_points is None:
        probe_points = default_probe_points(sys)
    probe_points = np.atleast_2d(np.asarray(probe_points, dtype=float))
    if tol is None:
        tol = default_decision_tol(sys)
    probe_kwargs = probe_kwargs or {}

    M = sys.bound()
    first_failure = None
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda x0: _scan_point(sys, x0, tol, via_probe, probe_kwargs),
                probe_points))
        first_failure = next((r for r in results if r is not None), None)
    else:
        for x0 in probe_points:
            first_failure = _scan_point(sys, x0, tol, via_probe, probe_kwargs)
            if first_failure:
                break

    if first_failure is None:
        scalars = extract_scalar_systems(sys)
        bounds_ok = all(
            field_bound(s.coefficient(k, l), sys.box) <= M + tol
            for s in scalars for k in range(sys.d) for l in range(sys.d)
        )
        coercive_ok = True
        for s in scalars:
            for x0 in probe_points:
                B = s.block_matrix(x0)
                lam = float(np.linalg.eigvalsh(0.5 * (B + B.conj().T))[0])
                if lam < sys.mu - tol:
                    coercive_ok = False
        return Verdict(
            "positive-decoupled", tuple(scalars), None, tol, probe_points,
            {"bound": M, "scalar_bounds_ok": bounds_ok,
             "scalar_coercivity_ok": coercive_ok},
        )

    x0, k, l, Q, diagonal, real = first_failure
    if not is_multiplication(realify_matrix(Q).real, tol):
        wit = construct_witness(sys, x0, k, l, Q)
    else:
        wit = construct_nonreal_witness(sys, x0, k, l, Q)
    return Verdict(
        "not-positive", None, wit, tol, probe_points,
        {"bound": M, "failed_point": x0, "failed_pair": (k, l),
         "symmetrized": Q, "diagonal": diagonal, "real": real},
    )


# -- extras ---------------------------------------------------------------------

@dataclass(frozen=True)
class OffdiagReport:
    average: np.ndarray            # exact average of C_12 over the box
    symmetrized_average: np.ndarray
    antisymmetric_average: np.ndarray
    symmetrized_constant: bool


def extract_offdiag_2d(sys, tol=1e-10):
    """Recover the average of C_12 from the form with affine test functions.

    Needs d = 2 with the natural boundary on a bounded box; with the
    zero-trace space the antisymmetric part is pure gauge and cannot be seen.
    """
    if sys.d != 2:
        raise ValueError("off-diagonal extraction is specific to d = 2")
    if sys.bc != "free":
        raise UnsupportedContract(
            "the zero-trace form never determines the antisymmetric part"
        )
    vol = float(np.prod([b - a for a, b in sys.box]))
    phi = affine_tensor(sys.box, 1)     # x2
    psi = affine_tensor(sys.box, 0)     # x1
    m = sys.m
    avg = np.empty((m, m), dtype=complex)
    basis = np.eye(m)
    for i in range(m):
        for j in range(m):
            avg[i, j] = form_value(sys, (phi, basis[j]), (psi, basis[i])) / vol
    sym_avg = (sys.coefficient(0, 1).average(sys.box)
               + sys.coefficient(1, 0).average(sys.box))
    anti_avg = avg - sym_avg / 2.0
    pts = sys.interior_tensor_points(3)
    syms = np.stack([sys.symmetrized(0, 1, x) for x in pts])
    sym_const = bool(np.abs(syms - syms[0]).max(initial=0.0) <= tol * max(1.0, sys.bound()))
    return OffdiagReport(avg, sym_avg, anti_avg, sym_const)


def lattice_pair_value(dform, u):
    """Re (u-)* K (u+) for one real state split entrywise per node/channel."""
    u = np.asarray(u, dtype=float)
    up = np.maximum(u, 0.0)
    um = np.maximum(-u, 0.0)
    return float(np.real(um @ (dform.K @ up)))


def form_criterion_sample(dform, count, seed):
    """Max of Re (u-)* K (u+) over random real states split entrywise.

    For a channel-decoupled real stiffness with nonpositive off-diagonal
    entries this is always <= 0; a positive value is discrete-level evidence
    against positivity.
    """
    if not dform.is_real():
        raise UnsupportedContract(
            "the lattice criterion applies to real (realified) systems"
        )
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(count):
        u = rng.standard_normal(dform.ndof)
        worst = max(worst, lattice_pair_value(dform, u))
    return worst
