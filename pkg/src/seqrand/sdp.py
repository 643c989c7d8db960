"""Equality-constrained semidefinite programming over one dense symmetric
block plus an optional diagonal block, with SDPA sparse interchange.

The solver is a primal-dual path-following interior-point method with a
Mehrotra predictor-corrector and the HKM search direction, assembled through
dense normal equations.  It targets the moment-matrix relaxations produced
by the :mod:`seqrand.npa` compiler (block sizes up to a few hundred,
thousands of constraints) but handles small analytic problems identically.
Problems are stated in maximization form:

    maximize    tr(C X) + c_d . x_d
    subject to  tr(A_k X) + a_dk . x_d = b_k,   X >= 0,  x_d >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "SdpError",
    "InfeasibleError",
    "NumericalTroubleError",
    "SdpaParseError",
    "SdpProblem",
    "SdpConfig",
    "SdpSolution",
    "solve",
    "export_sdpa",
    "import_sdpa",
]


class SdpError(RuntimeError):
    pass


class InfeasibleError(SdpError):
    """Presolve found the equality system inconsistent."""


class NumericalTroubleError(SdpError):
    """A factorization failed even after regularization."""


class SdpaParseError(ValueError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


@dataclass
class SdpProblem:
    """Maximization SDP with one PSD block and an optional diagonal block."""

    C: np.ndarray                     # (n, n) symmetric objective
    A: np.ndarray                     # (m, n, n) symmetric constraint matrices
    b: np.ndarray                     # (m,)
    C_diag: np.ndarray | None = None  # (k,) objective on the diagonal block
    A_diag: np.ndarray | None = None  # (m, k)

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.C.ndim != 2 or self.C.shape[0] != self.C.shape[1]:
            raise ValueError("C must be square")
        if self.A.ndim != 3 or self.A.shape[1:] != self.C.shape:
            raise ValueError("A must stack matrices shaped like C")
        if self.A.shape[0] != self.b.size or self.b.size < 1:
            raise ValueError("need one right-hand side per constraint, at least one")
        if np.max(np.abs(self.C - self.C.T)) > 1e-12 * (1 + np.max(np.abs(self.C))):
            raise ValueError("C must be symmetric")
        if (self.C_diag is None) != (self.A_diag is None):
            raise ValueError("diagonal block needs both C_diag and A_diag")
        if self.C_diag is not None:
            self.C_diag = np.asarray(self.C_diag, dtype=float).reshape(-1)
            self.A_diag = np.asarray(self.A_diag, dtype=float)
            if self.A_diag.shape != (self.b.size, self.C_diag.size):
                raise ValueError("A_diag must be (m, k)")

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def diag_dim(self) -> int:
        return 0 if self.C_diag is None else self.C_diag.size


@dataclass(frozen=True)
class SdpConfig:
    """Termination tolerances and iteration limits."""

    gap_tol: float = 1e-7        # relative duality gap
    res_tol: float = 1e-8        # absolute equality residual (inf norm)
    max_iter: int = 200
    step_fraction: float = 0.98  # fraction of the distance to the cone boundary
    regularization: float = 1e-12
    verbose: bool = False
    record_history: bool = False


@dataclass
class SdpSolution:
    """Solver output; values are reported in the maximization sense."""

    primal_value: float
    dual_value: float
    X: np.ndarray
    y: np.ndarray
    status: str                  # "optimal" | "max_iterations" | "numerical_trouble"
    iterations: int
    gap: float                   # relative duality gap at exit
    X_diag: np.ndarray | None = None
    history: list = field(default_factory=list)


def _presolve(problem: SdpProblem):
    """Drop linearly dependent equality rows, failing on inconsistency.

    Rank detection runs on the stacked vectorized constraints via QR with
    column pivoting on the transpose (rows as columns).
    """
    m = problem.m
    rows = problem.A.reshape(m, -1)
    if problem.diag_dim:
        rows = np.hstack([rows, problem.A_diag])
    norms = np.linalg.norm(rows, axis=1)
    if np.any(norms == 0):
        bad = np.nonzero(norms == 0)[0]
        if np.any(np.abs(problem.b[bad]) > 1e-12):
            raise InfeasibleError("empty constraint with nonzero right-hand side")
        keep0 = norms > 0
    else:
        keep0 = np.ones(m, dtype=bool)
    idx0 = np.nonzero(keep0)[0]
    sub = rows[idx0]
    if sub.shape[0] == 0:
        raise InfeasibleError("no effective constraints")
    # rank-revealing QR on rows
    from scipy.linalg import qr

    q, r, piv = qr(sub.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(sub.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > max(tol, 1e-13)))
    keep = np.sort(piv[:rank])
    dropped = sorted(set(range(sub.shape[0])) - set(keep.tolist()))
    if dropped:
        # consistency: dropped rows must be implied, including right-hand sides
        basis = sub[keep]
        coeffs, *_ = np.linalg.lstsq(basis.T, sub[dropped].T, rcond=None)
        implied_b = coeffs.T @ problem.b[idx0[keep]]
        if np.max(np.abs(implied_b - problem.b[idx0[dropped]])) > 1e-7:
            raise InfeasibleError("dependent equality rows have inconsistent right-hand sides")
    sel = idx0[keep]
    return sel


def _min_eig_sym(mat: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (mat + mat.T))[0])


def _step_to_boundary(block: np.ndarray, delta: np.ndarray, chol=None) -> float:
    """Largest alpha with block + alpha*delta staying PSD (1 = full step)."""
    try:
        if chol is None:
            chol = np.linalg.cholesky(block)
        w = np.linalg.solve(chol, delta)
        w = np.linalg.solve(chol, w.T).T
        lam = _min_eig_sym(w)
    except np.linalg.LinAlgError:
        return 0.0
    if lam >= 0:
        return 1.0
    return min(1.0, -1.0 / lam)


def solve(problem: SdpProblem, config: SdpConfig = SdpConfig()) -> SdpSolution:
    """Interior-point solve of a maximization SDP.

    Terminates ``optimal`` when the relative duality gap drops below
    ``config.gap_tol`` and all equality residuals are below
    ``config.res_tol`` in absolute value; returns the best iterate with
    status ``max_iterations`` or ``numerical_trouble`` otherwise.
    Deterministic for a fixed configuration.
    """
    sel = _presolve(problem)
    # internal minimization form: min <C', X>, C' = -C / c_scale.  The
    # objective is normalized so that scaling C scales the reported optimum
    # exactly (identical iterates), keeping the solver scale-covariant.
    n = problem.n
    k = problem.diag_dim
    A = np.ascontiguousarray(problem.A[sel])
    b = problem.b[sel]
    m = b.size
    has_diag = k > 0
    c_scale = float(max(np.max(np.abs(problem.C)),
                        np.max(np.abs(problem.C_diag)) if has_diag else 0.0))
    if c_scale == 0.0:
        c_scale = 1.0
    C = -problem.C / c_scale
    Ad = problem.A_diag[sel] if has_diag else np.zeros((m, 0))
    Cd = -problem.C_diag / c_scale if has_diag else np.zeros(0)

    normA = max(1.0, float(np.max(np.abs(A))), float(np.max(np.abs(Ad))) if has_diag else 0.0)
    normC = 1.0
    normb = max(1.0, float(np.max(np.abs(b))))

    xi = max(10.0, np.sqrt(n) * normb / normA)
    eta = max(10.0, np.sqrt(n) * normC)
    X = xi * np.eye(n)
    S = eta * np.eye(n)
    xd = xi * np.ones(k)
    sd = eta * np.ones(k)
    y = np.zeros(m)

    A_flat = A.reshape(m, n * n)
    total_dim = n + k
    history: list = []
    status = "max_iterations"
    it = 0
    best = None  # (merit, X, y, xd, pobj, dobj, gap)

    def operator_A(Xm, xdv):
        out = A_flat @ Xm.ravel()
        if has_diag:
            out = out + Ad @ xdv
        return out

    def operator_At(yv):
        out = np.tensordot(yv, A, axes=(0, 0))
        outd = Ad.T @ yv if has_diag else np.zeros(0)
        return out, outd

    for it in range(1, config.max_iter + 1):
        mu = (np.vdot(X, S) + np.dot(xd, sd)) / total_dim
        Aty, Atyd = operator_At(y)
        r_p = b - operator_A(X, xd)
        R_d = C - S - Aty
        r_dd = Cd - sd - Atyd if has_diag else np.zeros(0)

        pobj = float(np.vdot(C, X) + np.dot(Cd, xd))
        dobj = float(np.dot(b, y))
        gap_rel = abs(pobj - dobj) / (1.0 + abs(pobj))
        res_p = float(np.max(np.abs(r_p))) if m else 0.0
        res_d = max(float(np.max(np.abs(R_d))), float(np.max(np.abs(r_dd))) if has_diag else 0.0)

        if config.record_history:
            history.append({"iteration": it, "primal": -pobj, "dual": -dobj,
                            "gap": gap_rel, "res_primal": res_p, "res_dual": res_d,
                            "mu": float(mu)})
        if config.verbose:
            print(f"  it {it:3d}  gap {gap_rel:9.2e}  rp {res_p:9.2e} "
                  f"rd {res_d:9.2e}  mu {mu:9.2e}")

        merit = max(gap_rel / config.gap_tol, res_p / config.res_tol,
                    res_d / (10 * config.res_tol))
        if best is None or merit < best[0]:
            best = (merit, X.copy(), y.copy(), xd.copy(), pobj, dobj, gap_rel)

        if gap_rel < config.gap_tol and res_p < config.res_tol \
                and res_d < config.res_tol * 10:
            status = "optimal"
            break

        try:
            Sinv = np.linalg.inv(S)
            Sinv = 0.5 * (Sinv + Sinv.T)
        except np.linalg.LinAlgError:
            status = "numerical_trouble"
            break

        # normal matrix B_kl = tr(A_k X A_l S^-1) (+ diagonal contributions)
        N = np.matmul(np.matmul(Sinv, A), X)  # N_l = Sinv A_l X
        B = A_flat @ N.reshape(m, n * n).T
        if has_diag:
            B = B + (Ad * (xd / sd)) @ Ad.T
        B = 0.5 * (B + B.T)
        B[np.diag_indices_from(B)] += config.regularization * (1.0 + np.trace(B) / max(m, 1))

        try:
            chol_B = cho_factor(B, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            B[np.diag_indices_from(B)] += 1e-8 * (1.0 + np.trace(B) / max(m, 1))
            try:
                chol_B = cho_factor(B, lower=True, check_finite=False)
            except np.linalg.LinAlgError:
                status = "numerical_trouble"
                break

        def solve_normal(rhs):
            # one round of iterative refinement keeps the search direction
            # accurate when the normal matrix turns ill-conditioned
            dy = cho_solve(chol_B, rhs, check_finite=False)
            resid = rhs - B @ dy
            dy += cho_solve(chol_B, resid, check_finite=False)
            return dy

        def solve_direction(sigma_mu, DXaff=None, DSaff=None, dxaff=None, dsaff=None):
            # complementarity residual R_c = sigma*mu*I - X S (- DXaff DSaff)
            Rc = sigma_mu * np.eye(n) - X @ S
            if DXaff is not None:
                Rc = Rc - DXaff @ DSaff
            rcd = sigma_mu * np.ones(k) - xd * sd
            if dxaff is not None:
                rcd = rcd - dxaff * dsaff
            # rhs_k = r_p_k - tr(A_k (Rc - X R_d) Sinv) (- diag part)
            G = (Rc - X @ R_d) @ Sinv
            rhs = r_p - A_flat @ G.ravel()
            if has_diag:
                rhs = rhs - Ad @ ((rcd - xd * r_dd) / sd)
            dy = solve_normal(rhs)
            dAty, dAtyd = operator_At(dy)
            DS = R_d - dAty
            dsd = r_dd - dAtyd if has_diag else np.zeros(0)
            DX = (Rc - X @ DS) @ Sinv
            DX = 0.5 * (DX + DX.T)
            dxdv = (rcd - xd * dsd) / sd if has_diag else np.zeros(0)
            # push DX back onto the linearized feasibility manifold: rounding
            # in the normal matrix otherwise leaks into the primal residual
            for _ in range(2):
                rho = r_p - operator_A(DX, dxdv)
                if float(np.max(np.abs(rho))) < 1e-13 * (1.0 + normb):
                    break
                kappa = solve_normal(rho)
                kAty, kAtyd = operator_At(kappa)
                corr = X @ kAty @ Sinv
                DX = DX + 0.5 * (corr + corr.T)
                if has_diag:
                    dxdv = dxdv + xd * kAtyd / sd
            return DX, DS, dy, dxdv, dsd

        try:
            chol_X = np.linalg.cholesky(X)
            chol_S = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            status = "numerical_trouble"
            break

        # predictor
        DXa, DSa, dya, dxa, dsa = solve_direction(0.0)
        ap = _step_to_boundary(X, DXa, chol_X)
        ad = _step_to_boundary(S, DSa, chol_S)
        if has_diag:
            with np.errstate(divide="ignore", invalid="ignore"):
                ap = min(ap, _diag_step(xd, dxa))
                ad = min(ad, _diag_step(sd, dsa))
        mu_aff = (np.vdot(X + ap * DXa, S + ad * DSa)
                  + np.dot(xd + ap * dxa, sd + ad * dsa)) / total_dim
        sigma = min(1.0, max(0.0, (mu_aff / mu)) ** 3)

        # corrector
        DX, DS, dy, dxdv, dsdv = solve_direction(sigma * mu, DXa, DSa, dxa, dsa)
        ap = config.step_fraction * _step_to_boundary(X, DX, chol_X)
        ad = config.step_fraction * _step_to_boundary(S, DS, chol_S)
        if has_diag:
            ap = min(ap, config.step_fraction * _diag_step(xd, dxdv))
            ad = min(ad, config.step_fraction * _diag_step(sd, dsdv))
        ap, ad = min(ap, 1.0), min(ad, 1.0)
        if ap < 1e-8 and ad < 1e-8:
            # pure centering rescue before giving up
            DX, DS, dy, dxdv, dsdv = solve_direction(mu)
            ap = config.step_fraction * _step_to_boundary(X, DX, chol_X)
            ad = config.step_fraction * _step_to_boundary(S, DS, chol_S)
            if has_diag:
                ap = min(ap, config.step_fraction * _diag_step(xd, dxdv))
                ad = min(ad, config.step_fraction * _diag_step(sd, dsdv))
            ap, ad = min(ap, 1.0), min(ad, 1.0)
            if ap < 1e-10 and ad < 1e-10:
                status = "numerical_trouble"
                break

        X = X + ap * DX
        S = S + ad * DS
        y = y + ad * dy
        if has_diag:
            xd = xd + ap * dxdv
            sd = sd + ad * dsdv

    pobj = float(np.vdot(C, X) + np.dot(Cd, xd))
    dobj = float(np.dot(b, y))
    gap_rel = abs(pobj - dobj) / (1.0 + abs(pobj))
    if status != "optimal" and best is not None:
        final_merit = max(gap_rel / config.gap_tol,
                          (float(np.max(np.abs(b - operator_A(X, xd)))) if m else 0.0)
                          / config.res_tol)
        if best[0] < final_merit:
            _, X, y, xd, pobj, dobj, gap_rel = best
            if best[0] < 1.0:
                status = "optimal"
    y_full = np.zeros(problem.m)
    y_full[sel] = y * c_scale
    return SdpSolution(
        primal_value=-pobj * c_scale,
        dual_value=-dobj * c_scale,
        X=X,
        y=y_full,
        status=status,
        iterations=it,
        gap=gap_rel,
        X_diag=xd if has_diag else None,
        history=history,
    )


def _diag_step(x: np.ndarray, dx: np.ndarray) -> float:
    if x.size == 0:
        return 1.0
    neg = dx < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-x[neg] / dx[neg])))


# --- SDPA sparse interchange -------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.16e}"


def export_sdpa(problem: SdpProblem, path) -> None:
    """Write the problem in SDPA sparse format (.dat-s).

    Layout: number of constraints, number of blocks, block sizes (the
    diagonal block, when present, is written with a negative size), the
    right-hand sides, then one ``k blk i j v`` line per upper-triangle
    nonzero with 1-based indices; ``k = 0`` holds the objective.  Values
    carry 17 significant digits so the round trip is exact at double
    precision.
    """
    lines = []
    m = problem.m
    blocks = [problem.n]
    if problem.diag_dim:
        blocks.append(-problem.diag_dim)
    lines.append(str(m))
    lines.append(str(len(blocks)))
    lines.append(" ".join(str(s) for s in blocks))
    lines.append(" ".join(_fmt(v) for v in problem.b))

    def emit(k: int, blk: int, mat: np.ndarray):
        nnz = np.argwhere(np.triu(np.abs(mat)) > 0.0)
        for i, j in nnz:
            lines.append(f"{k} {blk} {i + 1} {j + 1} {_fmt(mat[i, j])}")

    def emit_diag(k: int, blk: int, vec: np.ndarray):
        for i in np.nonzero(vec)[0]:
            lines.append(f"{k} {blk} {i + 1} {i + 1} {_fmt(vec[i])}")

    emit(0, 1, problem.C)
    if problem.diag_dim:
        emit_diag(0, 2, problem.C_diag)
    for kk in range(m):
        emit(kk + 1, 1, problem.A[kk])
        if problem.diag_dim:
            emit_diag(kk + 1, 2, problem.A_diag[kk])
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)


def import_sdpa(path) -> SdpProblem:
    """Parse an SDPA sparse file written by :func:`export_sdpa`.

    Comment lines beginning with ``"`` or ``*`` are ignored.  Malformed
    content raises :class:`SdpaParseError` carrying the offending line
    number.
    """
    header: list = []
    entries: list = []
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith('"') or line.startswith("*"):
                continue
            if len(header) < 4:
                header.append((line_no, line))
            else:
                entries.append((line_no, line))
    if len(header) < 4:
        raise SdpaParseError(0, "file ends before the four header lines")

    def ints(entry, expect=None):
        line_no, line = entry
        toks = line.replace(",", " ").replace("{", " ").replace("}", " ").split()
        try:
            vals = [int(t) for t in toks]
        except ValueError as exc:
            raise SdpaParseError(line_no, f"expected integers: {exc}") from None
        if expect is not None and len(vals) != expect:
            raise SdpaParseError(line_no, f"expected {expect} integers, got {len(vals)}")
        return vals

    m = ints(header[0], expect=1)[0]
    nblock = ints(header[1], expect=1)[0]
    sizes = ints(header[2], expect=nblock)
    if nblock not in (1, 2) or sizes[0] <= 0 or (nblock == 2 and sizes[1] >= 0):
        raise SdpaParseError(header[2][0],
                             "expected one PSD block optionally followed by a diagonal block")
    line_no, line = header[3]
    toks = line.replace(",", " ").replace("{", " ").replace("}", " ").split()
    if len(toks) != m:
        raise SdpaParseError(line_no, f"expected {m} right-hand values, got {len(toks)}")
    try:
        b = np.array([float(t) for t in toks])
    except ValueError as exc:
        raise SdpaParseError(line_no, f"bad right-hand value: {exc}") from None

    n = sizes[0]
    k = -sizes[1] if nblock == 2 else 0
    C = np.zeros((n, n))
    A = np.zeros((m, n, n))
    Cd = np.zeros(k) if k else None
    Ad = np.zeros((m, k)) if k else None
    for line_no, line in entries:
        toks = line.split()
        if len(toks) != 5:
            raise SdpaParseError(line_no, f"expected 'k blk i j v', got {len(toks)} tokens")
        try:
            kk, blk, i, j = (int(t) for t in toks[:4])
            v = float(toks[4])
        except ValueError as exc:
            raise SdpaParseError(line_no, f"bad entry: {exc}") from None
        if not 0 <= kk <= m:
            raise SdpaParseError(line_no, f"constraint index {kk} out of range")
        if blk == 1:
            if not (1 <= i <= n and 1 <= j <= n and i <= j):
                raise SdpaParseError(line_no, "matrix index out of range or not upper-triangular")
            target = C if kk == 0 else A[kk - 1]
            target[i - 1, j - 1] = v
            target[j - 1, i - 1] = v
        elif blk == 2 and k:
            if i != j or not 1 <= i <= k:
                raise SdpaParseError(line_no, "diagonal block entries must sit on the diagonal")
            if kk == 0:
                Cd[i - 1] = v
            else:
                Ad[kk - 1, i - 1] = v
        else:
            raise SdpaParseError(line_no, f"block index {blk} out of range")
    return SdpProblem(C=C, A=A, b=b, C_diag=Cd, A_diag=Ad)
