"""Command-line harness emitting the library's tables and curve data as CSV.

Subcommands reproduce the headline artifacts: violation maxima and
double-violation windows (``table1``), first/second-round violation curves
(``curves``), decomposition-attack randomness curves (``guess-decomp``),
device-independent bounds (``npa-bound``), the random-instance theorem
batteries (``theorem-check``), and SDPA export of one relaxation instance
(``export-sdp``).  A JSON config file may predefine any field; explicit
flags override it.  Output files are written atomically (temp file, then
rename).  Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import guessing, npa, seqsim
from .cglmp import cglmp_value
from .qcore import DensityOperator, StateVector, validate_povm
from .sdp import SdpConfig, export_sdpa

__all__ = ["ConfigError", "RunConfig", "main"]


class ConfigError(ValueError):
    def __init__(self, field: str, reason: str):
        self.field = field
        super().__init__(f"config field {field!r}: {reason}")


@dataclass
class RunConfig:
    """Validated settings of one CLI invocation.

    ``mode`` defaults per command: the curve commands use the square-root
    update rule (the one reproducing the closed-form reference curves), the
    guessing pipeline uses the extremal-mixture rule.
    """

    command: str
    state: str = "mes"
    mode: str | None = None
    grid: tuple | None = None
    setting: tuple = (0, 0, 1)
    scope: str = "local"
    profile: str = "default"
    tol: float | None = None
    out: str | None = None
    seed: int = 7
    instances: int = 100
    eps: float | None = None

    def validate(self):
        if self.state not in ("mes", "mvs"):
            raise ConfigError("state", f"must be 'mes' or 'mvs', got {self.state!r}")
        if self.mode is None:
            self.mode = "sqrt" if self.command == "curves" else "mixture"
        if self.mode not in ("sqrt", "mixture"):
            raise ConfigError("mode", f"must be 'sqrt' or 'mixture', got {self.mode!r}")
        if self.scope not in ("local", "global"):
            raise ConfigError("scope", f"must be 'local' or 'global', got {self.scope!r}")
        if self.profile not in ("default", "extended"):
            raise ConfigError("profile", f"must be 'default' or 'extended', got {self.profile!r}")
        if self.grid is not None:
            lo, hi, step = self.grid
            if not (0.0 <= lo <= hi <= 1.0) or step <= 0:
                raise ConfigError("grid", f"need 0 <= lo <= hi <= 1 and step > 0, got {self.grid}")
        if len(self.setting) != 3 or any(s not in (0, 1) for s in self.setting):
            raise ConfigError("setting", f"need three binary indices, got {self.setting}")
        if self.eps is not None and not 0.0 <= self.eps <= 1.0:
            raise ConfigError("eps", f"must lie in [0, 1], got {self.eps}")
        if self.instances < 1:
            raise ConfigError("instances", "need at least one instance")
        if self.tol is not None and not 0 < self.tol < 1:
            raise ConfigError("tol", f"must lie in (0, 1), got {self.tol}")
        return self


def _parse_grid(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError("grid", f"expected lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError("grid", f"non-numeric bounds in {text!r}") from None
    return (lo, hi, step)


def _parse_setting(text: str) -> tuple:
    try:
        vals = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise ConfigError("setting", f"expected x,y1,y2 integers, got {text!r}") from None
    if len(vals) != 3:
        raise ConfigError("setting", f"expected three indices, got {text!r}")
    return vals


def _grid_points(cfg: RunConfig, default=None):
    if cfg.grid is None:
        if default is None:
            lo, hi = seqsim.double_violation_window(cfg.state)
            return np.linspace(lo, hi, 5)
        lo, hi, step = default
    else:
        lo, hi, step = cfg.grid
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _thread_count() -> int:
    raw = os.environ.get("SEQRAND_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_grid(fn, points):
    threads = _thread_count()
    if threads == 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, points))


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _write_rows(path: str | None, header: list, rows: list):
    text = ",".join(header) + "\n" + "\n".join(
        ",".join(_fmt(v) for v in row) for row in rows
    ) + "\n"
    if path is None:
        sys.stdout.write(text)
        return
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _simulated_round_values(state: str, mode: str, eps: float) -> tuple:
    dist = seqsim.sequential_distribution(seqsim.build_cglmp_scenario(state, eps, mode))
    i1 = cglmp_value(seqsim.alice_round_marginal(dist, 0))
    i2 = cglmp_value(seqsim.alice_round_marginal(dist, 1))
    return i1, i2


def _cmd_table1(cfg: RunConfig) -> int:
    state = cfg.state
    lo, hi = seqsim.double_violation_window(state)
    i1_max, _ = _simulated_round_values(state, "sqrt", 1.0)
    _, i2_at_lo = _simulated_round_values(state, "sqrt", lo)

    def sim_i2(eps):
        return _simulated_round_values(state, "sqrt", eps)[1]

    # simulated upper window end: root of the (decreasing) round-2 curve
    a, b = lo, 1.0
    hi_sim = None
    if sim_i2(a) > 2.0 >= sim_i2(b):
        while b - a > 1e-8:
            mid = 0.5 * (a + b)
            if sim_i2(mid) > 2.0:
                a = mid
            else:
                b = mid
        hi_sim = 0.5 * (a + b)
    rows = [
        ("bob1_max", i1_max, seqsim.closed_form_first_round(state, 1.0)),
        ("bob2_max", i2_at_lo, seqsim.closed_form_second_round(state, lo)),
        ("window_low", lo, 2.0 / seqsim.closed_form_first_round(state, 1.0)),
        ("window_high", hi_sim if hi_sim is not None else float("nan"), hi),
    ]
    _write_rows(cfg.out, ["quantity", "simulated", "closed_form"], rows)
    return 0


def _cmd_curves(cfg: RunConfig) -> int:
    points = _grid_points(cfg, default=(0.0, 1.0, 1e-3))

    def one(eps):
        i1, i2 = _simulated_round_values(cfg.state, cfg.mode, eps)
        return (eps, i1, seqsim.closed_form_first_round(cfg.state, eps),
                i2, seqsim.closed_form_second_round(cfg.state, eps))

    rows = _map_grid(one, points)
    _write_rows(cfg.out, ["epsilon (dimensionless)", "i3_round1", "i3_round1_closed",
                          "i3_round2", "i3_round2_closed"], rows)
    return 0


def _cmd_guess_decomp(cfg: RunConfig) -> int:
    points = _grid_points(cfg, default=None)

    def one(eps):
        rep = guessing.cglmp_attack(cfg.state, eps, setting=cfg.setting, scope=cfg.scope)
        return (eps, rep.guess_probability, rep.min_entropy_bits)

    rows = _map_grid(one, points)
    _write_rows(cfg.out, ["epsilon (dimensionless)", "guess_probability",
                          "min_entropy (bits)"], rows)
    return 0


def _npa_config(cfg: RunConfig) -> SdpConfig:
    if cfg.tol is None:
        return npa.NPA_SOLVER_CONFIG
    return SdpConfig(gap_tol=cfg.tol, res_tol=cfg.tol)


def _cmd_npa_bound(cfg: RunConfig) -> int:
    points = _grid_points(cfg, default=None)
    setting = cfg.setting[1:]

    def one(eps):
        dist = seqsim.sequential_distribution(
            seqsim.build_cglmp_scenario(cfg.state, eps, cfg.mode))
        bound = npa.di_guess_bound(dist, setting, config=_npa_config(cfg),
                                   profile=cfg.profile)
        return (eps, bound.report.guess_probability, bound.report.min_entropy_bits,
                bound.status, bound.gap)

    rows = _map_grid(one, points)
    _write_rows(cfg.out, ["epsilon (dimensionless)", "guess_probability",
                          "min_entropy (bits)", "status", "duality_gap"], rows)
    return 0


def _random_pvm(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, _ = np.linalg.qr(a)
    return validate_povm([np.outer(q[:, i], q[:, i].conj()) for i in range(d)])


def _random_density(d, rng) -> DensityOperator:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return DensityOperator(m / np.trace(m).real)


def _random_state(d, rng) -> StateVector:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return StateVector(v / np.linalg.norm(v))


def _random_mixture(d, n_branches, rng) -> seqsim.PvmMixture:
    w = rng.dirichlet(np.ones(n_branches))
    return seqsim.PvmMixture(branches=tuple(
        (w[j], _random_pvm(d, rng)) for j in range(n_branches)))


def theorem_battery(seed: int, instances: int) -> dict:
    """Random-instance checks that both constructed adversary strategies
    reproduce the classical guessing probability exactly.

    Returns the worst absolute deviations and the worst measurement-recovery
    residual of the dilation.
    """
    rng = np.random.default_rng(seed)
    worst1 = 0.0
    for _ in range(instances):
        ens = guessing.EnsembleDecomposition.eigen(_random_density(3, rng))
        chain = [_random_pvm(3, rng), _random_pvm(3, rng)]
        gc = guessing.classical_guess(ens, chain).guess_probability
        _, rep = guessing.eve_optimal_pvm(ens, chain)
        worst1 = max(worst1, abs(gc - rep.guess_probability))
    worst2 = 0.0
    worst_rec = 0.0
    for _ in range(instances):
        psi = _random_state(3, rng)
        mixes = [_random_mixture(3, int(rng.integers(2, 5)), rng) for _ in range(2)]
        gc = guessing.classical_guess(
            guessing.EnsembleDecomposition.trivial(psi), mixes).guess_probability
        ext = guessing.naimark_dilation(mixes, state=psi)
        worst_rec = max(worst_rec, guessing.recovery_residual(ext))
        rep = guessing.quantum_guess_eval(psi, ext)
        worst2 = max(worst2, abs(gc - rep.guess_probability))
    return {"projective_chain": worst1, "dilated_chain": worst2,
            "povm_recovery": worst_rec}


def _cmd_theorem_check(cfg: RunConfig) -> int:
    res = theorem_battery(cfg.seed, cfg.instances)
    rows = [(k, v) for k, v in res.items()]
    _write_rows(cfg.out, ["check", "max_residual"], rows)
    ok = max(res["projective_chain"], res["dilated_chain"]) < 1e-8 \
        and res["povm_recovery"] < 1e-10
    print(f"theorem-check: {cfg.instances} instances,"
          f" max residual {max(res.values()):.3e}, {'ok' if ok else 'FAILED'}")
    return 0 if ok else 3


def _cmd_export_sdp(cfg: RunConfig) -> int:
    if cfg.out is None:
        raise ConfigError("out", "export-sdp requires an output path")
    eps = cfg.eps
    if eps is None:
        lo, hi = seqsim.double_violation_window(cfg.state)
        eps = 0.5 * (lo + hi)
    dist = seqsim.sequential_distribution(
        seqsim.build_cglmp_scenario(cfg.state, eps, cfg.mode))
    mp = npa.build_problem(dist, cfg.setting[1:], profile=cfg.profile)
    compiled = npa.compile_problem(mp, cone_shift=npa.DEFAULT_CONE_SHIFT)
    tmp = f"{cfg.out}.tmp-{os.getpid()}"
    export_sdpa(compiled.problem, tmp)
    os.replace(tmp, cfg.out)
    print(f"wrote {cfg.out}: block {compiled.problem.n}, "
          f"{compiled.problem.m} constraints, objective offset {compiled.objective_const:.12g}")
    return 0


_COMMANDS = {
    "table1": _cmd_table1,
    "curves": _cmd_curves,
    "guess-decomp": _cmd_guess_decomp,
    "npa-bound": _cmd_npa_bound,
    "theorem-check": _cmd_theorem_check,
    "export-sdp": _cmd_export_sdp,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqrand",
        description="Randomness quantification for sequential CGLMP measurements.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("table1", "violation maxima and double-violation window"),
        ("curves", "first/second-round violation curves over a sharpness grid"),
        ("guess-decomp", "decomposition-attack guessing curve"),
        ("npa-bound", "device-independent guessing bounds over a grid"),
        ("theorem-check", "random-instance strategy-equality batteries"),
        ("export-sdp", "write one compiled relaxation as an SDPA sparse file"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON file with RunConfig fields")
        p.add_argument("--state", choices=["mes", "mvs"])
        p.add_argument("--mode", choices=["sqrt", "mixture"])
        p.add_argument("--grid", help="lo:hi:step sharpness grid")
        p.add_argument("--setting", help="x,y1,y2 measurement choices")
        p.add_argument("--scope", choices=["local", "global"])
        p.add_argument("--profile", choices=["default", "extended"])
        p.add_argument("--tol", type=float, help="solver tolerance override")
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--seed", type=int, help="seed for instance batteries")
        p.add_argument("--instances", type=int, help="battery size")
        p.add_argument("--eps", type=float, help="single sharpness value (export-sdp)")
    return parser


def _config_from_args(args) -> RunConfig:
    values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from None
        allowed = {f.name for f in fields(RunConfig)}
        for key, val in raw.items():
            if key not in allowed:
                raise ConfigError(key, "unknown config field")
            values[key] = tuple(val) if isinstance(val, list) else val
    for key in ("state", "mode", "scope", "profile", "tol", "out",
                "seed", "instances", "eps"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            values[key] = val
    if args.grid is not None:
        values["grid"] = _parse_grid(args.grid)
    elif isinstance(values.get("grid"), (list, tuple)):
        values["grid"] = tuple(float(v) for v in values["grid"])
    if args.setting is not None:
        values["setting"] = _parse_setting(args.setting)
    elif isinstance(values.get("setting"), (list, tuple)):
        values["setting"] = tuple(int(v) for v in values["setting"])
    values.pop("command", None)
    return RunConfig(command=args.command, **values).validate()


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (npa.SolverFailureError,) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except (seqsim.NoWindowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
