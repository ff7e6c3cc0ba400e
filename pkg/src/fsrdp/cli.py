"""Command-line front end. Every subcommand writes CSV (or a text report).

Exit codes: 0 success, 1 invalid input, 2 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass
from typing import Callable, Sequence

from . import baselines, fswor, fswr, oracles, variance
from .conversion import ConversionVariant, rdp_to_dp
from .core import (
    DEFAULT_M,
    AccountantConfig,
    Adjacency,
    Mode,
    RdpCurve,
    SubsamplingSpec,
    compose_steps,
    default_alpha_grid,
)
from .errors import DomainError

METHODS = ("fswor_ar", "fswor_ro", "fswr_upper", "fswr_lower", "poisson_ro", "wang_upper", "wang_lower")
# methods defined only at integer orders
INTEGER_ONLY = frozenset({"fswr_lower", "wang_lower"})
# methods whose output depends on the Taylor order
USES_M = {"fswor_ar": Adjacency.ADD_REMOVE, "fswor_ro": Adjacency.REPLACE_ONE,
          "fswr_upper": Adjacency.ADD_REMOVE, "poisson_ro": Adjacency.REPLACE_ONE}
DEFAULT_DELTAS = tuple(10.0**-k for k in range(4, 11))


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 like any other invalid input."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    if isinstance(x, int):
        return str(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".12g")


# argument parsing helpers


def parse_alpha_grid(text: str) -> tuple[float, ...]:
    """``default``, or comma-separated pieces that are numbers or ``start:stop[:step]``
    ranges (stop inclusive, step 1 by default)."""
    if text.strip() == "default":
        return default_alpha_grid()
    values: set[float] = set()
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            if ":" in piece:
                parts = [float(p) for p in piece.split(":")]
                if len(parts) not in (2, 3):
                    raise ValueError
                start, stop = parts[0], parts[1]
                step = parts[2] if len(parts) == 3 else 1.0
                if step <= 0:
                    raise ValueError
                count = int(math.floor((stop - start) / step + 1e-9)) + 1
                values.update(round(start + i * step, 12) for i in range(max(count, 0)))
            else:
                values.add(float(piece))
        except ValueError:
            raise DomainError(f"bad alpha grid piece {piece!r}") from None
    if not values:
        raise DomainError("alpha grid is empty")
    return tuple(sorted(values))


def parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise DomainError(f"bad number list {text!r}") from None


def read_numbers(path: str) -> tuple[float, ...]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh]
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return tuple(float(ln) for ln in lines if ln and not ln.startswith("#"))
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from None


# request


@dataclass(frozen=True)
class RunRequest:
    spec: SubsamplingSpec
    sigmas: tuple[float, ...]
    m: int | None
    adjacency: Adjacency
    mode: Mode
    alpha_grid: tuple[float, ...]
    methods: tuple[str, ...]

    @property
    def steps(self) -> int:
        return len(self.sigmas)

    def taylor_order(self, method: str) -> int | None:
        if method not in USES_M:
            return None
        return self.m if self.m is not None else DEFAULT_M[USES_M[method]]

    def config(self, method: str, grid: Sequence[float]) -> AccountantConfig:
        mode = Mode.FSWR if method.startswith("fswr") else Mode.FSWOR
        adjacency = USES_M.get(method, self.adjacency)
        return AccountantConfig(self.spec, self.sigmas, adjacency, self.m, tuple(grid), mode)


def _default_method(mode: Mode, adjacency: Adjacency) -> str:
    if mode is Mode.FSWOR:
        return "fswor_ar" if adjacency is Adjacency.ADD_REMOVE else "fswor_ro"
    if mode is Mode.FSWR:
        if adjacency is not Adjacency.ADD_REMOVE:
            raise DomainError("the with-replacement bound is for add/remove adjacency")
        return "fswr_upper"
    if adjacency is not Adjacency.REPLACE_ONE:
        raise DomainError("only the replace-one Poisson bound is implemented")
    return "poisson_ro"


def build_request(args: argparse.Namespace) -> RunRequest:
    if args.batch is None or args.dataset is None:
        raise DomainError("--batch and --dataset are required")
    spec = SubsamplingSpec(args.batch, args.dataset)
    if args.steps is not None and args.epochs is not None:
        raise DomainError("give --steps or --epochs, not both")
    steps = args.steps
    if args.epochs is not None:
        if args.epochs < 1:
            raise DomainError("--epochs must be positive")
        steps = args.epochs * spec.steps_per_epoch()
    if steps is not None and steps < 1:
        raise DomainError("--steps must be positive")
    if args.sigma_file is not None:
        if args.sigma is not None:
            raise DomainError("give --sigma or --sigma-file, not both")
        sigmas = read_numbers(args.sigma_file)
        if not sigmas:
            raise DomainError(f"{args.sigma_file} holds no noise multipliers")
        if steps is not None and steps != len(sigmas):
            raise DomainError(f"schedule has {len(sigmas)} steps but {steps} were requested")
    else:
        if args.sigma is None:
            raise DomainError("--sigma or --sigma-file is required")
        sigmas = (args.sigma,) * (1 if steps is None else steps)
    adjacency = Adjacency.parse(args.adjacency)
    mode = Mode.parse(args.mode)
    if args.method:
        methods = []
        for chunk in args.method:
            methods.extend(p.strip() for p in chunk.split(",") if p.strip())
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise DomainError(f"unknown method(s) {', '.join(unknown)}; choose from {', '.join(METHODS)}")
        methods = list(dict.fromkeys(methods))
    else:
        methods = [_default_method(mode, adjacency)]
    grid = parse_alpha_grid(args.alpha_grid)
    # fail early on an invalid m or schedule
    AccountantConfig(spec, sigmas, adjacency, args.m, grid, Mode.FSWOR)
    return RunRequest(spec, tuple(sigmas), args.m, adjacency, mode, grid, tuple(methods))


def method_curve(req: RunRequest, method: str) -> RdpCurve:
    grid = req.alpha_grid
    if method in INTEGER_ONLY:
        grid = tuple(a for a in grid if a >= 2 and float(a).is_integer())
        if not grid:
            raise DomainError(f"{method} needs integer orders >= 2 in the grid")
    cfg = req.config(method, grid)
    q = req.spec.q
    m = req.taylor_order(method)
    if method in ("fswor_ar", "fswor_ro"):
        return fswor.compose(cfg)
    if method == "fswr_upper":
        return fswr.compose_fswr(cfg)
    steps: dict[str, Callable[[float, float], float]] = {
        "fswr_lower": lambda a, s: fswr.fswr_lower(int(a), s, req.spec.batch, req.spec.dataset),
        "poisson_ro": lambda a, s: baselines.poisson_replace_one_step(a, s, q, m),
        "wang_upper": lambda a, s: baselines.wang_upper(a, s, q),
        "wang_lower": lambda a, s: baselines.wang_lower(int(a), s, q),
    }
    return compose_steps(steps[method], cfg, method)


# subcommands


def _writer(out: io.TextIOBase):
    return csv.writer(out, lineterminator="\n")


def _sigma_cell(req: RunRequest) -> str:
    return fmt(req.sigmas[0]) if len(set(req.sigmas)) == 1 else "schedule"


def cmd_curve(req: RunRequest, out) -> None:
    w = _writer(out)
    w.writerow(["method", "alpha", "epsilon", "m", "sigma", "q", "B", "D", "steps"])
    for method in sorted(req.methods):
        curve = method_curve(req, method)
        m = req.taylor_order(method)
        for alpha, eps in curve:
            w.writerow([method, fmt(alpha), fmt(eps), "" if m is None else m, _sigma_cell(req),
                        fmt(req.spec.q), req.spec.batch, req.spec.dataset, req.steps])


def cmd_convert(req: RunRequest, deltas: Sequence[float], variant: ConversionVariant, out) -> None:
    w = _writer(out)
    w.writerow(["method", "delta", "epsilon", "alpha_star", "variant"])
    for method in sorted(req.methods):
        curve = method_curve(req, method)
        for delta in sorted(deltas, reverse=True):
            g = rdp_to_dp(curve, delta, variant)
            w.writerow([method, fmt(delta), fmt(g.epsilon), fmt(g.alpha_star), g.variant.value])


def cmd_compare(req: RunRequest, out) -> None:
    curves = {m: method_curve(req, m).points for m in req.methods}
    alphas = sorted(set.intersection(*(set(c) for c in curves.values())))
    pairs = [(b, a) for i, a in enumerate(req.methods) for b in req.methods[i + 1:]]
    w = _writer(out)
    w.writerow(["alpha", *req.methods, *(f"{b}/{a}" for b, a in pairs)])
    for alpha in alphas:
        row = [fmt(alpha), *(fmt(curves[m][alpha]) for m in req.methods)]
        for b, a in pairs:
            num, den = curves[b][alpha], curves[a][alpha]
            row.append(fmt(num / den) if den > 0 and math.isfinite(den) and math.isfinite(num) else "")
        w.writerow(row)


def cmd_variance(values: Sequence[float], batch: int, out) -> None:
    pop = variance.Population(tuple(values))
    w = _writer(out)
    w.writerow(["B", "D", "var_poisson", "var_fswor", "var_fswr", "fswor_over_poisson", "fswr_over_fswor"])
    try:
        ratios = variance.variance_ratios(pop, batch)
        ratio_cells = [fmt(ratios["fswor_over_poisson"]), fmt(ratios["fswr_over_fswor"])]
    except DomainError:
        ratio_cells = ["", ""]
    w.writerow([batch, pop.size, fmt(variance.var_poisson(pop, batch)), fmt(variance.var_fswor(pop, batch)),
                fmt(variance.var_fswr(pop, batch)), *ratio_cells])


def validation_checks(sigma: float, batch: int, dataset: int, seed: int):
    """Yield ``(name, ok, detail)`` for each oracle check."""
    for d in range(1, 9):
        for b in range(1, d + 1):
            r = oracles.validate_fswor_decomposition(d, b)
            if not r.ok:
                yield f"fswor decomposition D={d} B={b}", False, f"{len(r.mismatches)} mismatches"
    yield "fswor decomposition D<=8", True, ""
    for d in range(1, 7):
        for b in range(1, 5):
            r = oracles.validate_fswr_decomposition(d, b)
            if not r.ok:
                yield f"fswr decomposition D={d} B={b}", False, f"{len(r.mismatches)} mismatches"
    yield "fswr decomposition D<=6 B<=4", True, ""

    worst = 0.0
    for a in range(2, 9):
        for s in (2.0, 4.0, 6.0):
            for q in (1e-3, 1e-2):
                exact = oracles.exact_h_integer(a, s, q)
                worst = max(worst, abs(fswor.h_upper(a, s, q, a + 1) / exact - 1.0))
    yield "integer-order exactness", worst <= 1e-12, f"max rel err {worst:.3g}"

    q = batch / dataset
    bad = [a for a in range(2, 65)
           if not baselines.wang_lower(a, sigma, q) <= fswor.step_replace_one(a, sigma, q, 4)
           <= baselines.wang_upper(a, sigma, q)]
    yield "replace-one between baseline bounds, alpha 2..64", not bad, f"violations at {bad}" if bad else ""

    spec = SubsamplingSpec(batch, dataset)
    bad = [a for a in range(2, 17)
           if not fswr.fswr_lower(a, sigma, batch, dataset) <= fswr.fswr_upper_step(a, sigma, spec)]
    yield "with-replacement lower <= upper, alpha 2..16", not bad, f"violations at {bad}" if bad else ""

    worst = 0.0
    for b in range(1, 5):
        for a in range(2, 5):
            for n in (b + 1, 10, 20):
                full = fswr.TruncationScheme.full(b, a)
                got = fswr.fswr_lower(a, 2.0, b, n, full)
                ref = oracles.brute_fswr_lower(a, 2.0, b, n)
                worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300))
    yield "with-replacement lower vs brute force", worst <= 1e-12, f"max rel err {worst:.3g}"

    worst = 0.0
    pops = [(1, 2, 3), (0.5, -1.0, 2.0, 4.0), (1, 1, 2, 3, 5, 8), (-2, 0, 0, 7)]
    for pop in pops:
        for b in range(1, len(pop) + 1):
            for mode, fn in (("poisson", variance.var_poisson), ("fswor", variance.var_fswor),
                             ("fswr", variance.var_fswr)):
                ref = float(oracles.brute_variance(pop, b, mode))
                got = fn(pop, b)
                worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300) if ref else abs(got))
    yield "variance closed forms vs enumeration", worst <= 1e-12, f"max rel err {worst:.3g}"

    est = oracles.mc_mixture_renyi(2, oracles.MixtureSpec.two_point(0.01, 1.0), 2.0, 200_000, seed)
    exact = oracles.exact_h_integer(2, 4.0, 0.01)
    z = abs(est.value - exact) / est.std_error
    yield "Monte Carlo agrees with exact moment", z <= 4.0, f"z={z:.2f}"


def cmd_validate(sigma: float, batch: int, dataset: int, seed: int, out) -> bool:
    ok = True
    for name, passed, detail in validation_checks(sigma, batch, dataset, seed):
        ok &= passed
        out.write(f"{'PASS' if passed else 'FAIL'} {name}{': ' + detail if detail else ''}\n")
    out.write("all checks passed\n" if ok else "validation FAILED\n")
    return ok


# entry point


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma", type=float, help="noise multiplier (constant over steps)")
    p.add_argument("--sigma-file", help="file with one noise multiplier per step")
    p.add_argument("--batch", type=int, help="minibatch size |B|")
    p.add_argument("--dataset", type=int, help="dataset size |D|")
    p.add_argument("--steps", type=int, help="number of steps T (default 1)")
    p.add_argument("--epochs", type=int, help="T = epochs * ceil(|D|/|B|)")
    p.add_argument("--m", type=int, help="Taylor order (default 3 add/remove, 4 replace-one)")
    p.add_argument("--adjacency", default="add-remove", choices=["add-remove", "replace-one"])
    p.add_argument("--mode", default="fswor", choices=["fswor", "fswr", "poisson"])
    p.add_argument("--alpha-grid", default="default",
                   help="'default', or comma-separated orders and start:stop[:step] ranges")
    p.add_argument("--method", action="append",
                   help=f"one or more of {', '.join(METHODS)} (repeatable or comma-separated)")
    p.add_argument("--out", help="output path (default stdout)")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fsrdp", description="Renyi-DP accountant for subsampled DP-SGD")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (("curve", "RDP curve per method"),
                            ("convert", "(epsilon, delta) per method"),
                            ("compare", "methods side by side with ratios")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "convert":
            p.add_argument("--delta", default=None, help="comma-separated deltas (default 1e-4..1e-10)")
            p.add_argument("--variant", default="classic", choices=["classic", "improved"])
    p = sub.add_parser("variance", help="minibatch-mean variance under the three samplers")
    p.add_argument("--population", required=True, help="file with one value per line")
    p.add_argument("--batch", type=int, required=True)
    p.add_argument("--out")
    p = sub.add_parser("validate", help="run the oracle checks")
    p.add_argument("--sigma", type=float, default=6.0)
    p.add_argument("--batch", type=int, default=120)
    p.add_argument("--dataset", type=int, default=50000)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--out")
    return parser


def _run(args: argparse.Namespace, out) -> int:
    if args.command == "variance":
        cmd_variance(read_numbers(args.population), args.batch, out)
        return 0
    if args.command == "validate":
        if args.seed < 0 or args.seed >= 2**64:
            raise DomainError("--seed must be an unsigned 64-bit integer")
        return 0 if cmd_validate(args.sigma, args.batch, args.dataset, args.seed, out) else 2
    req = build_request(args)
    if args.command == "curve":
        cmd_curve(req, out)
    elif args.command == "convert":
        deltas = DEFAULT_DELTAS if args.delta is None else parse_float_list(args.delta)
        cmd_convert(req, deltas, ConversionVariant.parse(args.variant), out)
    else:
        if len(req.methods) < 2:
            raise DomainError("compare needs at least two methods")
        cmd_compare(req, out)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    buf = io.StringIO()
    try:
        code = _run(args, buf)
    except DomainError as exc:
        print(f"fsrdp: error: {exc}", file=sys.stderr)
        return 1
    text = buf.getvalue()
    if getattr(args, "out", None):
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"fsrdp: error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
