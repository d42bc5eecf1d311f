import argparse
import json
import os
import sys
from typing import List, Literal, Optional, Tuple

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.calculus.operators import caputo_diff, frac_sum, nabla_diff, nabla_integral
from src.calculus.special import rising, taylor_monomial
from src.core.config import get_settings, overridden_settings
from src.core.errors import (
    GridMismatch,
    InadmissibleSpec,
    InconsistentSpec,
    IngestError,
    InsufficientDomain,
    NablaFracError,
    UsageError,
)
from src.core.grid import GridFunction, Order, integer_gap
from src.core.logging import get_logger
from src.data.ingest import ingest_grid_function, serialize_grid_function
from src.execution.verify_runner import SCALES, SUITES, run_verification
from src.greens.export import kernel_to_csv, kernel_to_json
from src.greens.kernel import (
    greens_closed_form,
    greens_kernel,
    greens_kernel_determinant,
    solve_nonhomogeneous_full,
    solve_via_greens,
)
from src.lyapunov.inequality import BoundaryPattern, ThresholdVariant, lyapunov_report, report_to_json, reports_to_csv
from src.solvers.bvp import BvpSpec, bvp_solve_direct
from src.solvers.ivp import IvpSpec, ivp_solve

log = get_logger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

Subcommand = Literal["eval", "solve-ivp", "solve-bvp", "greens", "lyapunov", "verify"]
EvalOp = Literal["rising", "taylor", "nabla-diff", "integral", "frac-sum", "caputo"]

# flags each subcommand (or eval op) cannot run without
REQUIRED = {
    "eval": {
        "rising": ("t", "r"),
        "taylor": ("nu", "t", "s"),
        "nabla-diff": ("input_path", "order"),
        "integral": ("input_path", "c", "d"),
        "frac-sum": ("input_path", "nu"),
        "caputo": ("input_path", "nu"),
    },
    "solve-ivp": ("nu", "b"),
    "solve-bvp": ("nu", "b", "k", "j_orders"),
    "greens": ("nu", "b"),
    "lyapunov": ("nu", "b", "q_path"),
    "verify": (),
}


class RunConfig(BaseModel):
    """One CLI invocation, validated before anything is computed."""
    model_config = ConfigDict(frozen=True)

    subcommand: Subcommand
    op: Optional[EvalOp] = None
    nu: Optional[float] = Field(default=None, gt=0)
    a: float = 0.0
    b: Optional[float] = None
    k: Optional[int] = None
    j_orders: Optional[Tuple[int, ...]] = None
    left_values: Optional[Tuple[float, ...]] = None
    right_values: Optional[Tuple[float, ...]] = None
    initial_values: Optional[Tuple[float, ...]] = None
    point_values: Optional[Tuple[float, ...]] = None
    method: Literal["direct", "greens", "full"] = "direct"
    closed_form: bool = False
    determinant: bool = False
    variant: Optional[ThresholdVariant] = None
    placements: Tuple[Literal["left", "right"], ...] = ()

    # scalar arguments of `eval`
    t: Optional[float] = None
    r: Optional[float] = None
    s: Optional[float] = None
    c: Optional[int] = None
    d: Optional[int] = None
    order: Optional[int] = Field(default=None, ge=0)

    input_path: Optional[str] = None
    h_path: Optional[str] = None
    q_path: Optional[str] = None
    format: Literal["json", "csv"] = "json"

    seed: int = Field(default_factory=lambda: get_settings().seed)
    scale: Literal["quick", "full"] = "full"
    parallel: bool = False
    only: Optional[Tuple[str, ...]] = None
    rel_tol: Optional[float] = Field(default=None, gt=0)
    rank_tol: Optional[float] = Field(default=None, gt=0)

    @field_validator("input_path", "h_path", "q_path")
    @classmethod
    def _file_exists(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and not os.path.isfile(v):
            raise ValueError(f"no such file: {v}")
        return v

    @field_validator("only")
    @classmethod
    def _known_suites(cls, v):
        known = [name for name, _ in SUITES]
        if v is not None:
            unknown = [x for x in v if x not in known]
            if unknown:
                raise ValueError(f"unknown suites {unknown}; choose from {known}")
        return v

    @model_validator(mode="after")
    def _check_required(self) -> "RunConfig":
        required = REQUIRED[self.subcommand]
        if self.subcommand == "eval":
            if self.op is None:
                raise ValueError("eval needs --op")
            required = required[self.op]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.subcommand} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))
        if self.b is not None:
            integer_gap(self.a, self.b)
        if self.subcommand == "greens" and not self.closed_form and (self.k is None or self.j_orders is None):
            raise ValueError("greens needs --k and --j unless --closed-form is given")
        if self.subcommand == "greens" and self.closed_form and (self.j_orders is None or len(self.j_orders) != 1):
            raise ValueError("greens --closed-form needs exactly one --j")
        if self.subcommand == "lyapunov" and self.variant is None:
            raise ValueError("lyapunov needs --variant")
        return self

    @property
    def length(self) -> int:
        return integer_gap(self.a, self.b)


def _load_on(path: Optional[str], a: float, length: int) -> Tuple[float, ...]:
    """Values at a+1..b of a data file, or zeros when no file is given."""
    if path is None:
        return (0.0,) * length
    f = ingest_grid_function(path, a=a)
    if f.grid.base != a:
        raise GridMismatch(f"{path} is based at {f.grid.base}, expected {a}")
    return tuple(f.values_on(1, length).tolist())


def _scalar(name: str, value: float) -> str:
    return json.dumps({"op": name, "value": value})


def _emit_function(f: GridFunction, fmt: str) -> str:
    return serialize_grid_function(f, fmt)


def _run_eval(config: RunConfig) -> Tuple[int, str]:
    op = config.op
    if op == "rising":
        return EXIT_OK, _scalar(op, rising(config.t, config.r))
    if op == "taylor":
        if config.t == config.s:
            return EXIT_OK, _scalar(op, taylor_monomial(config.nu, 0, 0))
        if config.t > config.s:
            d = integer_gap(config.s, config.t)
        else:
            d = -integer_gap(config.t, config.s)
        return EXIT_OK, _scalar(op, taylor_monomial(config.nu, d, 0))

    f = ingest_grid_function(config.input_path, a=config.a)
    if op == "nabla-diff":
        return EXIT_OK, _emit_function(nabla_diff(f, config.order), config.format)
    if op == "integral":
        return EXIT_OK, _scalar(op, nabla_integral(f, config.c, config.d))
    if op == "frac-sum":
        return EXIT_OK, _emit_function(frac_sum(f, config.nu, 0, extended=True), config.format)
    return EXIT_OK, _emit_function(caputo_diff(f, Order(config.nu), 0), config.format)


def _run_ivp(config: RunConfig) -> Tuple[int, str]:
    length = config.length
    spec = IvpSpec(
        nu=config.nu,
        a=config.a,
        b=config.b,
        rhs=_load_on(config.h_path, config.a, length),
        initial_values=config.initial_values,
        point_values=config.point_values,
        potential=_load_on(config.q_path, config.a, length) if config.q_path else None,
    )
    return EXIT_OK, _emit_function(ivp_solve(spec), config.format)


def _bvp_spec(config: RunConfig) -> BvpSpec:
    return BvpSpec(
        nu=config.nu,
        a=config.a,
        b=config.b,
        k=config.k,
        j_orders=config.j_orders,
        left_values=config.left_values,
        right_values=config.right_values,
        rhs=_load_on(config.h_path, config.a, config.length),
    )


def _run_bvp(config: RunConfig) -> Tuple[int, str]:
    spec = _bvp_spec(config)
    if config.method == "direct":
        x = bvp_solve_direct(spec)
    elif config.method == "full":
        x = solve_nonhomogeneous_full(spec)
    else:
        if any(config.left_values or ()) or any(config.right_values or ()):
            raise UsageError("--method greens solves the homogeneous-boundary problem; use --method full")
        x = solve_via_greens(greens_kernel(spec), spec.rhs_function())
    return EXIT_OK, _emit_function(x, config.format)


def _run_greens(config: RunConfig) -> Tuple[int, str]:
    if config.closed_form:
        kernel = greens_closed_form(Order(config.nu), config.j_orders[0], config.a, config.b)
    else:
        spec = BvpSpec(nu=config.nu, a=config.a, b=config.b, k=config.k, j_orders=config.j_orders)
        kernel = greens_kernel_determinant(spec) if config.determinant else greens_kernel(spec)
    out = kernel_to_csv(kernel) if config.format == "csv" else kernel_to_json(kernel)
    return EXIT_OK, out


def _run_lyapunov(config: RunConfig) -> Tuple[int, str]:
    r = 2 if config.variant is ThresholdVariant.CONJUGATE_A else 1
    order = Order(config.nu)
    placements = config.placements or ("left",) * max(0, order.n_ceil - 2)
    pattern = BoundaryPattern(r=r, placements=placements).check(order.n_ceil)
    q = _load_on(config.q_path, config.a, config.length)
    report = lyapunov_report(order, config.a, config.b, q, pattern)
    out = reports_to_csv([report]) if config.format == "csv" else report_to_json(report)
    if report.refuted:
        print(f"❌ refutation: nontrivial solution with int|q| = {report.q_integral} "
              f"< {report.threshold}", file=sys.stderr)
        return EXIT_FAILURE, out
    return EXIT_OK, out


def _run_verify(config: RunConfig) -> Tuple[int, str]:
    stats = run_verification(config.seed, config.scale, config.parallel, config.only)
    summary = stats.summary()
    mark = "✅" if stats.passed else "❌"
    print(f"\n{mark} verify seed={config.seed}: {summary['total_passed']} passed, "
          f"{summary['total_failed']} failed", file=sys.stderr)
    return (EXIT_OK if stats.passed else EXIT_FAILURE), stats.to_json()


HANDLERS = {
    "eval": _run_eval,
    "solve-ivp": _run_ivp,
    "solve-bvp": _run_bvp,
    "greens": _run_greens,
    "lyapunov": _run_lyapunov,
    "verify": _run_verify,
}

USAGE_ERRORS = (InadmissibleSpec, InconsistentSpec, IngestError, InsufficientDomain, GridMismatch, UsageError)


def _one_line(e: ValidationError) -> str:
    first = e.errors()[0]
    where = ".".join(str(p) for p in first["loc"]) or e.title
    return f"{where}: {first['msg']}"


def dispatch(config: RunConfig) -> Tuple[int, str]:
    """Route a validated config to its handler. Returns (exit code, stdout text)."""
    log.info("dispatch %s", config.subcommand)
    try:
        with overridden_settings(rel_tol=config.rel_tol, rank_tol=config.rank_tol):
            return HANDLERS[config.subcommand](config)
    except ValidationError as e:
        return EXIT_USAGE, _error(_one_line(e))
    except USAGE_ERRORS as e:
        return EXIT_USAGE, _error(str(e))
    except NablaFracError as e:
        return EXIT_FAILURE, _error(f"{type(e).__name__}: {e}")


def _error(message: str) -> str:
    print(f"❌ {message}", file=sys.stderr)
    return ""


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _names(text: str) -> Tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nabla-frac",
        description="Nabla Caputo fractional differences: operators, boundary problems, Green's functions, Lyapunov bounds.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, grid: bool = True):
        if grid:
            p.add_argument("--nu", type=float, help="Order nu > 0")
            p.add_argument("--a", type=float, default=0.0, help="Base point")
            p.add_argument("--b", type=float, help="Right end point; b - a a positive integer")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--rel-tol", type=float)
        p.add_argument("--rank-tol", type=float)

    p = sub.add_parser("eval", help="Evaluate one calculus operation")
    common(p)
    p.add_argument("--op", required=True, choices=["rising", "taylor", "nabla-diff", "integral", "frac-sum", "caputo"])
    p.add_argument("--t", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--c", type=int, help="Lower integral limit, offset from a")
    p.add_argument("--d", type=int, help="Upper integral limit, offset from a")
    p.add_argument("--order", type=int, help="Integer difference order")
    p.add_argument("--input", dest="input_path", help="Grid function file (CSV n,value or JSON)")

    p = sub.add_parser("solve-ivp", help="Solve an initial value problem")
    common(p)
    p.add_argument("--initial-values", type=_floats, help="c_0,...,c_{N-1} = nabla^k x(a)")
    p.add_argument("--point-values", type=_floats, help="A_0,...,A_{N-1} = x(a-i)")
    p.add_argument("--h", dest="h_path", help="Right-hand side file on a+1..b (default zero)")
    p.add_argument("--q", dest="q_path", help="Potential q on a+1..b (point-value form only)")

    p = sub.add_parser("solve-bvp", help="Solve a (k, N-k) boundary value problem")
    common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--j", dest="j_orders", type=_ints, help="Right difference orders, e.g. 0,1")
    p.add_argument("--left", dest="left_values", type=_floats, help="nabla^i x(a-N+k), i < k")
    p.add_argument("--right", dest="right_values", type=_floats, help="nabla^{j_m} x(b)")
    p.add_argument("--h", dest="h_path")
    p.add_argument("--method", choices=["direct", "greens", "full"], default="direct")

    p = sub.add_parser("greens", help="Tabulate a Green's function")
    common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--j", dest="j_orders", type=_ints)
    p.add_argument("--closed-form", action="store_true", help="Closed form for k = N-1 (minus-nabla convention)")
    p.add_argument("--determinant", action="store_true", help="Bordered-determinant evaluation")

    p = sub.add_parser("lyapunov", help="Lyapunov inequality report for a potential q")
    common(p)
    p.add_argument("--q", dest="q_path", help="Potential q on a+1..b")
    p.add_argument("--variant", choices=[v.value for v in ThresholdVariant])
    p.add_argument("--placements", type=_names, default=(), help="c_0..c_{N-3}, each left or right")

    p = sub.add_parser("verify", help="Run the acceptance suites")
    common(p, grid=False)
    p.add_argument("--seed", type=int, default=get_settings().seed)
    p.add_argument("--scale", choices=list(SCALES), default="full")
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--only", type=_names, help="Comma-separated suite names")
    return parser


def parse_config(argv: Optional[List[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    fields = {k: v for k, v in vars(args).items() if v is not None}
    return RunConfig(**fields)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = parse_config(argv)
    except ValidationError as e:
        print(f"❌ {_one_line(e)}", file=sys.stderr)
        return EXIT_USAGE
    except NablaFracError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE

    print(f"🚀 {config.subcommand}", file=sys.stderr)
    code, out = dispatch(config)
    if out:
        sys.stdout.write(out if out.endswith("\n") else out + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
