"""
Command-line entry point.

Subcommands: ``capacity``, ``homogenize``, ``slowchange``, ``verify`` and
``case list``.  Settings come from an optional JSON config file and are
overridden by flags.  All output files are CSV with a header row and
numbers printed to 12 significant digits, so reruns are byte-identical.

Exit codes: 0 ok, 1 configuration or input error, 2 solver not converged,
3 transform domain error, 4 verification failure.
"""

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import casebook
from .capacity import solve_capacity, verify_stationarity
from .channel import gaussian_channel, read_channel_csv, write_channel_csv
from .density import Grid
from .errors import DomainMismatch, HomogenizerError, InteriorZeroRegion, NotConverged
from .slow_change import (SlowChangeProfile, certify_corollary3, certify_corollary4,
                          homogenize_slow_change, slow_change_input)
from .svg import write_polyline_svg
from .transforms import build_homogenized, certify_theorem1, write_map_csv

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2, 3, 4


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved settings for one command.

    Exactly one channel source is used: a built-in ``case``, a ``channel``
    CSV path, or a Gaussian ``family`` given as polynomial coefficients
    for the mean and width.
    """

    case: str | None = None
    channel: str | None = None
    family: dict | None = None
    profile: str | None = None
    n_e: int = 1000
    n_q: int = 1000
    n_star: int | None = None
    tol: float = 1e-6
    max_iter: int = 100_000
    sigma: float | None = None
    seed: int = 42
    out: str = "."
    svg: bool = False
    restrict_support: bool = False
    all: bool = False
    n_transforms: int = 10_000
    misaligned: bool = False

    def validate(self, need_channel=True):
        sources = [s for s in (self.case, self.channel, self.family) if s]
        if need_channel and len(sources) != 1:
            raise ConfigError("give exactly one of --case, --channel or a family in --config")
        if self.case and self.case not in casebook.CASES:
            raise ConfigError(
                f"unknown case {self.case!r}; choose from {', '.join(sorted(casebook.CASES))}"
            )
        for name in ("n_e", "n_q") + (("n_star",) if self.n_star is not None else ()):
            if int(getattr(self, name)) < 16:
                raise ConfigError(f"{name} must be at least 16")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max-iter must be positive")
        if self.sigma is not None and not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        return self


_FLAG_TO_FIELD = {"ne": "n_e", "nq": "n_q", "nstar": "n_star", "max_iter": "max_iter",
                  "restrict_support": "restrict_support", "n_transforms": "n_transforms"}


def resolve_config(args) -> RunConfig:
    """Merge the JSON config file (if any) with explicitly given flags."""
    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        known = {f.name for f in fields(RunConfig)}
        for k, v in raw.items():
            k = _FLAG_TO_FIELD.get(k.replace("-", "_"), k.replace("-", "_"))
            if k not in known:
                raise ConfigError(f"unknown config key {k!r}")
            values[k] = v
    for k, v in vars(args).items():
        if k in ("config", "command", "func", "case_command") or v is None:
            continue
        values[_FLAG_TO_FIELD.get(k, k)] = v
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# channel ingestion

def _poly(coeffs):
    c = np.asarray(coeffs, dtype=float)
    return lambda e: np.polynomial.polynomial.polyval(e, c)


def load_channel(cfg: RunConfig):
    """Return ``(channel, spec_or_None, n_star)``."""
    if cfg.case:
        spec = casebook.get_case(cfg.case, cfg.sigma)
        n_e, n_q, n_star = spec.grid_sizes(cfg.n_e, cfg.n_q, cfg.n_star, not cfg.misaligned)
        return spec.build(n_e, n_q), spec, n_star
    if cfg.channel:
        try:
            ch = read_channel_csv(cfg.channel)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read channel {cfg.channel}: {exc}") from exc
        return ch, None, cfg.n_star or ch.e_grid.n
    fam = dict(cfg.family)
    if fam.get("kind", "gaussian") != "gaussian":
        raise ConfigError("only the gaussian family is supported")
    e_lo, e_hi = fam.get("e_range", (0.0, 1.0))
    q_lo, q_hi = fam.get("q_range", (0.0, 1.0))
    try:
        mean, sigma = _poly(fam["mean"]), _poly(fam["sigma"])
        ch = gaussian_channel(Grid(e_lo, e_hi, cfg.n_e), Grid(q_lo, q_hi, cfg.n_q), mean, sigma)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad family spec: {exc}") from exc
    return ch, None, cfg.n_star or cfg.n_e


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else f"{v:.12g}" for v in row])


def _outdir(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solve(ch, cfg):
    """Solve, returning ``(solution, converged)``; keeps the best iterate."""
    try:
        return solve_capacity(ch, tol=cfg.tol, max_iter=cfg.max_iter), True
    except NotConverged as exc:
        print(f"warning: {exc}", file=sys.stderr)
        return exc.solution, False


def _write_solution(out, ch, sol):
    _write_rows(out / "capacity.csv",
                ["capacity_bits", "lower_bound_bits", "upper_bound_bits", "gap_bits",
                 "iterations", "converged"],
                [[sol.capacity_bits, sol.lower_bound_bits, sol.upper_bound_bits, sol.gap,
                  str(sol.iterations), "true" if sol.converged else "false"]])
    _write_rows(out / "ftilde_e.csv", ["e", "f_tilde_e"],
                zip(ch.e_grid.centers, sol.f_tilde_e.heights))
    _write_rows(out / "ftilde_q.csv", ["q", "f_tilde_q"],
                zip(ch.q_grid.centers, sol.f_tilde_q.heights))
    st = verify_stationarity(ch, sol)
    _write_rows(out / "kkt.csv",
                ["e", "mass", "divergence_bits", "residual_bits", "support"],
                [[e, m, d, r, "true" if s else "false"] for e, m, d, r, s in zip(
                    ch.e_grid.centers, sol.f_tilde_e.masses, sol.divergences,
                    st.residuals, st.support)])
    return st


# ---------------------------------------------------------------------------
# commands

def cmd_capacity(cfg: RunConfig) -> int:
    ch, _, _ = load_channel(cfg.validate())
    sol, ok = _solve(ch, cfg)
    out = _outdir(cfg)
    st = _write_solution(out, ch, sol)
    print(f"capacity {sol.capacity_bits:.12g} bits  gap {sol.gap:.3e}  "
          f"iterations {sol.iterations}  kkt on support {st.max_abs_on_support:.3e}")
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_homogenize(cfg: RunConfig) -> int:
    ch, _, n_star = load_channel(cfg.validate())
    sol, ok = _solve(ch, cfg)
    out = _outdir(cfg)
    _write_solution(out, ch, sol)
    try:
        sys_ = build_homogenized(ch, sol, n_star=n_star, restrict_support=cfg.restrict_support)
    except InteriorZeroRegion as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    rep = certify_theorem1(sys_)
    write_map_csv(sys_.map_e, out / "map_e.csv", ("e", "e_star"))
    write_map_csv(sys_.map_q, out / "map_q.csv", ("q", "q_star"))
    write_channel_csv(sys_.star_channel, out / "star_channel.csv")
    e_star = sys_.star_channel.e_grid.centers
    _write_rows(out / "theorem1.csv", ["e_star", "h_bits", "deviation_bits"],
                zip(e_star, rep.profile, rep.deviations))
    if cfg.svg:
        write_polyline_svg(out / "ftilde_e.svg", ch.e_grid.centers, sol.f_tilde_e.heights,
                           "capacity-achieving input", "e", "density")
        write_polyline_svg(out / "ftilde_q.svg", ch.q_grid.centers, sol.f_tilde_q.heights,
                           "induced marginal of Q", "q", "density")
        write_polyline_svg(out / "theorem1.svg", e_star, rep.profile,
                           "h(Q*|e*)", "e*", "bits")
    if sys_.support_restricted:
        print(f"note: input support excludes {sys_.excluded_e.size} e-cell(s)")
    print(f"capacity {sol.capacity_bits:.12g} bits  max |h(Q*|e*) + C| {rep.max_deviation:.3e}"
          f"  at 2x n_star {rep.refined_max_deviation:.3e}")
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_slowchange(cfg: RunConfig) -> int:
    cfg.validate(need_channel=not cfg.profile)
    out = _outdir(cfg)
    if cfg.profile:
        try:
            prof = SlowChangeProfile.from_csv(cfg.profile)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read profile {cfg.profile}: {exc}") from exc
        ch = spec = None
    else:
        ch, spec, n_star = load_channel(cfg)
        prof = (spec.profile(ch) if spec is not None and spec.profile is not None
                else SlowChangeProfile.from_channel(ch))
    fe, norm = slow_change_input(prof)
    _write_rows(out / "slowchange.csv", ["e", "m", "m_prime", "h_bits", "sigma", "f_e"],
                zip(prof.e_grid.centers, prof.m.y, prof.m_prime, prof.h_profile,
                    prof.sigma_profile, fe.heights))
    summary = [["closed_form_capacity_bits", math.log2(norm)], ["normalizer", norm],
               ["sigma_max", prof.sigma_max]]
    ok = True
    if ch is not None:
        sol, ok = _solve(ch, cfg)
        slow = homogenize_slow_change(ch, prof, n_star=n_star)
        c3 = certify_corollary3(slow, prof)
        c4 = certify_corollary4(slow, prof)
        summary += [["solved_capacity_bits", sol.capacity_bits],
                    ["relative_difference", abs(sol.capacity_bits - math.log2(norm))
                     / sol.capacity_bits if sol.capacity_bits else float("nan")],
                    ["corollary3_max_deviation", c3.max_deviation],
                    ["corollary3_ratio_to_sigma_max", c3.ratio],
                    ["corollary4_posterior_mean_max_deviation", c4.max_deviation],
                    ["corollary4_h_spread_bits", c4.spread]]
    _write_rows(out / "slowchange_summary.csv", ["quantity", "value"], summary)
    for name, value in summary:
        print(f"{name} {value:.12g}")
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_verify(cfg: RunConfig) -> int:
    cfg.validate(need_channel=False)
    if cfg.channel or cfg.family:
        raise ConfigError("verify runs built-in cases only")
    if not cfg.all and not cfg.case:
        raise ConfigError("give --case NAME or --all")
    names = sorted(casebook.CASES) if cfg.all else [cfg.case]
    results = []
    for name in names:
        spec = casebook.get_case(name, cfg.sigma)
        results += casebook.run_case(spec, n_e=cfg.n_e, n_q=cfg.n_q, n_star=cfg.n_star,
                                     tol=cfg.tol, max_iter=cfg.max_iter,
                                     align=not cfg.misaligned,
                                     restrict_support=cfg.restrict_support)
    if cfg.all:
        var = casebook.variance_impossibility_experiment(cfg.n_transforms, cfg.seed)
        inv = casebook.invariance_experiment(n=cfg.n_e, n_pairs=5, seed=cfg.seed)
        results += [
            casebook.CheckResult("variance", "identity_difference", 1 / 16,
                                 var.identity_difference, 1e-12,
                                 abs(var.identity_difference - 1 / 16) <= 1e-12, "TRIVIAL"),
            casebook.CheckResult("variance", "min_difference_positive", 1.0,
                                 float(var.min_difference > 0), 0.0, var.passed, "DERIVED"),
            casebook.CheckResult("invariance", "max_abs_delta_I", 0.0, inv.worst, 1e-2,
                                 inv.worst <= 1e-2, "DERIVED"),
        ]
    out = _outdir(cfg)
    casebook.write_results_csv(results, out / "results.csv")
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAIL {r.case} {r.quantity}: expected {r.expected:.12g} +- {r.tolerance:.3g}, "
              f"got {r.actual:.12g} [{r.provenance}]", file=sys.stderr)
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_case_list(cfg: RunConfig) -> int:
    for name in sorted(casebook.CASES):
        spec = casebook.CASES[name]()
        print(f"{name:12s} {spec.description}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _common(p, channel=True):
    p.add_argument("--config", help="JSON config file; flags override its values")
    if channel:
        p.add_argument("--case", help="built-in case name (see 'case list')")
        p.add_argument("--channel", help="channel matrix CSV")
    p.add_argument("--ne", type=int, help="number of e-cells (default 1000)")
    p.add_argument("--nq", type=int, help="number of q-cells (default 1000)")
    p.add_argument("--nstar", type=int, help="number of e*- and q*-cells")
    p.add_argument("--tol", type=float, help="capacity bound gap in bits (default 1e-6)")
    p.add_argument("--max-iter", type=int, dest="max_iter", help="iteration budget")
    p.add_argument("--sigma", type=float, help="row width for the Gaussian cases")
    p.add_argument("--seed", type=int, help="seed for randomized checks (default 42)")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--svg", action="store_true", default=None, help="also write SVG plots")
    p.add_argument("--restrict-support", action="store_true", default=None,
                   dest="restrict_support",
                   help="accept empty cells inside the support of the Q marginal")
    p.add_argument("--misaligned", action="store_true", default=None,
                   help="do not round grid sizes to breakpoint-aligned multiples")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entropy-homogenizer",
        description="Channel capacity, entropy-homogenizing transforms and exemplar checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="solve for the capacity-achieving input")
    _common(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("homogenize", help="build the transformed channel and check it")
    _common(p)
    p.set_defaults(func=cmd_homogenize)

    p = sub.add_parser("slowchange", help="closed-form slow-change input and capacity")
    _common(p)
    p.add_argument("--profile", help="CSV with columns e,m,sigma or e,m,h")
    p.set_defaults(func=cmd_slowchange)

    p = sub.add_parser("verify", help="check built-in cases against expected values")
    _common(p)
    p.add_argument("--all", action="store_true", default=None,
                   help="all cases plus the randomized experiments")
    p.add_argument("--n-transforms", type=int, dest="n_transforms",
                   help="trials in the variance experiment (default 10000)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("case", help="built-in cases")
    case_sub = p.add_subparsers(dest="case_command", required=True)
    q = case_sub.add_parser("list", help="list built-in cases")
    q.set_defaults(func=cmd_case_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return args.func(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except HomogenizerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
