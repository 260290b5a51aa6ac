"""Command line driver: flat key=value configs, deterministic seeding, one
subcommand per experiment, CSV/JSON/plot output."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import identities as idn
from . import probe
from .errors import SymgradError
from .orlicz import NonlinearityLaw, check_section2_battery, frob
from .report import CheckResult, ExperimentReport
from .solver import (DirichletProblem, SolverConfig, StructuredGrid, continuation_solve,
                     convergence_rates, initial_guess, l2_error, manufactured_rhs,
                     nodal_max_error, polynomial_boundary)
from .tensorfields import singular_field, strain_laplacian_terms, random_field, sample

SUBCOMMANDS = ("battery", "identities", "inequalities", "thresholds", "solve", "estimate",
               "singular", "nikolskii", "convergence", "korn")
FORMATS = ("csv", "json", "plot")
SEED_ENV = "SYMGRAD_SEED"

# key -> (type tag, default); list types are comma separated
KEYS = {
    "subcommand": ("str", "thresholds"),
    "n": ("int", 2),
    "dims": ("ints", [2, 3, 4, 5, 6, 7, 8]),
    "law": ("str", "regularized"),
    "p": ("floats", [2.0]),
    "eps": ("floats", [0.1]),
    "nu": ("float", 1.0),
    "eps_start": ("float", 0.1),
    "eps_factor": ("float", 0.5),
    "eps_floor": ("float", 1e-5),
    "cells": ("ints", [16]),
    "center": ("floats", [0.5, 0.5]),
    "radius": ("float", 0.2),
    "deltas": ("floats", [1e-1, 1e-2, 1e-3, 1e-4]),
    "samples": ("int", 100),
    "points": ("int", 4),
    "degree": ("int", 3),
    "seed": ("int", 0),
    "out": ("str", "."),
    "formats": ("strs", ["csv"]),
}

# defaults that differ between subcommands
SUBCOMMAND_DEFAULTS = {
    "battery": {"p": [1.6, 2.5, 3.0], "eps": [0.1, 0.01]},
    "identities": {"dims": [2, 3], "p": [1.7, 2.0, 3.0], "eps": [0.01, 0.1]},
    "inequalities": {"dims": [2, 3, 4, 5, 6, 7, 8], "samples": 10000},
    "solve": {"p": [3.0], "cells": [32]},
    "estimate": {"p": [1.8, 2.0, 2.5], "cells": [16, 32, 64]},
    "singular": {"p": [1.3, 1.4, 1.45, 1.5, 1.6, 2.0, 3.0]},
    "nikolskii": {"p": [3.0], "cells": [64, 128], "center": [0.0, 0.0], "radius": 0.4},
    "convergence": {"p": [2.0], "cells": [8, 16, 32]},
    "korn": {"p": [2.0], "cells": [8], "samples": 100},
}


class ConfigError(SymgradError, ValueError):
    pass


def _parse_value(key: str, raw: str):
    tag = KEYS[key][0]
    raw = raw.strip()
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "str":
            return raw
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if tag == "ints":
            return [int(s) for s in items]
        if tag == "floats":
            return [float(s) for s in items]
        return items
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {tag}") from exc


def _format_value(v) -> str:
    if isinstance(v, list):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    @classmethod
    def defaults(cls, subcommand: str) -> "ExperimentConfig":
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"subcommand: unknown {subcommand!r}")
        vals = {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in KEYS.items()}
        vals.update(SUBCOMMAND_DEFAULTS.get(subcommand, {}))
        vals["subcommand"] = subcommand
        return cls(vals)

    @classmethod
    def parse(cls, text: str, subcommand: str | None = None) -> "ExperimentConfig":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            raw[key] = _parse_value(key, val)
        sub = subcommand or raw.get("subcommand") or KEYS["subcommand"][1]
        cfg = cls.defaults(sub)
        cfg.values.update(raw)
        cfg.values["subcommand"] = sub
        cfg.validate()
        return cfg

    def format(self) -> str:
        return "".join(f"{k} = {_format_value(self.values[k])}\n" for k in KEYS)

    def __getitem__(self, key):
        return self.values[key]

    def validate(self) -> None:
        v = self.values
        errs = []
        if v["n"] < 2:
            errs.append("n: must be at least 2")
        if any(d < 2 for d in v["dims"]):
            errs.append("dims: every dimension must be at least 2")
        if v["law"] not in ("regularized", "power", "carreau"):
            errs.append("law: expected regularized, power or carreau")
        if any(p <= 1 for p in v["p"]) or not v["p"]:
            errs.append("p: values must exceed 1")
        if any(not 0 < e < 1 for e in v["eps"]):
            errs.append("eps: values must lie in (0, 1)")
        if not 0 < v["eps_factor"] < 1:
            errs.append("eps_factor: must lie in (0, 1)")
        if not 0 < v["eps_floor"] <= v["eps_start"] < 1:
            errs.append("eps_floor/eps_start: need 0 < floor <= start < 1")
        if any(c < 1 for c in v["cells"]) or not v["cells"]:
            errs.append("cells: positive integers required")
        if v["radius"] <= 0:
            errs.append("radius: must be positive")
        if any(not 0 < d < 1 for d in v["deltas"]):
            errs.append("deltas: values must lie in (0, 1)")
        if v["samples"] < 1 or v["points"] < 1 or v["degree"] < 1:
            errs.append("samples/points/degree: must be positive")
        if v["seed"] < 0:
            errs.append("seed: must be nonnegative")
        bad = [f for f in v["formats"] if f not in FORMATS]
        if bad:
            errs.append(f"formats: unknown {bad}")
        if errs:
            raise ConfigError("; ".join(errs))

    def solver_config(self) -> SolverConfig:
        return SolverConfig(eps_start=self["eps_start"], eps_factor=self["eps_factor"],
                            eps_floor=self["eps_floor"])


def resolve_seed(config_seed: int, flag_seed: int | None, env=None) -> int:
    """Flag beats environment beats config."""
    env = os.environ if env is None else env
    if flag_seed is not None:
        return int(flag_seed)
    if env.get(SEED_ENV, "").strip():
        try:
            return int(env[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV}: not an integer") from exc
    return int(config_seed)


def _law(cfg: ExperimentConfig, p: float, eps: float) -> NonlinearityLaw:
    kind = cfg["law"]
    if kind == "power":
        return NonlinearityLaw.power(p)
    if kind == "carreau":
        return NonlinearityLaw.carreau(p, cfg["nu"])
    return NonlinearityLaw.regularized(p, eps)


# --- subcommands -----------------------------------------------------------

def run_battery(cfg, rng, rep):
    rep.columns = ["law", "check", "passed", "worst_margin", "tolerance"]
    for p in cfg["p"]:
        for eps in (cfg["eps"] if cfg["law"] == "regularized" else [None]):
            law = _law(cfg, p, eps if eps is not None else 0.1)
            br = check_section2_battery(law)
            for c in br.checks:
                rep.rows.append({"law": br.law, "check": c.name, "passed": c.passed,
                                 "worst_margin": c.worst_margin, "tolerance": c.tolerance})
                rep.add(CheckResult(f"{c.name} [{br.law}]", c.passed, c.worst_margin,
                                    c.tolerance, c.worst_margin + c.tolerance))
            lo, hi = br.equivalence
            rep.add(CheckResult(f"stress_equivalence_range [{br.law}]", True, [lo, hi],
                                float("nan"), float("nan"), asserted=False))


def _identity_laws(cfg):
    laws = [NonlinearityLaw.regularized(p, e) for p in cfg["p"] for e in cfg["eps"]]
    laws += [NonlinearityLaw.power(p) for p in (2.0, 2.5, 3.0)]
    return laws


def run_identities(cfg, rng, rep, tol=1e-9, min_strain=0.1):
    rep.columns = ["identity", "law", "n", "points", "max_relative_residual"]

    def record(name, label, n, res_list):
        worst = max((float(np.max(r)) for r in res_list), default=float("nan"))
        count = sum(r.size for r in res_list)
        rep.rows.append({"identity": name, "law": label, "n": n, "points": count,
                         "max_relative_residual": worst})
        rep.add(CheckResult(f"{name} n={n} {label}", worst < tol, worst, tol,
                            tol - worst, {"points": count}))

    for n in cfg["dims"]:
        fields = [random_field(n, cfg["degree"], rng) for _ in range(cfg["samples"])]
        samples = [sample(f, rng.uniform(-1, 1, (cfg["points"], n))) for f in fields]
        record("strain_laplacian", "law-free", n, [strain_laplacian_terms(s).relative_residual for s in samples])
        for law in _identity_laws(cfg):
            kept = samples
            if not law.regular_at_zero:
                kept = []
                for s in samples:
                    keep = np.flatnonzero(frob(s.sym_grad) >= min_strain)
                    if keep.size:
                        kept.append(s.take(keep))
            if n <= 7:
                record("lowdim", law.describe(), n,
                       [np.atleast_1d(idn.identity_lowdim_residual(law, s)) for s in kept])
            record("alldim", law.describe(), n,
                   [np.atleast_1d(idn.identity_alldim_residual(law, s)) for s in kept])


def run_inequalities(cfg, rng, rep):
    rep.columns = ["form", "n", "theta", "samples", "min_scaled_slack", "holds"]
    lam = idn.q_matrix_spectrum()
    rep.add(CheckResult("q_null_eigenvalue", abs(lam[0]) < 1e-12, float(lam[0]), 1e-12,
                        1e-12 - abs(lam[0])))
    rep.add(CheckResult("q_positive_eigenvalues", bool(lam[1] > 0 and lam[2] > 0),
                        [float(lam[1]), float(lam[2])], 0.0, float(min(lam[1], lam[2]))))
    count = max(cfg["samples"], 100000)
    first = rng.uniform(-1, 1, (count, 3))
    second = rng.uniform(-1, 1, (count, 3))
    q = idn.claim_2d_quadratic(first, second)
    direct = idn.claim_2d(idn.sample_from_coords(first, second))
    scale = np.sum(first ** 2 + second ** 2, axis=1)
    mn = float(np.min(direct / scale))
    rep.add(CheckResult("planar_claim_min_slack", mn >= -1e-12, mn, 1e-12, mn + 1e-12,
                        {"samples": count}))
    agree = float(np.max(np.abs(q - direct) / (1 + np.abs(q))))
    rep.add(CheckResult("planar_claim_matches_quadratic_form", agree < 1e-12, agree, 1e-12,
                        1e-12 - agree))
    for n in cfg["dims"]:
        if n <= 7:
            lo = idn.lowdim_theta_floor(n) + 0.01
            for theta in np.linspace(lo, 1.0, 5):
                _sweep(rep, "lowdim", n, float(theta), cfg["samples"], rng)
        a, b = idn.alldim_theta_interval(n)
        for theta in np.linspace(a + 0.01, b - 0.01, 5):
            _sweep(rep, "alldim", n, float(theta), cfg["samples"], rng)


def _sweep(rep, kind, n, theta, count, rng):
    s = idn.sweep_reduced(kind, n, theta, count, rng)
    rep.rows.append({"form": kind, "n": n, "theta": theta, "samples": count,
                     "min_scaled_slack": s.min_scaled_slack, "holds": s.holds})
    rep.add(CheckResult(f"{kind} n={n} theta={theta:.4f}", s.holds, s.min_scaled_slack,
                        1e-12, s.min_scaled_slack + 1e-12))


TABULATED_P_MINUS = {2: 1.612, 3: 1.667, 4: 1.691, 5: 1.710, 6: 1.726, 7: 1.739, 8: 1.75}


def run_thresholds(cfg, rng, rep):
    rep.columns = ["n", "p_minus", "p_plus"]
    for n in cfg["dims"]:
        r = idn.admissible_range(n)
        rep.rows.append({"n": n, "p_minus": r.p_minus, "p_plus": r.p_plus})
        if n in TABULATED_P_MINUS:
            d = abs(r.p_minus - TABULATED_P_MINUS[n])
            rep.add(CheckResult(f"p_minus n={n}", d <= 1e-3, r.p_minus, 1e-3, 1e-3 - d))
        if n <= 7:
            rep.add(CheckResult(f"p_plus n={n}", math.isinf(r.p_plus), r.p_plus, 0.0, 0.0))
        elif n == 8:
            rep.add(CheckResult("p_plus n=8", r.p_plus == 2.5, r.p_plus, 0.0,
                                -abs(r.p_plus - 2.5)))


def run_solve(cfg, rng, rep):
    """Singular example as Dirichlet datum, f = 0; u* solves the system exactly."""
    rep.columns = ["p", "cells", "h", "scaled_nodal_error", "bound", "newton_iterations"]
    sc = cfg.solver_config()
    exact = singular_field(2)
    for p in cfg["p"]:
        for cells in cfg["cells"]:
            u, cr = probe.solve_singular(p, cells, sc)
            h = float(u.grid.h[0])
            scale = float(np.max(np.abs(exact(u.grid.node_coords()))))
            err = nodal_max_error(u, exact) / scale
            bound = 5 * (h ** 2 + sc.eps_floor)
            rep.rows.append({"p": p, "cells": cells, "h": h, "scaled_nodal_error": err,
                             "bound": bound, "newton_iterations": cr.total_iterations})
            rep.add(CheckResult(f"singular nodal error p={p} cells={cells}", err <= bound,
                                err, bound, bound - err))


def run_estimate(cfg, rng, rep, spread=2.0):
    rep.columns = ["p", "cells", "h", "ratio", "lhs", "rhs", "grad_l2", "newton_iterations"]
    sc = cfg.solver_config()
    for p in cfg["p"]:
        rs = []
        for cells in cfg["cells"]:
            s = probe.estimate_experiment(p, cells, sc, center=tuple(cfg["center"]),
                                          radius=cfg["radius"])
            rs.append(s)
            rep.rows.append({k: getattr(s, k) for k in rep.columns})
        ratios = np.array([s.ratio for s in rs])
        grads = np.array([s.grad_l2 for s in rs])
        var = float(ratios.max() / ratios.min())
        ok = bool(np.all(np.isfinite(ratios)) and var < spread)
        rep.add(CheckResult(f"estimate ratio spread p={p}", ok, var, spread, spread - var))
        g = float(grads[-1] / grads[0])
        rep.add(CheckResult(f"gradient term bounded p={p}", bool(np.isfinite(g) and g < spread),
                            g, spread, spread - g))


def run_singular(cfg, rng, rep, tol=1e-6, band=0.05):
    rep.columns = ["p", "delta", "quadrature", "analytic", "classification"]
    for p in cfg["p"]:
        t = probe.singular_threshold(p, cfg["deltas"], cfg["n"])
        for d, q, a in zip(t.deltas, t.quadrature, t.analytic):
            rep.rows.append({"p": p, "delta": d, "quadrature": q, "analytic": a,
                             "classification": t.classification})
        rel = max(abs(q / a - 1) for d, q, a in zip(t.deltas, t.quadrature, t.analytic)
                  if d >= 1e-3)
        rep.add(CheckResult(f"quadrature vs closed form p={p}", rel < tol, rel, tol, tol - rel))
        truth = "convergent" if p > 1.5 else "divergent"
        decided = abs(p - 1.5) >= band or p == 1.5
        rep.add(CheckResult(f"classification p={p}", t.classification == truth,
                            t.classification, None, None,
                            {"increment_ratio": t.increment_ratio,
                             "growth_per_decade": t.growth_per_step},
                            asserted=decided))


def run_nikolskii(cfg, rng, rep, tol=0.10):
    rep.columns = ["p", "alpha", "cells", "h", "l1", "seminorm", "nikolskii_bound_ratio"]
    for p in cfg["p"]:
        alpha = probe.nikolskii_alpha(p - 2)
        law = NonlinearityLaw.power(p)
        semis = []
        for cells in cfg["cells"]:
            grid = StructuredGrid.box(2, -1.0, 1.0, cells)
            region = probe.BallRegion(tuple(cfg["center"]), cfg["radius"], grid)
            U = probe.singular_strain_on_grid(grid)
            r = probe.nikolskii_seminorm(U, grid, alpha, region)
            sf = probe.stress_project(singular_field(2), law, grid)
            ratio = probe.nikolskii_bound_ratio(U, sf, region, alpha)
            semis.append(r.seminorm)
            rep.rows.append({"p": p, "alpha": alpha, "cells": cells, "h": float(grid.h[0]),
                             "l1": r.l1, "seminorm": r.seminorm, "nikolskii_bound_ratio": ratio})
        for a, b, c in zip(semis, semis[1:], cfg["cells"][1:]):
            ch = abs(b / a - 1)
            # the seminorm is only expected to settle when U is Lipschitz
            rep.add(CheckResult(f"seminorm change p={p} cells={c}", ch < tol, ch, tol,
                                tol - ch, asserted=alpha <= 1 and p >= 2))


def run_convergence(cfg, rng, rep, min_rate=1.8):
    rep.columns = ["p", "cells", "h", "l2_error", "rate"]
    sc = cfg.solver_config()
    exact = probe.SMOOTH_FIELD
    for p in cfg["p"]:
        law = NonlinearityLaw.regularized(p, sc.eps_floor)
        hs, errs = [], []
        for cells in cfg["cells"]:
            grid = StructuredGrid.box(2, 0.0, 1.0, cells)
            prob = DirichletProblem(law.with_eps(sc.eps_start), grid, polynomial_boundary(exact),
                                    manufactured_rhs(law, exact))
            u, _ = continuation_solve(prob, sc, initial_guess(prob, "zero"))
            hs.append(float(grid.h[0]))
            errs.append(l2_error(u, polynomial_boundary(exact)))
        rates = [float("nan")] + list(convergence_rates(hs, errs))
        for c, h, e, r in zip(cfg["cells"], hs, errs, rates):
            rep.rows.append({"p": p, "cells": c, "h": h, "l2_error": e, "rate": r})
        worst = float(min(rates[1:])) if len(rates) > 1 else float("nan")
        rep.add(CheckResult(f"l2 rate p={p}", worst >= min_rate, worst, min_rate,
                            worst - min_rate))


def run_korn(cfg, rng, rep, bound=2.05):
    rep.columns = ["p", "cells", "samples", "korn_max", "korn_mean", "poincare_max",
                   "ibp_defect_max", "bubble_korn"]
    for p in cfg["p"]:
        law = _law(cfg, p, cfg["eps"][0])
        for cells in cfg["cells"]:
            grid = StructuredGrid.box(2, 0.0, 1.0, cells)
            st = probe.korn_poincare_ratios(grid, law, cfg["samples"], rng)
            bub = probe.korn_poincare_ratios(grid, law, 0, rng,
                                             fields=[probe.bubble_gradient_field(grid)])
            ibp = float(np.max(np.abs(st.ibp_defect)))
            rep.rows.append({"p": p, "cells": cells, "samples": cfg["samples"],
                             "korn_max": st.korn_max, "korn_mean": float(st.korn.mean()),
                             "poincare_max": st.poincare_max, "ibp_defect_max": ibp,
                             "bubble_korn": float(bub.korn[0])})
            rep.add(CheckResult(f"korn ratio p={p} cells={cells}", st.korn_max <= bound,
                                st.korn_max, bound, bound - st.korn_max, asserted=p == 2))


RUNNERS = {name: globals()[f"run_{name}"] for name in SUBCOMMANDS}
PLOT_COLUMNS = {"thresholds": ("n", "p_minus"), "estimate": ("h", "ratio"),
                "singular": ("delta", "quadrature"), "nikolskii": ("h", "seminorm"),
                "convergence": ("h", "l2_error"), "solve": ("h", "scaled_nodal_error"),
                "korn": ("cells", "korn_max"), "identities": ("n", "max_relative_residual"),
                "inequalities": ("theta", "min_scaled_slack"),
                "battery": ("tolerance", "worst_margin")}


def run(cfg: ExperimentConfig) -> ExperimentReport:
    rep = ExperimentReport(dict(cfg.values))
    rng = np.random.default_rng(cfg["seed"])
    t0 = time.perf_counter()
    try:
        RUNNERS[cfg["subcommand"]](cfg, rng, rep)
    except SymgradError as exc:
        raise type(exc)(f"{cfg['subcommand']}: {exc}") from exc
    rep.timing = {"seconds": time.perf_counter() - t0}
    return rep


# --- output ----------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(rep: ExperimentReport, path: Path) -> None:
    lines = [",".join(rep.columns)]
    lines += [",".join(_cell(r[c]) for c in rep.columns) for r in rep.rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(rep: ExperimentReport, path: Path) -> None:
    path.write_text(json.dumps(rep.to_json_dict(), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def write_plot(rep: ExperimentReport, path: Path, columns) -> None:
    x, y = columns
    lines = [f"# {x} {y}"] + [f"{_cell(r[x])} {_cell(r[y])}" for r in rep.rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_outputs(rep: ExperimentReport, cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    name = cfg["subcommand"]
    paths = []
    for fmt in cfg["formats"]:
        if fmt == "csv":
            p = out / f"{name}.csv"
            write_csv(rep, p)
        elif fmt == "json":
            p = out / f"{name}.json"
            write_json(rep, p)
        else:
            p = out / f"{name}.dat"
            write_plot(rep, p, PLOT_COLUMNS[name])
        paths.append(p)
    return paths


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="symgrad", description=__doc__)
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", type=Path, help="flat key = value file")
    ap.add_argument("--seed", type=int, help=f"overrides ${SEED_ENV} and the config")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--format", action="append", choices=FORMATS, dest="formats",
                    help="repeatable; default csv")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override one config key")
    ap.add_argument("--print-config", action="store_true",
                    help="echo the resolved config and exit")
    return ap


def load_config(args) -> ExperimentConfig:
    text = args.config.read_text(encoding="utf-8") if args.config else ""
    text += "".join(f"{s}\n" for s in args.set)
    cfg = ExperimentConfig.parse(text, args.subcommand)
    if args.out is not None:
        cfg.values["out"] = args.out
    if args.formats:
        cfg.values["formats"] = list(dict.fromkeys(args.formats))
    cfg.values["seed"] = resolve_seed(cfg["seed"], args.seed)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, OSError) as exc:
        ap.error(str(exc))
    if args.print_config:
        sys.stdout.write(cfg.format())
        return 0
    try:
        rep = run(cfg)
    except SymgradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for c in rep.checks:
        tag = ("PASS" if c.passed else "FAIL") if c.asserted else "INFO"
        print(f"{tag} {c.name}: measured={c.measured}")
    for p in write_outputs(rep, cfg):
        print(f"wrote {p}")
    failed = sum(1 for c in rep.checks if c.asserted and not c.passed)
    print(f"{cfg['subcommand']}: {len(rep.checks) - failed}/{len(rep.checks)} checks ok")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
