"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import cubature, schoenberg, sobolev
from .errors import KernelParameterError, NumericalError, SphkernError
from .kernels import Family, IsotropicKernel, eval_kernel

log = logging.getLogger("sphkern")

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
COMMANDS = ("coeffs", "identify", "eval", "cubature", "validate")
VALIDATE_M = 30


class ConfigError(SphkernError):
    """Invalid or inconsistent job configuration."""


def load_schema() -> dict:
    text = resources.files("sphkern").joinpath("schemas/jobconfig.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_config(cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    # deepest path first: the most specific complaint
    errors = sorted(validator.iter_errors(cfg), key=lambda e: -len(e.absolute_path))
    if errors:
        e = _family_branch_error(errors[0], cfg)
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {e.message}")


def _family_branch_error(err, cfg: dict):
    """For a failed kernel oneOf, report the error from the branch of the named family."""
    if err.validator != "oneOf" or not err.context:
        return err
    family = (cfg.get("kernel") or {}).get("family")
    names = [Family.MATERN.value, Family.FFAMILY.value, Family.WENDLAND.value, Family.CUSTOM.value]
    if family not in names:
        return err
    branch = names.index(family)
    sub = [c for c in err.context if c.relative_schema_path and c.relative_schema_path[0] == branch]
    return sub[0] if sub else err


# -- config assembly ---------------------------------------------------------------


def parse_kernel_flag(text: str) -> dict:
    """JSON object, ``Family:key=value,...`` or ``Custom:c0,c1,...``."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--kernel: invalid JSON ({exc.msg})") from None
    fam, _, rest = text.partition(":")
    if fam == Family.CUSTOM.value:
        try:
            return {"family": fam, "params": {"cos_powers": [float(v) for v in rest.split(",") if v]}}
        except ValueError:
            raise ConfigError(f"--kernel: bad coefficient list {rest!r}") from None
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--kernel: expected key=value, got {item!r}")
        try:
            params[key.strip()] = float(val)
        except ValueError:
            raise ConfigError(f"--kernel: {key.strip()} must be a number, got {val!r}") from None
    return {"family": fam, "params": params}


def build_config(args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    if args.kernel is not None:
        cfg["kernel"] = parse_kernel_flag(args.kernel)
    if args.dim is not None:
        cfg["dim"] = args.dim
    if args.truncation is not None:
        cfg["truncation"] = "auto" if args.truncation == "auto" else _int_flag("--truncation", args.truncation)
    if args.route is not None:
        cfg["route"] = args.route
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.coeffs_file is not None:
        cfg["coeffs_file"] = args.coeffs_file
    if args.out is not None or args.format is not None:
        out = dict(cfg.get("output", {}))
        if args.out is not None:
            out["path"] = args.out
        if args.format is not None:
            out["format"] = args.format
        cfg["output"] = out
    validate_config(cfg)
    return cfg


def _int_flag(name: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{name}: expected an integer or 'auto', got {text!r}") from None


def _kernel(cfg: dict) -> IsotropicKernel:
    k = IsotropicKernel.from_dict(cfg["kernel"])
    k.check_dimension(cfg["dim"])
    return k


def _format(cfg: dict, default: str = "csv") -> str:
    out = cfg.get("output", {})
    if "format" in out:
        return out["format"]
    path = out.get("path", "")
    return "json" if path.endswith(".json") else default


def _emit(cfg: dict, text: str) -> None:
    path = cfg.get("output", {}).get("path")
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    log.info("wrote %s", path)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _coefficients(cfg: dict, k: IsotropicKernel) -> schoenberg.SchoenbergSequence:
    tol = cfg.get("tolerances", {})
    return schoenberg.schoenberg_coeffs(
        k, cfg["dim"], cfg.get("truncation", "auto"), cfg.get("route", "closed"),
        quad_tol=tol.get("quad_tol", 1e-11), workers=cfg.get("workers"),
    )


# -- commands ------------------------------------------------------------------------


def cmd_coeffs(cfg: dict) -> int:
    k = _kernel(cfg)
    seq = _coefficients(cfg, k)
    if _format(cfg) == "json":
        data = schoenberg.sequence_to_dict(seq)
        data["kernel"] = k.to_dict()
        _emit(cfg, _json(data))
    else:
        _emit(cfg, schoenberg.sequence_to_csv(seq))
    return EXIT_OK


def cmd_identify(cfg: dict) -> int:
    k = _kernel(cfg)
    fit_range = cfg.get("fit_range")
    if fit_range is not None and "truncation" not in cfg:
        cfg = dict(cfg, truncation=fit_range[1])
    seq = _coefficients(cfg, k)
    fit = sobolev.fit_decay(seq, tuple(fit_range) if fit_range else None)
    out = fit.to_dict()
    out["kernel"] = k.to_dict()
    out["truncation"] = seq.truncation
    log.info("beta=%.6f gamma=%.6f over m in [%d, %d]", fit.beta, fit.gamma_hat, *fit.fit_range)
    _emit(cfg, _json(out))
    return EXIT_OK


def cmd_eval(cfg: dict) -> int:
    k = _kernel(cfg)
    theta = np.asarray(cfg.get("theta", np.linspace(0.0, math.pi, 11)), dtype=float)
    psi = eval_kernel(k, theta)
    if _format(cfg) == "json":
        _emit(cfg, _json({"kernel": k.to_dict(), "theta": theta.tolist(), "psi": np.atleast_1d(psi).tolist()}))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theta", "psi"])
        for t, v in zip(theta, np.atleast_1d(psi)):
            w.writerow([repr(float(t)), repr(float(v))])
        _emit(cfg, buf.getvalue())
    return EXIT_OK


def cmd_cubature(cfg: dict) -> int:
    k = _kernel(cfg)
    d = cfg["dim"]
    seed = cfg.get("seed", 0)
    gen = cfg.get("generator", "Fibonacci" if d == 2 else "UniformRandom")
    trunc = cfg.get("truncation", 0)
    trunc = 0 if trunc == "auto" else trunc
    route = cfg.get("route", "closed")
    if "rules" in cfg:
        a, b = (cubature.read_rule_csv(p) for p in cfg["rules"])
        value = cubature.discrepancy_between(k, a, b)
        _emit(cfg, _json({"kernel": k.to_dict(), "rules": cfg["rules"], "discrepancy": value}))
        return EXIT_OK
    if "n_grid" in cfg:
        study = cubature.rate_study(k, d, cfg["n_grid"], gen, seed=seed, truncation=trunc, route=route,
                                    workers=cfg.get("workers"))
        log.info("fitted slope %.4f", study.slope)
        path = cfg.get("output", {}).get("path")
        if _format(cfg) == "json":
            data = study.metadata()
            data["wce"] = list(study.wce)
            _emit(cfg, _json(data))
        elif path is not None:
            study.write(path)
        else:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["n", "wce"])
            for n, e in zip(study.n, study.wce):
                w.writerow([n, repr(float(e))])
            sys.stdout.write(buf.getvalue())
            sys.stderr.write(f"slope {study.slope!r}\n")
        return EXIT_OK
    n = cfg.get("n", 100)
    pts = cubature.generate_points(gen, n, d, seed)
    if cfg.get("weights", "Optimal") == "Optimal":
        rule = cubature.optimal_weights(k, pts, truncation=trunc, route=route, generator=gen, seed=seed)
    else:
        rule = cubature.CubatureRule(pts, np.full(n, 1.0 / n), gen, cubature.WeightMode.EQUAL, seed)
    report = cubature.worst_case_error(k, rule, truncation=trunc, route=route)
    if _format(cfg, default="json") == "csv" and cfg.get("output", {}).get("path"):
        cubature.write_rule_csv(rule, cfg["output"]["path"])
        sys.stderr.write(_json(report.to_dict()))
    else:
        data = report.to_dict()
        data.update(generator=rule.generator.value, weight_mode=rule.weight_mode.value, seed=seed)
        _emit(cfg, _json(data))
    return EXIT_OK


def _check(name: str, passed: bool, deviation: float, tolerance: float, detail: str = "") -> dict:
    return {"check": name, "passed": bool(passed), "max_deviation": float(deviation),
            "tolerance": float(tolerance), "detail": detail}


def run_validation(k: IsotropicKernel, d: int, M: int, seq: schoenberg.SchoenbergSequence | None = None) -> list[dict]:
    """Oracle-equivalence checks for one kernel; ``seq`` overrides the closed-form sequence."""
    checks = []
    if seq is None:
        seq = schoenberg.schoenberg_coeffs(k, d, M, "closed")
    elif seq.dim != d:
        raise ConfigError(f"coefficient file has dim {seq.dim}, config has dim {d}")
    M = seq.truncation
    quad = schoenberg.quadrature_coeffs(k, d, M)
    sel = np.abs(quad.coeffs) > 1e-12
    m_hi = min(M, 30)
    sel[m_hi + 1:] = False
    rel = np.abs(seq.coeffs - quad.coeffs)[sel] / np.abs(quad.coeffs[sel])
    checks.append(_check("oracle_equivalence", np.all(rel <= 1e-6), rel.max(initial=0.0), 1e-6,
                         f"closed form vs quadrature, m <= {m_hi}"))
    if k.family in (Family.FFAMILY, Family.CUSTOM) and d >= 1:
        m_pr = min(M, 20)
        proj = schoenberg.schoenberg_coeffs(k, d, m_pr, "projection")
        dev = float(np.max(np.abs(proj.coeffs - seq.coeffs[: m_pr + 1])))
        checks.append(_check("route_equivalence", dev <= 1e-8, dev, 1e-8, f"projection vs closed form, m <= {m_pr}"))
    dev = abs(seq.mass - 1.0)
    checks.append(_check("mass_conservation", dev <= 1e-6, dev, 1e-6, "sum b + tail_bound = 1"))
    theta = np.linspace(0.0, math.pi, 50)
    err = float(np.max(np.abs(schoenberg.reconstruct_kernel(seq, theta) - eval_kernel(k, theta))))
    tol = seq.tail_bound + 1e-8
    checks.append(_check("reconstruction_fidelity", err <= tol, err, tol, "50-point theta grid"))
    neg = max(0.0, -float(seq.coeffs.min()))
    checks.append(_check("non_negativity", neg == 0.0, neg, 0.0, "all b_{m,d} >= 0"))
    return checks


def cmd_validate(cfg: dict) -> int:
    k = _kernel(cfg)
    d = cfg["dim"]
    seq = None
    if "coeffs_file" in cfg:
        path = cfg["coeffs_file"]
        try:
            reader = schoenberg.read_sequence_json if path.endswith(".json") else schoenberg.read_sequence_csv
            seq = reader(path)
        except OSError as exc:
            raise ConfigError(f"cannot read coefficient file {path}: {exc.strerror}") from None
        except (ValueError, KeyError) as exc:
            log.error("coefficient file %s rejected: %s", path, exc)
            _emit(cfg, _json({"kernel": k.to_dict(), "dim": d, "all_passed": False,
                              "checks": [_check("file_integrity", False, math.inf, 0.0, str(exc))]}))
            return EXIT_VALIDATION
    M = cfg.get("truncation", VALIDATE_M)
    M = VALIDATE_M if M == "auto" else M
    checks = run_validation(k, d, M, seq)
    for c in checks:
        log.info("%-24s %s  deviation %.3e (tolerance %.1e)", c["check"], "PASS" if c["passed"] else "FAIL",
                 c["max_deviation"], c["tolerance"])
    ok = all(c["passed"] for c in checks)
    _emit(cfg, _json({"kernel": k.to_dict(), "dim": d, "all_passed": ok, "checks": checks}))
    return EXIT_OK if ok else EXIT_VALIDATION


HANDLERS = {"coeffs": cmd_coeffs, "identify": cmd_identify, "eval": cmd_eval, "cubature": cmd_cubature,
            "validate": cmd_validate}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON job configuration")
    common.add_argument("--kernel", help="kernel as JSON or Family:key=value,... (Custom:c0,c1,...)")
    common.add_argument("--dim", type=int, help="sphere dimension d")
    common.add_argument("--truncation", help="truncation M or 'auto'")
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--seed", type=int)
    common.add_argument("--route", choices=["closed", "projection", "quadrature"])
    common.add_argument("--coeffs-file", help="coefficient table to validate instead of recomputing")
    common.add_argument("-v", "--verbose", action="count", default=0)
    parser = argparse.ArgumentParser(prog="sphkern", description="Isotropic kernels on spheres")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "coeffs": "d-Schoenberg and Fourier coefficient table",
        "identify": "Sobolev order from coefficient decay",
        "eval": "evaluate the kernel on a theta grid",
        "cubature": "worst-case error, optimal weights and rate studies",
        "validate": "oracle-equivalence checks for one kernel",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        cfg = build_config(args)
        return HANDLERS[args.command](cfg)
    except (ConfigError, KernelParameterError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        log.error("numerical failure in %s: %s", args.command, exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
