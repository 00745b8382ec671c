"""Command-line entry point.

    splitgibbs inpaint --method spa --rho 2.8 --alpha 1 --beta 0.2 --seed 7 --output out/

Commands: ``deconv``, ``inpaint``, ``gaussian-check``, ``admm-solve``.
Options may also come from ``--config FILE`` (flat ``key = value`` lines,
``#`` comments, keys spelled like the long options); command-line flags win
over the file. Exit codes: 0 success, 1 usage error, 2 runtime error.
``SPLITGIBBS_VERBOSE`` (0, 1 or 2) controls log output on stderr only.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import SplitGibbsError

log = logging.getLogger("splitgibbs")

COMMANDS = ("deconv", "inpaint", "gaussian-check", "admm-solve")
METHODS = ("sp", "spa", "pmyula", "salsa")
VERBOSE_ENV = "SPLITGIBBS_VERBOSE"
DEFAULT_T_MC = 1000
DEFAULT_T_BI = 200


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int
    method: str = "spa"
    rho: float | None = None
    alpha: float | None = None
    gamma: float | None = None
    beta: float | None = None
    sigma: float | None = None
    snr: float = 40.0
    keep: float = 0.6
    t_mc: int | None = None
    t_bi: int | None = None
    size: int | None = None
    input: str | None = None
    image: str = "cameraman"
    output: str = "out"
    replicates: int = 1
    workers: int = 1
    preset: str = "swapped"
    prox_iters: int | None = None
    problem: str = "inpaint"


# key -> (type, help); every key is also accepted in a config file
_OPTIONS = {
    "method": (str, "sp, spa, pmyula or salsa"),
    "rho": (float, "splitting parameter"),
    "alpha": (float, "augmentation parameter (spa)"),
    "gamma": (float, "Laplacian prior weight (deconv)"),
    "beta": (float, "TV weight (inpaint)"),
    "sigma": (float, "noise std; overrides --snr / the noise mixture"),
    "snr": (float, "observation SNR in dB (inpaint)"),
    "keep": (float, "fraction of kept pixels (inpaint)"),
    "t_mc": (int, "total sweeps (gaussian-check: number of draws)"),
    "t_bi": (int, "burn-in sweeps"),
    "size": (int, "lattice side; images are centre-cropped"),
    "input": (str, "input image (PGM or raw); default is a bundled image"),
    "image": (str, "bundled image name"),
    "output": (str, "output directory"),
    "replicates": (int, "independent replicates (data and chain)"),
    "workers": (int, "worker processes for replicates"),
    "preset": (str, "inpainting parameter preset: swapped or literal"),
    "prox_iters": (int, "inner TV prox iterations"),
    "problem": (str, "admm-solve target: inpaint or deconv"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="splitgibbs", description="Split Gibbs samplers for image restoration.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    for key, (typ, hlp) in _OPTIONS.items():
        p.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, help=hlp)
    return p


def read_config_file(path) -> dict:
    """Flat ``key = value`` text; ``#`` starts a comment; unknown keys are rejected."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc.strerror}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "seed":
            typ = int
        elif key in _OPTIONS:
            typ = _OPTIONS[key][0]
        else:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = typ(value)
        except ValueError:
            raise UsageError(f"config line {lineno}: invalid value for {key}: {value!r}") from None
    return out


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    vals = read_config_file(ns.config) if ns.config else {}
    for key in list(_OPTIONS) + ["seed"]:
        v = getattr(ns, key)
        if v is not None:
            vals[key] = v
    if "seed" not in vals:
        raise UsageError("seed: --seed is required")
    known = {f.name for f in fields(RunConfig)}
    cfg = RunConfig(command=ns.command, **{k: v for k, v in vals.items() if k in known})
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    def bad(name, why):
        raise UsageError(f"{name}: {why}")

    cfg.method = cfg.method.lower()
    if cfg.method not in METHODS:
        bad("method", f"must be one of {', '.join(METHODS)}")
    if cfg.command == "deconv" and cfg.method not in ("sp", "spa"):
        bad("method", "deconv supports sp and spa only")
    for name in ("rho", "gamma", "beta", "keep"):
        v = getattr(cfg, name)
        if v is not None and not (math.isfinite(v) and v > 0):
            bad(name, "must be a finite positive number")
    if cfg.keep > 1:
        bad("keep", "must be in (0, 1]")
    if cfg.alpha is not None and not (math.isfinite(cfg.alpha) and cfg.alpha >= 0):
        bad("alpha", "must be >= 0")
    if cfg.method == "spa" and cfg.alpha == 0:
        bad("alpha", "spa needs alpha > 0")
    if cfg.sigma is not None and not (math.isfinite(cfg.sigma) and cfg.sigma > 0):
        bad("sigma", "must be a finite positive number")
    for name in ("t_mc", "replicates", "workers", "size", "prox_iters"):
        v = getattr(cfg, name)
        if v is not None and v < 1:
            bad(name.replace("_", "-"), "must be >= 1")
    if cfg.t_bi is not None and cfg.t_bi < 0:
        bad("t-bi", "must be >= 0")
    if cfg.command in ("deconv", "inpaint"):
        t_mc = DEFAULT_T_MC if cfg.t_mc is None else cfg.t_mc
        t_bi = DEFAULT_T_BI if cfg.t_bi is None else cfg.t_bi
        if t_bi >= t_mc:
            bad("t-bi", f"burn-in {t_bi} must be smaller than t-mc {t_mc}")
    if cfg.preset not in ("swapped", "literal"):
        bad("preset", "must be swapped or literal")
    if cfg.problem not in ("inpaint", "deconv"):
        bad("problem", "must be inpaint or deconv")
    if cfg.seed < 0:
        bad("seed", "must be >= 0")


# ---------------------------------------------------------------- commands


def _load_truth(cfg: RunConfig) -> np.ndarray:
    from .experiments import load_bundled
    from .io import read_image

    if cfg.input:
        img = read_image(cfg.input)
    else:
        try:
            img = load_bundled(cfg.image)
        except KeyError as exc:
            raise UsageError(f"image: {exc.args[0]}") from None
    if cfg.size is not None:
        r, c = img.shape
        if cfg.size > min(r, c):
            raise UsageError(f"size: {cfg.size} exceeds the {r}x{c} image")
        r0, c0 = (r - cfg.size) // 2, (c - cfg.size) // 2
        img = img[r0:r0 + cfg.size, c0:c0 + cfg.size]
    return np.array(img, dtype=float)


def _deconv_problem(cfg, truth, replicate):
    from .experiments.deconv import DEFAULT_GAMMA, DEFAULT_NOISE_MIXTURE, synthesize_deconv

    mixture = DEFAULT_NOISE_MIXTURE if cfg.sigma is None else (0.0, cfg.sigma, cfg.sigma)
    gamma = DEFAULT_GAMMA if cfg.gamma is None else cfg.gamma
    return synthesize_deconv(truth, gamma=gamma, noise_mixture=mixture, seed=cfg.seed,
                             replicate=replicate)


def _inpaint_problem(cfg, truth, replicate):
    from .experiments.inpaint import DEFAULT_BETA, synthesize_inpaint

    beta = DEFAULT_BETA if cfg.beta is None else cfg.beta
    return synthesize_inpaint(truth, keep_fraction=cfg.keep, target_snr_db=cfg.snr, seed=cfg.seed,
                              beta=beta, replicate=replicate, sigma=cfg.sigma)


def _overrides(cfg, names):
    return {n: getattr(cfg, n) for n in names if getattr(cfg, n) is not None}


def _run_replicate(cfg: RunConfig, truth: np.ndarray, replicate: int, out_dir: str) -> dict:
    from .experiments import DeconvParams, InpaintParams, run_deconv, run_inpaint
    from .io import write_report

    if cfg.command == "deconv":
        problem = _deconv_problem(cfg, truth, replicate)
        params = DeconvParams(**_overrides(cfg, ("rho", "alpha", "t_mc", "t_bi")))
        bundle = run_deconv(problem, cfg.method, params, seed=cfg.seed, stream_id=replicate)
    else:
        problem = _inpaint_problem(cfg, truth, replicate)
        params = InpaintParams.preset(cfg.method, cfg.preset,
                                      **_overrides(cfg, ("rho", "alpha", "t_mc", "t_bi", "prox_iters")))
        bundle = run_inpaint(problem, cfg.method, params, seed=cfg.seed, stream_id=replicate)
    write_report(bundle, bundle.record, out_dir)
    if bundle.residuals:
        _write_residuals(Path(out_dir) / "residuals.csv", bundle.residuals)
    log.info("replicate %d done: %s", replicate, out_dir)
    return dict(bundle.metrics)


def _write_residuals(path, residuals):
    from .io import write_csv

    write_csv(path, ["iteration", "primal", "dual"], residuals)


def _write_config(cfg: RunConfig, out: Path):
    from .experiments.deconv import DEFAULT_BLUR_SIZE, DEFAULT_BLUR_WIDTH
    from .io import write_csv

    rows = [(f.name, getattr(cfg, f.name)) for f in fields(RunConfig)
            if f.name not in ("output", "workers")]
    if cfg.command == "deconv" or cfg.problem == "deconv":
        rows += [("blur_size", DEFAULT_BLUR_SIZE), ("blur_width", DEFAULT_BLUR_WIDTH)]
    write_csv(out / "config.csv", ["key", "value"], [(k, "" if v is None else v) for k, v in rows])


def cmd_sample(cfg: RunConfig) -> None:
    from .io import write_aggregate

    truth = _load_truth(cfg)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_config(cfg, out)
    if cfg.replicates == 1:
        _run_replicate(cfg, truth, 0, str(out))
        return
    dirs = [str(out / f"rep{r:03d}") for r in range(cfg.replicates)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_run_replicate, [cfg] * cfg.replicates, [truth] * cfg.replicates,
                                  range(cfg.replicates), dirs))
    else:
        results = [_run_replicate(cfg, truth, r, d) for r, d in enumerate(dirs)]
    table = {}
    for res in results:
        for k, v in res.items():
            table.setdefault(k, []).append(v)
    write_aggregate(out / "aggregate.csv", table)


def cmd_gaussian_check(cfg: RunConfig) -> bool:
    from .experiments.checks import gaussian_check
    from .io import write_csv

    rows = gaussian_check(size=cfg.size or 8, n_draws=cfg.t_mc or 20000, seed=cfg.seed)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "gaussian_check.csv", ["sampler", "max_z_mean", "max_z_var", "passed"], rows)
    for name, zm, zv, ok in rows:
        log.info("%s: max|z| mean %.2f, variance %.2f -> %s", name, zm, zv, "ok" if ok else "FAIL")
    return all(r[3] for r in rows)


def cmd_admm(cfg: RunConfig) -> None:
    from .admm import AdmmConfig, admm_solve
    from .experiments import metrics as mt
    from .io import write_csv, write_image
    from .potentials import BlurLikelihood, CirculantGaussianTerm, TVTerm

    truth = _load_truth(cfg)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_config(cfg, out)
    default_rho = 2.0 if cfg.problem == "inpaint" else 20.0
    rho2 = (cfg.rho if cfg.rho is not None else default_rho) ** 2
    max_iters = cfg.t_mc or 300
    if cfg.problem == "inpaint":
        problem = _inpaint_problem(cfg, truth, 0)
        like = problem.likelihood()
        tv = TVTerm(problem.beta, problem.shape, mode_iters=cfg.prox_iters or 100)
        f_min, g_prox, x0 = like.mode, tv.mode, problem.filled()
        y_ref = problem.filled()
    else:
        problem = _deconv_problem(cfg, truth, 0)
        f = BlurLikelihood(problem.H, problem.omega, problem.y)
        g = CirculantGaussianTerm([(problem.gamma, problem.L)])
        f_min, g_prox, x0 = f.mode, g.mode, problem.H.adjoint(problem.y)
        y_ref = problem.y
    res = admm_solve(f_min, g_prox, AdmmConfig(rho2=rho2, max_iters=max_iters, tol_primal=1e-5,
                                               tol_dual=1e-5), x0)
    _write_residuals(out / "residuals.csv", res.residuals)
    metrics = {"iters": res.iters, "converged": int(res.converged), "rho": math.sqrt(rho2),
               "snr_x": mt.snr(truth, res.x), "psnr_x": mt.psnr(truth, res.x),
               "isnr_x": mt.isnr(truth, y_ref, res.x)}
    write_csv(out / "metrics.csv", ["name", "value"], sorted(metrics.items()))
    write_image(out / "map_x.pgm", res.x)
    write_image(out / "map_x.raw", res.x)


def _setup_logging():
    try:
        level = int(os.environ.get(VERBOSE_ENV, "0"))
    except ValueError:
        level = 0
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(message)s",
                        level={0: logging.WARNING, 1: logging.INFO}.get(level, logging.DEBUG))


def main(argv=None) -> int:
    _setup_logging()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        if cfg.command == "gaussian-check":
            return 0 if cmd_gaussian_check(cfg) else 2
        if cfg.command == "admm-solve":
            cmd_admm(cfg)
        else:
            cmd_sample(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SplitGibbsError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
