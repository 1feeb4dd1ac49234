"""Command-line entry point: ``qasp-truss {equilibrium,optimize,bench,serve}``.

Exit codes: 0 success, 2 bad input, 3 solver failure (including an
under-constrained structure), 4 remote sampler failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .io import (
    BENCHMARK_CASES,
    InputError,
    RunConfig,
    SamplerChoice,
    design_to_dict,
    load_benchmark,
    load_model,
    load_run_config,
    write_csv,
    write_json,
)
from .optimizer import equilibrium_problem, optimize
from .qasp import run_qasp
from .samplers import RemoteSamplerError, SamplerConfig, make_sampler
from .samplers.local import TooManyBitsError
from .truss import DesignVector, TrussError, TrussSystem, UnderConstrainedError, potential_energy

ENDPOINT_ENV = "QASP_TRUSS_ENDPOINT"
EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_REMOTE = 0, 2, 3, 4

log = logging.getLogger("qasp_truss")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qasp-truss", description="Annealing-assisted truss equilibrium and sizing.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        if model:
            src = sp.add_mutually_exclusive_group(required=True)
            src.add_argument("--model", type=Path, help="truss model JSON/YAML file")
            src.add_argument("--case", choices=BENCHMARK_CASES, help="bundled benchmark")
        sp.add_argument("--config", type=Path, help="run configuration (YAML or JSON)")
        sp.add_argument("--sampler", choices=("exhaustive", "sa", "remote"))
        sp.add_argument("--endpoint", help=f"remote sampler URL (default: ${ENDPOINT_ENV})")
        sp.add_argument("--num-reads", type=int)
        sp.add_argument("--sa-sweeps", type=int)
        sp.add_argument("--seed", type=int, action="append", help="repeatable")
        sp.add_argument("--out", type=Path, help="output directory")

    eq = sub.add_parser("equilibrium", help="solve K(alpha) U = F by QA-SP")
    common(eq)
    eq.add_argument("--alpha", type=float, help="uniform area ratio (default: model's initial ratio or 1)")

    opt = sub.add_parser("optimize", help="minimise compliance at fixed volume")
    common(opt)
    opt.add_argument("--alpha0", type=float, help="uniform initial area ratio")
    opt.add_argument("--max-outer", type=int)

    bench = sub.add_parser("bench", help="run the bundled benchmarks and print a summary table")
    common(bench, model=False)
    bench.add_argument("--cases", nargs="+", choices=BENCHMARK_CASES, default=list(BENCHMARK_CASES))
    bench.add_argument("--max-outer", type=int)

    srv = sub.add_parser("serve", help="run a local sampler server speaking the HTTP protocol")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8765)
    srv.add_argument("--backend", choices=("sa", "exhaustive"), default="sa")
    srv.add_argument("--sa-sweeps", type=int, default=1000)
    return p


# -- configuration precedence: flags > config file > environment -----------

def _resolve(args) -> RunConfig:
    rc = load_run_config(args.config)
    choice = rc.sampler
    backend = args.sampler or choice.backend
    endpoint = args.endpoint or choice.endpoint or os.environ.get(ENDPOINT_ENV)
    cfg = choice.config
    if args.num_reads is not None or args.sa_sweeps is not None:
        cfg = SamplerConfig(
            num_reads=args.num_reads if args.num_reads is not None else cfg.num_reads,
            sa_sweeps=args.sa_sweeps if args.sa_sweeps is not None else cfg.sa_sweeps,
            timeout=cfg.timeout,
            retries=cfg.retries,
        )
    if backend == "remote" and not endpoint:
        raise InputError(f"remote sampler needs --endpoint, sampler.endpoint or ${ENDPOINT_ENV}")
    rc.sampler = SamplerChoice(backend, endpoint, cfg)
    if rc.design_sampler is not None and rc.design_sampler.backend == "remote" and not rc.design_sampler.endpoint:
        rc.design_sampler.endpoint = endpoint
    if args.seed:
        rc.seeds = list(args.seed)
    if args.out is not None:
        rc.out = str(args.out)
    if getattr(args, "max_outer", None) is not None:
        from dataclasses import replace

        rc.opt = replace(rc.opt, max_outer=args.max_outer)
    return rc


def _sampler(choice: SamplerChoice | None):
    if choice is None:
        return None
    return make_sampler(choice.backend, choice.config, choice.endpoint)


def _load(args):
    if args.case:
        return load_benchmark(args.case)
    return load_model(args.model)


def _outdir(rc: RunConfig, default: str) -> Path:
    out = Path(rc.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _initial_alpha(explicit, rc: RunConfig, meta: dict, n: int, fallback: float):
    if explicit is not None:
        value = explicit
    elif rc.alpha0 is not None:
        value = rc.alpha0
    else:
        value = meta.get("initial_alpha", fallback)
    try:
        alpha = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
        DesignVector(alpha, rc.opt.alpha_min, rc.opt.alpha_max)
    except ValueError as exc:
        raise InputError(f"initial area ratio: {exc}") from exc
    return alpha


# -- subcommands ------------------------------------------------------------

def cmd_equilibrium(args) -> int:
    rc = _resolve(args)
    model, meta = _load(args)
    system = TrussSystem(model)
    alpha = _initial_alpha(args.alpha, rc, meta, model.n_bars, 1.0)
    design = DesignVector(alpha, rc.opt.alpha_min, rc.opt.alpha_max)
    u_exact = system.solve(design.alpha)
    psi_exact = potential_energy(system.units, design.alpha, u_exact, system.f)
    sampler = _sampler(rc.sampler)
    seed = rc.seeds[0]

    rows = []
    problem = equilibrium_problem(system.units, design.alpha, system.f)
    scale = abs(psi_exact) if psi_exact else 1.0

    def record(info):
        psi = info["f_try"] if info["accepted"] else info["f"]
        rows.append([info["index"], psi, abs(psi - psi_exact) / scale,
                     float(np.linalg.norm(info["spec"].epsilon)), int(info["accepted"])])

    run = run_qasp(problem, rc.opt.equilibrium_qasp, sampler, np.zeros(system.dofs.n_free), seed=seed,
                   callback=record)
    u = run.x_final
    rel = abs(run.f_final - psi_exact) / scale
    out = _outdir(rc, "out_equilibrium")
    write_csv(out / "equilibrium_trace.csv", ["iter", "psi", "rel_error_vs_direct", "epsilon", "accepted"], rows)
    full = system.dofs.expand(u).reshape(-1, model.dimension)
    write_json(out / "displacements.json", {
        "model": model.name,
        "alpha": design.alpha.tolist(),
        "displacements": full.tolist(),
        "psi": run.f_final,
        "psi_direct": psi_exact,
        "rel_error_vs_direct": rel,
        "compliance": float(system.f @ u),
        "iterations": len(run.iterations),
        "stop_reason": run.stop_reason,
        "seed": seed,
    })
    print(f"{model.name or 'model'}: psi={run.f_final:.10g} direct={psi_exact:.10g} rel_error={rel:.3e} "
          f"iterations={len(run.iterations)} ({run.stop_reason})")
    return EXIT_OK


def _optimize_one(system, meta, rc: RunConfig, alpha_explicit, seed):
    alpha0 = _initial_alpha(alpha_explicit, rc, meta, system.model.n_bars, 0.5)
    return optimize(system, rc.opt, _sampler(rc.sampler), alpha0, seed=seed,
                    design_sampler=_sampler(rc.design_sampler))


def cmd_optimize(args) -> int:
    rc = _resolve(args)
    model, meta = _load(args)
    system = TrussSystem(model)
    out = _outdir(rc, "out_optimize")
    summaries = []
    for seed in rc.seeds:
        t0 = time.perf_counter()
        res = _optimize_one(system, meta, rc, args.alpha0, seed)
        elapsed = time.perf_counter() - t0
        sub = out if len(rc.seeds) == 1 else out / f"seed_{seed}"
        sub.mkdir(parents=True, exist_ok=True)
        write_csv(sub / "optimize_trace.csv", ["iter", "compliance", "volume_ratio", "accepted"],
                  [[r.k, r.compliance, r.volume_ratio, int(r.accepted)] for r in res.trace])
        write_json(sub / "design_final.json", design_to_dict(model, res.design.alpha))
        summary = {
            "model": model.name,
            "seed": seed,
            "compliance": res.compliance,
            "volume_ratio": res.volume_ratio,
            "v_target": res.v_target,
            "outer_iterations": len(res.trace),
            "stop_reason": res.stop_reason,
            "seconds": round(elapsed, 3),
        }
        write_json(sub / "summary.json", summary)
        summaries.append(summary)
        print(f"{model.name or 'model'} seed={seed}: C={res.compliance:.6g} V/Vt={res.volume_ratio:.5f} "
              f"outer={len(res.trace)} ({res.stop_reason})")
    if len(rc.seeds) > 1:
        write_json(out / "summary.json", {"runs": summaries, "seeds": rc.seeds})
    return EXIT_OK


def cmd_bench(args) -> int:
    rc = _resolve(args)
    out = Path(rc.out) if rc.out else None
    header = f"{'case':<8}{'bars':>5}{'C':>12}{'V/Vt':>10}{'outer':>7}{'time[s]':>9}  reference areas max|diff|"
    print(header)
    print("-" * len(header))
    rows = []
    for case in args.cases:
        model, meta = load_benchmark(case)
        system = TrussSystem(model)
        t0 = time.perf_counter()
        res = _optimize_one(system, meta, rc, None, rc.seeds[0])
        elapsed = time.perf_counter() - t0
        ref = meta.get("reference_area")
        diff = float(np.abs(res.design.alpha * model.bars[0].area0 - np.asarray(ref)).max()) if ref else float("nan")
        rows.append([case, model.n_bars, res.compliance, res.volume_ratio, len(res.trace), elapsed, diff])
        print(f"{case:<8}{model.n_bars:>5}{res.compliance:>12.5g}{res.volume_ratio:>10.5f}"
              f"{len(res.trace):>7}{elapsed:>9.1f}  {diff:.4f}")
    if out:
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "bench.csv", ["case", "bars", "compliance", "volume_ratio", "outer", "seconds",
                                      "max_area_diff"], rows)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .samplers import make_server

    server = make_server(args.host, args.port, backend=args.backend, sa_sweeps=args.sa_sweeps)
    host, port = server.server_address[:2]
    print(f"sampler listening on http://{host}:{port}/v1/sample ({args.backend})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


COMMANDS = {"equilibrium": cmd_equilibrium, "optimize": cmd_optimize, "bench": cmd_bench, "serve": cmd_serve}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RemoteSamplerError as exc:
        print(f"error: remote sampler: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except UnderConstrainedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (TrussError, TooManyBitsError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
