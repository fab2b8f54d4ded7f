"""Command-line front end: ``gibbslines <command> [--config PATH] ...``.

Every run writes its artifacts plus ``manifest.json`` into ``--out``.
Replica ``i`` draws from ``SeedSequence(master_seed, spawn_key=(i,))`` and
results are merged in replica order, so the worker count never changes the
output bytes.  Exit codes: 0 success, 1 failed test verdict, 2 usage or
config error, 3 infeasible data.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .avoid import AvoidanceSpec, avoids, coupled_sample, draw_free, sample_avoiding
from .bridge import BridgeSpec, sample_bridges
from .brownian import high_curves_bound, max_abs_tail, max_tail, separation_bound
from .config import COMMAND_CONFIGS, config_dict, load_config, parse_override, set_dotted
from .errors import AcceptanceTooSmallError, ConfigError, DomainError, GibbsLinesError, InfeasibleError
from .hamiltonian import Hamiltonian, hamiltonian_from_dict, parse_hamiltonian
from .io import (read_json, sha256_file, write_ensembles_csv, write_json, write_paths_csv,
                 write_table_csv)
from .scaling import ScalingParams, parabola_diagnostic
from .stats import binomial_ci
from .stattest import GibbsTestConfig, convergence_test, gibbs_resampling_test

SEED_ENV = "GIBBSLINES_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gibbslines", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gibbslines {__version__}")
    p.add_argument("command", choices=sorted(COMMAND_CONFIGS))
    p.add_argument("--config", type=Path, help="JSON config or a manifest.json to rerun")
    p.add_argument("--seed", type=int, help="64-bit master seed")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field by dotted path (repeatable)")
    return p


def replica_seed(master: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(index,))


def seed_schedule(master: int, n: int) -> list[int]:
    return [int(replica_seed(master, i).generate_state(1, np.uint64)[0]) for i in range(n)]


def _split(total: int, parts: int, index: int) -> int:
    return total // parts + (1 if index < total % parts else 0)


def _hamiltonian(spec) -> Hamiltonian:
    if isinstance(spec, dict):
        return hamiltonian_from_dict(spec)
    return parse_hamiltonian(spec)


def _avoid_spec(d: dict) -> AvoidanceSpec:
    try:
        return AvoidanceSpec.from_dict(d)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed ensemble spec: {exc!r}") from None


# replica workers: module-level so they pickle into worker processes

def _replica(command: str, cfg_dict: dict, master: int, index: int):
    cfg = load_config(command, cfg_dict)
    rng = np.random.default_rng(replica_seed(master, index))
    h = _hamiltonian(cfg.hamiltonian)
    n_rep = cfg.replicas
    if command == "sample-bridge":
        spec = BridgeSpec(cfg.t0, cfg.t1, cfg.z0, cfg.z1)
        spec.check(h)
        return sample_bridges(h, spec.n, spec.z0, spec.z1, rng, _split(cfg.n_paths, n_rep, index))
    if command == "sample-ensemble":
        spec = _avoid_spec(cfg.spec)
        return sample_avoiding(h, spec, _split(cfg.n_samples, n_rep, index), rng, method=cfg.method,
                               burn_in=cfg.burn_in, thin=cfg.thin)
    if command == "acceptance":
        spec = _avoid_spec(cfg.spec)
        spec.check_bridges(h)
        n = _split(cfg.n_samples, n_rep, index)
        hits, done = 0, 0
        while done < n:
            size = min(n - done, 100_000)
            hits += int(avoids(draw_free(h, spec, rng, size), spec).sum())
            done += size
        return hits, n
    if command == "couple":
        res = coupled_sample(h, _avoid_spec(cfg.low), _avoid_spec(cfg.high), cfg.n_steps, rng,
                             record_every=cfg.record_every)
        return res.to_dict()
    if command == "diagnose-parabola":
        spec = _avoid_spec(cfg.spec)
        params = _scaling(cfg.scaling)
        n = _split(cfg.n_samples, n_rep, index)
        cols = [params.lattice(v) - spec.t0 for v in cfg.n_values]
        if n == 0:
            return np.empty((0, spec.k, len(cols)), dtype=np.int64)
        return sample_avoiding(h, spec, n, rng, method=cfg.method, columns=cols)
    raise ConfigError(f"command {command!r} has no replica stage")


def _scaling(d: dict) -> ScalingParams:
    try:
        return ScalingParams(d["gamma"], d["p"], d["lambda"], d["theta"], int(d["N"]), d["psi"])
    except KeyError as exc:
        raise ConfigError(f"scaling config misses {exc.args[0]!r}") from None


def _run_replicas(command, cfg, master, workers):
    cfg_dict = config_dict(cfg)
    n = cfg.replicas
    if n < 1:
        raise ConfigError("replicas must be positive")
    args = [(command, cfg_dict, master, i) for i in range(n)]
    if workers <= 1:
        return [_replica(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_replica, *a) for a in args]
        return [f.result() for f in futures]


def _write_table(out: Path, stem: str, rows, fmt: str, columns=None) -> Path:
    if fmt == "json":
        return write_json(out / f"{stem}.json", rows)
    return write_table_csv(out / f"{stem}.csv", rows, columns)


def execute(command: str, cfg, master: int, out: Path, workers: int, fmt: str):
    """Run one pipeline; returns ``(exit_code, written_paths)``."""
    out.mkdir(parents=True, exist_ok=True)
    written = []
    code = EXIT_OK
    if command == "sample-bridge":
        paths = np.concatenate(_run_replicas(command, cfg, master, workers))
        if fmt == "json":
            written.append(write_json(out / "paths.json", {"t0": cfg.t0, "paths": paths}))
        else:
            written.append(write_paths_csv(out / "paths.csv", paths, cfg.t0))
    elif command == "sample-ensemble":
        samples = np.concatenate(_run_replicas(command, cfg, master, workers))
        t0 = _avoid_spec(cfg.spec).t0
        if fmt == "json":
            written.append(write_json(out / "ensembles.json", {"t0": t0, "samples": samples}))
        else:
            written.append(write_ensembles_csv(out / "ensembles.csv", samples, t0))
    elif command == "acceptance":
        parts = _run_replicas(command, cfg, master, workers)
        hits = sum(p[0] for p in parts)
        n = sum(p[1] for p in parts)
        lo, hi = binomial_ci(hits, n, cfg.level)
        written.append(write_json(out / "acceptance.json",
                                  {"z_hat": hits / n, "ci_low": lo, "ci_high": hi, "n": n, "hits": hits}))
    elif command == "couple":
        parts = _run_replicas(command, cfg, master, workers)
        violations = sum(p["violations"] for p in parts)
        written.append(write_json(out / "coupling.json",
                                  {"replicas": parts, "violations": violations, "ordered": violations == 0}))
        code = EXIT_OK if violations == 0 else EXIT_FAIL
    elif command == "bounds":
        rows = []
        for C in cfg.C:
            rows.append({"C": C, "sigma2": cfg.sigma2, "k": cfg.k,
                         "max_tail": max_tail(cfg.sigma2, C),
                         "max_abs_tail": max_abs_tail(cfg.sigma2, C),
                         "separation_bound": separation_bound(C, cfg.sigma2, cfg.k, cfg.mode)})
        written.append(_write_table(out, "bounds", rows, fmt))
        written.append(write_json(out / "high_curves.json", {
            "k": cfg.k, "sigma": cfg.sigma2 ** 0.5, "M": cfg.M, "M1": cfg.M1,
            "bound": high_curves_bound(cfg.k, cfg.sigma2 ** 0.5, cfg.M, cfg.M1)}))
    elif command == "gibbs-test":
        h = _hamiltonian(cfg.hamiltonian)
        gcfg = GibbsTestConfig(_avoid_spec(cfg.spec), tuple(cfg.window), tuple(cfg.curves),
                               cfg.statistic, cfg.n_samples, cfg.level, cfg.method,
                               cfg.interior_sampler)
        rep = gibbs_resampling_test(h, gcfg, np.random.default_rng(replica_seed(master, 0)))
        written.append(write_json(out / "gibbs_test.json", rep))
        code = EXIT_OK if rep.passed else EXIT_FAIL
    elif command == "converge-test":
        h = _hamiltonian(cfg.hamiltonian)
        res = convergence_test(h, cfg.p, cfg.k, cfg.x, cfg.y, cfg.T_list, cfg.t, cfg.n_samples,
                               np.random.default_rng(replica_seed(master, 0)), cfg.level,
                               sigma=cfg.sigma, curve=cfg.curve, reference=cfg.reference,
                               matched=cfg.matched, n_reference=cfg.n_reference,
                               reference_m=cfg.reference_m)
        written.append(write_json(out / "converge_test.json", res))
        rows = [{"T": T, "distance": d, "statistic": r.statistic, "p_value": r.p_value,
                 "verdict": r.verdict} for T, d, r in zip(res.T_list, res.distances, res.reports)]
        written.append(_write_table(out, "converge_summary", rows, fmt))
        code = EXIT_OK if res.passed else EXIT_FAIL
    elif command == "diagnose-parabola":
        params = _scaling(cfg.scaling)
        cols = np.concatenate(_run_replicas(command, cfg, master, workers))
        samples = {v: cols[:, 0, j] for j, v in enumerate(cfg.n_values)}
        rows = parabola_diagnostic(samples, params, cfg.phi, cfg.level)
        written.append(_write_table(out, "parabola", rows, fmt,
                                    ["n", "estimate", "ci_low", "ci_high", "n_samples"]))
    else:
        raise ConfigError(f"unknown command {command!r}")
    return code, written


def _load_document(path: Path | None):
    if path is None:
        return {}, None
    try:
        doc = read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if isinstance(doc, dict) and "config" in doc and "master_seed" in doc:
        return doc["config"], doc
    return doc, None


def _resolve_seed(args, data: dict, manifest) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            seed = int(env, 0)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None
    elif args.seed is not None:
        seed = args.seed
    elif manifest is not None:
        seed = int(manifest["master_seed"])
    else:
        seed = 0
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed {seed} is not an unsigned 64-bit integer")
    return seed


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        data, manifest = _load_document(args.config)
        if manifest is not None and manifest.get("command") not in (None, args.command):
            raise ConfigError(f"manifest was written by {manifest['command']!r}, not {args.command!r}")
        data = json.loads(json.dumps(data))
        for text in args.overrides:
            set_dotted(data, *parse_override(text))
        cfg = load_config(args.command, data)
        if args.workers < 1:
            raise ConfigError("--workers must be positive")
        master = _resolve_seed(args, data, manifest)
        code, written = execute(args.command, cfg, master, args.out, args.workers, args.format)
        replicas = getattr(cfg, "replicas", 1)
        manifest_out = {
            "command": args.command,
            "config": config_dict(cfg),
            "master_seed": master,
            "seed_schedule": seed_schedule(master, replicas),
            "version": __version__,
            "outputs": {p.name: sha256_file(p) for p in written},
            "workers": args.workers,
            "format": args.format,
            "duration_seconds": round(time.perf_counter() - started, 3),
        }
        write_json(args.out / "manifest.json", manifest_out)
        return code
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_USAGE)
    except (InfeasibleError, AcceptanceTooSmallError) as exc:
        return _fail("infeasible", str(exc), EXIT_INFEASIBLE)
    except DomainError as exc:
        return _fail("domain", str(exc), EXIT_USAGE)
    except GibbsLinesError as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_FAIL)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
