"""Command-line entry point: tabulate, verify, simulate, compare.

Parameters come from three layers: built-in defaults, an optional
``--config`` file of ``key = value`` lines, and command-line flags (flags win).
Every output file starts with '#' lines carrying the run manifest; numbers
are written with 17 significant digits, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import distributions as ds
from . import polymer_sim as ps
from .errors import KpzfError
from .scaling import theta_from_kappa

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DISTS = ("gue", "bbp", "cdrp-cdf", "cdrp-laplace", "semidiscrete-cdf")
MODELS = ("polymer", "ground-state", "gue")


class UsageError(Exception):
    pass


# --- manifest and file formats -------------------------------------------------------


@dataclass(frozen=True)
class RunManifest:
    command: str
    params: dict
    version: str = __version__
    created: float = field(default_factory=time.time, compare=False)

    def canonical(self) -> str:
        items = sorted((str(k), str(v)) for k, v in self.params.items())
        return json.dumps([SCHEMA_VERSION, self.command, items], separators=(",", ":"))

    @property
    def content_hash(self) -> str:
        """64-bit hex digest of the canonicalised parameters."""
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    @property
    def cache_key(self) -> str:
        return f"v{SCHEMA_VERSION}-{self.command}-{self.content_hash}"

    def header_lines(self) -> list[str]:
        # the timestamp is left out of files so identical runs give identical bytes
        lines = [f"# command = {self.command}", f"# version = {self.version}",
                 f"# schema = {SCHEMA_VERSION}", f"# hash = {self.content_hash}"]
        lines += [f"# {k} = {self.params[k]}" for k in sorted(self.params)]
        return lines

    def as_dict(self) -> dict:
        return {"command": self.command, "version": self.version, "schema": SCHEMA_VERSION,
                "hash": self.content_hash, "params": {k: str(v) for k, v in sorted(self.params.items())}}


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_table(manifest: RunManifest, columns: Sequence[str], rows, sep: str = ",", extra: Sequence[str] = ()) -> bytes:
    lines = manifest.header_lines() + [f"# {e}" for e in extra]
    lines.append(sep.join(columns) if sep == "," else "# " + " ".join(columns))
    lines += [sep.join(fmt(x) for x in row) for row in rows]
    return ("\n".join(lines) + "\n").encode()


def read_table(path: Path) -> tuple[dict, list[str], np.ndarray]:
    """Parse a file written by :func:`render_table`: (header map, column names, data)."""
    header, cols, rows = {}, [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            m = re.match(r"#\s*([^=]+?)\s*=\s*(.*)$", line)
            if m:
                header[m.group(1)] = m.group(2)
            continue
        if not line.strip():
            continue
        if not cols and not re.match(r"^[\s,]*[-+0-9.]", line):
            cols = [c.strip() for c in line.split(",")]
            continue
        rows.append([float(x) for x in re.split(r"[,\s]+", line.strip())])
    return header, cols, np.array(rows, float)


def read_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {path}")
    out = {}
    for n, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


# --- argument parsing ----------------------------------------------------------------


def parse_grid(spec: str) -> np.ndarray:
    try:
        r0, r1, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise UsageError(f"grid must be r0:r1:step, got {spec!r}") from None
    if not (step > 0 and r1 >= r0 and all(map(math.isfinite, (r0, r1, step)))):
        raise UsageError(f"invalid grid {spec!r}")
    n = (r1 - r0) / step
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise UsageError(f"grid step does not divide [{r0}, {r1}]")
    return np.round(r0 + step * np.arange(int(round(n)) + 1), 12)


def parse_floats(spec: str) -> tuple:
    if spec is None or str(spec).strip() == "":
        return ()
    try:
        return tuple(float(x) for x in str(spec).split(","))
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {spec!r}") from None


# (name, type, default, help) per command; defaults apply after the config file
OPTIONS = {
    "tabulate": [
        ("dist", str, "gue", f"one of {', '.join(DISTS)}"),
        ("grid", str, "-6:4:0.25", "r0:r1:step (S values for cdrp-laplace)"),
        ("spikes", str, "", "comma-separated spikes b (bbp, cdrp-*)"),
        ("T", float, 2.0, "CDRP time"),
        ("n", int, 8, "number of lines (semidiscrete-cdf)"),
        ("kappa", float, 1.0, "tau / N (semidiscrete-cdf)"),
        ("tol", float, 1e-8, "determinant tolerance"),
        ("mode", str, "", "evaluation mode passed to the distribution"),
        ("out", str, "", "output CSV (default: stdout)"),
        ("cache_dir", str, "", "cache directory (default $KPZF_CACHE or ./.cache)"),
    ],
    "verify": [
        ("suite", str, "all", "identities, reformulations, limits, montecarlo or all"),
        ("n", int, 0, "identities suite: run only the check for this N"),
    ],
    "simulate": [
        ("model", str, "polymer", f"one of {', '.join(MODELS)}"),
        ("n", int, 8, "number of lines / matrix size"),
        ("kappa", float, 1.0, "tau = kappa N unless --tau is given"),
        ("tau", float, 0.0, "time horizon (overrides kappa)"),
        ("samples", int, 1000, "number of samples"),
        ("seed", int, 0, "base seed"),
        ("threads", int, 1, "worker threads (results do not depend on it)"),
        ("mesh", int, 4096, "time steps M"),
        ("drifts", str, "", "comma-separated drifts a_1..a_N (default 0)"),
        ("scheme", str, "", "discretisation: split or lattice (polymer), bridge or lattice (ground state)"),
        ("out", str, "sim", "output prefix; writes PREFIX.json and PREFIX.csv"),
    ],
    "compare": [
        ("samples_file", str, "", "CSV written by simulate"),
        ("table", str, "", "CSV written by tabulate (default: evaluate F_GUE on the fly)"),
        ("log_u", str, "", "comma-separated log u values: compare Laplace transforms instead"),
        ("step", float, 0.1, "r spacing of the plot data"),
        ("out", str, "compare.dat", "plot data file"),
    ],
}


def _preprocess(argv: Sequence[str]) -> list[str]:
    # let values that start with '-' (grids, spikes) follow their flag
    out, it = [], list(argv)
    i = 0
    while i < len(it):
        tok = it[i]
        if tok.startswith("--") and "=" not in tok and i + 1 < len(it) and re.match(r"^-[\d.]", it[i + 1]):
            out.append(f"{tok}={it[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kpzf", description="Fredholm determinants and polymer Monte Carlo.")
    p.add_argument("--version", action="version", version=f"kpzf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", default=None, help="file of 'key = value' lines")
        for name, typ, default, help_ in opts:
            flag = "--" + name.replace("_", "-")
            sp.add_argument(flag, dest=name, type=typ, default=None, help=f"{help_} (default {default!r})")
        if cmd == "tabulate":
            sp.add_argument("--no-cache", action="store_true", help="always recompute")
        if cmd == "verify":
            sp.add_argument("--quick", action="store_true", help="reduced Monte Carlo sample counts")
    return p


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from the defaults."""
    cfg = read_config(args.config)
    known = {name: (typ, default) for name, typ, default, _ in OPTIONS[args.command]}
    unknown = set(cfg) - set(known) - {"no_cache", "quick"}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for name, (typ, default) in known.items():
        if getattr(args, name) is None:
            try:
                setattr(args, name, typ(cfg[name]) if name in cfg else default)
            except ValueError:
                raise UsageError(f"bad value for {name}: {cfg[name]!r}") from None
    for flag in ("no_cache", "quick"):
        if flag in cfg and hasattr(args, flag) and not getattr(args, flag):
            setattr(args, flag, cfg[flag].lower() in ("1", "true", "yes", "on"))
    return args


# --- commands ------------------------------------------------------------------------


def _cache_dir(args) -> Path:
    return Path(args.cache_dir or os.environ.get("KPZF_CACHE") or Path.cwd() / ".cache")


def _tabulate_values(args, grid: np.ndarray) -> tuple[list[str], list[tuple]]:
    b = parse_floats(args.spikes)
    tol = args.tol
    mode = args.mode or None
    if args.dist == "gue":
        f = lambda r: ds.f_gue(r, tol, mode or "real")  # noqa: E731
    elif args.dist == "bbp":
        f = lambda r: ds.f_bbp(r, b, tol, mode or "real")  # noqa: E731
    elif args.dist == "cdrp-cdf":
        f = lambda r: ds.cdrp_smoothed_cdf(args.T, r, b, tol, mode or "contour")  # noqa: E731
    elif args.dist == "cdrp-laplace":
        if np.any(grid <= 0):
            raise UsageError("cdrp-laplace grid lists S values and needs S > 0")
        rows = []
        for s in grid:
            v = ds.cdrp_laplace(args.T, s, b, tol, mode or "contour")
            rows.append((s, v.real, v.imag))
        return ["S", "re", "im"], rows
    elif args.dist == "semidiscrete-cdf":
        a = ds.spiked_drifts(args.n, args.kappa, b) if b else None
        f = lambda r: ds.semidiscrete_smoothed_cdf(args.n, args.kappa, a, r, tol)  # noqa: E731
    else:
        raise UsageError(f"unknown distribution {args.dist!r}; choose from {', '.join(DISTS)}")
    return ["r", "value"], [(r, f(r)) for r in grid]


def cmd_tabulate(args) -> int:
    if args.dist not in DISTS:
        raise UsageError(f"unknown distribution {args.dist!r}; choose from {', '.join(DISTS)}")
    grid = parse_grid(args.grid)
    params = {"dist": args.dist, "grid": args.grid, "tol": args.tol, "mode": args.mode}
    if args.dist in ("bbp", "cdrp-cdf", "cdrp-laplace", "semidiscrete-cdf"):
        params["spikes"] = args.spikes
    if args.dist.startswith("cdrp"):
        params["T"] = args.T
    if args.dist == "semidiscrete-cdf":
        params.update(n=args.n, kappa=args.kappa)
    manifest = RunManifest("tabulate", params)
    cache = _cache_dir(args) / f"{manifest.cache_key}.csv"
    if not args.no_cache and cache.is_file():
        data = cache.read_bytes()
        print(f"cache hit: {cache}", file=sys.stderr)
    else:
        cols, rows = _tabulate_values(args, grid)
        data = render_table(manifest, cols, rows)
        if not args.no_cache:
            atomic_write(cache, data)
    if args.out:
        atomic_write(Path(args.out), data)
        print(f"wrote {args.out} ({len(grid)} rows)", file=sys.stderr)
    else:
        sys.stdout.write(data.decode())
    return EXIT_OK


def cmd_verify(args, stream=None) -> int:
    from . import acceptance as acc

    stream = stream or sys.stdout
    if args.suite not in acc.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(acc.SUITES)}")
    checks = list(acc.SUITES[args.suite])
    kwargs = {}
    if args.n:
        if args.suite != "identities":
            raise UsageError("--n applies to the identities suite only")
        if args.n == 1:
            checks = [acc.ac1]
        elif args.n >= 2:
            checks = [lambda quick: acc.ac2(quick, Ns=(args.n,))]
        else:
            raise UsageError("--n must be >= 1")
    if args.quick:
        print("# quick mode: Monte Carlo sample counts reduced (AC-2 2e4, AC-8 1e3, AC-9 2e3)", file=stream)
    failed = 0
    for check in checks:
        t0 = time.perf_counter()
        res = check(quick=args.quick, **kwargs)
        failed += not res.passed
        print(f"{res.line()} ({time.perf_counter() - t0:.1f}s)", file=stream, flush=True)
    print(f"# {len(checks) - failed}/{len(checks)} passed", file=stream)
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_simulate(args) -> int:
    if args.model not in MODELS:
        raise UsageError(f"unknown model {args.model!r}; choose from {', '.join(MODELS)}")
    tau = args.tau if args.tau > 0 else args.kappa * args.n
    drifts = parse_floats(args.drifts)
    schemes = {}
    if args.scheme:
        schemes["ground_scheme" if args.model == "ground-state" else "polymer_scheme"] = args.scheme
    try:
        cfg = ps.SimConfig(N=args.n, tau=tau, a=drifts, M=args.mesh, samples=args.samples,
                           seed=args.seed, threads=args.threads, **schemes)
    except KpzfError as e:
        raise UsageError(str(e)) from None
    res = ps.simulate(cfg, args.model)
    # thread count is a performance knob and does not enter the manifest
    params = {"model": args.model, "n": args.n, "tau": fmt(tau), "samples": args.samples, "seed": args.seed,
              "mesh": args.mesh, "drifts": ",".join(fmt(x) for x in cfg.a),
              "scheme": cfg.ground_scheme if args.model == "ground-state" else cfg.polymer_scheme}
    if args.model == "gue":
        params.pop("scheme")
    if args.tau <= 0:
        params["kappa"] = fmt(args.kappa)
    manifest = RunManifest("simulate", params)
    summary = res.summary()
    summary.pop("elapsed")
    summary["config"].pop("threads")
    summary["config"]["a"] = list(summary["config"]["a"])
    body = {"manifest": manifest.as_dict(), "summary": summary}
    prefix = Path(args.out)
    atomic_write(prefix.with_name(prefix.name + ".json"), (json.dumps(body, indent=2, sort_keys=True) + "\n").encode())
    atomic_write(prefix.with_name(prefix.name + ".csv"), render_table(manifest, ["value"], [(v,) for v in res.values]))
    print(f"{args.model}: {cfg.samples} samples in {res.elapsed:.1f}s, mean {res.mean:.6g} +- {res.std_error:.2g}",
          file=sys.stderr)
    return EXIT_OK


def _load(path: str, what: str):
    if not path:
        raise UsageError(f"--{what} is required")
    if not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")
    return read_table(Path(path))


def _rescale(header: dict, values: np.ndarray) -> tuple[np.ndarray, str]:
    """Map samples onto the Tracy-Widom scale; returns (x, description)."""
    model = header.get("model")
    N = int(header["n"])
    tau = float(header["tau"])
    if model == "polymer":
        if "kappa" not in header:
            raise UsageError("polymer samples need tau = kappa N to be rescaled")
        kappa = float(header["kappa"])
        sc = theta_from_kappa(kappa)
        return ps.rescaled_free_energy(values, sc, N), f"(log Z - N f)/(c N^(1/3)), kappa={kappa:g}"
    if model in ("ground-state", "gue"):
        # M^N(tau) has the law of sqrt(tau) lambda_max, lambda_max ~ 2 sqrt(N) + N^(-1/6) TW
        s = math.sqrt(tau) if model == "ground-state" else 1.0
        return (values / s - 2 * math.sqrt(N)) * N ** (1 / 6), "(lambda - 2 sqrt(N)) N^(1/6)"
    raise UsageError(f"samples file has unknown model {model!r}")


def cmd_compare(args) -> int:
    header, _, data = _load(args.samples_file, "samples-file")
    if header.get("command") != "simulate" or data.ndim != 2 or data.shape[1] != 1:
        raise UsageError(f"{args.samples_file} is not a simulate output")
    values = data[:, 0]
    manifest = RunManifest("compare", {"samples_file": Path(args.samples_file).name, "samples_hash": header.get("hash"),
                                       "table": Path(args.table).name if args.table else "", "log_u": args.log_u})
    if args.log_u:
        if header.get("model") != "polymer":
            raise UsageError("Laplace comparison needs polymer samples")
        N, tau = int(header["n"]), float(header["tau"])
        drifts = parse_floats(header.get("drifts", "")) or None
        rows = []
        for lu in parse_floats(args.log_u):
            est, se = ps.empirical_laplace(values, lu)
            exact = ds.semidiscrete_laplace(N, tau, drifts, lu).real
            z = (est - exact) / se if se > 0 else math.inf
            rows.append((lu, est, se, exact, z))
            print(f"log_u={lu:g}: empirical {est:.6f} +- {se:.2g}, exact {exact:.8f}, z={z:+.2f}")
        atomic_write(Path(args.out), render_table(manifest, ["log_u", "empirical", "std_error", "exact", "z"], rows, sep=" "))
        return EXIT_OK
    x, scale = _rescale(header, values)
    if args.table:
        th, cols, tab = _load(args.table, "table")
        if th.get("dist") not in ("gue", "bbp", "semidiscrete-cdf"):
            raise UsageError(f"table of {th.get('dist')!r} is not on the Tracy-Widom scale")
        ref = ds.CdfTable(tab[:, 0], tab[:, 1], th)
    else:
        lo, hi = max(math.floor(x.min()) - 1, -8), min(math.ceil(x.max()) + 1, 6)
        ref = ds.tabulate(ds.f_gue, np.arange(lo, hi + 0.025, 0.05), dist="gue")
    ks = ps.ks_statistic(x, ref)
    xs = np.sort(x)
    k0 = math.floor(xs[0] / args.step)
    grid = np.round((k0 + np.arange(int(math.ceil(xs[-1] / args.step)) - k0 + 2)) * args.step, 12)
    emp = np.searchsorted(xs, grid, side="right") / len(xs)
    rows = list(zip(grid, emp, ref(grid)))
    extra = [f"scaling = {scale}", f"ks = {fmt(ks)}", f"samples = {len(xs)}"]
    atomic_write(Path(args.out), render_table(manifest, ["r", "empirical", "exact"], rows, sep=" ", extra=extra))
    print(f"KS statistic {ks:.4f} over {len(xs)} samples (1% critical value {ps.ks_critical_one_sample(len(xs)):.4f})")
    return EXIT_OK


COMMANDS = {"tabulate": cmd_tabulate, "verify": cmd_verify, "simulate": cmd_simulate, "compare": cmd_compare}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = _preprocess(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](resolve(args))
    except UsageError as e:
        print(f"kpzf {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except KpzfError as e:
        print(f"kpzf {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
