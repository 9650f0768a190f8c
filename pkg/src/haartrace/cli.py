"""Command-line interface: exact tables, cumulants, MC experiments, verification.

Every command emits a report with two sections: `meta` (full config echo,
package version, seed, wall clock) and `body` (the numeric payload).  Bodies
are deterministic given the seed and worker count; timestamps live only in
meta, so repeated runs with one seed produce byte-identical bodies.  Exact
rationals are serialized as "num/den" strings and never pass through floats.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import os
import random
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

from . import __version__
from . import combinatorics as comb
from . import cumulants as cm
from . import empirics as emp
from . import weingarten as wg
from .errors import SingularGramError, SizeLimitError


@dataclass
class RunConfig:
    command: str
    group: str = "unitary"
    n: int = 0
    k: int = 0
    r: int = 0
    dims: str = ""
    grid: str = ""
    s: float = 0.0
    t: float = 0.0
    replicas: int = 0
    bins: int = 40
    master_seed: int = 0
    workers: int = 1
    scope: str = "default"
    inject_error: bool = False
    output: str = ""
    format: str = "json"


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _bool_str(b: bool) -> str:
    return "true" if b else "false"


def _write_report(config: RunConfig, records: list[dict], started: float) -> str:
    meta = {
        "command": config.command,
        "config": {k: v for k, v in asdict(config).items() if k != "command"},
        "version": __version__,
        "master_seed": config.master_seed,
        "wallclock_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "duration_s": round(time.time() - started, 3),
    }
    if config.format == "json":
        text = json.dumps({"meta": meta, "body": {"records": records}}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        for key, val in meta.items():
            buf.write(f"# {key}={json.dumps(val, sort_keys=True)}\n")
        if records:
            fields = list(records[0].keys())
            for rec in records[1:]:
                for key in rec:
                    if key not in fields:
                        fields.append(key)
            writer = csv.DictWriter(buf, fieldnames=fields, restval="")
            writer.writeheader()
            writer.writerows(records)
        text = buf.getvalue()
    if config.output:
        with open(config.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _cycle_notation(cycle_type: tuple[int, ...]) -> str:
    out, nxt = [], 1
    for length in cycle_type:
        out.append("(" + "".join(str(nxt + i) for i in range(length)) + ")")
        nxt += length
    return "".join(out)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_weingarten(config: RunConfig) -> tuple[list[dict], int]:
    table = (wg.unitary_table if config.group == "unitary" else wg.orthogonal_table)(
        config.n, config.k)
    records = []
    for key in sorted(table.values, reverse=True):
        records.append({
            "group": config.group,
            "n": config.n,
            "k": config.k,
            "cycle_type": "+".join(map(str, key)),
            "representative": _cycle_notation(key),
            "value": _frac_str(table.values[key]),
        })
    return records, 0


def _parse_dims(config: RunConfig) -> cm.ProjectorFamily:
    if not config.dims:
        raise ValueError("cumulant command needs --dims like 'p:q,p:q,...'")
    pairs = []
    for chunk in config.dims.split(","):
        p, q = chunk.split(":")
        pairs.append((int(p), int(q)))
    return cm.ProjectorFamily(config.n, tuple(pairs))


def cmd_cumulant(config: RunConfig) -> tuple[list[dict], int]:
    family = _parse_dims(config)
    r = family.r
    req = cm.CumulantRequest(config.group, r, family)
    kappa = cm.trace_cumulant(req)
    dims = family.dims
    uniform = len(set(dims)) == 1
    comparator_kind = "moment-oracle"
    if r == 1:
        comparator, comparator_kind = Fraction(dims[0][0] * dims[0][1], config.n), "mean"
    elif r == 2 and config.group == "unitary":
        comparator = cm.covariance_closed(*dims[0], *dims[1], config.n)
        comparator_kind = "var0" if uniform else "cov1"
    elif r == 2 and config.group == "orthogonal" and uniform:
        comparator, comparator_kind = cm.variance_closed_orthogonal(*dims[0], config.n), "var-orth"
    else:
        comparator = cm.cumulant_via_moments(config.group, family)
    record = {
        "group": config.group,
        "n": config.n,
        "r": r,
        "dims": config.dims,
        "kappa": _frac_str(kappa),
        "kappa_float": float(kappa),
        "comparator_kind": comparator_kind,
        "comparator": _frac_str(comparator),
        "match": _bool_str(kappa == comparator),
    }
    return [record], 0


def _parse_grid(grid: str) -> list[float]:
    return [float(x) for x in grid.split(",") if x.strip()]


def cmd_simulate(config: RunConfig) -> tuple[list[dict], int]:
    if config.replicas < 100:
        raise emp.InsufficientReplicasError("simulate needs at least 100 replicas")
    axis = _parse_grid(config.grid)
    points = [(s, t) for s in axis for t in axis]
    values = emp.sample_process_values(
        config.group, config.n, points, config.replicas,
        config.master_seed, workers=config.workers)
    est, se = emp.covariance_mc(values)
    beta = 2 if config.group == "unitary" else 1
    records: list[dict] = []
    for a, (s1, t1) in enumerate(points):
        for b, (s2, t2) in enumerate(points):
            if b < a:
                continue
            p1, q1 = int(config.n * s1), int(config.n * t1)
            p2, q2 = int(config.n * s2), int(config.n * t2)
            if 0 in (p1, q1, p2, q2):
                exact = Fraction(0)  # an empty corner is identically zero
            elif config.group == "unitary":
                exact = cm.covariance_closed(p1, q1, p2, q2, config.n)
            else:
                fam = cm.ProjectorFamily(config.n, ((p1, q1), (p2, q2)))
                exact = cm.trace_cumulant_orthogonal(cm.CumulantRequest("orthogonal", 2, fam))
            limit = cm.limit_covariance(s1, t1, s2, t2, beta)
            records.append({
                "kind": "covariance",
                "s": s1, "t": t1, "s2": s2, "t2": t2,
                "estimate": float(est[a, b]),
                "se": float(se[a, b]),
                "exact": _frac_str(exact),
                "exact_float": float(exact),
                "limit": limit,
                "within_4se_of_exact": _bool_str(abs(est[a, b] - float(exact)) <= 4 * se[a, b]),
                "within_limit_policy": _bool_str(
                    abs(est[a, b] - limit) <= 0.01 + 4 * se[a, b]),
            })
    for a, (s1, t1) in enumerate(points):
        ks = emp.kstat_estimators(values[:, a])
        records.append({
            "kind": "kstats", "s": s1, "t": t1,
            "k2": ks.k2, "se2": ks.se2,
            "k3": ks.k3, "se3": ks.se3,
            "k4": ks.k4, "se4": ks.se4,
        })
    failed = any(r.get("within_4se_of_exact") == "false" for r in records)
    return records, 1 if failed else 0


def cmd_spectra(config: RunConfig) -> tuple[list[dict], int]:
    result = emp.spectral_compare(
        config.n, config.s, config.t, config.replicas, config.master_seed,
        group=config.group, bins=config.bins, workers=config.workers)
    records: list[dict] = [{
        "kind": "summary",
        "l1_distance": result.l1_distance,
        "mean_eigenvalue": result.mean_eigenvalue,
        "mean_se": result.mean_se,
        "expected_mean": config.t,
        "warnings": ";".join(result.warnings),
        "p": result.metadata["p"],
        "q": result.metadata["q"],
        "bins": config.bins,
    }]
    for lo, hi, e_mass, r_mass in zip(result.bin_edges[:-1], result.bin_edges[1:],
                                      result.empirical_mass, result.reference_mass):
        records.append({
            "kind": "bin", "lo": float(lo), "hi": float(hi),
            "empirical_mass": float(e_mass), "reference_mass": float(r_mass),
        })
    return records, 0


# ---------------------------------------------------------------------------
# Verification suite: exact identities only
# ---------------------------------------------------------------------------

def _clear_exact_caches() -> None:
    wg._unitary_inverse.cache_clear()
    wg._unitary_values.cache_clear()
    wg._orthogonal_inverse.cache_clear()
    wg._orthogonal_values.cache_clear()
    cm._cycle_set_cumulant.cache_clear()
    cm._unitary_coeffs.cache_clear()
    cm._orthogonal_coeffs.cache_clear()
    cm._block_moment.cache_clear()


def _check_mobius_inversion(kmax: int):
    count, failures = 0, []
    for k in range(1, kmax + 1):
        parts = comb.enumerate_partitions(k)
        for b in parts:
            below_b = [c for c in parts if comb.refines(c, b)]
            for a in below_b:
                total = sum(comb.mobius(c, b) for c in below_b if comb.refines(a, c))
                count += 1
                if total != (1 if a == b else 0):
                    failures.append(f"k={k} A={a} B={b} sum={total}")
    return count, failures


def _check_gram_inverse(group: str, orders: list[int], sizes: list[int]):
    count, failures = 0, []
    build = wg.unitary_gram_weingarten if group == "unitary" else wg.orthogonal_gram_weingarten
    for k in orders:
        for n in sizes:
            _, gram, inv = build(k, n)
            count += 1
            if not (gram @ inv).is_identity():
                failures.append(f"{group} k={k} n={n}")
    return count, failures


def _check_closed_weingarten(sizes: list[int]):
    count, failures = 0, []
    for n in sizes:
        checks = [
            (wg.weingarten_unitary(n, (1,)), Fraction(1, n), "unitary k=1"),
            (wg.weingarten_unitary(n, (1, 1)), Fraction(1, n * n - 1), "unitary id2"),
            (wg.weingarten_unitary(n, (2,)), Fraction(-1, n * (n * n - 1)), "unitary swap"),
            (wg.weingarten_orthogonal(n, (1,)), Fraction(1, n), "orthogonal k=1"),
            (wg.weingarten_orthogonal(n, (1, 1)),
             Fraction(n + 1, n * (n + 2) * (n - 1)), "orthogonal id2"),
            (wg.joint_moment_orthogonal((1, 1, 1, 1), (1, 1, 1, 1), n),
             Fraction(3, n * (n + 2)), "orthogonal O^4"),
            (wg.joint_moment_orthogonal((1, 1, 1, 1), (1, 2, 1, 2), n),
             Fraction(1, n * (n + 2)), "orthogonal O^2 O^2 same row"),
        ]
        for got, want, name in checks:
            count += 1
            if got != want:
                failures.append(f"{name} at n={n}: {got} != {want}")
    return count, failures


def _distinct_dim_samples(n: int, r: int, how_many: int, seed: int):
    rng = random.Random(seed)
    for _ in range(how_many):
        yield tuple((rng.randint(1, n), rng.randint(1, n)) for _ in range(r))


def _check_oracle_equivalence(group: str, rmax: int, sizes: list[int], samples: int):
    count, failures = 0, []
    for n in sizes:
        for r in range(1, rmax + 1):
            families = [tuple(((p, q),) * r) for p in range(1, n + 1) for q in range(1, n + 1)]
            if r >= 2:
                families.extend(_distinct_dim_samples(n, r, samples, seed=1000 * n + r))
            for dims in families:
                fam = cm.ProjectorFamily(n, dims)
                lhs = cm.trace_cumulant(cm.CumulantRequest(group, r, fam))
                rhs = cm.cumulant_via_moments(group, fam)
                count += 1
                if lhs != rhs:
                    failures.append(f"{group} n={n} r={r} dims={dims}: {lhs} != {rhs}")
    return count, failures


def _check_covariance_closed(sizes: list[int]):
    count, failures = 0, []
    for n in sizes:
        for p in range(1, n + 1):
            for q in range(1, n + 1):
                for p2 in range(1, n + 1):
                    for q2 in range(1, n + 1):
                        fam = cm.ProjectorFamily(n, ((p, q), (p2, q2)))
                        got = cm.trace_cumulant_unitary(cm.CumulantRequest("unitary", 2, fam))
                        count += 1
                        if got != cm.covariance_closed(p, q, p2, q2, n):
                            failures.append(f"n={n} ({p},{q},{p2},{q2})")
    return count, failures


def _check_variance_orthogonal(sizes: list[int]):
    count, failures = 0, []
    for n in sizes:
        for p in range(1, n + 1):
            for q in range(1, n + 1):
                fam = cm.ProjectorFamily.uniform(p, q, 2, n)
                got = cm.trace_cumulant_orthogonal(cm.CumulantRequest("orthogonal", 2, fam))
                count += 1
                if got != cm.variance_closed_orthogonal(p, q, n):
                    failures.append(f"n={n} ({p},{q})")
    return count, failures


def run_verification(scope: str = "default", inject_error: bool = False):
    """Run the exact-identity suite; returns (all_ok, result rows)."""
    _clear_exact_caches()
    try:
        if inject_error:
            # test mode: corrupt one memoized Weingarten value in place
            corrupted = wg._unitary_values(4, 2)
            corrupted[(1, 1)] += Fraction(1, 10**9)  # type: ignore[index]
        if scope == "quick":
            checks = [
                ("mobius-inversion", lambda: _check_mobius_inversion(4)),
                ("gram-inverse-unitary", lambda: _check_gram_inverse("unitary", [1, 2, 3], [4])),
                ("gram-inverse-orthogonal", lambda: _check_gram_inverse("orthogonal", [1, 2], [6])),
                ("weingarten-closed-forms", lambda: _check_closed_weingarten([4, 6])),
                ("oracle-equivalence-unitary",
                 lambda: _check_oracle_equivalence("unitary", 2, [4], samples=4)),
                ("oracle-equivalence-orthogonal",
                 lambda: _check_oracle_equivalence("orthogonal", 2, [4], samples=4)),
                ("covariance-closed-form", lambda: _check_covariance_closed([4])),
                ("variance-closed-form-orthogonal", lambda: _check_variance_orthogonal([4])),
            ]
        else:
            checks = [
                ("mobius-inversion", lambda: _check_mobius_inversion(5)),
                ("gram-inverse-unitary",
                 lambda: _check_gram_inverse("unitary", [1, 2, 3, 4], [4, 6, 8])),
                ("gram-inverse-orthogonal",
                 lambda: _check_gram_inverse("orthogonal", [1, 2, 3], [6, 8, 10])),
                ("weingarten-closed-forms", lambda: _check_closed_weingarten([4, 5, 6, 7, 8])),
                ("oracle-equivalence-unitary",
                 lambda: _check_oracle_equivalence("unitary", 4, [4, 5, 6], samples=6)),
                ("oracle-equivalence-orthogonal",
                 lambda: _check_oracle_equivalence("orthogonal", 3, [4, 5, 6], samples=6)),
                ("covariance-closed-form", lambda: _check_covariance_closed([4, 5, 6])),
                ("variance-closed-form-orthogonal", lambda: _check_variance_orthogonal([5, 6])),
            ]
        results = []
        for name, fn in checks:
            count, failures = fn()
            results.append({
                "identity": name,
                "checks": count,
                "failures": len(failures),
                "status": "pass" if not failures else "FAIL",
                "detail": failures[0] if failures else "",
            })
        return all(r["failures"] == 0 for r in results), results
    finally:
        _clear_exact_caches()


def cmd_verify(config: RunConfig) -> tuple[list[dict], int]:
    ok, results = run_verification(config.scope, config.inject_error)
    return results, 0 if ok else 1


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haartrace",
        description="Exact Weingarten/cumulant engine and Monte Carlo harness "
                    "for truncated Haar matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, seeded: bool = False) -> None:
        p.add_argument("--group", choices=["unitary", "orthogonal"], default="unitary")
        p.add_argument("--output", default="", help="output file (default stdout)")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        if seeded:
            p.add_argument("--master-seed", type=int, default=0)
            p.add_argument("--workers", type=int,
                           default=int(os.environ.get("HAARTRACE_WORKERS", "1")))

    p = sub.add_parser("weingarten", help="exact Weingarten table at (group, n, k)")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("cumulant", help="exact trace cumulant for a projector family")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--dims", required=True, help="corner dims per factor, e.g. '2:3,2:3'")

    p = sub.add_parser("simulate", help="MC covariance/cumulant run on a grid")
    common(p, seeded=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--replicas", type=int, required=True)
    p.add_argument("--grid", default="0.25,0.5,0.75",
                   help="comma-separated axis values; the grid is their square")

    p = sub.add_parser("spectra", help="corner-product spectrum vs the limit law")
    common(p, seeded=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--replicas", type=int, required=True)
    p.add_argument("--bins", type=int, default=40)

    p = sub.add_parser("verify", help="run the exact-identity verification suite")
    common(p)
    p.add_argument("--scope", choices=["quick", "default"], default="default")
    p.add_argument("--inject-error", action="store_true",
                   help="test mode: corrupt one table value and expect failure")
    return parser


_DISPATCH = {
    "weingarten": cmd_weingarten,
    "cumulant": cmd_cumulant,
    "simulate": cmd_simulate,
    "spectra": cmd_spectra,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    config = RunConfig(command=args.command)
    for key, val in vars(args).items():
        attr = key.replace("-", "_")
        if hasattr(config, attr):
            setattr(config, attr, val)
    started = time.time()
    try:
        records, code = _DISPATCH[args.command](config)
    except SingularGramError as exc:
        print(f"error: singular Gram matrix at (n={config.n}, k={config.k or config.r}): {exc}",
              file=sys.stderr)
        return 2
    except (ValueError, SizeLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_report(config, records, started)
    if args.command == "verify":
        for rec in records:
            print(f"{rec['status']:>4}  {rec['identity']} ({rec['checks']} checks)",
                  file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
