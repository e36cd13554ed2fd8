"""Batch driver: build constructions, measure families, run oracles, verify.

Subcommands: construct, measure, enumerate, verify, report.  Every run writes
deterministic JSON/CSV artifacts (sorted keys, no timestamps) so identical
configs and seeds produce byte-identical outputs.

Exit codes: 0 success, 2 config error, 3 precision failure, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import mpmath

from . import constructions as cons
from . import estimation as est
from . import lattice, series
from .angles import PrecisionContext, PrecisionError

EXIT_CONFIG = 2
EXIT_PRECISION = 3
EXIT_VERIFY = 4


class ConfigError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    text = p.read_text()
    if p.suffix == ".json":
        return json.loads(text)
    try:
        import tomllib
    except ImportError:  # 3.10
        import tomli as tomllib
    try:
        return tomllib.loads(text)
    except Exception as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def _parse_betas(text: str) -> list[Fraction]:
    return [series.parse_rational(tok) for tok in str(text).split(",") if tok != ""]


def _parse_beta_table(text: str) -> list[list[Fraction]]:
    return [_parse_betas(row) for row in str(text).split(";") if row != ""]


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _resolved(args, keys) -> dict:
    cfg = dict(_load_config(args.config))
    for key in keys:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    return cfg


def build_construction(cfg: dict):
    variant = str(cfg.get("variant", "")).lower()
    theta = int(cfg.get("theta", 5))
    seed = int(cfg.get("seed", 0))
    mode = str(cfg.get("mode", "theorem"))
    if variant in ("ch5", "line"):
        betas = [series.parse_rational(b) for b in _as_list(cfg["betas"])]
        schedule = series.BetaSchedule(tuple(betas))
        return cons.build_line(int(cfg["n"]), theta, schedule, seed)
    if variant in ("ch6", "first-angle"):
        betas = [series.parse_rational(b) for b in _as_list(cfg["betas"])]
        return cons.build_first_angle(
            int(cfg["n"]), int(cfg["d"]), series.BetaSchedule(tuple(betas)), seed
        )
    if variant in ("ch7", "block-sum"):
        table = cfg["beta_table"]
        if isinstance(table, str):
            table = _parse_beta_table(table)
        else:
            table = [[series.parse_rational(b) for b in row] for row in table]
        return cons.build_sum(
            int(cfg["d"]), int(cfg["m"]), theta, table, seed, mode=mode,
            c2=series.parse_rational(cfg["c2"]) if "c2" in cfg else None,
        )
    if variant in ("ch8", "last-angle"):
        return cons.build_last_angle(
            int(cfg["d"]), int(cfg["q"]), theta,
            series.parse_rational(cfg["alpha"]), seed, mode=mode,
        )
    raise ConfigError(f"unknown variant {variant!r}")


def _as_list(val):
    if isinstance(val, str):
        return [tok for tok in val.split(",") if tok]
    return list(val)


def _descriptor(cfg: dict, built) -> dict:
    doc = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in cfg.items()}
    doc["mode"] = built.mode
    doc["violations"] = list(getattr(built, "violations", []))
    doc["kernel"] = est.kernel_name
    doc["predicted_exponents"] = [
        {"e": t.e, "j": t.j, "value": str(t.value), "provenance": t.provenance}
        for t in built.predicted_targets()
    ]
    return doc


def cmd_construct(args) -> int:
    cfg = _resolved(args, ("variant", "n", "d", "m", "q", "theta", "seed", "mode", "betas", "beta_table", "alpha"))
    built = build_construction(cfg)
    out = Path(args.out)
    _write_json(out / "descriptor.json", _descriptor(cfg, built))
    # exponent growth per step is multiplicative for ch5/ch6 but exponential
    # in alpha for ch8, so the default export depth is variant-aware
    variant_default = 2 if str(cfg.get("variant", "")).lower() in ("ch8", "last-angle") else 4
    n_max = int(cfg.get("n_max", args.n_max if args.n_max is not None else variant_default))
    fam_dir = out / "family"
    variant = str(cfg.get("variant", "")).lower()
    count = 0
    if variant in ("ch5", "line", "ch6", "first-angle"):
        e_max = built.n - 1 if variant in ("ch5", "line") else built.n - built.d
        for e in range(1, e_max + 1):
            for n_start in range(0, n_max + 1):
                sub = built.bne(n_start, e)
                _write_json(fam_dir / f"bne_N{n_start}_e{e}.json",
                            json.loads(lattice.subspace_to_json(sub)))
                count += 1
    elif variant in ("ch7", "block-sum"):
        top = list(range(1, built.d + 1))
        for e in range(built.d, built.d * built.m + 1):
            ns = built.diagonal_ns(top, e, n_max)
            sub = built.cjn(top, ns, e)
            _write_json(fam_dir / f"cjn_e{e}.json", json.loads(lattice.subspace_to_json(sub)))
            count += 1
    elif variant in ("ch8", "last-angle"):
        for n_start in range(0, n_max + 1):
            for v in range(1, built.q + 1):
                sub = built.bnv(n_start, v)
                _write_json(fam_dir / f"bnv_N{n_start}_v{v}.json",
                            json.loads(lattice.subspace_to_json(sub)))
                count += 1
    print(f"wrote descriptor and {count} family members to {out}")
    return 0


def cmd_measure(args) -> int:
    cfg = _resolved(args, ("variant", "n", "d", "m", "q", "theta", "seed", "mode", "betas", "beta_table", "alpha"))
    built = build_construction(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_raw = args.N if args.N is not None else cfg.get("N", "1,2,3")
    e_raw = args.e if args.e is not None else cfg.get("e", "1")
    n_values = [int(x) for x in _as_list(n_raw)]
    e_values = [int(x) for x in _as_list(e_raw)]
    variant = str(cfg.get("variant", "")).lower()
    theta = int(cfg.get("theta", 5))
    workbits = int(args.precision_bits) if args.precision_bits else 192
    rows = []
    predictions = {}
    for e in e_values:
        dual_slopes = {}
        if variant in ("ch5", "line"):
            ms = built.measure_family(e, n_values, workbits=workbits)
            predictions[e] = built.predicted_exponent(e)
            if args.dual:
                dual_slopes = _dual_slopes(built, e, n_values)
        elif variant in ("ch7", "block-sum"):
            top = list(range(1, built.d + 1))
            ms = built.measure_subset_family(top, e, n_values, workbits=workbits)
            predictions[e] = built.predicted_subset_exponent(top, e)
        elif variant in ("ch8", "last-angle"):
            if built.d == 1:
                line = built.as_line()
                ms = line.measure_family(e, [n + 1 for n in n_values], workbits=workbits)
            else:
                bits = None if not args.precision_bits else int(args.precision_bits)
                ms = [built.measure_cne(n_start, e, workbits=bits) for n_start in n_values]
            predictions[e] = built.predicted_exponent(e)
        else:
            raise ConfigError(f"measure unsupported for variant {variant!r}")
        if not ms:
            raise ConfigError("empty family: no measurements requested")
        for m in ms:
            row = m.as_row(theta)
            if variant in ("ch8", "last-angle") and built.d > 1:
                row["precision_bits"] = str(built.recommended_bits(int(m.index), e))
            else:
                row["precision_bits"] = str(workbits)
            if args.dual:
                row["slope_dual"] = dual_slopes.get(m.index, "")
            rows.append(row)
    if not rows:
        raise ConfigError("empty family: no measurements requested")
    fields = list(rows[0].keys())
    with open(out / "records.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    _write_json(
        out / "records.json",
        {
            "rows": rows,
            "predicted": {str(e): str(v) for e, v in predictions.items()},
            "config": {k: str(v) for k, v in cfg.items()},
        },
    )
    print(f"wrote {len(rows)} measurement rows to {out}")
    return 0


def _dual_slopes(line, e: int, n_values) -> dict:
    """Per-index slopes re-measured through orthogonal complements."""
    from .angles import SubspaceRealization
    from .estimation import duality_exponent

    depth = max(n_values) + e + 1
    entry_bits = int(line.floor_alpha(depth) * 3.33) + 64
    scale_bits = int(line.floor_alpha(max(n_values) + e) * 3.33) + 256
    ctx = PrecisionContext(bits=2 * entry_bits + scale_bits)
    target = SubspaceRealization.from_vectors([line.xn(depth)])
    cands = [line.bne(n, e) for n in n_values]
    seq, _ = duality_exponent(target, cands, 1, ctx)
    out = {}
    for rec, n in zip(seq.entries, n_values):
        with mpmath.workprec(96):
            out[n] = mpmath.nstr(rec.slope, 15)
    return out


def cmd_enumerate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bound = int(args.bound)
    if args.xi is not None or args.config:
        cfg = _resolved(args, ("variant", "n", "theta", "seed", "betas"))
        if args.xi is not None:
            xi = series.parse_rational(args.xi)
            tail = Fraction(0)
        else:
            built = build_construction(cfg)
            if built.n != 2:
                raise ConfigError("record enumeration targets live in the plane")
            depth = int(cfg.get("depth", 6))
            xi = series.sigma_trunc(built.theta, built.u, built.alphas, depth, 0).value
            tail = series.tail_bound_fraction(built.theta, built.alphas, depth, built.max_u)
        seq = est.line_records_2d(xi, bound, tail_bound=tail)
        est.records_to_csv(seq, str(out / "records.csv"))
        est.records_to_json(seq, str(out / "records.json"))
        print(f"wrote {len(seq.entries)} records to {out}")
        return 0
    n = int(args.n)
    lines = est.enumerate_lines(n, bound, jobs=max(1, int(args.jobs or 1)))
    _write_json(
        out / "lines.json",
        {"n": n, "bound": bound, "count": len(lines),
         "lines": [[str(x) for x in s.zbasis[0]] for s in lines]},
    )
    print(f"enumerated {len(lines)} lines")
    return 0


def cmd_verify(args) -> int:
    import random

    suite = args.suite
    results = {}
    rng = random.Random(int(args.seed or 0))
    ctx = PrecisionContext(bits=int(args.precision_bits or 256))

    def rand_subspace(n, e):
        while True:
            rows = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(e)]
            try:
                return lattice.saturate(rows)
            except lattice.DegenerateBasisError:
                continue

    if suite in ("exact", "all"):
        ok = True
        for _ in range(50):
            n = rng.randint(2, 6)
            e = rng.randint(1, n - 1)
            b = rand_subspace(n, e)
            ok &= lattice.vec_gcd(b.pluecker.coords) == 1
            if e < n:
                ok &= lattice.orthogonal_complement(b).height_sq == b.height_sq
        for _ in range(20):
            k = rng.randint(1, 3)
            n2 = rng.randint(1, 3)
            left = rand_subspace(k, rng.randint(1, k))
            right = rand_subspace(n2, rng.randint(1, n2))
            bb = lattice.subspace_from_zbasis(
                [list(r) + [0] * n2 for r in left.zbasis], k + n2
            )
            cc = lattice.subspace_from_zbasis(
                [[0] * k + list(r) for r in right.zbasis], k + n2
            )
            s = lattice.block_direct_sum(bb, cc, k)
            ok &= s.height_sq == bb.height_sq * cc.height_sq
            kh, ih = lattice.coordinate_projection_heights(s, range(k))
            ok &= kh * ih == s.height_sq
        for _ in range(25):
            n = rng.randint(2, 6)
            m = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
            r = rng.randint(1, n - 1)
            cols = sorted(rng.sample(range(n), r))
            ok &= lattice.laplace_identity_check(m, cols)
        results["exact"] = bool(ok)
    if suite in ("angles", "all"):
        ok = True
        from .angles import SubspaceRealization, principal_sines, phi

        for _ in range(10):
            n = rng.randint(4, 6)
            d = rng.randint(1, n // 2)
            e = rng.randint(1, n - d)
            a, b = rand_subspace(n, d), rand_subspace(n, e)
            ra = SubspaceRealization.from_subspace(a)
            rb = SubspaceRealization.from_subspace(b)
            with mpmath.workprec(ctx.workbits):
                spec = principal_sines(ra, rb, ctx)
                prod = mpmath.mpf(1)
                for s in spec.sines:
                    prod *= s
                ok &= bool(abs(phi(ra, rb, ctx) - prod) < mpmath.mpf(10) ** -25)
        results["angles"] = bool(ok)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "verify.json", {"suites": results, "seed": int(args.seed or 0)})
    if not all(results.values()):
        return EXIT_VERIFY
    print("verify:", results)
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    doc = json.loads(Path(args.records).read_text())
    predicted = {int(k): Fraction(v) for k, v in doc.get("predicted", {}).items()}
    rows = []
    with mpmath.workprec(96):
        for row in doc["rows"]:
            e = int(row["e"])
            slope = mpmath.mpf(row["slope"])
            pred = predicted.get(e)
            rel = abs(slope - _fr_mpf(pred)) / _fr_mpf(pred) if pred else None
            rows.append(
                {
                    "source": row["source"],
                    "N_or_id": row["N_or_id"],
                    "e": e,
                    "measured_slope": row["slope"],
                    "predicted": str(pred) if pred is not None else "",
                    "relative_error": mpmath.nstr(rel, 8) if rel is not None else "",
                    "mode_flags": row["mode_flags"],
                }
            )
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
    print(f"wrote report with {len(rows)} rows to {out}")
    return 0


def _fr_mpf(x: Fraction) -> mpmath.mpf:
    return mpmath.mpf(x.numerator) / x.denominator


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="subspace-approx", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML or JSON config file")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--precision-bits", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", default="out")
        p.add_argument("--mode", choices=["theorem", "relaxed"])

    pc = sub.add_parser("construct", help="build a construction and export its family")
    common(pc)
    pc.add_argument("--variant")
    pc.add_argument("--n", type=int)
    pc.add_argument("--d", type=int)
    pc.add_argument("--m", type=int)
    pc.add_argument("--q", type=int)
    pc.add_argument("--theta", type=int)
    pc.add_argument("--alpha")
    pc.add_argument("--betas")
    pc.add_argument("--beta-table")
    pc.add_argument("--N-max", type=int, dest="n_max")

    pm = sub.add_parser("measure", help="measure family angles and slopes")
    common(pm)
    for flag in ("--variant", "--alpha", "--betas", "--beta-table", "--N", "--e"):
        pm.add_argument(flag)
    for flag in ("--n", "--d", "--m", "--q", "--theta"):
        pm.add_argument(flag, type=int)
    pm.add_argument("--dual", action="store_true",
                    help="add a paired slope column measured through complements")

    pe = sub.add_parser("enumerate", help="exhaustive oracles: lines / planar records")
    common(pe)
    pe.add_argument("--n", type=int)
    pe.add_argument("--bound", required=True)
    pe.add_argument("--xi", help="explicit rational target p/q for planar records")
    pe.add_argument("--variant")
    pe.add_argument("--betas")
    pe.add_argument("--theta", type=int)

    pv = sub.add_parser("verify", help="run invariant suites")
    common(pv)
    pv.add_argument("--suite", default="all", choices=["exact", "angles", "all"])

    pr = sub.add_parser("report", help="join measured slopes against predictions")
    common(pr)
    pr.add_argument("--records", required=True, help="records.json from measure")

    args = ap.parse_args(argv)
    try:
        handler = {
            "construct": cmd_construct,
            "measure": cmd_measure,
            "enumerate": cmd_enumerate,
            "verify": cmd_verify,
            "report": cmd_report,
        }[args.command]
        return handler(args)
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PrecisionError as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return EXIT_PRECISION


if __name__ == "__main__":
    sys.exit(main())
