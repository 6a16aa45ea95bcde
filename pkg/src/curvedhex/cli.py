"""Command-line front end: construct, enumerate, pack, analyze, render,
table1 and tightness."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .analysis import CONSTRUCTED_THRESHOLD, analyze, tightness_ratio
from .construct import MAX_ENUMERATE_K, ConstructionError, build, enumerate_all, parse_spec
from .geometry import (
    Packing,
    _jsonable,
    curved_hex_density,
    curved_hex_ratio,
    hex_number,
    validate,
)
from .render import STYLES, render_svg

OUT_ENV = "CURVEDHEX_OUT"
QUALITY_TOL = 1e-9


def fmt(x: float) -> str:
    """14 significant digits, trailing zeros kept."""
    return f"{x:#.14g}"


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUT_ENV) or "curvedhex-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def _sim_config(args, n: int):
    from .billiards.sim import SimConfig

    return SimConfig(
        n=n,
        seed=args.seed,
        growth_to_speed_ratio=args.growth,
        convergence_window=args.window,
        max_collisions=args.max_collisions,
        growth_stages=args.stages,
    )


def _run_batch(args, n: int, runs: int):
    from .billiards.batch import batch

    if runs < 1:
        raise SystemExit("error: --runs must be >= 1")
    return batch(_sim_config(args, n), runs, parallelism=args.parallelism)


def _save_batch(res, d: Path, stem: str) -> None:
    from .billiards.sim import manifest

    _write(d / f"{stem}-manifest.json", manifest(res.config))
    _write(d / f"{stem}-runs.csv", res.stats_csv())
    _write(d / f"{stem}-patterns.json",
           json.dumps(_jsonable([asdict(c) for c in res.patterns]), indent=2) + "\n")
    best = res.best()
    if best is not None:
        best.packing.save(d / f"{stem}-best.json")


# subcommands

def cmd_construct(args) -> int:
    try:
        spec = parse_spec(args.spec)
        p = build(spec)
    except (ValueError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    d = _out_dir(args)
    path = p.save(d / f"construct-{args.spec.replace(';', '_').replace('=', '').replace(',', '-')}.json")
    rep = analyze(p, threshold=args.tol if args.tol is not None else CONSTRUCTED_THRESHOLD)
    print(f"n          {p.n}")
    print(f"density    {fmt(p.density)}")
    print(f"D/d        {fmt(p.ratio)}")
    print(f"class      {rep.curved_hex}")
    print(f"pattern    {'regular' if rep.regular else 'irregular'}")
    print(f"rigid      {rep.rigid}")
    print(f"written    {path}")
    return 0


def cmd_enumerate(args) -> int:
    k = args.k
    if not 1 <= k <= MAX_ENUMERATE_K:
        print(f"error: k must be in 1..{MAX_ENUMERATE_K}", file=sys.stderr)
        return 2
    d = _out_dir(args) / f"enumerate-k{k}"
    d.mkdir(parents=True, exist_ok=True)
    rows = []
    for idx, (spec, p) in enumerate(enumerate_all(k)):
        rep = analyze(p, threshold=CONSTRUCTED_THRESHOLD)
        name = f"class{idx:03d}.json"
        p.with_metadata(regular=rep.regular).save(d / name)
        rows.append({"file": name, "spec": str(spec), "regular": rep.regular,
                     "reflection": str(spec.reflection())})
    summary = {"k": k, "n": hex_number(k), "classes": len(rows),
               "regular": sum(r["regular"] for r in rows), "packings": rows}
    _write(d / "summary.json", json.dumps(summary, indent=2) + "\n")
    print(f"k={k} n={hex_number(k)} classes={summary['classes']} regular={summary['regular']}")
    for r in rows:
        print(f"  {r['file']}  {r['spec']:<28} {'regular' if r['regular'] else 'irregular'}")
    print(f"written    {d}")
    return 0


def cmd_pack(args) -> int:
    if args.n < 2:
        print("error: n must be >= 2", file=sys.stderr)
        return 2
    if args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return 2
    res = _run_batch(args, args.n, args.runs)
    d = _out_dir(args)
    _save_batch(res, d, f"pack-n{args.n}")
    best = res.best()
    print(f"n={args.n} runs={len(res.runs)} failed={len(res.failures)}  [simulation]")
    if best is not None:
        print(f"best seed  {best.seed}")
        print(f"density    {fmt(best.packing.density)}")
        print(f"D/d        {fmt(best.packing.ratio)}")
    print("pattern  count  best density      best D/d          rattlers  rigid  curved-hex")
    for c in res.patterns:
        print(f"{c.label:>7}  {c.count:>5}  {fmt(c.best_density)}  {fmt(c.best_ratio)}  "
              f"{c.rattlers:>8}  {str(c.rigid):<5}  {c.curved_hex or '-'}")
    for f in res.failures:
        print(f"failed seed {f.seed}: {f.error}")
    print(f"written    {d}")
    return 0 if best is not None else 1


def cmd_analyze(args) -> int:
    try:
        p = Packing.load(args.file)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return 2
    if args.tol is not None:
        threshold = args.tol
    elif p.metadata.get("source") == "billiards":
        threshold = "auto"
    else:
        threshold = CONSTRUCTED_THRESHOLD
    bad = validate(p, 1e-9)
    rep = analyze(p, threshold=threshold)
    text = rep.to_json()
    d = _out_dir(args)
    path = _write(d / (Path(args.file).stem + "-report.json"), text)
    print(f"n          {rep.n}")
    print(f"density    {fmt(rep.density)}")
    print(f"D/d        {fmt(rep.ratio)}")
    print(f"threshold  {rep.threshold:.3g}")
    print(f"bonds      {rep.bonds} disk-disk, {rep.wall_bonds} wall, {rep.ambiguous} ambiguous")
    print(f"rattlers   {len(rep.rattlers)}")
    print(f"rigid      {rep.rigid} (flex dimension {rep.flex_dimension})")
    print(f"class      {rep.curved_hex}")
    if rep.curved_hex is not None:
        print(f"pattern    {'regular' if rep.regular else 'irregular'}")
    if bad:
        print(f"violations {len(bad)} (worst gap {min(v.gap for v in bad):.3e})")
    print(f"written    {path}")
    return 0


def cmd_render(args) -> int:
    try:
        p = Packing.load(args.file)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return 2
    threshold = args.tol if args.tol is not None else CONSTRUCTED_THRESHOLD
    if args.tol is None and p.metadata.get("source") == "billiards":
        from .analysis import split_threshold

        threshold = split_threshold(p)
    svg = render_svg(p, style=args.style, labels=args.labels, threshold=threshold)
    path = _write(_out_dir(args) / (Path(args.file).stem + f"-{args.style}.svg"), svg)
    print(f"written    {path}")
    return 0


def cmd_table1(args) -> int:
    d = _out_dir(args)
    rows = []
    for k in args.k:
        n = hex_number(k)
        row = {"k": k, "n": n, "curved_hex_density": curved_hex_density(k),
               "curved_hex_ratio": curved_hex_ratio(k)}
        if args.runs > 0:
            res = _run_batch(args, n, args.runs)
            _save_batch(res, d, f"table1-n{n}")
            best = res.best()
            ok = res.succeeded
            row.update({
                "runs": len(res.runs),
                "experimental_density": best.packing.density if best else None,
                "experimental_ratio": best.packing.ratio if best else None,
                "better_than_curved_hex": sum(r.packing.density > row["curved_hex_density"] * (1 + 1e-12)
                                              for r in ok),
                "reached_curved_hex": sum(abs(r.packing.ratio - row["curved_hex_ratio"]) <= QUALITY_TOL
                                          for r in ok),
            })
        rows.append(row)
    _write(d / "table1.json", json.dumps(_jsonable(rows), indent=2) + "\n")
    print("k  n     curv-hex density [formula]  curv-hex D/d [formula]"
          + ("  exp. density [simulation]  exp. D/d [simulation]  better  reached  runs"
             if args.runs > 0 else ""))
    for r in rows:
        line = f"{r['k']:<2} {r['n']:<5} {fmt(r['curved_hex_density']):<27} {fmt(r['curved_hex_ratio']):<22}"
        if args.runs > 0:
            ed, er = r["experimental_density"], r["experimental_ratio"]
            line += (f"  {fmt(ed) if ed else '-':<26} {fmt(er) if er else '-':<22}"
                     f" {r['better_than_curved_hex']:>6}  {r['reached_curved_hex']:>7}  {r['runs']:>4}")
        print(line)
    print(f"written    {d / 'table1.json'}")
    return 0


def cmd_tightness(args) -> int:
    k = args.k
    h = hex_number(k)
    d = _out_dir(args)
    best = {}
    for n in (h - 1, h, h + 1):
        res = _run_batch(args, n, args.runs)
        _save_batch(res, d, f"tightness-n{n}")
        b = res.best()
        if b is None:
            print(f"error: every run failed for n={n}", file=sys.stderr)
            return 1
        best[n] = b.packing
    target = curved_hex_ratio(k)
    converged = abs(best[h].ratio - target) <= QUALITY_TOL
    try:
        ratio = tightness_ratio(best[h - 1], best[h], best[h + 1])
    except ValueError as exc:
        ratio = None
        print(f"warning: {exc}", file=sys.stderr)
    row = {"k": k, "runs_per_n": args.runs,
           "ratio_minus": best[h - 1].ratio, "ratio_center": best[h].ratio,
           "ratio_plus": best[h + 1].ratio, "tightness": ratio,
           "center_reached_curved_hex": converged}
    _write(d / f"tightness-k{k}.json", json.dumps(_jsonable(row), indent=2) + "\n")
    print(f"k={k} runs per n={args.runs}  [simulation; curved-hex D/d from formula]")
    print(f"D/d n={h - 1:<4} {fmt(best[h - 1].ratio)}")
    print(f"D/d n={h:<4} {fmt(best[h].ratio)}   curved-hex {fmt(target)}")
    print(f"D/d n={h + 1:<4} {fmt(best[h + 1].ratio)}")
    print(f"tightness  {fmt(ratio) if ratio is not None else 'undefined'}"
          + ("" if converged else "   UNCONVERGED: best n=h(k) run missed curved-hex quality"))
    return 0 if converged else 3


def _tol(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="first seed of a batch (default 0)")
    common.add_argument("--runs", type=int, default=20, help="simulator runs per disk count (default 20)")
    common.add_argument("--parallelism", type=int, default=1, help="worker processes (default 1)")
    common.add_argument("--tol", type=_tol, default=None,
                        help="bond threshold in diameters (default: 1e-9 for constructions, "
                             "automatic for simulator output)")
    common.add_argument("--out", default=None,
                        help=f"output directory (default ${OUT_ENV} or ./curvedhex-out)")
    common.add_argument("-v", "--verbose", action="store_true")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--growth", type=float, default=1e-3, help="growth-to-speed ratio (default 1e-3)")
    sim.add_argument("--window", type=int, default=1_000_000,
                     help="collisions over which D/d must not change (default 1e6)")
    sim.add_argument("--stages", type=int, default=3,
                     help="growth stages, each 10x slower than the last (default 3)")
    sim.add_argument("--max-collisions", type=int, default=500_000_000)

    ap = argparse.ArgumentParser(prog="curvedhex", description="Dense packings of equal disks in a circle.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="build one curved hexagonal packing")
    p.add_argument("spec", help='e.g. "k=5;order=1,2,3,4", "k=6;flips=2,4" or "k=2"')
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("enumerate", parents=[common], help="all congruence classes for k layers")
    p.add_argument("k", type=int)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("pack", parents=[common, sim], help="batch of simulator runs for n disks")
    p.add_argument("n", type=int)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("analyze", parents=[common], help="contact graph, rattlers, rigidity, class")
    p.add_argument("file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("render", parents=[common], help="SVG drawing of a packing file")
    p.add_argument("file")
    p.add_argument("--style", choices=STYLES, default="both")
    p.add_argument("--labels", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("table1", parents=[common, sim],
                       help="curved-hex formulas vs best simulated packings")
    p.add_argument("--k", type=int, nargs="+", default=[6, 7, 8])
    p.set_defaults(func=cmd_table1, runs=0)

    p = sub.add_parser("tightness", parents=[common, sim],
                       help="best D/d for h(k)-1, h(k), h(k)+1 disks and their ratio")
    p.add_argument("k", type=int)
    p.set_defaults(func=cmd_tightness)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
