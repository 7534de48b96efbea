"""Command-line entry point.

Every subcommand takes ``--seed``; the master seed feeds a
``numpy.random.SeedSequence`` and subtasks draw from its spawned children in
a fixed order, so identical arguments give identical bytes.

Output goes to stdout unless ``--out DIR`` is given or ``SCALINGLAB_OUTPUT_DIR``
is set. Every file starts with a ``#`` manifest line, or carries a
``manifest`` key when it is JSON.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import math
import os
import sys
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from ._validation import ValidationError
from .continuum_graph import continuum_graph_construct, glue_surplus_points, tilted_excursion
from .graph_core import core, kernel, read_multigraph, write_multigraph
from .linebreak import crt_linebreak, decode, encode, marchal_distance_series, uniform_labelled_tree
from .path_codes import contour_of, dfq_of, format_path, parse_path, tree_from_contour, tree_from_dfq
from .samplers import (
    PRESETS,
    DegreeModelParams,
    ErParams,
    bienayme_conditioned,
    degree_model_graph,
    er_explore_markov,
    er_graph,
    reflected_limit_process,
    uniform_graph_fixed_surplus,
)
from .stats import EXPERIMENTS, arrival_marginal, core_size_density, rayleigh
from .tree_core import LabelledRootedTree, read_parent_array, write_edge_list, write_parent_array

__all__ = ["main", "run", "emit_report", "load_config"]

OUTPUT_ENV = "SCALINGLAB_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


# ---------------------------------------------------------------------------
# config and manifest


def load_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys use option names
    with dashes or underscores."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected key = value")
        k, v = (x.strip() for x in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _manifest(args, params: dict) -> dict:
    return {"tool": "scalinglab", "version": __version__, "command": args.command, "seed": args.seed, "params": params}


def _manifest_line(man: dict) -> str:
    return "# " + json.dumps(man, sort_keys=True) + "\n"


def _params(args, skip=("command", "seed", "out", "config", "csv", "svg", "input")) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and not k.startswith("_") and v is not None}


def _out_dir(args) -> Path | None:
    d = args.out or os.environ.get(OUTPUT_ENV)
    return Path(d) if d else None


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}") from exc


def _emit_text(args, name: str, body: str, stdout) -> None:
    man = _manifest(args, _params(args))
    text = _manifest_line(man) + body
    d = _out_dir(args)
    if d is None:
        stdout.write(text)
        return
    _write(d / f"{name}.txt", text)
    _write(d / "manifest.json", json.dumps(man, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# reports


def _csv_text(man: dict, key: str, values) -> str:
    buf = io.StringIO()
    buf.write(_manifest_line(man))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([key])
    for v in values:
        w.writerow([repr(v) if isinstance(v, float) else v])
    return buf.getvalue()


def _svg_histogram(title: str, values, density=None, bins: int = 40) -> str:
    x = np.asarray(values, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        hi = lo + 1.0
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi), density=True)
    grid = np.linspace(lo, hi, 200)
    curve = np.asarray(density(grid), dtype=float) if density is not None else None
    ymax = max(float(counts.max()), float(curve.max()) if curve is not None else 0.0) or 1.0
    W, H, pad = 480, 320, 30

    def sx(v):
        return pad + (v - lo) / (hi - lo) * (W - 2 * pad)

    def sy(v):
        return H - pad - v / ymax * (H - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<title>{escape(title)}</title>',
        f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
    ]
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        parts.append(f'<rect x="{sx(a):.2f}" y="{sy(c):.2f}" width="{sx(b) - sx(a):.2f}" height="{sy(0) - sy(c):.2f}" fill="#9ab" stroke="white"/>')
    if curve is not None:
        pts = " ".join(f"{sx(g):.2f},{sy(v):.2f}" for g, v in zip(grid, curve))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#c33" stroke-width="2"/>')
    parts.append(f'<text x="{pad}" y="{pad - 10}" font-size="12">{escape(title)}</text>')
    parts.append(f'<text x="{pad}" y="{H - 8}" font-size="10">{lo:.3g}</text>')
    parts.append(f'<text x="{W - pad}" y="{H - 8}" font-size="10" text-anchor="end">{hi:.3g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _overlays(report: dict) -> dict:
    """Observation key -> (transform, reference pdf) for histogram overlays."""
    name, params = report["experiment"], report["params"]
    out = {}
    if name == "subtree-sizes":
        for i in range(1, params["k"] + 1):
            out[f"S_{i}"] = (None, arrival_marginal(i).pdf)
    elif name == "crt-distance":
        for p in params["presets"]:
            out[p] = (None, rayleigh().pdf)
    elif name == "core-size":
        n = params["n"]
        out["core_size"] = (lambda v: np.asarray(v) / math.sqrt(n), core_size_density(params["s"]).pdf)
    return out


def emit_report(report: dict, out_dir=None, csv_files: bool = False, svg: bool = False, stream=None, manifest: dict | None = None) -> list:
    """Write ``report.json`` (and optionally CSV/SVG) to ``out_dir``.

    Without a directory the JSON goes to ``stream``; CSV and SVG then need a
    directory. Returns the list of written paths.
    """
    man = manifest or {"tool": "scalinglab", "version": report.get("version", __version__), "seed": report.get("seed"), "params": report.get("params")}
    doc = dict(report)
    doc["manifest"] = man
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if out_dir is None:
        if csv_files or svg:
            raise ValidationError("--csv and --svg need an output directory (--out or $" + OUTPUT_ENV + ")")
        (stream or sys.stdout).write(text)
        return []
    out_dir = Path(out_dir)
    written = [out_dir / "report.json"]
    _write(written[0], text)
    obs = report.get("observations", {})
    if csv_files:
        for key, values in obs.items():
            p = out_dir / f"observations_{key}.csv"
            _write(p, _csv_text(man, key, values))
            written.append(p)
    if svg:
        overlays = _overlays(report)
        for key, values in obs.items():
            if not values or not isinstance(values[0], (int, float)):
                continue
            transform, pdf = overlays.get(key, (None, None))
            v = transform(values) if transform else values
            p = out_dir / f"hist_{key}.svg"
            _write(p, _svg_histogram(f"{report['experiment']}: {key}", v, pdf))
            written.append(p)
    return written


# ---------------------------------------------------------------------------
# subcommands


def _rng(args):
    return np.random.default_rng(np.random.SeedSequence(args.seed))


def _read_input(args, stdin) -> str:
    if args.input and args.input != "-":
        try:
            return Path(args.input).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read {args.input}: {exc}") from exc
    return stdin.read()


def _as_labelled(t) -> LabelledRootedTree:
    return t if isinstance(t, LabelledRootedTree) else LabelledRootedTree(t.parent)


def cmd_sample_tree(args, stdin, stdout):
    rng = _rng(args)
    if args.preset == "labelled":
        t = uniform_labelled_tree(args.n, rng)
    else:
        t = _as_labelled(bienayme_conditioned(PRESETS[args.preset], args.n, rng))
    body = {
        "parent": write_parent_array,
        "edges": write_edge_list,
        "contour": lambda t: format_path(contour_of(t)) + "\n",
        "dfq": lambda t: format_path(dfq_of(t)) + "\n",
        "word": lambda t: str(encode(t)) + "\n",
    }[args.format](t)
    _emit_text(args, "tree", body, stdout)


def cmd_encode(args, stdin, stdout):
    t = read_parent_array(io.StringIO(_read_input(args, stdin)))
    if args.code == "word":
        body = str(encode(t)) + "\n"
    else:
        body = format_path((contour_of if args.code == "contour" else dfq_of)(t)) + "\n"
    _emit_text(args, args.code, body, stdout)


def cmd_decode(args, stdin, stdout):
    given = [x for x in (args.word, args.contour, args.dfq) if x is not None]
    if len(given) != 1:
        raise ValidationError("give exactly one of --word, --contour, --dfq")
    if args.word is not None:
        t = decode(args.word)
    elif args.contour is not None:
        t = _as_labelled(tree_from_contour(parse_path(args.contour, "contour")))
    else:
        t = _as_labelled(tree_from_dfq(parse_path(args.dfq, "dfq")))
    body = write_parent_array(t) if args.format == "parent" else write_edge_list(t)
    _emit_text(args, "tree", body, stdout)


def cmd_sample_graph(args, stdin, stdout):
    g = uniform_graph_fixed_surplus(args.n, args.surplus, _rng(args))
    _emit_text(args, "graph", write_multigraph(g), stdout)


def cmd_core_kernel(args, stdin, stdout):
    g = read_multigraph(io.StringIO(_read_input(args, stdin)))
    if not g.is_connected():
        raise ValidationError("core-kernel expects a connected graph")
    c, k = core(g), kernel(g)
    body = "# core\n" + write_multigraph(c) + "# kernel\n" + write_multigraph(k)
    if k.cycle_length:
        body += f"# cycle_length {k.cycle_length}\n"
    d = _out_dir(args)
    if d is None:
        _emit_text(args, "core-kernel", body, stdout)
        return
    man = _manifest(args, _params(args))
    _write(d / "core.txt", _manifest_line(man) + write_multigraph(c))
    _write(d / "kernel.txt", _manifest_line(man) + write_multigraph(k))
    _write(d / "manifest.json", json.dumps(man, sort_keys=True, indent=2) + "\n")


def cmd_er(args, stdin, stdout):
    params = ErParams(args.n, args.lam)
    rng = _rng(args)
    comps = er_graph(params, rng) if args.mode == "graph" else er_explore_markov(params, rng)
    rows = "".join(f"{a} {b}\n" for a, b in comps.key()[: args.top or None])
    _emit_text(args, "components", "# size surplus\n" + rows, stdout)


def cmd_limit_process(args, stdin, stdout):
    path = reflected_limit_process(args.lam, args.horizon, args.dt, _rng(args), diffusivity=args.diffusivity, curvature=args.curvature)
    ex = path.excursions[: args.top or None]
    rows = "".join(f"{s!r} {length!r} {int(m)}\n" for s, length, m in ex.tolist())
    _emit_text(args, "excursions", "# start length marks\n" + rows, stdout)


def cmd_degree_graph(args, stdin, stdout):
    vals = tuple(int(x) for x in args.values.split(","))
    probs = tuple(float(x) for x in args.probs.split(","))
    params = DegreeModelParams(vals, probs)
    comps, _ = degree_model_graph(params, args.n, _rng(args))
    rows = "".join(f"{a} {b}\n" for a, b in comps.key()[: args.top or None])
    head = f"# mu {params.mu!r} theta {params.theta!r} beta {params.beta!r}\n# size surplus\n"
    _emit_text(args, "components", head + rows, stdout)


def cmd_crt(args, stdin, stdout):
    t = crt_linebreak(args.branches, _rng(args))
    _emit_text(args, "crt", t.graph.to_text(), stdout)


def cmd_marchal(args, stdin, stdout):
    cps = sorted({int(x) for x in args.checkpoints.split(",")}) if args.checkpoints else [args.leaves]
    if cps[0] < 1:
        raise ValidationError("checkpoints must be positive")
    series = marchal_distance_series(args.alpha, cps, _rng(args))
    rows = "".join(f"{c} {v!r}\n" for c, v in zip(cps, series.tolist()))
    _emit_text(args, "marchal", "# leaves rescaled_distance\n" + rows, stdout)


def cmd_continuum_graph(args, stdin, stdout):
    rng = _rng(args)
    if args.method == "kernel":
        g = continuum_graph_construct(args.surplus, args.branches, rng).graph
    else:
        e = tilted_excursion(args.surplus, args.grid, rng)
        g = glue_surplus_points(e, args.surplus, rng).graph
    _emit_text(args, "continuum-graph", g.to_text(), stdout)


_EXPERIMENT_FLAGS = ("n", "s", "k", "draws", "lam", "alpha", "steps", "dt", "horizon", "m", "runs")


def cmd_experiment(args, stdin, stdout):
    fn = EXPERIMENTS[args.name]
    sig = inspect.signature(fn).parameters
    kw = {}
    for flag in _EXPERIMENT_FLAGS:
        v = getattr(args, flag)
        if v is None:
            continue
        key = "lam" if flag == "lam" and "lam" in sig else flag
        if key not in sig:
            raise ValidationError(f"experiment {args.name} does not take --{'lambda' if flag == 'lam' else flag}")
        kw[key] = v
    report = fn(seed=args.seed, **kw)
    man = _manifest(args, _params(args))
    emit_report(report, _out_dir(args), args.csv, args.svg, stdout, man)
    if not report["passed"]:
        print(f"experiment {args.name}: some checks did not pass", file=sys.stderr)


# ---------------------------------------------------------------------------
# parser


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("expected a nonnegative integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="scalinglab", description="Samplers, codings and limit-law experiments for random trees and graphs.")
    p.add_argument("--version", action="version", version=f"scalinglab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--seed", type=_positive_int, default=0, help="master seed (default 0)")
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}, else stdout)")
        sp.add_argument("--config", help="key = value file supplying defaults")
        sp.set_defaults(_fn=fn)
        return sp

    sp = add("sample-tree", cmd_sample_tree, "conditioned Bienaymé tree or uniform labelled rooted tree")
    sp.add_argument("--preset", choices=sorted(PRESETS) + ["labelled"], default="poisson1")
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--format", choices=["parent", "edges", "contour", "dfq", "word"], default="parent")

    sp = add("encode", cmd_encode, "encode a parent-array tree as a contour path, DFQ path or coding word")
    sp.add_argument("code", choices=["contour", "dfq", "word"])
    sp.add_argument("--input", help="parent-array file (default stdin)")

    sp = add("decode", cmd_decode, "rebuild a tree from a coding word or a path")
    sp.add_argument("--word")
    sp.add_argument("--contour")
    sp.add_argument("--dfq")
    sp.add_argument("--format", choices=["edges", "parent"], default="edges")

    sp = add("sample-graph", cmd_sample_graph, "uniform connected graph on [n] with given surplus")
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--surplus", type=_positive_int, required=True)

    sp = add("core-kernel", cmd_core_kernel, "core and kernel of a multigraph file")
    sp.add_argument("--input", help="multigraph file (default stdin)")

    sp = add("er", cmd_er, "critical Erdős–Rényi components (size surplus rows)")
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sp.add_argument("--mode", choices=["graph", "markov"], default="graph")
    sp.add_argument("--top", type=_positive_int, default=0, help="keep the largest N components (0 = all)")

    sp = add("limit-process", cmd_limit_process, "excursions of the reflected drifted Brownian motion")
    sp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    sp.add_argument("--horizon", type=float, default=10.0)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--diffusivity", type=float, default=1.0)
    sp.add_argument("--curvature", type=float, default=0.5)
    sp.add_argument("--top", type=_positive_int, default=0)

    sp = add("degree-graph", cmd_degree_graph, "configuration-model graph with i.i.d. degrees")
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("--values", default="1,3")
    sp.add_argument("--probs", default="0.75,0.25")
    sp.add_argument("--top", type=_positive_int, default=0)

    sp = add("crt", cmd_crt, "line-breaking tree with k branches")
    sp.add_argument("--branches", type=_positive_int, required=True)

    sp = add("marchal", cmd_marchal, "rescaled leaf distance under the weighted growth rule")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--leaves", type=_positive_int, default=1000)
    sp.add_argument("--checkpoints", help="comma-separated leaf counts")

    sp = add("continuum-graph", cmd_continuum_graph, "metric graph with given surplus")
    sp.add_argument("--surplus", type=_positive_int, required=True)
    sp.add_argument("--method", choices=["kernel", "glue"], default="kernel")
    sp.add_argument("--branches", type=_positive_int, default=0)
    sp.add_argument("--grid", type=_positive_int, default=20_000)

    sp = add("experiment", cmd_experiment, "run a named experiment and write its report")
    sp.add_argument("name", choices=sorted(EXPERIMENTS))
    for flag in ("n", "s", "k", "draws", "steps", "m", "runs"):
        sp.add_argument(f"--{flag}", type=_positive_int)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--csv", action="store_true", help="also write one CSV per observation")
    sp.add_argument("--svg", action="store_true", help="also write SVG histograms")
    return p


def _config_path(argv: list) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: list) -> argparse.Namespace:
    """Parse ``argv``; a ``--config`` file supplies defaults that flags override."""
    path = _config_path(argv)
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    choices = parser._subparsers._group_actions[0].choices
    if path is None or command not in choices:
        return parser.parse_args(argv)
    conf = load_config(path)
    sp = choices[command]
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, raw in conf.items():
        action = actions.get(key)
        if action is None:
            raise ValidationError(f"unknown config key {key!r} for {command}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[key] = action.type(raw) if action.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ValidationError(f"config key {key}: {exc}") from exc
            if action.choices is not None and defaults[key] not in action.choices:
                raise ValidationError(f"config key {key}: invalid choice {raw!r}")
        action.required = False
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv=None, stdin=None, stdout=None) -> int:
    """Run the CLI; returns 0 on success, 2 on usage or validation errors and
    1 on internal errors."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = _apply_config(parser, list(sys.argv[1:] if argv is None else argv))
        args._fn(args, stdin, stdout)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); nothing left to report
        sys.stderr.close()
        return 0
    except ValidationError as exc:
        print(f"scalinglab: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"scalinglab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
