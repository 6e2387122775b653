"""Command-line entry point: ``qidm <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 inconclusive QID verdict,
64 usage error.
"""
from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bimeasure import disintegrate
from .errors import InconclusiveError, QidmError
from .integral import continuity_probe, integrate_step, orlicz_norm, step_cf
from .io import (
    dump_measures,
    dumps,
    levy_to_json,
    load_bimeasure,
    load_measures,
    load_model,
    load_pmf,
    load_step_function,
    measure_to_json,
    to_csv,
    triplet_to_json,
)
from .lattice import cf_eval, cf_table, extract_triplet_lattice, qid_check_lattice
from .measure import caratheodory_extend, jordan_decompose, restrict_to_ring, total_variation
from .numeric import dump_scalar
from .random_measure import (
    cf_of_set,
    local_characteristics,
    sample_lattice,
    validate_model,
)

EXIT_OK, EXIT_INVALID, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 2, 3, 64
CF_HEADER = ("theta", "re_cf", "im_cf", "abs_cf")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n")


class Run:
    """Collects outputs of one invocation and writes them with a manifest."""

    def __init__(self, args, argv, inputs):
        self.args = args
        self.argv = list(argv)
        self.inputs = inputs
        self.files: dict[str, str] = {}
        self.residuals: dict = {}

    def emit(self, name: str, text: str):
        self.files[name] = text

    def manifest(self) -> dict:
        h = hashlib.sha256()
        for path in sorted(self.inputs):
            h.update(path.encode())
            h.update(Path(path).read_bytes())
        config = {k: v for k, v in sorted(vars(self.args).items()) if k != "out" and not callable(v)}
        h.update(json.dumps(config, sort_keys=True, default=str).encode())
        return {
            "command": self.argv,
            "config_hash": h.hexdigest(),
            "backend": self.args.backend,
            "seed": self.args.seed,
            "tool_version": __version__,
            "residuals": self.residuals,
            "outputs": sorted(self.files),
        }

    def write(self, stdout):
        out = self.args.out
        if out is None:
            primary = next(iter(self.files.values()))
            stdout.write(primary)
            return
        path = Path(out)
        if path.suffix in (".json", ".csv") and len(self.files) == 1:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(next(iter(self.files.values())))
            path.with_name(path.name + ".manifest.json").write_text(dumps(self.manifest()))
            return
        path.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (path / name).write_text(text)
        (path / "manifest.json").write_text(dumps(self.manifest()))


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _theta(args, lo=-8.0, hi=8.0):
    return np.linspace(lo, hi, args.theta_grid)


def cmd_decompose(args, run):
    space, measures = load_measures(_read_json(args.input), args.backend)
    out, rows = {}, []
    for name, mu in measures.items():
        jp = jordan_decompose(mu)
        ext_p, ext_m = caratheodory_extend(jp.positive), caratheodory_extend(jp.negative)
        residual = max(
            (abs(w) for w in (restrict_to_ring(ext_p) - restrict_to_ring(ext_m) - mu).weights.values()), default=0
        )
        run.residuals[name] = dump_scalar(residual)
        out[name] = {
            "positive": measure_to_json(jp.positive),
            "negative": measure_to_json(jp.negative),
            "total_variation_by_level": [dump_scalar(total_variation(mu, lv)) for lv in space.levels],
        }
        for t in space.atoms:
            rows.append((name, t, mu.weight(t), jp.positive.weight(t), jp.negative.weight(t)))
    if args.format == "csv":
        run.emit("decompose.csv", to_csv(("measure", "atom", "weight", "positive", "negative"), rows))
    else:
        run.emit("decompose.json", dumps({"input": dump_measures(space, measures), "jordan": out}))


def _rect_pairs(bm, limit=1 << 12):
    ts, xs = bm.t_space.atoms, bm.x_atoms
    if 2 ** (len(ts) + len(xs)) > limit:
        return [((t,), (x,)) for t in ts for x in xs]
    subsets = lambda seq: [c for r in range(1, len(seq) + 1) for c in itertools.combinations(seq, r)]
    return [(A, B) for A in subsets(ts) for B in subsets(xs)]


def cmd_disintegrate(args, run):
    bm = load_bimeasure(_read_json(args.input), args.backend)
    res = disintegrate(bm)
    nu_rows = [(t, res.nu.weight(t)) for t in bm.t_space.atoms]
    signed = res.kernel.signed()
    k_rows = [
        (t, x, signed.get((t, x), 0), res.kernel.q_plus.get((t, x), 0), res.kernel.q_minus.get((t, x), 0))
        for t in bm.t_space.atoms
        if t in res.kernel.rows
        for x in bm.x_atoms
    ]
    r_rows, worst = [], 0
    for A, B in _rect_pairs(bm):
        q0, rec = bm(A, B), res.reconstruct(A, B)
        worst = max(worst, abs(q0 - rec))
        r_rows.append((" ".join(A), " ".join(B), q0, rec, q0 - rec))
    run.residuals["reconstruction_max_abs"] = dump_scalar(worst)
    if args.format == "json":
        run.emit(
            "disintegration.json",
            dumps(
                {
                    "nu": measure_to_json(res.nu),
                    "per_level_totals": [dump_scalar(v) for v in res.variation.per_level_totals],
                    "kernel": [[t, x, dump_scalar(q), dump_scalar(p), dump_scalar(m)] for t, x, q, p, m in k_rows],
                    "max_reconstruction_residual": dump_scalar(worst),
                }
            ),
        )
    else:
        run.emit("nu.csv", to_csv(("t_atom", "nu"), nu_rows))
        run.emit("kernel.csv", to_csv(("t_atom", "x_atom", "q", "q_plus", "q_minus"), k_rows))
        run.emit("residuals.csv", to_csv(("A", "B", "Q0", "reconstructed", "residual"), r_rows))


def cmd_qid_check(args, run):
    pmf = load_pmf(_read_json(args.pmf))
    verdict = qid_check_lattice(pmf, args.grid_size)
    report = {
        "is_qid": verdict.is_qid,
        "min_cf_modulus": verdict.min_cf_modulus,
        "witness_theta": verdict.witness_theta,
        "grid_size": verdict.grid_size,
    }
    run.residuals["min_cf_modulus"] = verdict.min_cf_modulus
    run.emit("report.json", dumps(report))
    if args.format == "csv" or args.out is not None and not str(args.out).endswith(".json"):
        run.emit("cf.csv", to_csv(CF_HEADER, cf_table(pmf.cf, args.theta_grid)))


def cmd_extract_triplet(args, run):
    pmf = load_pmf(_read_json(args.pmf))
    trip, residual = extract_triplet_lattice(pmf, args.grid_size)
    run.residuals["round_trip_sup"] = residual
    doc = triplet_to_json(trip)
    doc["round_trip_residual"] = residual
    run.emit("triplet.json", dumps(doc))
    if args.format == "csv" or args.out is not None and not str(args.out).endswith(".json"):
        run.emit("cf.csv", to_csv(CF_HEADER, cf_table(lambda th: cf_eval(trip, th), args.theta_grid)))


def _member(model, atoms):
    if atoms is None:
        return model.space.level(len(model.space.levels))
    return model.space.member([a for a in atoms.split(",") if a])


def cmd_model(args, run):
    model = load_model(_read_json(args.model), args.backend)
    A = _member(model, args.set)
    if args.action == "validate":
        kw = {} if args.tol is None else {"atol": args.tol}
        cert = validate_model(model, seed=args.seed, theta_grid=_theta(args), strict=args.strict, **kw)
        run.residuals["min_xi_slack"] = dump_scalar(cert.min_xi_slack)
        run.emit(
            "certificate.json",
            dumps(
                {
                    "level_variations": [dump_scalar(v) for v in cert.level_variations],
                    "members_checked": cert.members_checked,
                    "min_xi_slack": dump_scalar(cert.min_xi_slack),
                    "theta_grid_size": cert.theta_grid_size,
                    "max_cf_modulus": cert.max_cf_modulus,
                    "modulus_screen_passed": cert.modulus_screen_passed,
                    "seed": cert.seed,
                    "note": cert.note,
                }
            ),
        )
    elif args.action == "cf":
        theta = _theta(args)
        lc = local_characteristics(model)
        local = cf_of_set(model, A, theta, lc)
        aggregate = cf_eval(model.triplet(A), theta)
        run.residuals["two_path_sup"] = float(np.max(np.abs(local - aggregate)))
        rows = [(t, v.real, v.imag, abs(v), abs(v - w)) for t, v, w in zip(theta, local, aggregate)]
        run.emit("cf.csv", to_csv(CF_HEADER + ("two_path_residual",), rows))
    else:
        samples = sample_lattice(model, A, args.samples, args.seed)
        run.emit("samples.csv", to_csv(("index", "value"), enumerate(samples.tolist())))


def _integrand(args, model):
    return load_step_function(_read_json(args.f), model.space, args.backend)


def cmd_integrate(args, run):
    model = load_model(_read_json(args.model), args.backend)
    f = _integrand(args, model)
    lc = local_characteristics(model)
    law = integrate_step(model, f, lc)
    theta = _theta(args)
    two_path = float(np.max(np.abs(law.cf(theta) - step_cf(model, f, theta, lc))))
    run.residuals["two_path_sup"] = two_path
    ev = orlicz_norm(model, f, args.p, lc)
    doc = {
        "a_f": dump_scalar(law.a_f),
        "sigma2_f": dump_scalar(law.sigma2_f),
        "F_f": levy_to_json(law.F_f),
        "F_plus_raw": levy_to_json(law.F_plus_raw),
        "F_minus_raw": levy_to_json(law.F_minus_raw),
        "integrability": {
            "U_int": dump_scalar(law.diagnostics.U_int),
            "sigma_int": dump_scalar(law.diagnostics.sigma_int),
            "V0_int": dump_scalar(law.diagnostics.V0_int),
            "pass": law.diagnostics.passed,
        },
        "orlicz": {"p": args.p, "phi_integral": ev.phi_integral, "f_norm": ev.f_norm},
        "two_path_residual": two_path,
    }
    if args.format == "csv":
        rows = [(t, v.real, v.imag, abs(v)) for t, v in zip(theta, law.cf(theta))]
        run.emit("cf.csv", to_csv(CF_HEADER, rows))
    else:
        run.emit("law.json", dumps(doc))


def cmd_orlicz(args, run):
    model = load_model(_read_json(args.model), args.backend)
    kw = {} if args.tol is None else {"tol": args.tol}
    ev = orlicz_norm(model, _integrand(args, model), args.p, **kw)
    run.emit("orlicz.json", dumps({"p": ev.p, "phi_integral": ev.phi_integral, "f_norm": ev.f_norm}))


def cmd_probe(args, run):
    model = load_model(_read_json(args.model), args.backend)
    f = _integrand(args, model)
    scales = [float(s) for s in args.scales.split(",")]
    seq = [f.scaled(c) for c in scales]
    rep = continuity_probe(model, seq, args.p, _theta(args))
    run.residuals.update(
        {"norm_vanishes": rep.norm_vanishes, "phi_vanishes": rep.phi_vanishes, "cf_vanishes": rep.cf_vanishes}
    )
    if args.format == "json":
        run.emit("probe.json", dumps({"rows": [list(r) for r in rep.rows], **run.residuals}))
    else:
        run.emit("probe.csv", to_csv(("n", "norm", "phi_integral", "cf_dev"), rep.rows))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--backend", choices=("rational", "float"), default="rational")
    common.add_argument("--tol", type=float, default=None, help="override the operation's default tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--theta-grid", type=int, default=64, dest="theta_grid")
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default=None)

    parser = _Parser(prog="qidm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qidm {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("decompose", parents=[common], help="Jordan split and total variation of measures")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_decompose, inputs=("input",))

    p = sub.add_parser("disintegrate", parents=[common], help="variation measure and kernels of a bimeasure")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=cmd_disintegrate, inputs=("input",))

    for name, func, helptext in (
        ("qid-check", cmd_qid_check, "zero test for the cf of a lattice pmf"),
        ("extract-triplet", cmd_extract_triplet, "signed Levy-Khintchine triplet of a lattice pmf"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--pmf", required=True)
        p.add_argument("--grid-size", type=int, default=None, dest="grid_size")
        p.set_defaults(func=func, inputs=("pmf",))

    p = sub.add_parser("model", parents=[common], help="validate a random-measure model, its cf, or sample it")
    p.add_argument("action", choices=("validate", "cf", "sample"))
    p.add_argument("--model", required=True)
    p.add_argument("--set", default=None, help="comma-separated atoms (default: the last level)")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--strict", action="store_true", help="reject triplets whose candidate cf exceeds 1")
    p.set_defaults(func=cmd_model, inputs=("model",))

    for name, func, helptext in (
        ("integrate", cmd_integrate, "law of the integral of a step function"),
        ("orlicz", cmd_orlicz, "Musielak-Orlicz F-norm of an integrand"),
        ("probe", cmd_probe, "continuity table along a scaled sequence of integrands"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--model", required=True)
        p.add_argument("--f", required=True)
        p.add_argument("--p", type=float, default=0.0)
        if name == "probe":
            p.add_argument("--scales", default="1,1e-1,1e-2,1e-3,1e-4,1e-5,1e-6")
        p.set_defaults(func=func, inputs=("model", "f"))
    return parser


def _help_for(parser, argv) -> str:
    """Help of the named subcommand when there is one, else the top-level help."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for token in argv:
        if token in sub.choices:
            return sub.choices[token].format_help()
    return parser.format_help()


def main(argv=None, stdout=None, stderr=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("qidm: error: a subcommand is required\n")
    except UsageError as exc:
        stderr.write(str(exc))
        stderr.write(_help_for(parser, argv))
        return EXIT_USAGE
    run = Run(args, ["qidm", *argv], [getattr(args, k) for k in args.inputs])
    try:
        args.func(args, run)
        run.write(stdout)
    except InconclusiveError as exc:
        stderr.write(f"inconclusive: {exc}\n")
        return EXIT_INCONCLUSIVE
    except (QidmError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
