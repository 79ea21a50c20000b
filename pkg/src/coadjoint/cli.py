"""Command-line interface: one batch command per capability, deterministic JSON/CSV output.

Exit codes: 0 success, 2 validation error, 3 numerical failure.  Failures
print a single-line JSON record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from . import __version__
from .errors import CoadjointError, ValidationError


@dataclass
class RunConfig:
    command: str
    params: dict
    output: Optional[str] = None
    format: str = "json"
    seed: int = 0

    def header(self) -> dict:
        return {"command": self.command, "params": self.params, "format": self.format,
                "seed": self.seed, "version": __version__}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _clean(x):
    """Make values JSON-safe: Fractions become strings, non-finite floats strings."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def dumps(doc) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# -- commands ----------------------------------------------------------------


def cmd_basis(cfg: RunConfig, a) -> str:
    from .s3basis import axisymmetric_filter, build_grading, grading_to_json, verify_grading

    doc = {"header": cfg.header()}
    if a.axisymmetric:
        elements = axisymmetric_filter(a.k)
    else:
        elements = build_grading(a.k, verify=a.verify)
    doc["count"] = len(elements)
    doc["curl_eigenvalues"] = sorted({el.curl_eig for el in elements})
    if a.verify:
        doc["report"] = verify_grading(a.k).to_json()
    if a.elements:
        doc["elements"] = json.loads(grading_to_json(elements))
    return dumps(doc)


def cmd_spectrum(cfg: RunConfig, a) -> str:
    from .spectra import make_catalog

    cat = make_catalog(a.geometry, a.r, a.cutoff, a.labeling)
    if cfg.format == "csv":
        return cat.to_csv()
    entries = [
        {"family": e.family, "k_or_l": e.level, "m": e.m, "q": str(e.q), "d": e.d, "e": str(e.e),
         "re": e.value.real, "im": e.value.imag, "multiplicity": e.multiplicity}
        for e in cat.entries
    ]
    return dumps({"header": cfg.header(), "catalog": cat.config(), "entries": entries})


def cmd_schatten(cfg: RunConfig, a) -> str:
    from .spectra import make_catalog, schatten_report

    rep = schatten_report(make_catalog(a.geometry, a.r, a.cutoff, a.labeling), a.p)
    return dumps({"header": cfg.header(), "report": rep.to_json()})


def cmd_threshold(cfg: RunConfig, a) -> str:
    from .spectra import spectral_threshold

    p = spectral_threshold(a.dim, a.r)
    if cfg.format == "json":
        return dumps({"header": cfg.header(), "threshold": str(p), "value": float(p)})
    return f"{p}\n"


_NONCOMPACT_DEFAULT_R = {"sqg": "-1/2", "hopf": "0", "s2": "-1/2", "s3": "0"}


def cmd_noncompact(cfg: RunConfig, a) -> str:
    from .spectra import make_catalog, noncompactness

    r = a.r if a.r is not None else _NONCOMPACT_DEFAULT_R.get(a.geometry.lower(), "0")
    rep = noncompactness(make_catalog(a.geometry, r, 1), eps_values=a.eps, density_level=a.level)
    return dumps({"header": cfg.header(), "report": rep.to_json()})


def cmd_density(cfg: RunConfig, a) -> str:
    from .spectra import nondecay_density

    rho, limit = nondecay_density(a.l, a.eps)
    return dumps({"header": cfg.header(), "rho": rho, "limit": limit, "l": a.l, "eps": a.eps})


def _load(a):
    from .torus.lattice import load_state

    return load_state(a.init, N=a.N, r=a.r)


def cmd_geodesic(cfg: RunConfig, a) -> str:
    from .torus.geodesic import integrate_geodesic
    from .torus.scan import _sigma, log_regularized_det, signed_exp

    u0 = _load(a)
    series = {0.0: (1.0, 1.0)}

    def observe(t, y):
        ph, la = log_regularized_det(y[2], y[3], 3)
        series[t] = (signed_exp(ph.real, la), float(_sigma(y[2])))

    traj = integrate_geodesic(u0, a.tmax, a.dt, matrix_stride=a.stride, observer=observe)
    if cfg.format == "csv":
        rows = ((t, e, z, *series.get(t, (float("nan"),) * 2)) for t, e, z in traj.time_series_rows())
        return _csv(rows, ["t", "energy", "enstrophy", "det", "sigma_min"])
    return dumps({"header": cfg.header(), "diagnostics": traj.diagnostics_json(),
                  "final_state": traj.final.to_json()})


def cmd_scan(cfg: RunConfig, a) -> str:
    from .torus.scan import conjugate_scan

    rep = conjugate_scan(_load(a), a.tmax, a.dt, p=a.p)
    if cfg.format == "csv":
        return _csv(rep.rows(), ["t", "energy", "enstrophy", "det", "sigma_min"])
    return dumps({"header": cfg.header(), "report": rep.to_json()})


def cmd_chart(cfg: RunConfig, a) -> str:
    from .torus.chart import chart_solve

    sol = chart_solve(_load(a), tol=a.tol, grid=a.grid, max_iter=a.max_iter)
    return dumps({"header": cfg.header(), "solution": sol.to_json()})


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--output", "-o", help="write the artifact to this path instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default=None)
    common.add_argument("--seed", type=int, default=0, help="seed echoed into the header")

    p = _Parser(prog="coadjoint", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("basis", parents=[common], help="curl eigenfield basis on S^3")
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--verify", action="store_true")
    b.add_argument("--axisymmetric", action="store_true")
    b.add_argument("--elements", action="store_true", help="include the serialized elements")
    b.set_defaults(func=cmd_basis)

    for name, func, helptext in (("spectrum", cmd_spectrum, "eigenvalue catalog"),
                                 ("schatten", cmd_schatten, "Schatten p-sum and verdict")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--geometry", required=True)
        s.add_argument("--r", required=True)
        s.add_argument("--cutoff", type=int, required=True)
        s.add_argument("--labeling", choices=["verified", "sets"], default="verified")
        if name == "schatten":
            s.add_argument("--p", required=True)
        s.set_defaults(func=func)

    t = sub.add_parser("threshold", parents=[common], help="critical Schatten exponent")
    t.add_argument("--dim", type=int, required=True, choices=[2, 3])
    t.add_argument("--r", required=True)
    t.set_defaults(func=cmd_threshold)

    n = sub.add_parser("noncompact", parents=[common], help="essential radius and non-compactness")
    n.add_argument("--geometry", required=True, help="sqg, hopf, s2 or s3")
    n.add_argument("--r", default=None)
    n.add_argument("--eps", type=float, nargs="*", default=[0.2, 0.5, 1.0])
    n.add_argument("--level", type=int, default=10_000)
    n.set_defaults(func=cmd_noncompact)

    d = sub.add_parser("density", parents=[common], help="density of non-decaying SQG eigenvalues")
    d.add_argument("--l", type=int, required=True)
    d.add_argument("--eps", type=float, required=True)
    d.set_defaults(func=cmd_density)

    for name, func in (("geodesic", cmd_geodesic), ("conjugate-scan", cmd_scan)):
        g = sub.add_parser(name, parents=[common])
        g.add_argument("--init", required=True, help="initial-data JSON file")
        g.add_argument("--tmax", type=float, required=True)
        g.add_argument("--N", type=int, default=None)
        g.add_argument("--r", type=float, default=None)
        g.add_argument("--dt", type=float, default=0.01)
        if name == "geodesic":
            g.add_argument("--stride", type=int, default=10, help="store matrices every STRIDE steps")
        else:
            g.add_argument("--p", type=int, default=3, help="order of the regularized determinant")
        g.set_defaults(func=func)

    c = sub.add_parser("chart", parents=[common], help="volume-preserving chart solver")
    c.add_argument("--init", required=True)
    c.add_argument("--tol", type=float, default=1e-10)
    c.add_argument("--grid", type=int, default=64)
    c.add_argument("--max-iter", type=int, default=50)
    c.add_argument("--N", type=int, default=None)
    c.add_argument("--r", type=float, default=None)
    c.set_defaults(func=cmd_chart)
    return p


def run(argv: List[str]) -> int:
    """Execute one command; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
        fmt = args.format or ("text" if args.command == "threshold" else "json")
        if fmt == "csv" and args.command not in ("spectrum", "geodesic", "conjugate-scan"):
            raise ValidationError(f"{args.command} has no CSV output")
        params = {k: v for k, v in sorted(vars(args).items())
                  if k not in ("func", "command", "output", "format", "seed")}
        cfg = RunConfig(args.command, params, args.output, fmt, args.seed)
        text = args.func(cfg, args)
        if cfg.output:
            with open(cfg.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except CoadjointError as exc:
        sys.stderr.write(json.dumps(_clean(exc.record()), sort_keys=True) + "\n")
        return exc.exit_code
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": "validation", "message": str(exc)}, sort_keys=True) + "\n")
        return 2
    except (ArithmeticError, RuntimeError) as exc:
        sys.stderr.write(json.dumps({"error": "numerical", "message": str(exc)}, sort_keys=True) + "\n")
        return 3


def parse_artifact(text: str):
    """Re-parse a JSON artifact into the type that produced it."""
    from .s3basis import BasisElement, GradingReport
    from .spectra import NonCompactnessReport, SchattenReport, make_catalog
    from .torus.scan import ConjugatePoint

    doc = json.loads(text)
    cmd = doc["header"]["command"]
    if cmd == "basis":
        out = {}
        if "report" in doc:
            out["report"] = GradingReport.from_json(doc["report"])
        if "elements" in doc:
            out["elements"] = [BasisElement.from_json(e) for e in doc["elements"]]
        return out
    if cmd == "schatten":
        return SchattenReport.from_json(doc["report"])
    if cmd == "noncompact":
        return NonCompactnessReport.from_json(doc["report"])
    if cmd == "spectrum":
        c = doc["catalog"]
        return make_catalog(c["geometry"], c["r"], c["cutoff"], c["labeling"])
    if cmd == "conjugate-scan":
        return [ConjugatePoint.from_json(z) for z in doc["report"]["zeros"]]
    if cmd == "threshold":
        return Fraction(doc["threshold"])
    return doc


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
