"""``kproj`` command-line front end.

Every command prints sorted JSON (or CSV where a point dump makes sense).
Exit codes: 0 on success, 2 for invalid input, 1 when a numerical contract
fails.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys

import numpy as np

from .config import DEFAULTS
from .domain import Ball, domain_from_json, dual_sample
from .errors import NumericalError, ValidationError
from .kmatrix import KMatrix
from .kscalar import Field
from .projspace import ProjMap, ProjPoint, point_from_json

PROG = "kproj"


# parsing helpers -------------------------------------------------------------------

def _load_json(text: str, what: str):
    if text.startswith("@"):
        try:
            with open(text[1:], encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read {what} file: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what} is not valid JSON: {exc}") from None


def _field(args) -> Field:
    return Field.parse(args.field)


def _matrix(text: str, field: Field) -> KMatrix:
    payload = _load_json(text, "matrix")
    if isinstance(payload, list):
        payload = {"field": field.value, "entries": payload}
    return KMatrix.from_json(payload)


def _point(text: str, field: Field) -> ProjPoint:
    return point_from_json(_load_json(text, "point"), field)


def _domain(args):
    if getattr(args, "domain", None):
        return domain_from_json(_load_json(args.domain, "domain"))
    return Ball(_field(args), args.dim)


def _clean(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return obj


def _rows_csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _coords_rows(reps, field: Field):
    r = field.r
    n = reps[0].shape[0] if len(reps) else 0
    header = [f"x{i}_{c}" for i in range(n) for c in range(r)]
    return header, [np.asarray(rep)[:, :r].ravel() for rep in reps]


@contextlib.contextmanager
def _tolerance(key: str | None, value: float | None):
    """Temporarily route the global --tol to one documented config key."""
    if key is None or value is None:
        yield
        return
    old = DEFAULTS[key]
    DEFAULTS[key] = float(value)
    try:
        yield
    finally:
        DEFAULTS[key] = old


# which config key --tol overrides, per command
TOL_KEYS = {
    "dist": "certify_tol",
    "dual": "certify_tol",
    "classify": "sigma_tie",
    "iterate": "power_tol",
    "standard-form": "boundary_band",
    "limit-set": "boundary_band",
    "moebius": "sphere_fit",
}


# commands -------------------------------------------------------------------------

def _uniform_pair(field, d, seed):
    from .acceptance import uniform_ball_points

    rng = np.random.default_rng(seed)
    return uniform_ball_points(field, d, 2, rng)


def cmd_dist(args):
    from .hilbert_metric import ball_distance, general_distance

    dom = _domain(args)
    field = dom.field
    if args.p is None or args.q is None:
        if not isinstance(dom, Ball):
            raise ValidationError("--p and --q are required off the ball")
        p, q = _uniform_pair(field, dom.dim, args.seed)
    else:
        p, q = _point(args.p, field), _point(args.q, field)
    n = args.dual_samples or args.samples
    out = {"domain": dom.to_json(), "p": p.to_json(), "q": q.to_json(), "seed": args.seed}
    if isinstance(dom, Ball) and not (args.sampled or args.dual_samples):
        out["result"] = ball_distance(p, q).to_json()
        return out
    dual = dual_sample(dom, n or 2000, seed=args.seed)
    res = general_distance(dom, p, q, dual, seed=args.seed)
    out["result"] = res.to_json()
    out["dual_count"] = dual.count
    if isinstance(dom, Ball):
        out["closed_form"] = ball_distance(p, q).value
    return out


def cmd_classify(args):
    from .dynamics import classify

    return classify(ProjMap(_matrix(args.matrix, _field(args)))).to_json()


def cmd_iterate(args):
    from .dynamics import classify, iterate_orbit

    phi = ProjMap(_matrix(args.matrix, _field(args)))
    p = _point(args.point, phi.field)
    pts = iterate_orbit(phi, p, args.steps)
    if args.format == "csv":
        return _rows_csv(*_coords_rows([x.rep for x in pts], phi.field))
    out = {"orbit": [x.to_json() for x in pts], "steps": args.steps}
    cls = classify(phi)
    out["classification"] = cls.variant.value
    if cls.x_plus is not None:
        from .projspace import proj_distance

        out["distance_to_x_plus"] = [proj_distance(x, cls.x_plus) for x in pts]
    return out


def cmd_standard_form(args):
    from .dynamics import standard_form

    dom = _domain(args)
    phi = ProjMap(_matrix(args.matrix, dom.field))
    return standard_form(dom, phi).to_json()


def cmd_limit_set(args):
    from .dynamics import limit_set_sample, random_biproximal_ball_map

    dom = _domain(args)
    field = dom.field
    if args.generators:
        payload = _load_json(args.generators, "generators")
        if not isinstance(payload, list) or not payload:
            raise ValidationError("--generators takes a nonempty JSON list of matrices")
        gens = [ProjMap(KMatrix.from_json(g if isinstance(g, dict)
                                          else {"field": field.value, "entries": g}))
                for g in payload]
    elif args.random_generators:
        if not isinstance(dom, Ball):
            raise ValidationError("--random-generators needs a ball domain")
        rng = np.random.default_rng(args.seed)
        gens = [random_biproximal_ball_map(field, dom.dim, rng)
                for _ in range(args.random_generators)]
    else:
        raise ValidationError("give --generators or --random-generators")
    p = _point(args.point, field) if args.point else dom.center()
    sample = limit_set_sample(gens, dom, p, depth=args.depth, seed=args.seed, words=args.words)
    if args.format == "csv":
        return sample.to_csv(field)
    out = sample.to_json()
    out["generators"] = [g.to_json() for g in gens]
    return out


def cmd_dual(args):
    dom = _domain(args)
    ds = dual_sample(dom, args.samples or 1000, seed=args.seed)
    if args.format == "csv":
        return _rows_csv(*_coords_rows(ds.array, dom.field))
    r = dom.field.r
    return {"domain": dom.to_json(), "seed": ds.seed, "requested": ds.requested,
            "count": ds.count, "exact": ds.exact, "complete": ds.complete,
            "warnings": list(ds.warnings),
            "functionals": [f[:, :r].tolist() for f in ds.array]}


def _moebius_map(args, field, rng):
    from .moebius import MoebiusMap
    from .kmatrix import random_kmatrix

    if args.matrix:
        return MoebiusMap(_matrix(args.matrix, field))
    if args.random:
        return MoebiusMap(random_kmatrix(field, 2, 2, rng))
    raise ValidationError("give --matrix or --random")


def cmd_moebius(args):
    from .kscalar import random_scalars
    from .moebius import (
        ExtendedScalar, SpherePlane, apply, generate_from_UV, halfspace_aut_membership,
        map_sphereplane,
    )

    field = _field(args)
    rng = np.random.default_rng(args.seed)
    if args.action == "apply":
        m = _moebius_map(args, field, rng)
        if args.z is None:
            raise ValidationError("apply needs --z")
        z = ExtendedScalar.from_json(field, _load_json(args.z, "scalar"))
        return {"map": m.to_json(), "z": z.to_json(), "image": apply(m, z).to_json()}
    if args.action == "map-sphere":
        m = _moebius_map(args, field, rng)
        if args.sphere:
            S = SpherePlane.from_json(_load_json(args.sphere, "sphere"))
        else:
            S = SpherePlane.sphere(field, random_scalars(field, rng), float(rng.uniform(0.2, 3.0)))
        img = map_sphereplane(m, S, seed=args.seed)
        return {"map": m.to_json(), "input": S.to_json(), "image": img.to_json()}
    # check-halfspace
    if args.word:
        word = _load_json(args.word, "word")
        if not isinstance(word, list):
            raise ValidationError("--word takes a JSON list of [\"U\"|\"V\", scalar] pairs")
        m = generate_from_UV([(str(k), ExtendedScalar.from_json(field, w).scalar()) for k, w in word],
                             field)
    else:
        m = _moebius_map(args, field, rng)
    tol = args.tol if args.tol is not None else 1e-12
    rep = halfspace_aut_membership(m, samples=args.samples or 1000, seed=args.seed, tol=tol)
    return {"map": m.to_json(), "report": rep.to_json()}


def cmd_verify(args):
    if args.show_config:
        return {"config": dict(DEFAULTS)}
    from .acceptance import run_all

    only = set(args.criteria) if args.criteria else None
    results = run_all(args.seed, only)
    args._verify_lines = [r.line() for r in results]
    args._verify_failed = not all(r.passed for r in results)
    return {"criteria": [r.to_json() for r in results],
            "passed": sum(r.passed for r in results), "total": len(results)}


# parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", default="c", choices=["r", "c", "h", "R", "C", "H"],
                        help="scalar field (default c)")
    common.add_argument("--dim", type=int, default=2, help="projective dimension d (default 2)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=None, help="sample count for sampled checks")
    common.add_argument("--tol", type=float, default=None,
                        help="override the command's main tolerance (see verify --show-config)")
    common.add_argument("--out", default=None, help="write the payload here instead of stdout")
    common.add_argument("--format", default="json", choices=["json", "csv"])

    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", parents=[common], help="dual-set distance C(p, q)")
    p.add_argument("--domain", help="domain JSON (default: ball of --field/--dim)")
    p.add_argument("--p")
    p.add_argument("--q")
    p.add_argument("--dual-samples", type=int, default=None)
    p.add_argument("--sampled", action="store_true", help="use the sampled dual even on the ball")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("classify", parents=[common], help="proximality of a matrix")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("iterate", parents=[common], help="normalized orbit of a point")
    p.add_argument("--matrix", required=True)
    p.add_argument("--point", required=True)
    p.add_argument("--steps", type=int, default=20)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("standard-form", parents=[common], help="normal form of a bi-proximal map")
    p.add_argument("--domain")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_standard_form)

    p = sub.add_parser("limit-set", parents=[common], help="sampled limit set of a group")
    p.add_argument("--domain")
    p.add_argument("--generators", help="JSON list of matrices")
    p.add_argument("--random-generators", type=int, default=0)
    p.add_argument("--point")
    p.add_argument("--depth", type=int, default=40)
    p.add_argument("--words", type=int, default=256)
    p.set_defaults(func=cmd_limit_set)

    p = sub.add_parser("dual", parents=[common], help="certified dual sample")
    p.add_argument("--domain")
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("moebius", parents=[common], help="Moebius maps of the extended line")
    p.add_argument("action", choices=["apply", "map-sphere", "check-halfspace"])
    p.add_argument("--matrix")
    p.add_argument("--random", action="store_true", help="random map from --seed")
    p.add_argument("--z", help='scalar JSON or "inf"')
    p.add_argument("--sphere", help="sphere/plane JSON (default: random from --seed)")
    p.add_argument("--word", help='JSON list like [["U", [0, 1]], ["V", [0, -2]]]')
    p.set_defaults(func=cmd_moebius)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--show-config", action="store_true")
    p.add_argument("--criteria", type=int, nargs="*")
    p.set_defaults(func=cmd_verify)
    return parser


def _render(payload, fmt: str) -> str:
    if isinstance(payload, str):
        return payload
    if fmt == "csv":
        raise ValidationError("this command has no CSV form")
    return json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"


def main(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    key = TOL_KEYS.get(args.command)
    if args.command == "moebius" and args.action == "check-halfspace":
        key = None  # passed straight to the membership test
    try:
        with _tolerance(key, args.tol):
            payload = args.func(args)
            text = _render(payload, args.format)
    except ValidationError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"{PROG}: numerical failure: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    if getattr(args, "_verify_lines", None) is not None:
        for line in args._verify_lines:
            print(line, file=stdout)
        return 1 if args._verify_failed else 0
    if not args.out:
        stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
