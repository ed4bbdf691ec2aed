"""Command-line frontend.

    unimeas integrate --config cfg.json [--k N] [--out PATH]
    unimeas demo NAME [--config cfg.json] [--k N] [--depth N] [--seed N] [--budget N] [--out PATH]

Output is JSON with sorted keys; every number is an exact dyadic
{mantissa, exponent} or an interval of two such.  Exit status is 0 on
success, 1 when a certificate check fails and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from typing import Callable

from .basis import LinComb, One, bounds, min_of, parse_sexpr
from .coding import parse_dyadic
from .errors import BudgetExceeded, UnimeasError
from .exact import DyadicInterval, dyadic_json, pow2
from .measures import (
    MeasureOracle,
    ZeroMeasure,
    bernoulli,
    dirac,
    lebesgue_unit,
    measure_from_descriptor,
    measure_metric_q,
    mixture,
    uniform_cantor,
)
from .names import XiMeasure
from .randtests import (
    MartingaleTest,
    Unverified,
    integral_to_sequential,
    kurtz_level,
    martingale_check,
    martingale_identity_holds,
    point_kurtz_test_cantor,
    point_kurtz_test_unit,
    sum_sequential_to_integral,
    support_test,
    tent_test,
    zero_measure_test,
    zeros_cylinder_test,
)
from .semicomp import approx_family, calibrate, normalize, write_transcript
from .spaces import CANTOR, UNIT, name_from_descriptor, space_from_descriptor, unit_index, unit_value, validate_name_prefix

MAX_K = 40
DEMOS = ("zero-measure", "support", "tent", "seqtest", "kurtz", "martingale", "xi-sample", "extend-pipeline")


class UsageError(Exception):
    pass


def _iv(lo, hi, prec: int) -> dict:
    return DyadicInterval.outward(Fraction(lo), Fraction(hi), prec).to_json()


def _dy(q) -> dict:
    q = Fraction(q)
    if q.denominator & (q.denominator - 1):
        return DyadicInterval.outward(q, q, 60).to_json()
    return dyadic_json(q)


class Checker:
    """Collects named checks; the first failure is reported."""

    def __init__(self) -> None:
        self.checks: list[dict] = []

    def __call__(self, name: str, ok: bool, **detail) -> bool:
        self.checks.append({"check": name, "ok": bool(ok), **detail})
        return ok

    @property
    def first_failure(self) -> dict | None:
        for c in self.checks:
            if not c["ok"]:
                return c
        return None


# ---------------------------------------------------------------------------
# integrate

def cmd_integrate(cfg: dict, args) -> dict:
    if "measure" not in cfg or "function" not in cfg:
        raise UsageError("integrate config needs 'measure' and 'function'")
    mu = measure_from_descriptor(cfg["measure"])
    f = parse_sexpr(str(cfg["function"]), mu.space)
    k = args.k if args.k is not None else int(cfg.get("k", 16))
    _check_k(k)
    iv = mu.integrate(f, k)
    return {"integral": iv.to_json(), "k": k}


# ---------------------------------------------------------------------------
# demos

def _unit_point(text):
    return UNIT.basic_name(unit_index(parse_dyadic(str(text))))


def _measure(cfg: dict, key: str, default: MeasureOracle) -> MeasureOracle:
    return measure_from_descriptor(cfg[key]) if key in cfg else default


def demo_zero_measure(cfg, args, check: Checker) -> dict:
    k, depth = args.k, args.depth
    t = zero_measure_test()
    fixtures = [
        ("probability", uniform_cantor(), Fraction(1)),
        ("quarter", mixture([Fraction(1, 4)], [uniform_cantor()]), Fraction(1, 2)),
    ]
    x = CANTOR.basic_name(0)
    rows = []
    for label, mu, root in fixtures:
        lo, hi = t.integral_q(mu, k)
        check(f"integral {label}", lo <= root <= hi)
        series = [t.lsc(mu).lower(x, n + 1) for n in range(depth)]
        rows.append({"measure": label, "integral": _iv(lo, hi, k + 2),
                     "deficiency": [_dy(v) for v in series]})
    zero = ZeroMeasure(CANTOR)
    series = [t.lsc(zero).lower(x, n + 1) for n in range(depth)]
    check("zero measure is infinite", all(b > a for a, b in zip(series, series[1:])))
    rows.append({"measure": "zero", "integral": _iv(*t.integral_q(zero, k), k + 2),
                 "deficiency": [_dy(v) for v in series]})
    if args.csv:
        _write_csv(args.csv, t.lsc(fixtures[1][1]).transcript(x, depth))
    return {"fixtures": rows}


def demo_support(cfg, args, check: Checker) -> dict:
    center = UNIT.index_of(str(cfg.get("center", "1/4")))
    radius = parse_dyadic(str(cfg.get("radius", "1/8")))
    t = support_test(UNIT, center, radius)
    y = UNIT.name(parse_dyadic(str(cfg.get("outside", "3/4"))))
    mu = dirac(y)
    stage_integrals = [mu.integrate_q(t.stage(mu, n), args.k) for n in range(args.depth)]
    check("stage integrals vanish", all(hi == 0 for _, hi in stage_integrals))
    at_center = [t.lsc(mu).lower(UNIT.basic_name(center), n + 1) for n in range(args.depth)]
    # the inner ball approximant is the zero function until 2^(1-n) < radius
    live = next(n for n in range(1, 64) if pow2(1 - n) < radius) + 1
    check("center value nondecreasing", all(b >= a for a, b in zip(at_center, at_center[1:])))
    if args.depth >= live:
        check("center value grows", at_center[-1] >= args.depth - 1)
    far = UNIT.name(unit_value(center) + radius if unit_value(center) + radius <= 1 else 0)
    outside = t.lsc(mu).lower(far, args.depth)
    check("boundary value is 0", outside == 0)
    return {
        "ball": {"center": center, "radius": _dy(radius)},
        "live_from_depth": live,
        "stage_integrals": [_iv(lo, hi, args.k + 2) for lo, hi in stage_integrals],
        "center_deficiency": [_dy(v) for v in at_center],
    }


def demo_tent(cfg, args, check: Checker) -> dict:
    x0 = _unit_point(cfg.get("target", "1/2"))
    y = _unit_point(cfg.get("support", "0"))
    mu = dirac(y)
    t = tent_test(x0)
    lsc = t.lsc(mu)
    rows = lsc.transcript(x0, args.depth, args.k)
    series = []
    best = Fraction(0)
    for _, lo, _ in rows:
        best = max(best, lo)
        series.append(best)
    check("deficiency strictly increasing", all(b > a for a, b in zip(series, series[1:])))
    lo, hi = t.integral_q(mu, args.k)
    check("integral at most 2", hi <= 2 + pow2(-args.k))
    if args.csv:
        _write_csv(args.csv, rows)
    return {"deficiency": [_dy(v) for v in series], "integral": _iv(lo, hi, args.k + 2)}


def demo_seqtest(cfg, args, check: Checker) -> dict:
    levels = min(args.depth, 8)
    fixtures = [
        ("cylinder-sum", sum_sequential_to_integral(zeros_cylinder_test()), uniform_cantor(), CANTOR.basic_name(0)),
        ("tent", tent_test(_unit_point("1/2")), lebesgue_unit(), _unit_point("1/2")),
    ]
    out = []
    for label, t, mu, point in fixtures:
        seq = integral_to_sequential(t, budget=args.budget)
        certs = []
        for n in range(levels + 1):
            level = seq.null_level(mu, n)
            lo, hi = level.level_measure.query_q(10)
            check(f"{label} level {n} measure", hi <= pow2(-n) + pow2(-12), n=n)
            check(f"{label} level {n} width", hi - lo <= pow2(-10), n=n)
            cert = level.to_json(10)
            if n <= 5 and label == "cylinder-sum":
                member = seq.level(mu, n).certify_member(point, 256)
                check(f"{label} level {n} contains the point", member, n=n)
                cert["contains_point"] = member
            certs.append(cert)
        out.append({"fixture": label, "levels": certs})
    return {"fixtures": out}


def demo_kurtz(cfg, args, check: Checker) -> dict:
    fixture = cfg.get("fixture", "cantor-point")
    levels = min(args.depth, 8)
    if fixture == "cantor-point":
        mu = uniform_cantor()
        P = point_kurtz_test_cantor(lambda j: 0, label="{0^inf}")
        point = CANTOR.basic_name(0)
    elif fixture == "atom":
        point = UNIT.name(Fraction(1, 2))
        mu = dirac(point)
        P = point_kurtz_test_unit(Fraction(1, 2))
    else:
        raise UsageError(f"unknown kurtz fixture {fixture!r}")
    out = []
    for n in range(levels + 1):
        res = kurtz_level(P, mu, n, budget=args.budget)
        if isinstance(res, Unverified):
            out.append(res.to_json())
            check(f"level {n} verified", False, n=n, message=res.message, certificate=res.to_json())
            break
        lo, hi = res.measure_q(12)
        check(f"level {n} measure", hi <= pow2(-n) + pow2(-12), n=n)
        check(f"level {n} contains P", res.open_set.contains(point), n=n)
        out.append(res.to_json(12))
    return {"fixture": fixture, "levels": out}


def _rate(cfg) -> Callable[[int], Fraction]:
    a = parse_dyadic(str(cfg.get("rate_slope", "1")))
    b = parse_dyadic(str(cfg.get("rate_offset", "1")))
    return lambda n: a * n + b


def demo_martingale(cfg, args, check: Checker) -> dict:
    mu = _measure(cfg, "mu", uniform_cantor())
    nu = _measure(cfg, "nu", uniform_cantor())
    bits = str(cfg.get("x", "0" * args.depth))
    if len(bits) < args.depth:
        bits = bits + "0" * (args.depth - len(bits))
    rate = _rate(cfg)
    rng = random.Random(args.seed)
    sigmas = [tuple(rng.getrandbits(1) for _ in range(rng.randrange(0, 16))) for _ in range(50)]
    check("martingale identity", all(martingale_identity_holds(nu, s) for s in sigmas))
    uniform = martingale_check(MartingaleTest(lambda m: nu, rate), mu, [int(c) for c in bits], args.depth)
    blind = martingale_check(MartingaleTest.blind_test(nu, rate), mu, [int(c) for c in bits], args.depth)
    check("blind verdict reproduced", uniform.verdict == blind.verdict and uniform.argmax == blind.argmax)
    if cfg.get("expect_pass", True):
        check("no exceedance", not uniform.exceedances, exceedances=uniform.exceedances)
    return {"uniform": uniform.to_json(), "blind": blind.to_json(), "identity_cylinders": len(sigmas)}


def demo_xi_sample(cfg, args, check: Checker) -> dict:
    space = space_from_descriptor(cfg.get("space", {"kind": "unit"}))
    z = name_from_descriptor(space, cfg.get("target", {"value": "3/8"}))
    samples = int(cfg.get("samples", 10))
    xi = XiMeasure(space, z)
    lo, hi = xi.coordinate_mass_q(0, 64, 12)
    check("coordinate mass", 1 - pow2(-10) <= hi and lo <= 1 + pow2(-10))
    out = []
    for j in range(samples):
        h = xi.sample_name(args.seed + j)
        prefix = h.prefix(args.depth)
        ok = validate_name_prefix(space, h, args.depth).consistent
        check(f"sample {j} is a name", ok)
        out.append(prefix)
    return {"samples": out, "seed": args.seed, "depth": args.depth,
            "coordinate_mass": _iv(lo, hi, 14)}


def demo_extend_pipeline(cfg, args, check: Checker) -> dict:
    """Calibrate on K, extend over measures by McShane, then rescale."""
    k = min(args.k, 12)
    K = [("uniform", uniform_cantor()), ("bernoulli(1/4)", bernoulli(Fraction(1, 4)))]
    queries = list(K) + [("mixture", mixture([Fraction(1, 2), Fraction(1, 2)], [K[0][1], K[1][1]])),
                         ("zero", ZeroMeasure(CANTOR))]
    t = normalize(tent_test(CANTOR.basic_name(0)))
    rs = [parse_dyadic(str(r)) for r in cfg.get("r", ["1/4", "1/2"])]
    families = {}
    for label, mu in K:
        families[label] = calibrate(approx_family(t.lsc(mu), mu), sup=Fraction(1), prec=k + 8)
    # Lipschitz bound in the measure argument from sup h and the separation of K
    sep = measure_metric_q(K[0][1], K[1][1], k)[0]
    out = []
    for r in rs:
        hs = {label: LinComb(((Fraction(1), families[label].at(r)), (r, One()))) for label, _ in K}
        top = max(bounds(h)[1] for h in hs.values())
        L = pow2(max(0, (top / sep).__ceil__().bit_length()))
        for qlabel, nu in queries:
            terms = []
            dists = {}
            for label, mu in K:
                d_lo, d_hi = measure_metric_q(nu, mu, k)
                dists[label] = _iv(d_lo, d_hi, k + 2)
                d_up = DyadicInterval.outward(d_lo, d_hi, k + 2).hi_q
                terms.append(LinComb(((Fraction(1), hs[label]), (L * d_up, One()))))
            hbar = min_of(terms)
            norm = nu.norm_q(k)
            if norm[1] == 0:
                # near the zero measure the rescaled test is set to 2r
                hhat_integral = (Fraction(0), Fraction(0))
            else:
                i_lo, i_hi = nu.integrate_q(hbar, k)
                scale_lo, scale_hi = 2 * norm[0] * r / i_hi, 2 * norm[1] * r / i_lo
                hhat_integral = (scale_lo * i_lo, scale_hi * i_hi)
            check(f"rescaled integral r={r} {qlabel}",
                  hhat_integral[0] <= 2 * r * norm[1] and 2 * r * norm[0] <= hhat_integral[1])
            if qlabel in hs:
                own = nu.integrate_q(hs[qlabel], k)
                ext = nu.integrate_q(hbar, k)
                check(f"agreement on K r={r} {qlabel}", abs(ext[0] - own[0]) <= L * pow2(-k) + pow2(-k))
            out.append({"r": _dy(r), "measure": qlabel, "distances": dists,
                        "lipschitz": _dy(L), "integral": _iv(*hhat_integral, k + 2)})
    return {"rows": out}


DEMO_FNS = {
    "zero-measure": demo_zero_measure,
    "support": demo_support,
    "tent": demo_tent,
    "seqtest": demo_seqtest,
    "kurtz": demo_kurtz,
    "martingale": demo_martingale,
    "xi-sample": demo_xi_sample,
    "extend-pipeline": demo_extend_pipeline,
}


def cmd_demo(name: str, cfg: dict, args) -> tuple[dict, dict | None]:
    if name not in DEMO_FNS:
        raise UsageError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    check = Checker()
    report = DEMO_FNS[name](cfg, args, check)
    report = {"demo": name, "k": args.k, "depth": args.depth, "seed": args.seed, **report,
              "checks": check.checks}
    fail = check.first_failure
    report["status"] = "ok" if fail is None else "fail"
    return report, fail


# ---------------------------------------------------------------------------
# plumbing

def _check_k(k: int) -> None:
    if not 0 <= k <= MAX_K:
        raise UsageError(f"precision must be between 0 and {MAX_K}")


def _write_csv(path: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_transcript(rows, fh)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"bad JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--k", type=int, default=None, help="precision (at most 40)")
    common.add_argument("--depth", type=int, default=None, help="stages or name depth")
    common.add_argument("--seed", type=int, default=None, help="64-bit seed")
    common.add_argument("--budget", type=int, default=None, help="step budget for searches")
    common.add_argument("--out", help="write JSON here instead of stdout")
    common.add_argument("--csv", help="write the stage transcript as CSV (tent, zero-measure)")
    p = argparse.ArgumentParser(prog="unimeas", description="Exact measure oracles and randomness tests.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("integrate", parents=[common], help="integrate a basic function")
    d = sub.add_parser("demo", parents=[common], help="run a built-in demonstration")
    d.add_argument("name", choices=DEMOS)
    return p


def _defaults(args, cfg: dict) -> None:
    for key, default in (("k", 16), ("depth", 8), ("seed", 0), ("budget", 512)):
        if getattr(args, key) is None:
            setattr(args, key, int(cfg.get(key, default)))
    _check_k(args.k)
    if args.depth < 1:
        raise UsageError("depth must be positive")
    if args.budget < 1:
        raise UsageError("budget must be positive")
    if not 0 <= args.seed < 1 << 64:
        raise UsageError("seed must be a 64-bit unsigned integer")


def _emit(obj: dict, path: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if args.command == "integrate":
            if args.k is not None:
                _check_k(args.k)
            _emit(cmd_integrate(cfg, args), args.out)
            return 0
        _defaults(args, cfg)
        report, fail = cmd_demo(args.name, cfg, args)
        _emit(report, args.out)
        if fail is not None:
            sys.stderr.write("check failed: " + json.dumps(fail, sort_keys=True) + "\n")
            if fail.get("message"):
                sys.stderr.write(fail["message"] + "\n")
            return 1
        return 0
    except UsageError as exc:
        sys.stderr.write(f"unimeas: {exc}\n")
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        sys.stderr.write(f"unimeas: malformed input: {exc}\n")
        return 2
    except BudgetExceeded as exc:
        sys.stderr.write(f"unimeas: unverified at budget: {exc}\n")
        return 1
    except UnimeasError as exc:
        sys.stderr.write(f"unimeas: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
