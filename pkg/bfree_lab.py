#!/usr/bin/env python3
"""
B-free approximation lab command line
Runs every lab operation and writes deterministic JSON (or CSV) to stdout or --out
"""

import csv
import io
import json
import logging
import random
import sys
from dataclasses import replace
from functools import wraps
from typing import List, Dict, Any, Optional

import click
from gmpy2 import mpq
from mpmath import nstr

from cf_engine import Enclosure, Verdict, cf_of_rational, convergents_from_quotients, legendre_filter, quotients_of_rational
from dimension_lab import block_table, cover_series, critical_exponent, default_s_grid, theoretical_dimension
from exact_kernel import to_rational
from hyperplane_lab import (Hyperplane, dependence_threshold, lift, rational_points, transfer_property_test,
                            wstar_point_from_seed)
from lab_config import LabConfig, load_config
from lab_errors import DomainError, InconclusiveError, IterationCapError, LabError
from liouville_builder import ACTIVE, build, irrationality_profile, to_certificate, verify, wstar_evidence
from qfree_sets import (SPEC_GRAMMAR, convergence_exponent, counting_exponent_fit, euler_product_partial,
                        parse_spec, support_primes, verify_free_property)

__version__ = "1.0.0"

SCHEMA = "bfree-lab/1"
EXIT_DOMAIN = 2
EXIT_INCONCLUSIVE = 3

logger = logging.getLogger("bfree_lab")


class LabGroup(click.Group):
    """Root group mapping lab failures to exit codes 2 (domain) and 3 (inconclusive)"""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (InconclusiveError, IterationCapError) as e:
            click.echo(f"inconclusive: {e}", err=True)
            ctx.exit(EXIT_INCONCLUSIVE)
        except LabError as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(EXIT_DOMAIN)


class LabCommand(click.Command):
    """Leaf command whose help ends with the output schema version"""

    def format_epilog(self, ctx, formatter):
        super().format_epilog(ctx, formatter)
        formatter.write_paragraph()
        formatter.write_text(f"Output schema: {SCHEMA}")


def output_options(func):
    """--out, --format and the numeric knobs shared by every leaf command; must sit right under @click.command"""
    @click.option("--out", "-o", type=click.Path(dir_okay=False, writable=True), help="Write to FILE instead of stdout")
    @click.option("--format", "fmt", type=click.Choice(["json", "csv"]), help="Output format, json by default")
    @click.option("--precision", type=click.IntRange(min=1), help="Decimal digits for high-precision values")
    @click.option("--inline-digits", type=click.IntRange(min=1), help="Integers longer than this become prime-power pairs")
    @click.option("--digit-budget", type=click.IntRange(min=1), help="Largest number of digits a construction may reach")
    @wraps(func)
    def wrapper(out, fmt, precision, inline_digits, digit_budget, **kwargs):
        ctx = click.get_current_context()
        overrides = {"precision": precision, "inline_digits": inline_digits, "digit_budget": digit_budget}
        config = replace(ctx.obj, **{name: value for name, value in overrides.items() if value is not None})
        ctx.meta["config"] = config
        ctx.meta["out"] = out
        ctx.meta["format"] = fmt or config.default_format
        return func(**kwargs)
    return wrapper


def current_config() -> LabConfig:
    return click.get_current_context().meta["config"]


def spec_option(func):
    return click.option("--spec", "spec_literal", required=True, help=f"Denominator set: {SPEC_GRAMMAR}")(func)


def emit(document: Dict[str, Any], rows: Optional[List[Dict[str, Any]]] = None):
    """Write a document with the schema tag, or its rows as CSV"""
    ctx = click.get_current_context()
    if ctx.meta.get("format") == "csv":
        if rows is None:
            rows = [{"key": key, "value": json.dumps(value) if isinstance(value, (dict, list)) else value}
                    for key, value in document.items()]
        buffer = io.StringIO()
        if rows:
            writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        text = buffer.getvalue()
    else:
        text = json.dumps({"schema": SCHEMA, **document}, indent=2) + "\n"

    out = ctx.meta.get("out")
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(text, nl=False)


def parse_integers(text: str, what: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"{what} must be comma-separated integers, got {text!r}")


def parse_k(text: str):
    return None if text == "minimal" else parse_integers(text, "k")


@click.group(cls=LabGroup, help=f"Exact Diophantine approximation lab (JSON schema {SCHEMA})")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file")
@click.option("--verbose", "-v", is_flag=True, default=False, help="Log debug messages to stderr")
@click.version_option(version=__version__)
@click.pass_context
def entry_point(ctx, config_path, verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ctx.obj = load_config(config_path)
    except DomainError as e:
        click.echo(f"error: {e}", err=True)
        ctx.exit(EXIT_DOMAIN)


# ---------------------------------------------------------------- cf

@click.group("cf", help="Continued fractions")
def cf_group(): pass


@click.command("expand", cls=LabCommand, help="Canonical expansion of a rational; JSON {a0, quotients}")
@output_options
@click.option("--x", "x", required=True, help="Rational such as 17/12")
def cf_expand(x):
    a0, quotients = quotients_of_rational(x)
    emit({"x": str(to_rational(x)), "a0": str(a0), "quotients": [str(a) for a in quotients]})


@click.command("convergents", cls=LabCommand, help="Convergents of [a0; a1, ..., aS]; JSON {a0, quotients, convergents}")
@output_options
@click.option("--a0", type=int, default=0, show_default=True)
@click.option("--quotients", required=True, help="Comma-separated partial quotients")
@click.option("--terminal", is_flag=True, default=False, help="The expansion is complete")
def cf_convergents(a0, quotients, terminal):
    cf = convergents_from_quotients(a0, parse_integers(quotients, "quotients"), terminal=terminal)
    rows = [{"s": s, "a": str(cf.quotient(s)), "p": str(p_s), "q": str(q_s)}
            for s, (p_s, q_s) in enumerate(zip(cf.p[1:], cf.q[1:]))]
    emit(cf.to_json(), rows)


@click.command("legendre", cls=LabCommand, help="Fractions within 1/(2q^2) of x; JSON {entries, all_convergents}")
@output_options
@click.option("--x", "x", help="Rational x (exact expansion)")
@click.option("--a0", type=int, default=0, show_default=True)
@click.option("--quotients", help="Prefix of x's expansion when x is not given")
@click.option("--q-max", type=click.IntRange(min=1), required=True)
def cf_legendre(x, a0, quotients, q_max):
    if x is not None:
        cf = cf_of_rational(x)
    elif quotients:
        cf = convergents_from_quotients(a0, parse_integers(quotients, "quotients"))
    else:
        raise DomainError("give --x or --quotients")
    entries = legendre_filter(cf, q_max)
    proven = [e for e in entries if e.verdict == Verdict.PROVEN]
    emit({
        "q_max": str(q_max),
        "entries": [e.to_json() for e in entries],
        "all_convergents": all(e.is_convergent for e in proven),
        "inconclusive": sum(1 for e in entries if e.verdict == Verdict.INCONCLUSIVE),
    }, [e.to_json() for e in entries])


# ---------------------------------------------------------------- qset

@click.group("qset", help="Denominator sets")
def qset_group(): pass


@click.command("member", cls=LabCommand, help="Membership of q; JSON {member}")
@output_options
@spec_option
@click.option("--q", "q", type=click.IntRange(min=1), required=True)
def qset_member(spec_literal, q):
    spec = parse_spec(spec_literal)
    emit({"spec": str(spec), "q": str(q), "member": spec.member(q)})


@click.command("verify", cls=LabCommand, help="Check the N*\\Q-free property up to N; JSON {violations, ok}")
@output_options
@spec_option
@click.option("--n", "N", type=click.IntRange(min=1), required=True)
def qset_verify(spec_literal, N):
    emit(verify_free_property(parse_spec(spec_literal), N).to_json())


@click.command("support", cls=LabCommand, help="Support primes up to P; JSON {primes, inconclusive}")
@output_options
@spec_option
@click.option("--p", "P", type=click.IntRange(min=2), required=True)
@click.option("--scan-bound", type=click.IntRange(min=1), help="Largest member scanned for table specs")
def qset_support(spec_literal, P, scan_bound):
    report = support_primes(parse_spec(spec_literal), P, scan_bound or current_config().support_scan_bound)
    emit(report.to_json(), [{"prime": p} for p in report.primes])


@click.command("nu", cls=LabCommand, help="Exponent of convergence; JSON {value, method, diagnostics}")
@output_options
@spec_option
@click.option("--fit-grid", help="Comma-separated N values for a counting fit when nu is not known exactly")
def qset_nu(spec_literal, fit_grid):
    spec = parse_spec(spec_literal)
    exponent = convergence_exponent(spec)
    if exponent.value is None and fit_grid:
        exponent = counting_exponent_fit(spec, parse_integers(fit_grid, "fit grid"))
    document = exponent.to_json()
    if exponent.method == "counting-fit":
        document["value"] = f"{exponent.value:.6f}"
    emit(document)


@click.command("euler", cls=LabCommand, help="Prime sum, member sum and Euler product truncated at P")
@output_options
@spec_option
@click.option("--nu", required=True, help="Exponent, a positive rational")
@click.option("--p", "P", type=click.IntRange(min=2), required=True)
def qset_euler(spec_literal, nu, P):
    emit(euler_product_partial(parse_spec(spec_literal), nu, P, current_config().precision).to_json())


# ---------------------------------------------------------------- liouville

def construction_options(func):
    @click.option("--p0", type=int, default=2, show_default=True, help="Prime of even-indexed denominators")
    @click.option("--p1", type=int, default=3, show_default=True, help="Prime of odd-indexed denominators")
    @click.option("--alpha1", type=click.IntRange(min=1), default=1, show_default=True)
    @click.option("--steps", type=click.IntRange(min=1), default=5, show_default=True, help="Build q_1..q_steps")
    @click.option("--k", "k", default="minimal", show_default=True, help="minimal or comma-separated k_2, k_3, ...")
    @wraps(func)
    def wrapper(p0, p1, alpha1, steps, k, **kwargs):
        config = current_config()
        construction = build(p0, p1, alpha1, steps, parse_k(k), config.digit_budget, config.order_iteration_cap)
        return func(construction=construction, **kwargs)
    return wrapper


@click.group("liouville", help="Prime-pair Liouville constructions")
def liouville_group(): pass


@click.command("build", cls=LabCommand, help="Build and verify; JSON certificate {pi0, pi1, alpha, k, a, q, checks}")
@output_options
@construction_options
def liouville_build(construction):
    certificate = to_certificate(construction, current_config().inline_digits, checks=verify(construction))
    rows = [{"t": t, "alpha": str(construction.alpha[t]),
             "q": value if isinstance(value, str) else f"{value['prime']}^{value['exponent']}"}
            for t, value in enumerate(certificate["q"])]
    emit(certificate, rows)
    if construction.status != ACTIVE:
        click.get_current_context().exit(EXIT_INCONCLUSIVE)


@click.command("verify", cls=LabCommand, help="Re-derive every invariant; JSON {passed, count, failures}")
@output_options
@construction_options
def liouville_verify(construction):
    emit(verify(construction).to_json())


@click.command("evidence", cls=LabCommand, help="Hits, misses and the Legendre cutoff at tau; JSON evidence")
@output_options
@construction_options
@click.option("--tau", required=True, help="Exponent > 2, e.g. 5/2")
def liouville_evidence(construction, tau):
    emit(wstar_evidence(construction, tau).to_json())


@click.command("profile", cls=LabCommand, help="w_s = 1 + log q_(s+1) / log q_s along the prefix")
@output_options
@construction_options
def liouville_profile(construction):
    rows = [{"s": s, "w": f"{w:.6f}"} for s, w in irrationality_profile(construction)]
    emit({"profile": rows}, rows)


# ---------------------------------------------------------------- plane

def hyperplane_options(func):
    @click.option("--A", "coefficients", required=True, help="Comma-separated integer coefficients, last non-zero")
    @click.option("--b", "target", default="1", show_default=True, help="Right-hand side u/v")
    @wraps(func)
    def wrapper(coefficients, target, **kwargs):
        return func(h=Hyperplane.parse(coefficients, target), **kwargs)
    return wrapper


@click.group("plane", help="Rational hyperplanes")
def plane_group(): pass


@click.command("lift", cls=LabCommand, help="x_n completing y onto the hyperplane; JSON {x_n}")
@output_options
@hyperplane_options
@click.option("--y", required=True, help="Comma-separated n-1 rationals")
def plane_lift(h, y):
    emit({"hyperplane": h.to_json(), "x_n": str(lift(h, y.split(",")))})


@click.command("threshold", cls=LabCommand, help="Least q0 with q0^(tau-1) > v sum|a_i|; JSON {threshold}")
@output_options
@click.option("--A", "coefficients", required=True, help="Comma-separated integer coefficients")
@click.option("--tau", required=True)
@click.option("--v", type=click.IntRange(min=1), default=1, show_default=True)
def plane_threshold(coefficients, tau, v):
    A = parse_integers(coefficients, "A")
    emit({"A": [str(a) for a in A], "tau": str(to_rational(tau)), "v": str(v),
          "threshold": str(dependence_threshold(A, tau, v))})


@click.command("transfer", cls=LabCommand, help="Scan a point of the hyperplane for transfer violations")
@output_options
@hyperplane_options
@click.option("--tau", required=True)
@click.option("--q-max", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--y", help="Comma-separated n-1 rationals; default 1/3, 1/4, ...")
@click.option("--seed", type=int, help="Draw y at random from this seed instead")
def plane_transfer(h, tau, q_max, y, seed):
    head = None
    if seed is not None:
        rng = random.Random(seed)
        head = [mpq(rng.randint(-1000, 1000), rng.randint(1, 1000)) for _ in range(h.n - 1)]
    elif y is not None:
        head = [to_rational(c) for c in y.split(",")]
    point = None
    if head is not None:
        point = [Enclosure.point(c) for c in head] + [Enclosure.point(lift(h, head))]
    report = transfer_property_test(h, tau, range(1, q_max + 1), point, threads=current_config().threads)
    emit({"hyperplane": h.to_json(), "tau": str(to_rational(tau)), "q_max": str(q_max), **report.to_json()})


@click.command("points", cls=LabCommand, help="Integer p in a box with p/q on the hyperplane")
@output_options
@hyperplane_options
@click.option("--q", "q", type=click.IntRange(min=1), required=True)
@click.option("--box", required=True, help="Per-coordinate lo:hi ranges, comma-separated, e.g. -5:5,-5:5")
def plane_points(h, q, box):
    try:
        ranges = [tuple(int(x) for x in part.split(":")) for part in box.split(",")]
    except ValueError:
        raise DomainError(f"box must look like lo:hi,lo:hi, got {box!r}")
    points = rational_points(h, q, ranges)
    rows = [{f"p{i + 1}": str(x) for i, x in enumerate(p)} for p in points]
    emit({"hyperplane": h.to_json(), "q": str(q), "points": [[str(x) for x in p] for p in points]}, rows)


@click.command("wstar", cls=LabCommand, help="Seed-built point on the hyperplane and its approximation scan")
@output_options
@hyperplane_options
@spec_option
@click.option("--tau", required=True, help="Exponent > 2")
@click.option("--p0", type=int, default=2, show_default=True)
@click.option("--p1", type=int, default=3, show_default=True)
@click.option("--alpha1", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--steps", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--k", "k_sequences", multiple=True, help="One k choice per seed (minimal or k_2,k_3,...)")
@click.option("--scan-limit", type=click.IntRange(min=1), help="Largest directly scanned denominator")
def plane_wstar(h, spec_literal, tau, p0, p1, alpha1, steps, k_sequences, scan_limit):
    config = current_config()
    k_sequences = list(k_sequences) or ["minimal"] * (h.n - 1)
    seeds = [build(p0, p1, alpha1, steps, parse_k(k), config.digit_budget, config.order_iteration_cap)
             for k in k_sequences]
    report = wstar_point_from_seed(h, seeds, tau, parse_spec(spec_literal),
                                   scan_limit or config.scan_limit, config.threads)
    document = report.to_json(config.inline_digits)
    emit(document, [{"q": hit["q"], "proof": hit["proof"], "in_Q": hit["in_Q"]} for hit in document["hits"]])


# ---------------------------------------------------------------- dim

@click.group("dim", help="Dimension formulas and cover-series abscissae")
def dim_group(): pass


@click.command("formula", cls=LabCommand, help="Dimension asserted by the known theorems; JSON {value | interval}")
@output_options
@click.option("--n", "n", type=click.IntRange(min=1), required=True)
@click.option("--tau", required=True)
@click.option("--spec", "spec_literal", help=f"Denominator set: {SPEC_GRAMMAR}")
@click.option("--nu", help="nu(Q) when no spec is given")
@click.option("--set", "target", type=click.Choice(["w", "wq", "wstar"]), default="w", show_default=True)
def dim_formula(n, tau, spec_literal, nu, target):
    nu_or_spec = parse_spec(spec_literal) if spec_literal else nu
    emit(theoretical_dimension(n, tau, nu_or_spec, target).to_json())


@click.command("series", cls=LabCommand, help="Partial natural-cover series over Q in [Q0, Q1]")
@output_options
@spec_option
@click.option("--n", "n", type=click.IntRange(min=1), required=True)
@click.option("--tau", required=True)
@click.option("--s", "s", required=True)
@click.option("--q0", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--q1", type=click.IntRange(min=1), required=True)
def dim_series(spec_literal, n, tau, s, q0, q1):
    precision = current_config().precision
    value = cover_series(parse_spec(spec_literal), n, tau, s, q0, q1, precision)
    emit({"spec": spec_literal, "n": str(n), "tau": str(to_rational(tau)), "s": str(to_rational(s)),
          "Q0": str(q0), "Q1": str(q1), "value": nstr(value, precision)})


@click.command("critical", cls=LabCommand, help="Zero crossing of dyadic block growth; JSON {s_star, exact_value, abs_error}")
@output_options
@spec_option
@click.option("--n", "n", type=click.IntRange(min=1), required=True)
@click.option("--tau", required=True)
@click.option("--q-max", type=click.IntRange(min=2 ** 16), default=2 ** 20, show_default=True)
@click.option("--s-step", default="1/20", show_default=True, help="Spacing of the s grid")
def dim_critical(spec_literal, n, tau, q_max, s_step):
    grid = default_s_grid(n, to_rational(s_step))
    report = critical_exponent(parse_spec(spec_literal), n, tau, q_max, grid, current_config().threads)
    emit(report.to_json(), block_table(report))
    if report.s_star is None:
        click.get_current_context().exit(EXIT_INCONCLUSIVE)


cf_group.add_command(cf_expand)
cf_group.add_command(cf_convergents)
cf_group.add_command(cf_legendre)
qset_group.add_command(qset_member)
qset_group.add_command(qset_verify)
qset_group.add_command(qset_support)
qset_group.add_command(qset_nu)
qset_group.add_command(qset_euler)
liouville_group.add_command(liouville_build)
liouville_group.add_command(liouville_verify)
liouville_group.add_command(liouville_evidence)
liouville_group.add_command(liouville_profile)
plane_group.add_command(plane_lift)
plane_group.add_command(plane_threshold)
plane_group.add_command(plane_transfer)
plane_group.add_command(plane_points)
plane_group.add_command(plane_wstar)
dim_group.add_command(dim_formula)
dim_group.add_command(dim_series)
dim_group.add_command(dim_critical)
entry_point.add_command(cf_group)
entry_point.add_command(qset_group)
entry_point.add_command(liouville_group)
entry_point.add_command(plane_group)
entry_point.add_command(dim_group)


if __name__ == "__main__":
    entry_point()
