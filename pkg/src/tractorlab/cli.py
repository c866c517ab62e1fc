"""Command-line front end.

Subcommands map one-to-one onto the library operations: ``dim`` (Killing
dimension), ``basis`` (certified Killing bases), ``prolong`` (parallel
tractor), ``symmetry`` (symmetry operators and their certificates),
``product`` (the composition algebra of two Killing vectors) and ``verify``
(the exact identity suites, optionally including the projective one).

Exit status: 0 when every asserted identity holds, 1 when an identity fails
(the output names it), 2 on usage errors.  Machine output is a single JSON
document with schema tag ``tractorlab/1``; all randomized choices are seeded
and the seed is recorded, so identical configuration gives byte-identical
output.
"""

from __future__ import annotations

import json
import os
import sys
from fractions import Fraction

import click

from .exactfield import rat_from_str
from .killing import (
    killing_ansatz_dim,
    killing_basis,
    killing_dim,
    prolong,
    prolongation_is_parallel,
    reconstruct,
    young_membership_check,
)
from .spaceforms import make_model, verify_space_form
from .symop import (
    DiffOp,
    algebra_product,
    build_symmetry,
    divergence,
    explicit_order3,
    verify_symmetry,
    weyl_flat_symmetry,
)
from .tractor import check_D_commutes, tractor_curvature_check

SCHEMA = "tractorlab/1"

DEFAULT_J = {
    ("flat", 2): Fraction(0), ("flat", 3): Fraction(0),
    ("sphere", 2): Fraction(1), ("sphere", 3): Fraction(3, 2),
    ("hyperbolic", 2): Fraction(-1), ("hyperbolic", 3): Fraction(-3, 2),
}


class Config:
    def __init__(self, fmt):
        self.fmt = fmt


def _format_default():
    return os.environ.get("TRACTORLAB_FORMAT", "text")


def _emit(fmt, doc, text_lines):
    if fmt == "json":
        click.echo(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    else:
        for line in text_lines:
            click.echo(line)


def _resolve_model(model, n, signature, j, chart):
    if signature is None:
        sig = (n, 0)
    else:
        try:
            p, q = (int(t) for t in signature.split(","))
        except ValueError:
            raise click.UsageError("--signature expects 'p,q'")
        sig = (p, q)
    if j is None:
        try:
            jval = DEFAULT_J[(model, n)]
        except KeyError:
            raise click.UsageError("unknown model %r for n=%d" % (model, n))
    else:
        jval = rat_from_str(j)
    if chart is None:
        chart = "cartesian" if jval == 0 else "stereographic"
    try:
        return make_model(n, sig, jval, chart)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def format_option(fn):
    return click.option("--format", "fmt", default=None,
                        type=click.Choice(["json", "text"]),
                        help="output format for this command")(fn)


def model_options(fn):
    fn = click.option("--model", default="flat",
                      type=click.Choice(["flat", "sphere", "hyperbolic"]),
                      help="model family (sets the default curvature)")(fn)
    fn = click.option("--n", default=2, type=int, help="dimension")(fn)
    fn = click.option("--signature", default=None, help="signature 'p,q'")(fn)
    fn = click.option("--J", "j", default=None, help="Schouten trace, e.g. '3/2'")(fn)
    fn = click.option("--chart", default=None,
                      type=click.Choice(["cartesian", "stereographic"]))(fn)
    return fn


@click.group()
@click.option("--format", "fmt", default=None, type=click.Choice(["json", "text"]),
              help="output format (default from TRACTORLAB_FORMAT, else text)")
@click.pass_context
def main(ctx, fmt):
    """Exact Killing tensors and commuting symmetries of the Laplacian."""
    ctx.obj = Config(fmt or _format_default())


@main.command()
@click.option("--n", required=True, type=int)
@click.option("--order", required=True, type=int)
@format_option
@click.pass_obj
def dim(cfg, n, order, fmt):
    """Dimension of the space of Killing tensors of the given valence."""
    try:
        d = killing_dim(n, order)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    doc = {"schema": SCHEMA, "command": "dim", "n": n, "order": order, "dim": d}
    _emit(fmt or cfg.fmt, doc, [str(d)])


@main.command()
@model_options
@click.option("--order", default=1, type=int)
@click.option("--seed", default=0, type=int)
@format_option
@click.pass_obj
def basis(cfg, model, n, signature, j, chart, order, seed, fmt):
    """Certified basis of Killing tensors with provenance words."""
    space = _resolve_model(model, n, signature, j, chart)
    kb = killing_basis(space, order, seed=seed)
    doc = {"schema": SCHEMA, "command": "basis", "seed": seed}
    doc.update(kb.to_json())
    lines = ["%s  valence %d: %d elements" % (space.label(), order, len(kb))]
    lines.extend("  [%d] %s" % (i + 1, w) for i, w in enumerate(kb.provenance))
    _emit(fmt or cfg.fmt, doc, lines)


def _slot_tokens(spec, sig):
    letters = "abcdef"
    out = []
    pos = 0
    for kind, s in zip(spec, sig):
        width = {"Y": 0, "Z": 1}[s] if kind in ("T", "T*") else {"Y": 1, "Z": 2}[s]
        out.append(s + letters[pos:pos + width])
        pos += width
    return "|".join(out)


@main.command("prolong")
@model_options
@click.option("--order", default=1, type=int)
@click.option("--index", default=1, type=int, help="1-based basis element")
@click.option("--seed", default=0, type=int)
@format_option
@click.pass_obj
def prolong_cmd(cfg, model, n, signature, j, chart, order, index, seed, fmt):
    """Parallel tractor prolongation of a Killing basis element."""
    space = _resolve_model(model, n, signature, j, chart)
    kb = killing_basis(space, order, seed=seed)
    if not 1 <= index <= len(kb):
        raise click.UsageError("--index out of range (basis has %d elements)" % len(kb))
    P = prolong(kb.elements[index - 1])
    parallel = prolongation_is_parallel(P)
    doc = {
        "schema": SCHEMA, "command": "prolong", "seed": seed,
        "model": space.label(), "order": order, "index": index,
        "provenance": kb.provenance[index - 1],
        "parallel": parallel,
        "tractor_spec": list(P.tractor.spec),
        "slot_components": {
            _slot_tokens(P.tractor.spec, sig): f.to_json()
            for sig, f in sorted(P.tractor.parts.items())
        },
    }
    lines = ["%s order %d element %d (%s): parallel=%s, %d nonzero slot signatures"
             % (space.label(), order, index, kb.provenance[index - 1], parallel,
                len(P.tractor.parts))]
    _emit(fmt or cfg.fmt, doc, lines)
    if not parallel:
        sys.exit(1)


@main.command()
@model_options
@click.option("--order", default=1, type=int)
@click.option("--index", default=1, type=int)
@click.option("--form", default="tractor", type=click.Choice(["tractor", "explicit", "weyl"]))
@click.option("--seed", default=0, type=int)
@format_option
@click.pass_obj
def symmetry(cfg, model, n, signature, j, chart, order, index, form, seed, fmt):
    """Symmetry operator for a Killing basis element, with its certificate."""
    space = _resolve_model(model, n, signature, j, chart)
    kb = killing_basis(space, order, seed=seed)
    if not 1 <= index <= len(kb):
        raise click.UsageError("--index out of range (basis has %d elements)" % len(kb))
    k = kb.elements[index - 1]
    if form == "tractor":
        op = build_symmetry(k)
    elif form == "explicit":
        if order == 1:
            op = DiffOp(space, {1: k})
        elif order == 2:
            op = DiffOp(space, {2: k.symmetrize(), 1: divergence(k)})
        elif order == 3:
            op = explicit_order3(k)
        else:
            raise click.UsageError("--form explicit supports orders 1..3")
    else:
        if space.J != 0:
            raise click.UsageError("--form weyl requires a flat model")
        op = weyl_flat_symmetry(k)
    cert = verify_symmetry(op)
    doc = {
        "schema": SCHEMA, "command": "symmetry", "seed": seed,
        "model": space.label(), "order": order, "index": index, "form": form,
        "provenance": kb.provenance[index - 1],
        "certificate": cert.to_json(),
    }
    lines = [op.to_text(),
             "commutes with Laplacian: %s" % cert.commutes]
    _emit(fmt or cfg.fmt, doc, lines)
    if not cert.commutes:
        sys.exit(1)


@main.command()
@model_options
@click.option("--i", "idx1", required=True, type=int, help="1-based Killing vector")
@click.option("--j", "idx2", required=True, type=int, help="1-based Killing vector")
@click.option("--seed", default=0, type=int)
@format_option
@click.pass_obj
def product(cfg, model, n, signature, j, chart, idx1, idx2, seed, fmt):
    """Decomposition of a product of two degree-one symmetries."""
    space = _resolve_model(model, n, signature, j, chart)
    kb = killing_basis(space, 1, seed=seed)
    if not (1 <= idx1 <= len(kb) and 1 <= idx2 <= len(kb)):
        raise click.UsageError("--i/--j out of range (basis has %d elements)" % len(kb))
    dec = algebra_product(kb.elements[idx1 - 1], kb.elements[idx2 - 1])
    ok = dec["residual"].is_zero() and dec["bracket_matches_vector_commutator"] \
        and dec["sym_part_matches_product"]
    doc = {
        "schema": SCHEMA, "command": "product", "seed": seed,
        "model": space.label(), "i": idx1, "j": idx2,
        "identity_holds": ok,
        "composition": dec["compose"].to_json(),
        "symmetric_part": dec["sym_op"].to_json(),
        "bracket_part": dec["bracket_op"].to_json(),
    }
    lines = [
        "D^%s o D^%s = D^(sym part) + (1/2) D^[%s,%s]" % (
            kb.provenance[idx1 - 1], kb.provenance[idx2 - 1],
            kb.provenance[idx1 - 1], kb.provenance[idx2 - 1]),
        "decomposition holds: %s" % ok,
    ]
    _emit(fmt or cfg.fmt, doc, lines)
    if not ok:
        sys.exit(1)


def _run_verify(space, order, projective, seed):
    checks = []

    rep = verify_space_form(space)
    checks.append(("space-form identities", rep.ok,
                   None if rep.ok else str(rep.first())))

    trep = tractor_curvature_check(space)
    checks.append(("tractor flatness", trep.ok, None if trep.ok else str(trep.first())))

    drep = check_D_commutes(space)
    checks.append(("fundamental derivative commutation", drep.ok,
                   None if drep.ok else str(drep.first())))

    for ell in range(1, order + 1):
        kb = killing_basis(space, ell, seed=seed)
        expected = killing_dim(space.n, ell)
        ok = len(kb) == expected
        checks.append(("dimension: generated = Weyl (valence %d)" % ell, ok,
                       None if ok else "%d != %d" % (len(kb), expected)))
        ans = killing_ansatz_dim(space, ell)
        checks.append(("dimension: ansatz = Weyl (valence %d)" % ell, ans == expected,
                       None if ans == expected else "%d != %d" % (ans, expected)))
        all_par = True
        all_young = True
        all_round = True
        all_comm = True
        for k in kb.elements:
            P = prolong(k)
            if not prolongation_is_parallel(P):
                all_par = False
            if not young_membership_check(P.tractor):
                all_young = False
            if reconstruct(P.tractor) != k:
                all_round = False
            cert = verify_symmetry(build_symmetry(k))
            if not cert.commutes:
                all_comm = False
        checks.append(("prolongations parallel (valence %d)" % ell, all_par, None))
        checks.append(("Young membership (valence %d)" % ell, all_young, None))
        checks.append(("reconstruct round-trip (valence %d)" % ell, all_round, None))
        checks.append(("[Laplacian, D^k] = 0 (valence %d)" % ell, all_comm, None))

    if projective:
        from . import projective as proj
        checks.append(("projective flatness", proj.proj_curvature_check(space), None))
        checks.append(("projective/adjoint connection agreement",
                       proj.agrees_with_adjoint_connection(space), None))
        checks.append(("metric tractor parallel", proj.h_parallel_check(space), None))
        checks.append(("metric tractor derivative identity",
                       proj.metric_tractor_derivative_check(space), None))
        checks.append(("weight independence", proj.weight_independence_check(space), None))
        checks.append(("invariant operator commutation",
                       proj.dD_comm_invariant_check(space), None))
        for ell in range(1, min(order, 2) + 1):
            kb = killing_basis(space, ell, seed=seed)
            ok = all(proj.proj_symmetry(k) == build_symmetry(k) for k in kb.elements)
            checks.append(("projective = Riemannian operator (valence %d)" % ell, ok, None))
    return checks


@main.command()
@model_options
@click.option("--order", default=2, type=int)
@click.option("--projective", is_flag=True, default=False)
@click.option("--seed", default=0, type=int)
@format_option
@click.pass_obj
def verify(cfg, model, n, signature, j, chart, order, projective, seed, fmt):
    """Run the exact identity suites for one model."""
    space = _resolve_model(model, n, signature, j, chart)
    checks = _run_verify(space, order, projective, seed)
    ok = all(c[1] for c in checks)
    doc = {
        "schema": SCHEMA, "command": "verify", "seed": seed,
        "model": space.label(), "order": order, "projective": projective,
        "ok": ok,
        "checks": [{"identity": name, "ok": passed, "detail": detail}
                   for name, passed, detail in checks],
    }
    lines = ["%s  order<=%d%s" % (space.label(), order,
                                  " +projective" if projective else "")]
    for name, passed, detail in checks:
        lines.append("  %-48s %s%s" % (name, "pass" if passed else "FAIL",
                                       "" if not detail else "  [%s]" % detail))
    lines.append("overall: %s" % ("pass" if ok else "FAIL"))
    _emit(fmt or cfg.fmt, doc, lines)
    if not ok:
        sys.exit(1)


if __name__ == "__main__":
    main()
