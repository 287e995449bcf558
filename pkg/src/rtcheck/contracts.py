"""Contract-based system model and assume-guarantee obligation generation.

A component carries assumptions and guarantees over its interface, optional
body items (definitions and assertions), and subcomponents wired by
connections. Verification obligations are generated per the usual
compositional discipline:

  * component-contract: a leaf's guarantees follow from its body while its
    assumptions have held (`hist(A) => G`);
  * assumptions-ordered: each subcomponent's assumptions follow from the
    system's assumptions held historically, every subcomponent's guarantees
    held historically up to the previous step, and the guarantees of
    subcomponents earlier in a total order held historically;
  * guarantee-entailment: the system's guarantees follow from its
    assumptions and all subcomponent guarantees held historically;
  * contract-invariant: the monolithic composition satisfies `hist(A) => G`
    directly (the soundness cross-check for the rules above).

The unordered variant (all other subcomponents' guarantees available at
the current step) is unsound in the presence of connection cycles and is
kept behind an explicit flag to demonstrate exactly that. The
system-assumptions-only variant is stronger than needed and is kept for
strength-ordering tests.

Requirement patterns may appear as system assumptions, assertions, and as
the conclusion of obligations (system guarantees, subcomponent
assumptions); they lower to transition constraints or observers
respectively. A pattern used as an obligation hypothesis (a subcomponent
guarantee feeding a sibling) has no sound one-step-delayed reading in this
engine and is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from . import patterns as pt
from . import syntax as sx
from .patterns import (
    Pattern,
    apply_bundle,
    compile_constraint,
    compile_observer,
)
from .syntax import (
    Expr,
    NamedExpr,
    SpecProgram,
    TypeTag,
    Var,
    free_vars,
)
from .transform import prefix_expr
from .typecheck import type_check


class ContractError(Exception):
    """Ill-formed system model or unsupported contract construct."""


@dataclass(frozen=True)
class PortDecl:
    name: str
    ty: TypeTag
    direction: str  # "input" | "output" | "var"


@dataclass(frozen=True)
class ContractItem:
    label: Optional[str]
    body: Union[Expr, Pattern]

    @property
    def is_pattern(self) -> bool:
        return not isinstance(self.body, sx.Expr)


@dataclass(frozen=True)
class EqDef:
    name: str
    ty: TypeTag
    expr: Expr


@dataclass
class ComponentDef:
    """One `system` declaration."""

    name: str
    ports: list[PortDecl] = field(default_factory=list)
    timeouts: list[str] = field(default_factory=list)
    assumptions: list[ContractItem] = field(default_factory=list)
    guarantees: list[ContractItem] = field(default_factory=list)
    assertions: list[ContractItem] = field(default_factory=list)
    eqs: list[EqDef] = field(default_factory=list)
    instances: list[tuple[str, str]] = field(default_factory=list)  # (inst, def)
    connections: list[tuple[str, str]] = field(default_factory=list)  # (src, dst)

    def port_types(self) -> dict[str, TypeTag]:
        out = {p.name: p.ty for p in self.ports}
        for e in self.eqs:
            out[e.name] = e.ty
        return out

    def inputs(self) -> list[str]:
        return [p.name for p in self.ports if p.direction == "input"]

    def outputs(self) -> list[str]:
        return [p.name for p in self.ports if p.direction == "output"]

    def has_body(self) -> bool:
        return bool(self.eqs or self.assertions)


@dataclass
class SystemModel:
    systems: dict[str, ComponentDef]
    root: str

    def defn(self, name: str) -> ComponentDef:
        try:
            return self.systems[name]
        except KeyError:
            raise ContractError(f"unknown system '{name}'") from None


class ObligationKind(str, Enum):
    ASSUMPTION = "assumption-discharge"
    GUARANTEE = "guarantee-check"
    TOP = "top-invariant"
    LEAF = "leaf-contract"


# rule identifiers recorded on every obligation
RULE_CONTRACT = "contract-invariant"
RULE_LEAF = "component-contract"
RULE_ASSUME_ORDERED = "assumptions-ordered"
RULE_ASSUME_UNORDERED = "assumptions-unordered"
RULE_ASSUME_STRONG = "assumptions-from-system-only"
RULE_GUARANTEE = "guarantee-entailment"

AssumptionRule = str  # "ordered" | "unordered" | "strong"


@dataclass
class Obligation:
    name: str
    kind: ObligationKind
    rule: str
    program: SpecProgram
    prop: NamedExpr

    def check_scope(self) -> None:
        undeclared = {
            v for v in free_vars(self.prop.expr) if not self.program.declares(v)
        }
        if undeclared:
            raise ContractError(
                f"obligation '{self.name}' references undeclared variables: "
                f"{', '.join(sorted(undeclared))}"
            )


def order_components(
    sysdef: ComponentDef, override: Optional[list[str]] = None
) -> list[tuple[str, str]]:
    """Total order over subcomponents: declaration order, or a user-supplied
    permutation of instance names."""
    if override is None:
        return list(sysdef.instances)
    names = [inst for inst, _ in sysdef.instances]
    if sorted(override) != sorted(names):
        raise ContractError(
            f"ordering {override!r} is not a permutation of {names!r}"
        )
    by_name = dict(sysdef.instances)
    return [(inst, by_name[inst]) for inst in override]


def _plain_conjunction(items: list[ContractItem]) -> Expr:
    return sx.land(*[it.body for it in items if not it.is_pattern])


def _pattern_items(items: list[ContractItem]) -> list[ContractItem]:
    return [it for it in items if it.is_pattern]


def validate_model(model: SystemModel) -> None:
    for name, sysdef in model.systems.items():
        seen: set[str] = set()
        for p in sysdef.ports:
            if p.name in seen:
                raise ContractError(f"{name}: duplicate declaration '{p.name}'")
            seen.add(p.name)
        port_types = {p.name: p.ty for p in sysdef.ports}
        eq_seen: set[str] = set()
        for e in sysdef.eqs:
            if e.name in eq_seen:
                raise ContractError(f"{name}: '{e.name}' is defined twice")
            eq_seen.add(e.name)
            if e.name in port_types and port_types[e.name] is not e.ty:
                raise ContractError(
                    f"{name}: definition of '{e.name}' disagrees with its "
                    f"declared type"
                )
        insts = set()
        for inst, defname in sysdef.instances:
            if inst in insts:
                raise ContractError(f"{name}: duplicate subcomponent '{inst}'")
            insts.add(inst)
            if defname not in model.systems:
                raise ContractError(
                    f"{name}: subcomponent '{inst}' instantiates unknown "
                    f"system '{defname}'"
                )
        env = _composition_env_types(sysdef, model)
        for src, dst in sysdef.connections:
            for end in (src, dst):
                if end not in env:
                    raise ContractError(
                        f"{name}: connection endpoint '{end}' does not resolve"
                    )
            if env[src] is not env[dst]:
                raise ContractError(
                    f"{name}: connection {src} -> {dst} joins "
                    f"{env[src].value} to {env[dst].value}"
                )
        for to in sysdef.timeouts:
            if env.get(to) is not TypeTag.REAL:
                raise ContractError(f"{name}: timeout '{to}' must be a real variable")
    _check_acyclic_instantiation(model)


def _check_acyclic_instantiation(model: SystemModel) -> None:
    visiting: set[str] = set()
    done: set[str] = set()

    def visit(name: str) -> None:
        if name in done:
            return
        if name in visiting:
            raise ContractError(f"system instantiation cycle through '{name}'")
        visiting.add(name)
        for _, defname in model.defn(name).instances:
            visit(defname)
        visiting.remove(name)
        done.add(name)

    for name in model.systems:
        visit(name)


def _composition_env_types(
    sysdef: ComponentDef, model: SystemModel
) -> dict[str, TypeTag]:
    env = sysdef.port_types()
    for inst, defname in sysdef.instances:
        sub = model.defn(defname)
        for p in sub.ports:
            env[f"{inst}.{p.name}"] = p.ty
    return env


def _apply_constraint_patterns(
    program: SpecProgram,
    items: list[ContractItem],
    prefix: str,
    what: str,
    pattern_style: str,
) -> SpecProgram:
    for it in items:
        if not it.is_pattern:
            continue
        pat = _prefix_pattern(it.body, prefix)
        bundle = compile_constraint(pat, program, style=pattern_style)
        if it.label is not None:
            bundle.constraints = [
                NamedExpr(f"{it.label}: {ne.label}", ne.expr)
                for ne in bundle.constraints
            ]
        program = apply_bundle(program, bundle)
    return program


def _prefix_pattern(pat: Pattern, prefix: str) -> Pattern:
    if not prefix:
        return pat
    if isinstance(pat, pt.WheneverEventEvent):
        return pt.WheneverEventEvent(
            prefix_expr(pat.cause, prefix),
            prefix_expr(pat.effect, prefix),
            pat.window,
            pat.exclusive,
        )
    if isinstance(pat, pt.WheneverEventCondition):
        return pt.WheneverEventCondition(
            prefix_expr(pat.cause, prefix),
            prefix_expr(pat.condition, prefix),
            pat.window,
        )
    if isinstance(pat, pt.WhenConditionEvent):
        return pt.WhenConditionEvent(
            prefix_expr(pat.condition, prefix),
            pat.hold,
            prefix_expr(pat.event, prefix),
            pat.window,
        )
    if isinstance(pat, pt.Always):
        return pt.Always(prefix_expr(pat.condition, prefix))
    if isinstance(pat, pt.Periodic):
        return pt.Periodic(prefix_expr(pat.event, prefix), pat.period, pat.jitter)
    if isinstance(pat, pt.Sporadic):
        return pt.Sporadic(prefix_expr(pat.event, prefix), pat.iat, pat.jitter)
    raise ContractError(f"unknown pattern {pat!r}")


def _body_constraints(sysdef: ComponentDef, prefix: str) -> list[NamedExpr]:
    out = []
    for e in sysdef.eqs:
        out.append(
            NamedExpr(
                f"def {prefix}{e.name}",
                sx.eq(Var(f"{prefix}{e.name}"), prefix_expr(e.expr, prefix)),
            )
        )
    for it in sysdef.assertions:
        if it.is_pattern:
            continue  # handled by _apply_constraint_patterns
        out.append(NamedExpr(it.label, prefix_expr(it.body, prefix)))
    return out


def contracts_composition(
    sysdef: ComponentDef,
    model: SystemModel,
    pattern_style: str = "filter",
) -> SpecProgram:
    """The contracts-only environment of a composite system: interface
    variables of the system and its subcomponents, the system's own body
    items, connection equalities, and the system's pattern assumptions as
    constraints. Subcomponent bodies are not inlined."""
    program = SpecProgram()
    for name, ty in sysdef.port_types().items():
        program.vars[name] = ty
    for inst, defname in sysdef.instances:
        sub = model.defn(defname)
        for p in sub.ports:
            program.vars[f"{inst}.{p.name}"] = p.ty
    program.timeouts.extend(sysdef.timeouts)
    program.transition.extend(_body_constraints(sysdef, ""))
    for src, dst in sysdef.connections:
        # oriented target-first so enumeration computes along the dataflow
        program.transition.append(
            NamedExpr(f"connect {src} -> {dst}", sx.eq(Var(dst), Var(src)))
        )
    program = _apply_constraint_patterns(
        program, sysdef.assertions, "", "assertion", pattern_style
    )
    program = _apply_constraint_patterns(
        program, sysdef.assumptions, "", "assumption", pattern_style
    )
    return program


def _reject_pattern_hypotheses(
    items: list[ContractItem], owner: str, role: str
) -> None:
    for it in items:
        if it.is_pattern:
            raise ContractError(
                f"{owner}: a pattern {role} cannot be used as an obligation "
                f"hypothesis; state it as an assertion of the enclosing system "
                f"instead"
            )


def _conclusion(
    program: SpecProgram,
    item: ContractItem,
    prefix: str,
) -> tuple[SpecProgram, Expr]:
    """Attach a contract item as the conclusion of an obligation. Plain
    expressions are used directly; patterns go through an observer whose
    invariant becomes the conclusion."""
    if not item.is_pattern:
        return program, prefix_expr(item.body, prefix)
    bundle = compile_observer(_prefix_pattern(item.body, prefix), program)
    program = apply_bundle(program, bundle, include_property=False)
    assert bundle.prop is not None
    return program, bundle.prop.expr


def _hist(e: Expr) -> Expr:
    return e if e == sx.TRUE else sx.hist(e)


def _zhist(e: Expr) -> Expr:
    return sx.TRUE if e == sx.TRUE else sx.initz(sx.hist(e))


def gen_assumption_obligations(
    sysdef: ComponentDef,
    model: SystemModel,
    rule: AssumptionRule = "ordered",
    order: Optional[list[str]] = None,
    pattern_style: str = "filter",
) -> list[Obligation]:
    """One obligation per subcomponent assumption conjunct, under the chosen
    assumption-discharge rule."""
    if rule not in ("ordered", "unordered", "strong"):
        raise ContractError(f"unknown assumption rule {rule!r}")
    ordered = order_components(sysdef, order)
    base = contracts_composition(sysdef, model, pattern_style)
    sys_a = _plain_conjunction(sysdef.assumptions)
    rule_id = {
        "ordered": RULE_ASSUME_ORDERED,
        "unordered": RULE_ASSUME_UNORDERED,
        "strong": RULE_ASSUME_STRONG,
    }[rule]
    connected_dsts = {dst for _, dst in sysdef.connections}
    out: list[Obligation] = []
    for pos, (inst, defname) in enumerate(ordered):
        sub = model.defn(defname)
        _reject_pattern_hypotheses(sub.guarantees, f"{sysdef.name}.{inst}", "guarantee")
        hyp_terms: list[Expr] = [_hist(sys_a)]
        if rule != "strong":
            for winst, wdef in ordered:
                wg = _plain_conjunction(model.defn(wdef).guarantees)
                hyp_terms.append(_zhist(prefix_expr(wg, f"{winst}.")))
            for vpos, (vinst, vdef) in enumerate(ordered):
                if rule == "ordered" and not vpos < pos:
                    continue
                if rule == "unordered" and vinst == inst:
                    continue
                vg = _plain_conjunction(model.defn(vdef).guarantees)
                hyp_terms.append(_hist(prefix_expr(vg, f"{vinst}.")))
        hyps = sx.land(*hyp_terms)
        for j, item in enumerate(sub.assumptions):
            label = item.label or f"assumption[{j}]"
            body_vars = (
                free_vars(item.body)
                if not item.is_pattern
                else _pattern_vars(item.body)
            )
            for v in sorted(body_vars):
                if v in sub.port_types() and v in set(sub.inputs()):
                    qualified = f"{inst}.{v}"
                    if qualified not in connected_dsts:
                        raise ContractError(
                            f"{sysdef.name}: assumption '{label}' of '{inst}' "
                            f"reads input '{v}' which no connection drives"
                        )
            program, concl = _conclusion(base.copy(), item, f"{inst}.")
            ob = Obligation(
                name=f"{inst}: {label}",
                kind=ObligationKind.ASSUMPTION,
                rule=rule_id,
                program=program,
                prop=NamedExpr(f"{inst}: {label}", sx.implies(hyps, concl)),
            )
            ob.check_scope()
            out.append(ob)
    return out


def _pattern_vars(pat: Pattern) -> set[str]:
    out: set[str] = set()
    if isinstance(pat, pt.WheneverEventEvent):
        out |= free_vars(pat.cause) | free_vars(pat.effect)
    elif isinstance(pat, pt.WheneverEventCondition):
        out |= free_vars(pat.cause) | free_vars(pat.condition)
    elif isinstance(pat, pt.WhenConditionEvent):
        out |= free_vars(pat.condition) | free_vars(pat.event)
    elif isinstance(pat, pt.Always):
        out |= free_vars(pat.condition)
    elif isinstance(pat, (pt.Periodic, pt.Sporadic)):
        out |= free_vars(pat.event)
    return out


def gen_guarantee_obligation(
    sysdef: ComponentDef,
    model: SystemModel,
    order: Optional[list[str]] = None,
    pattern_style: str = "filter",
) -> Obligation:
    """System guarantees from system assumptions plus subcomponent
    guarantees, all held historically. With no subcomponents this
    degenerates to the plain contract obligation."""
    base = contracts_composition(sysdef, model, pattern_style)
    sys_a = _plain_conjunction(sysdef.assumptions)
    hyp_terms: list[Expr] = [_hist(sys_a)]
    for inst, defname in order_components(sysdef, order):
        sub = model.defn(defname)
        _reject_pattern_hypotheses(sub.guarantees, f"{sysdef.name}.{inst}", "guarantee")
        cg = _plain_conjunction(sub.guarantees)
        hyp_terms.append(_hist(prefix_expr(cg, f"{inst}.")))
    hyps = sx.land(*hyp_terms)
    program = base
    concl_terms: list[Expr] = []
    for item in sysdef.guarantees:
        program, concl = _conclusion(program, item, "")
        concl_terms.append(concl)
    prop_expr = sx.implies(hyps, sx.land(*concl_terms)) if concl_terms else sx.TRUE
    rule = RULE_GUARANTEE if sysdef.instances else RULE_CONTRACT
    ob = Obligation(
        name=f"{sysdef.name}: guarantees",
        kind=ObligationKind.GUARANTEE,
        rule=rule,
        program=program,
        prop=NamedExpr(f"{sysdef.name}: guarantees", prop_expr),
    )
    ob.check_scope()
    return ob


def gen_leaf_obligation(
    sysdef: ComponentDef,
    model: SystemModel,
    pattern_style: str = "filter",
) -> Obligation:
    """Leaf contract: guarantees follow from the body while assumptions have
    held."""
    if not sysdef.has_body():
        raise ContractError(
            f"{sysdef.name}: leaf obligation needs a body (definitions or "
            f"assertions)"
        )
    program = SpecProgram()
    for name, ty in sysdef.port_types().items():
        program.vars[name] = ty
    program.timeouts.extend(sysdef.timeouts)
    program.transition.extend(_body_constraints(sysdef, ""))
    program = _apply_constraint_patterns(
        program, sysdef.assertions, "", "assertion", pattern_style
    )
    program = _apply_constraint_patterns(
        program, sysdef.assumptions, "", "assumption", pattern_style
    )
    hyps = _hist(_plain_conjunction(sysdef.assumptions))
    concl_terms: list[Expr] = []
    for item in sysdef.guarantees:
        program, concl = _conclusion(program, item, "")
        concl_terms.append(concl)
    prop_expr = sx.implies(hyps, sx.land(*concl_terms)) if concl_terms else sx.TRUE
    ob = Obligation(
        name=f"{sysdef.name}: contract",
        kind=ObligationKind.LEAF,
        rule=RULE_LEAF,
        program=program,
        prop=NamedExpr(f"{sysdef.name}: contract", prop_expr),
    )
    ob.check_scope()
    return ob


def gen_all_obligations(
    model: SystemModel,
    rule: AssumptionRule = "ordered",
    order: Optional[list[str]] = None,
    pattern_style: str = "filter",
) -> list[Obligation]:
    """Walk the instantiated tree from the root: assumption and guarantee
    obligations for every composite, a contract obligation for every leaf
    definition that is actually used. Obligation generation is a pure
    function of the model; output order is deterministic."""
    validate_model(model)
    out: list[Obligation] = []
    seen_defs: set[str] = set()

    def visit(defname: str) -> None:
        if defname in seen_defs:
            return
        seen_defs.add(defname)
        sysdef = model.defn(defname)
        if sysdef.instances:
            out.extend(
                gen_assumption_obligations(
                    sysdef, model, rule=rule, order=order, pattern_style=pattern_style
                )
            )
            out.append(
                gen_guarantee_obligation(
                    sysdef, model, order=order, pattern_style=pattern_style
                )
            )
            for _, sub in sysdef.instances:
                visit(sub)
        else:
            out.append(gen_leaf_obligation(sysdef, model, pattern_style=pattern_style))

    visit(model.root)
    for ob in out:
        type_check(ob.program)
    return out


def compose_monolithic(
    model: SystemModel, pattern_style: str = "filter"
) -> tuple[SpecProgram, NamedExpr]:
    """Union of all leaf bodies with connection equalities, hierarchically
    prefixed, together with the root-level contract property
    `hist(assumptions) => guarantees`."""
    validate_model(model)
    program = SpecProgram()

    def inline(defname: str, prefix: str) -> None:
        sysdef = model.defn(defname)
        if not sysdef.instances and not sysdef.has_body():
            raise ContractError(
                f"{sysdef.name}: monolithic composition needs a body for "
                f"every leaf"
            )
        for name, ty in sysdef.port_types().items():
            full = f"{prefix}{name}"
            if full in program.vars:
                raise ContractError(f"variable collision '{full}' in composition")
            program.vars[full] = ty
        for to in sysdef.timeouts:
            program.timeouts.append(f"{prefix}{to}")
        program.transition.extend(_body_constraints(sysdef, prefix))
        for src, dst in sysdef.connections:
            program.transition.append(
                NamedExpr(
                    f"connect {prefix}{src} -> {prefix}{dst}",
                    sx.eq(Var(f"{prefix}{dst}"), Var(f"{prefix}{src}")),
                )
            )
        for inst, subname in sysdef.instances:
            inline(subname, f"{prefix}{inst}.")

    inline(model.root, "")
    root = model.defn(model.root)

    prog = program
    def patterns_pass(defname: str, prefix: str) -> None:
        nonlocal prog
        sysdef = model.defn(defname)
        prog = _apply_constraint_patterns(
            prog, sysdef.assertions, prefix, "assertion", pattern_style
        )
        for inst, subname in sysdef.instances:
            patterns_pass(subname, f"{prefix}{inst}.")

    patterns_pass(model.root, "")
    prog = _apply_constraint_patterns(
        prog, root.assumptions, "", "assumption", pattern_style
    )
    hyps = _hist(_plain_conjunction(root.assumptions))
    concl_terms: list[Expr] = []
    for item in root.guarantees:
        prog, concl = _conclusion(prog, item, "")
        concl_terms.append(concl)
    prop_expr = sx.implies(hyps, sx.land(*concl_terms)) if concl_terms else sx.TRUE
    prop = NamedExpr(f"{root.name}: contract", prop_expr)
    type_check(prog)
    return prog, prop
