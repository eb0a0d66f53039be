"""Integer-program builders and LP-format text export.

Three models are emitted: the plain placement program (binary location
variables with co-location indicators), its replication variant (one
binary per replica with a linearized product), and the generalized
view-placement program (separate storage/computation binaries with cut
and move indicators).  Indicator variables are declared as [0,1] reals,
not binaries: at optimality they settle on the extreme values anyway, so
the optimum is unchanged and the model carries fewer integer variables.

Variables are named by 1-based positional indices (x_T1_S2, y_Q3_S1,
z2_Q1_T4_S1, lam_Q1_T4, ...) so opaque object ids never leak into LP
identifiers.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction

from .common import INFINITE, DocumentError, ValidationError
from .gdp import ViewDag
from .workload import Workload

__all__ = [
    "IpTerm",
    "IpConstraint",
    "IpModel",
    "build_dp_ip",
    "build_replication_ip",
    "build_gdp_ip",
    "write_lp",
    "read_lp",
    "solve_ip_by_enumeration",
]

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]{0,254}$")


@dataclass(frozen=True)
class IpTerm:
    coef: int
    var: str


@dataclass(frozen=True)
class IpConstraint:
    name: str
    terms: tuple[IpTerm, ...]
    relation: str  # "<=", "=", ">="
    rhs: int


@dataclass(frozen=True)
class IpModel:
    sense: str  # "min" | "max"
    objective: tuple[IpTerm, ...]
    constraints: tuple[IpConstraint, ...]
    binaries: tuple[str, ...]
    bounded_reals: tuple[str, ...]  # bounded to [0, 1]

    def __post_init__(self) -> None:
        if self.sense not in ("min", "max"):
            raise ValidationError(f"unknown objective sense {self.sense!r}")
        declared = set(self.binaries) | set(self.bounded_reals)
        if len(declared) != len(self.binaries) + len(self.bounded_reals):
            raise ValidationError("variable declared twice")
        for name in itertools.chain(self.binaries, self.bounded_reals):
            if not _NAME_RE.match(name):
                raise ValidationError(f"invalid variable name {name!r}")
        for term in self.objective:
            if term.var not in declared:
                raise ValidationError(f"undeclared variable {term.var!r} in objective")
        names = set()
        for c in self.constraints:
            if c.name in names:
                raise ValidationError(f"duplicate constraint name {c.name!r}")
            names.add(c.name)
            if c.relation not in ("<=", "=", ">="):
                raise ValidationError(f"bad relation {c.relation!r} in {c.name!r}")
            for term in c.terms:
                if term.var not in declared:
                    raise ValidationError(
                        f"undeclared variable {term.var!r} in constraint {c.name!r}"
                    )


def build_dp_ip(w: Workload) -> IpModel:
    """Placement IP: one binary per (query-or-table, server), assignment
    equalities, storage capacities, and per-reference co-location
    indicators lam >= +-(x_query - x_table) driving the minimization."""
    l = len(w.servers)
    binaries = []
    reals = []
    constraints = []
    objective = []
    t_index = {t.id: j + 1 for j, t in enumerate(w.tables)}
    q_index = {q.id: i + 1 for i, q in enumerate(w.queries)}

    def x_t(j: int, k: int) -> str:
        return f"x_T{j}_S{k}"

    def x_q(i: int, k: int) -> str:
        return f"x_Q{i}_S{k}"

    for j, t in enumerate(w.tables, start=1):
        row = [x_t(j, k) for k in range(1, l + 1)]
        binaries.extend(row)
        constraints.append(
            IpConstraint(f"assign_T{j}", tuple(IpTerm(1, v) for v in row), "=", 1)
        )
    for i, q in enumerate(w.queries, start=1):
        row = [x_q(i, k) for k in range(1, l + 1)]
        binaries.extend(row)
        constraints.append(
            IpConstraint(f"assign_Q{i}", tuple(IpTerm(1, v) for v in row), "=", 1)
        )
    for k, s in enumerate(w.servers, start=1):
        terms = tuple(
            IpTerm(t.size, x_t(t_index[t.id], k)) for t in w.tables if t.size > 0
        )
        constraints.append(IpConstraint(f"cap_S{k}", terms, "<=", s.storage_capacity))
    for q in w.queries:
        i = q_index[q.id]
        for r in q.refs:
            j = t_index[r.table]
            lam = f"lam_Q{i}_T{j}"
            reals.append(lam)
            coef = q.frequency * r.cost
            if coef > 0:
                objective.append(IpTerm(coef, lam))
            for k in range(1, l + 1):
                constraints.append(
                    IpConstraint(
                        f"lam_Q{i}_T{j}_S{k}_a",
                        (IpTerm(1, x_q(i, k)), IpTerm(-1, x_t(j, k)), IpTerm(-1, lam)),
                        "<=",
                        0,
                    )
                )
                constraints.append(
                    IpConstraint(
                        f"lam_Q{i}_T{j}_S{k}_b",
                        (IpTerm(1, x_t(j, k)), IpTerm(-1, x_q(i, k)), IpTerm(-1, lam)),
                        "<=",
                        0,
                    )
                )
    return IpModel(
        "min", tuple(objective), tuple(constraints), tuple(binaries), tuple(reals)
    )


def build_replication_ip(w: Workload, r: int) -> IpModel:
    """Replication IP: r replica binaries per table, one site binary per
    query, and a linearized co-location product, maximizing the
    frequency-weighted transfer saved by local replicas."""
    l = len(w.servers)
    if r < 1:
        raise ValidationError("replication factor must be >= 1")
    if r > l:
        raise ValidationError(f"replication factor {r} exceeds {l} servers")
    binaries = []
    reals = []
    constraints = []
    objective = []
    t_index = {t.id: j + 1 for j, t in enumerate(w.tables)}

    def x(h: int, j: int, k: int) -> str:
        return f"xr{h}_T{j}_S{k}"

    def y(i: int, k: int) -> str:
        return f"y_Q{i}_S{k}"

    for i, q in enumerate(w.queries, start=1):
        row = [y(i, k) for k in range(1, l + 1)]
        binaries.extend(row)
        constraints.append(
            IpConstraint(f"assign_Q{i}", tuple(IpTerm(1, v) for v in row), "=", 1)
        )
    for j, t in enumerate(w.tables, start=1):
        for h in range(1, r + 1):
            row = [x(h, j, k) for k in range(1, l + 1)]
            binaries.extend(row)
            constraints.append(
                IpConstraint(
                    f"assign_T{j}_r{h}", tuple(IpTerm(1, v) for v in row), "=", 1
                )
            )
        for k in range(1, l + 1):
            constraints.append(
                IpConstraint(
                    f"replica_once_T{j}_S{k}",
                    tuple(IpTerm(1, x(h, j, k)) for h in range(1, r + 1)),
                    "<=",
                    1,
                )
            )
    for k, s in enumerate(w.servers, start=1):
        terms = tuple(
            IpTerm(t.size, x(h, t_index[t.id], k))
            for t in w.tables
            if t.size > 0
            for h in range(1, r + 1)
        )
        constraints.append(IpConstraint(f"cap_S{k}", terms, "<=", s.storage_capacity))
    for i, q in enumerate(w.queries, start=1):
        for ref in q.refs:
            j = t_index[ref.table]
            coef = q.frequency * ref.cost
            for k in range(1, l + 1):
                for h in range(1, r + 1):
                    z = f"z{h}_Q{i}_T{j}_S{k}"
                    reals.append(z)
                    if coef > 0:
                        objective.append(IpTerm(coef, z))
                    constraints.append(
                        IpConstraint(
                            f"{z}_y", (IpTerm(1, z), IpTerm(-1, y(i, k))), "<=", 0
                        )
                    )
                    constraints.append(
                        IpConstraint(
                            f"{z}_x", (IpTerm(1, z), IpTerm(-1, x(h, j, k))), "<=", 0
                        )
                    )
    return IpModel(
        "max", tuple(objective), tuple(constraints), tuple(binaries), tuple(reals)
    )


def build_gdp_ip(d: ViewDag) -> IpModel:
    """Generalized placement IP: storage and computation binaries per
    view, cut indicators per dependency arc, move indicators per movable
    view; immovable views get hard storage=computation equalities."""
    l = len(d.servers)
    binaries = []
    reals = []
    constraints = []
    objective = []
    v_index = {v.id: j + 1 for j, v in enumerate(d.views)}

    def xs(j: int, k: int) -> str:
        return f"xs_V{j}_S{k}"

    def xc(j: int, k: int) -> str:
        return f"xc_V{j}_S{k}"

    for j, v in enumerate(d.views, start=1):
        s_row = [xs(j, k) for k in range(1, l + 1)]
        c_row = [xc(j, k) for k in range(1, l + 1)]
        binaries.extend(s_row)
        binaries.extend(c_row)
        constraints.append(
            IpConstraint(f"store_V{j}", tuple(IpTerm(1, v_) for v_ in s_row), "=", 1)
        )
        constraints.append(
            IpConstraint(f"compute_V{j}", tuple(IpTerm(1, v_) for v_ in c_row), "=", 1)
        )
    for k, s in enumerate(d.servers, start=1):
        terms = tuple(
            IpTerm(v.size, xs(v_index[v.id], k)) for v in d.views if v.size > 0
        )
        constraints.append(IpConstraint(f"cap_S{k}", terms, "<=", s.storage_capacity))
    for a in d.arcs:
        i, j = v_index[a.consumer], v_index[a.producer]
        if a.cost == 0:
            continue
        cut = f"cut_V{i}_V{j}"
        reals.append(cut)
        objective.append(IpTerm(a.cost, cut))
        for k in range(1, l + 1):
            constraints.append(
                IpConstraint(
                    f"{cut}_S{k}_a",
                    (IpTerm(1, xc(i, k)), IpTerm(-1, xs(j, k)), IpTerm(-1, cut)),
                    "<=",
                    0,
                )
            )
            constraints.append(
                IpConstraint(
                    f"{cut}_S{k}_b",
                    (IpTerm(1, xs(j, k)), IpTerm(-1, xc(i, k)), IpTerm(-1, cut)),
                    "<=",
                    0,
                )
            )
    for v in d.views:
        j = v_index[v.id]
        if v.transfer_cost == INFINITE:
            for k in range(1, l + 1):
                constraints.append(
                    IpConstraint(
                        f"pin_V{j}_S{k}",
                        (IpTerm(1, xs(j, k)), IpTerm(-1, xc(j, k))),
                        "=",
                        0,
                    )
                )
        elif v.transfer_cost > 0:
            mov = f"mov_V{j}"
            reals.append(mov)
            objective.append(IpTerm(int(v.transfer_cost), mov))
            for k in range(1, l + 1):
                constraints.append(
                    IpConstraint(
                        f"{mov}_S{k}_a",
                        (IpTerm(1, xs(j, k)), IpTerm(-1, xc(j, k)), IpTerm(-1, mov)),
                        "<=",
                        0,
                    )
                )
                constraints.append(
                    IpConstraint(
                        f"{mov}_S{k}_b",
                        (IpTerm(1, xc(j, k)), IpTerm(-1, xs(j, k)), IpTerm(-1, mov)),
                        "<=",
                        0,
                    )
                )
    return IpModel(
        "min", tuple(objective), tuple(constraints), tuple(binaries), tuple(reals)
    )


def _format_terms(terms: tuple[IpTerm, ...]) -> str:
    parts = []
    for idx, term in enumerate(terms):
        if idx == 0:
            prefix = "-" if term.coef < 0 else ""
        else:
            prefix = "- " if term.coef < 0 else "+ "
        parts.append(f"{prefix}{abs(term.coef)} {term.var}")
    return " ".join(parts)


def write_lp(m: IpModel) -> str:
    """Emit solver-standard LP text (objective, Subject To, Bounds,
    Binary, End).  An empty objective becomes the "0 dummy0" convention
    with dummy0 fixed to 0 in Bounds."""
    lines = ["Minimize" if m.sense == "min" else "Maximize"]
    if m.objective:
        lines.append(" obj: " + _format_terms(m.objective))
    else:
        lines.append(" obj: 0 dummy0")
    lines.append("Subject To")
    for c in m.constraints:
        if not _NAME_RE.match(c.name):
            raise ValidationError(f"invalid constraint name {c.name!r}")
        body = _format_terms(c.terms) if c.terms else "0 dummy0"
        lines.append(f" {c.name}: {body} {c.relation} {c.rhs}")
    lines.append("Bounds")
    if not m.objective or any(not c.terms for c in m.constraints):
        lines.append(" dummy0 = 0")
    for v in m.bounded_reals:
        lines.append(f" 0 <= {v} <= 1")
    if m.binaries:
        lines.append("Binary")
        for v in m.binaries:
            lines.append(f" {v}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _parse_terms(tokens: list[str], where: str) -> tuple[IpTerm, ...]:
    terms = []
    sign = 1
    pending: int | None = None
    for tok in tokens:
        if tok == "+":
            sign = 1
        elif tok == "-":
            sign = -1
        elif re.fullmatch(r"-?\d+", tok):
            if pending is not None:
                raise DocumentError(f"two consecutive numbers in {where}")
            pending = sign * int(tok)
            sign = 1
        else:
            if not _NAME_RE.match(tok):
                raise DocumentError(f"invalid variable name {tok!r} in {where}")
            coef = pending if pending is not None else sign
            terms.append(IpTerm(coef, tok))
            pending = None
            sign = 1
    if pending is not None:
        raise DocumentError(f"dangling coefficient in {where}")
    return tuple(t for t in terms if not (t.var == "dummy0" and t.coef == 0))


def read_lp(text: str) -> IpModel:
    """Re-read LP text written by write_lp (the same grammar subset)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DocumentError("empty LP document")
    head = lines[0].lower()
    if head in ("minimize", "min"):
        sense = "min"
    elif head in ("maximize", "max"):
        sense = "max"
    else:
        raise DocumentError(f"expected Minimize/Maximize, got {lines[0]!r}")
    i = 1
    objective: tuple[IpTerm, ...] = ()
    obj_tokens: list[str] = []
    while i < len(lines) and lines[i].lower() != "subject to":
        body = lines[i]
        if ":" in body:
            body = body.split(":", 1)[1]
        obj_tokens.extend(body.split())
        i += 1
    objective = _parse_terms(obj_tokens, "objective")
    if i == len(lines):
        raise DocumentError("missing 'Subject To' section")
    i += 1
    constraints = []
    while i < len(lines) and lines[i].lower() not in ("bounds", "binary", "end"):
        line = lines[i]
        if ":" not in line:
            raise DocumentError(f"constraint without a name: {line!r}")
        name, body = line.split(":", 1)
        name = name.strip()
        tokens = body.split()
        rel_pos = next(
            (p for p, tok in enumerate(tokens) if tok in ("<=", "=", ">=")), None
        )
        if rel_pos is None or rel_pos != len(tokens) - 2:
            raise DocumentError(f"malformed constraint {name!r}")
        terms = _parse_terms(tokens[:rel_pos], f"constraint {name!r}")
        constraints.append(
            IpConstraint(name, terms, tokens[rel_pos], int(tokens[rel_pos + 1]))
        )
        i += 1
    reals: list[str] = []
    binaries: list[str] = []
    while i < len(lines):
        section = lines[i].lower()
        if section == "end":
            break
        if section == "bounds":
            i += 1
            while i < len(lines) and lines[i].lower() not in ("binary", "end"):
                tokens = lines[i].split()
                if tokens == ["dummy0", "=", "0"]:
                    pass
                elif (
                    len(tokens) == 5
                    and tokens[0] == "0"
                    and tokens[1] == "<="
                    and tokens[3] == "<="
                    and tokens[4] == "1"
                ):
                    reals.append(tokens[2])
                else:
                    raise DocumentError(f"unsupported bounds line: {lines[i]!r}")
                i += 1
        elif section == "binary":
            i += 1
            while i < len(lines) and lines[i].lower() not in ("bounds", "end"):
                binaries.extend(lines[i].split())
                i += 1
        else:
            raise DocumentError(f"unexpected section {lines[i]!r}")
    return IpModel(sense, objective, tuple(constraints), tuple(binaries), tuple(reals))


def solve_ip_by_enumeration(
    m: IpModel, max_choices: int = 2_000_000
) -> tuple[Fraction, dict[str, Fraction]] | None:
    """Optimum by exhaustive enumeration of feasible binary assignments.

    Assignment-style equalities (all-ones, rhs 1, binary-only) shrink the
    enumeration to one choice per group; every remaining binary doubles
    it.  Each [0,1] real must appear in constraints only alongside
    binaries, so given the binaries its bounds are explicit and the
    objective direction fixes its value.  Returns None when no feasible
    assignment exists.  Independent of the oracle module by construction.
    """
    bin_set = set(m.binaries)
    real_set = set(m.bounded_reals)
    groups: list[list[str]] = []
    grouped: set[str] = set()
    for c in m.constraints:
        if (
            c.relation == "="
            and c.rhs == 1
            and c.terms
            and all(t.coef == 1 and t.var in bin_set for t in c.terms)
            and not any(t.var in grouped for t in c.terms)
        ):
            groups.append([t.var for t in c.terms])
            grouped.update(t.var for t in c.terms)
    free = [b for b in m.binaries if b not in grouped]

    total_choices = 2 ** len(free)
    for g in groups:
        total_choices *= len(g)
    if total_choices > max_choices:
        raise ValidationError(
            f"enumeration would need {total_choices} assignments (> {max_choices})"
        )

    # Split constraints into binary-only checks and per-real bound sources.
    binary_constraints = []
    real_constraints: dict[str, list[tuple[IpConstraint, int]]] = {v: [] for v in real_set}
    for c in m.constraints:
        real_terms = [t for t in c.terms if t.var in real_set]
        if not real_terms:
            binary_constraints.append(c)
        elif len(real_terms) == 1 and real_terms[0].coef != 0:
            real_constraints[real_terms[0].var].append((c, real_terms[0].coef))
        else:
            raise ValidationError(
                f"constraint {c.name!r} couples several bounded reals"
            )
    obj_coef: dict[str, int] = {}
    for t in m.objective:
        obj_coef[t.var] = obj_coef.get(t.var, 0) + t.coef

    best: tuple[Fraction, dict[str, Fraction]] | None = None
    sense_min = m.sense == "min"
    group_choices = [range(len(g)) for g in groups]
    for picks in itertools.product(*group_choices):
        base = {}
        for g, pick in zip(groups, picks):
            for idx, var in enumerate(g):
                base[var] = 1 if idx == pick else 0
        for bits in itertools.product((0, 1), repeat=len(free)):
            value = dict(base)
            value.update(zip(free, bits))
            ok = True
            for c in binary_constraints:
                lhs = sum(t.coef * value[t.var] for t in c.terms)
                if c.relation == "<=" and lhs > c.rhs:
                    ok = False
                elif c.relation == ">=" and lhs < c.rhs:
                    ok = False
                elif c.relation == "=" and lhs != c.rhs:
                    ok = False
                if not ok:
                    break
            if not ok:
                continue
            assignment: dict[str, Fraction] = {
                v: Fraction(x) for v, x in value.items()
            }
            for var in m.bounded_reals:
                lo, hi = Fraction(0), Fraction(1)
                for c, coef in real_constraints[var]:
                    residual = c.rhs - sum(
                        t.coef * value[t.var] for t in c.terms if t.var != var
                    )
                    bound = Fraction(residual, coef)
                    if c.relation == "=":
                        lo = max(lo, bound)
                        hi = min(hi, bound)
                    elif (c.relation == "<=") == (coef > 0):
                        hi = min(hi, bound)
                    else:
                        lo = max(lo, bound)
                if lo > hi:
                    ok = False
                    break
                coef = obj_coef.get(var, 0)
                if coef == 0:
                    assignment[var] = lo
                elif (coef > 0) == sense_min:
                    assignment[var] = lo
                else:
                    assignment[var] = hi
            if not ok:
                continue
            objective = sum(
                (Fraction(t.coef) * assignment[t.var] for t in m.objective),
                Fraction(0),
            )
            if best is None:
                best = (objective, assignment)
            elif sense_min and objective < best[0]:
                best = (objective, assignment)
            elif not sense_min and objective > best[0]:
                best = (objective, assignment)
    return best
