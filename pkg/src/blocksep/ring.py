"""Exact coefficient arithmetic for differential operators.

Coefficients live in Q(params)(x_1..x_D)[rho_0, rho_1, ...] where each
radical symbol rho_k satisfies rho_k^2 = S_k for a registered polynomial
S_k over the coordinates (a sum of squares).  A coefficient is stored as
a numerator polynomial over all slots (coordinates, parameters, radicals)
divided by a product of registered irreducible denominator atoms, each an
exact polynomial in the coordinates alone.  Normal form:

* every radical exponent is 0 or 1 in the numerator (rho^2 -> S),
* no denominator atom divides the numerator,
* denominator atoms are primitive integer polynomials with positive
  leading coefficient, so the representation of a value is unique and
  equality is a syntactic check.

Denominators are never factored: they only ever arise as products of the
atoms the callers divide by (single coordinates and block norms), which
are irreducible over Q, so cancellation by repeated exact division is
complete.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .errors import ContextMismatchError, UndeclaredParameterError

F0 = Fraction(0)
F1 = Fraction(1)


def _mono_add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def _mono_sub(a: tuple, b: tuple) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


def _mono_divides(d: tuple, m: tuple) -> bool:
    return all(x <= y for x, y in zip(d, m))


def _deglex(m: tuple):
    return (sum(m), m)


class Poly:
    """Immutable sparse polynomial with Fraction coefficients.

    Exponent vectors run over a fixed slot space; the surrounding context
    decides which slots are coordinates, parameters, or radicals.
    """

    __slots__ = ("n", "terms", "_hash")

    def __init__(self, n: int, terms: dict):
        self.n = n
        self.terms = terms
        self._hash = None

    @staticmethod
    def zero(n: int) -> "Poly":
        return Poly(n, {})

    @staticmethod
    def const(n: int, c) -> "Poly":
        c = Fraction(c)
        return Poly(n, {} if c == 0 else {(0,) * n: c})

    @staticmethod
    def var(n: int, slot: int, exp: int = 1) -> "Poly":
        mono = tuple(exp if i == slot else 0 for i in range(n))
        return Poly(n, {mono: F1})

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and sum(next(iter(self.terms))) == 0)

    def const_value(self) -> Fraction:
        if not self.terms:
            return F0
        return self.terms[(0,) * self.n]

    def add(self, other: "Poly") -> "Poly":
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            nc = out.get(m, F0) + c
            if nc:
                out[m] = nc
            else:
                out.pop(m, None)
        return Poly(self.n, out)

    def neg(self) -> "Poly":
        return Poly(self.n, {m: -c for m, c in self.terms.items()})

    def sub(self, other: "Poly") -> "Poly":
        return self.add(other.neg())

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if c == 0:
            return Poly.zero(self.n)
        if c == 1:
            return self
        return Poly(self.n, {m: cc * c for m, cc in self.terms.items()})

    def mul(self, other: "Poly") -> "Poly":
        if not self.terms or not other.terms:
            return Poly.zero(self.n)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_add(m1, m2)
                nc = out.get(m, F0) + c1 * c2
                if nc:
                    out[m] = nc
                else:
                    out.pop(m, None)
        return Poly(self.n, out)

    def mul_mono(self, mono: tuple, coeff: Fraction) -> "Poly":
        if coeff == 0:
            return Poly.zero(self.n)
        return Poly(self.n, {_mono_add(m, mono): c * coeff for m, c in self.terms.items()})

    def pow(self, e: int) -> "Poly":
        out = Poly.const(self.n, 1)
        base = self
        while e:
            if e & 1:
                out = out.mul(base)
            base = base.mul(base) if e > 1 else base
            e >>= 1
        return out

    def deriv_slot(self, slot: int) -> "Poly":
        """Formal partial derivative treating every slot as independent."""
        out = {}
        for m, c in self.terms.items():
            e = m[slot]
            if e:
                m2 = tuple(v - 1 if i == slot else v for i, v in enumerate(m))
                nc = out.get(m2, F0) + c * e
                if nc:
                    out[m2] = nc
                else:
                    out.pop(m2, None)
        return Poly(self.n, out)

    def select_slot(self, slot: int, exp: int) -> "Poly":
        """Sub-polynomial of terms whose exponent in ``slot`` equals ``exp``."""
        return Poly(self.n, {m: c for m, c in self.terms.items() if m[slot] == exp})

    def max_exp(self, slot: int) -> int:
        return max((m[slot] for m in self.terms), default=0)

    def leading(self):
        m = max(self.terms, key=_deglex)
        return m, self.terms[m]

    def exact_div(self, d: "Poly"):
        """Quotient self/d when the division is exact, else None."""
        if self.is_zero():
            return self
        if d.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        dm, dc = d.leading()
        rem = dict(self.terms)
        out: dict = {}
        while rem:
            rm = max(rem, key=_deglex)
            if not _mono_divides(dm, rm):
                return None
            q = rem[rm] / dc
            qm = _mono_sub(rm, dm)
            out[qm] = out.get(qm, F0) + q
            for m2, c2 in d.terms.items():
                mm = _mono_add(qm, m2)
                nc = rem.get(mm, F0) - q * c2
                if nc:
                    rem[mm] = nc
                else:
                    rem.pop(mm, None)
        return Poly(self.n, out)

    def substitute_slot(self, slot: int, value: Fraction) -> "Poly":
        out: dict = {}
        for m, c in self.terms.items():
            e = m[slot]
            if e:
                c = c * value**e
                m = tuple(0 if i == slot else v for i, v in enumerate(m))
            if c:
                nc = out.get(m, F0) + c
                if nc:
                    out[m] = nc
                else:
                    out.pop(m, None)
        return Poly(self.n, out)

    def eval_numeric(self, values):
        """Evaluate at numeric slot values (scalars or numpy arrays)."""
        total = 0.0
        for m, c in self.terms.items():
            term = float(c)
            for slot, e in enumerate(m):
                if e:
                    term = term * values[slot] ** e
            total = total + term
        return total

    def normalized_integer(self) -> "Poly":
        """Scale to primitive integer coefficients, positive leading coeff."""
        if self.is_zero():
            return self
        den_lcm = 1
        for c in self.terms.values():
            den_lcm = den_lcm * c.denominator // gcd(den_lcm, c.denominator)
        num_gcd = 0
        for c in self.terms.values():
            num_gcd = gcd(num_gcd, abs(c.numerator * (den_lcm // c.denominator)))
        scale = Fraction(den_lcm, num_gcd)
        _, lead = self.leading()
        if lead < 0:
            scale = -scale
        return self.scale(scale)

    def key(self):
        if self._hash is None:
            self._hash = frozenset(self.terms.items())
        return self._hash

    def __eq__(self, other):
        return isinstance(other, Poly) and self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Poly({len(self.terms)} terms)"


class Radical:
    """A square-root symbol rho with rho^2 = S for a coordinate polynomial S."""

    __slots__ = ("name", "slot", "square", "support", "_powers")

    def __init__(self, name: str, slot: int, square: Poly, support: frozenset):
        self.name = name
        self.slot = slot
        self.square = square
        self.support = support
        self._powers = [Poly.const(square.n, 1), square]

    def square_pow(self, e: int) -> Poly:
        while len(self._powers) <= e:
            self._powers.append(self._powers[-1].mul(self.square))
        return self._powers[e]


class Atom:
    """Registered irreducible denominator polynomial."""

    __slots__ = ("aid", "poly", "derivs", "_powers")

    def __init__(self, aid: int, poly: Poly, nx: int):
        self.aid = aid
        self.poly = poly
        self.derivs = tuple(poly.deriv_slot(i) for i in range(nx))
        self._powers = [Poly.const(poly.n, 1), poly]

    def pow(self, e: int) -> Poly:
        while len(self._powers) <= e:
            self._powers.append(self._powers[-1].mul(self.poly))
        return self._powers[e]


class Context:
    """Slot layout and registries shared by all operators of a computation.

    Slots are ordered coordinates, then parameters, then radicals.  Two
    operators interoperate only if they share the same Context object.
    """

    def __init__(self, var_names, param_names=(), radical_squares=()):
        """radical_squares: iterable of (name, coord index set) pairs; the
        square is the sum of squared coordinates over the index set."""
        self.var_names = tuple(var_names)
        self.param_names = tuple(param_names)
        self.nx = len(self.var_names)
        self.np = len(self.param_names)
        rad_specs = list(radical_squares)
        self.nvars = self.nx + self.np + len(rad_specs)
        self.radicals = []
        seen_squares = {}
        for name, support in rad_specs:
            support = frozenset(support)
            slot = self.nx + self.np + len(self.radicals)
            terms = {}
            for i in sorted(support):
                mono = tuple(2 if k == i else 0 for k in range(self.nvars))
                terms[mono] = F1
            square = Poly(self.nvars, terms)
            key = square.key()
            if key in seen_squares:
                raise ValueError(f"duplicate radical square for {name}")
            seen_squares[key] = name
            self.radicals.append(Radical(name, slot, square, support))
        self.radicals = tuple(self.radicals)
        self._rad_by_square = {r.square.key(): r for r in self.radicals}
        self._atoms: dict = {}
        self._atom_list: list = []
        self._param_slots = {p: self.nx + i for i, p in enumerate(self.param_names)}

    # -- polynomial constructors ------------------------------------------

    def zero_poly(self) -> Poly:
        return Poly.zero(self.nvars)

    def const_poly(self, c) -> Poly:
        return Poly.const(self.nvars, c)

    def x(self, i: int, exp: int = 1) -> Poly:
        if not 0 <= i < self.nx:
            raise IndexError(f"coordinate index {i} out of range")
        return Poly.var(self.nvars, i, exp)

    def param(self, name: str) -> Poly:
        try:
            slot = self._param_slots[name]
        except KeyError:
            raise UndeclaredParameterError(f"parameter {name!r} not declared") from None
        return Poly.var(self.nvars, slot)

    def radical_poly(self, k: int) -> Poly:
        return Poly.var(self.nvars, self.radicals[k].slot)

    def radical_for(self, support) -> Radical:
        support = frozenset(support)
        for r in self.radicals:
            if r.support == support:
                return r
        raise KeyError(f"no radical registered for support {sorted(support)}")

    def sum_of_squares(self, indices) -> Poly:
        terms = {}
        for i in indices:
            mono = tuple(2 if k == i else 0 for k in range(self.nvars))
            terms[mono] = F1
        return Poly(self.nvars, terms)

    # -- denominator atoms --------------------------------------------------

    def atom(self, poly: Poly) -> Atom:
        """Register (or fetch) a canonical denominator atom.

        Returns the atom and the leftover scalar is the caller's problem:
        pass a polynomial equal to a rational multiple of the atom and use
        :meth:`atom_and_scale` to recover the multiplier.
        """
        a, scale = self.atom_and_scale(poly)
        if scale != 1:
            raise ValueError("atom polynomial is not normalized; use atom_and_scale")
        return a

    def atom_and_scale(self, poly: Poly):
        """Canonicalize ``poly`` = scale * atom with atom primitive-integer."""
        if poly.is_zero():
            raise ZeroDivisionError("zero denominator")
        for slot in range(self.nx, self.nvars):
            if poly.max_exp(slot):
                raise ValueError("denominator atoms must be coordinate polynomials")
        norm = poly.normalized_integer()
        # scale * norm == poly
        m, c = norm.leading()
        scale = poly.terms[m] / c
        key = norm.key()
        a = self._atoms.get(key)
        if a is None:
            a = Atom(len(self._atom_list), norm, self.nx)
            self._atoms[key] = a
            self._atom_list.append(a)
        return a, scale

    def atom_by_id(self, aid: int) -> Atom:
        return self._atom_list[aid]

    def den_factors(self, poly: Poly):
        """Decompose a divisor into (scalar, {atom id: exponent}).

        Monomials split into single-variable atoms; anything else must be a
        scalar multiple of one irreducible atom (the callers only ever divide
        by coordinates and block norms, which are irreducible over Q).
        """
        if poly.is_zero():
            raise ZeroDivisionError("zero denominator")
        if poly.is_const():
            return poly.const_value(), {}
        if len(poly.terms) == 1:
            mono, c = poly.leading()
            factors: dict = {}
            for slot, e in enumerate(mono):
                if not e:
                    continue
                if slot >= self.nx:
                    raise ValueError("denominator atoms must be coordinate polynomials")
                a, _ = self.atom_and_scale(Poly.var(self.nvars, slot))
                factors[a.aid] = factors.get(a.aid, 0) + e
            return c, factors
        a, scale = self.atom_and_scale(poly)
        return scale, {a.aid: 1}

    # -- normalization helpers ----------------------------------------------

    def reduce_radicals(self, p: Poly) -> Poly:
        """Rewrite rho_k^e with e >= 2 using rho_k^2 = S_k."""
        needs = False
        for r in self.radicals:
            if p.max_exp(r.slot) >= 2:
                needs = True
                break
        if not needs:
            return p
        total = Poly.zero(self.nvars)
        for m, c in p.terms.items():
            piece = None
            mono = list(m)
            for r in self.radicals:
                e = mono[r.slot]
                if e >= 2:
                    mono[r.slot] = e % 2
                    sq = r.square_pow(e // 2)
                    piece = sq if piece is None else piece.mul(sq)
            base = Poly(self.nvars, {tuple(mono): c})
            total = total.add(base if piece is None else base.mul(piece))
        # squares can nest only through coordinates, so one pass suffices
        return total

    def check_same(self, other: "Context"):
        if self is not other:
            raise ContextMismatchError("operands built over different contexts")

    # -- display --------------------------------------------------------------

    def slot_name(self, slot: int) -> str:
        if slot < self.nx:
            return self.var_names[slot]
        if slot < self.nx + self.np:
            return self.param_names[slot - self.nx]
        return self.radicals[slot - self.nx - self.np].name

    def poly_text(self, p: Poly) -> str:
        if p.is_zero():
            return "0"
        bits = []
        for m in sorted(p.terms, key=_deglex, reverse=True):
            c = p.terms[m]
            factors = []
            for slot, e in enumerate(m):
                if e == 1:
                    factors.append(self.slot_name(slot))
                elif e > 1:
                    factors.append(f"{self.slot_name(slot)}^{e}")
            body = "*".join(factors)
            if not body:
                piece = str(c)
            elif c == 1:
                piece = body
            elif c == -1:
                piece = f"-{body}"
            else:
                piece = f"{c}*{body}"
            bits.append(piece)
        text = " + ".join(bits)
        return text.replace("+ -", "- ")


class Coefficient:
    """Normal-form rational coefficient num / prod(atom_i^e_i)."""

    __slots__ = ("ctx", "num", "den")

    def __init__(self, ctx: Context, num: Poly, den: tuple):
        self.ctx = ctx
        self.num = num
        self.den = den  # sorted tuple of (atom_id, exp)

    @staticmethod
    def make(ctx: Context, num: Poly, den=()) -> "Coefficient":
        num = ctx.reduce_radicals(num)
        if num.is_zero():
            return Coefficient(ctx, num, ())
        exps: dict = {}
        for aid, e in dict(den).items():
            if e:
                exps[aid] = exps.get(aid, 0) + e
        out = []
        for aid in sorted(exps):
            e = exps[aid]
            apoly = ctx.atom_by_id(aid).poly
            while e > 0:
                q = num.exact_div(apoly)
                if q is None:
                    break
                num = q
                e -= 1
            if e:
                out.append((aid, e))
        return Coefficient(ctx, num, tuple(out))

    @staticmethod
    def from_poly(ctx: Context, p: Poly) -> "Coefficient":
        return Coefficient.make(ctx, p)

    @staticmethod
    def const(ctx: Context, c) -> "Coefficient":
        return Coefficient(ctx, ctx.const_poly(c), ())

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def _den_poly_parts(self, target: dict) -> Poly:
        """Polynomial prod atom^(target[aid] - own exp) used for common dens."""
        ctx = self.ctx
        own = dict(self.den)
        out = None
        for aid, e in target.items():
            diff = e - own.get(aid, 0)
            if diff:
                p = ctx.atom_by_id(aid).pow(diff)
                out = p if out is None else out.mul(p)
        return out if out is not None else ctx.const_poly(1)

    def add(self, other: "Coefficient") -> "Coefficient":
        self.ctx.check_same(other.ctx)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        target: dict = {}
        for aid, e in self.den:
            target[aid] = max(target.get(aid, 0), e)
        for aid, e in other.den:
            target[aid] = max(target.get(aid, 0), e)
        num = self.num.mul(self._den_poly_parts(target)).add(
            other.num.mul(other._den_poly_parts(target))
        )
        return Coefficient.make(self.ctx, num, target)

    def neg(self) -> "Coefficient":
        return Coefficient(self.ctx, self.num.neg(), self.den)

    def sub(self, other: "Coefficient") -> "Coefficient":
        return self.add(other.neg())

    def mul(self, other: "Coefficient") -> "Coefficient":
        self.ctx.check_same(other.ctx)
        if self.is_zero() or other.is_zero():
            return Coefficient(self.ctx, self.ctx.zero_poly(), ())
        den: dict = dict(self.den)
        for aid, e in other.den:
            den[aid] = den.get(aid, 0) + e
        return Coefficient.make(self.ctx, self.num.mul(other.num), den)

    def scale(self, c) -> "Coefficient":
        c = Fraction(c)
        if c == 0:
            return Coefficient(self.ctx, self.ctx.zero_poly(), ())
        return Coefficient(self.ctx, self.num.scale(c), self.den)

    def mul_poly(self, p: Poly) -> "Coefficient":
        return Coefficient.make(self.ctx, self.num.mul(p), dict(self.den))

    def div_poly(self, p: Poly) -> "Coefficient":
        """Divide by a monomial or by a scalar multiple of a single atom."""
        scale, factors = self.ctx.den_factors(p)
        den = dict(self.den)
        for aid, e in factors.items():
            den[aid] = den.get(aid, 0) + e
        return Coefficient.make(self.ctx, self.num.scale(1 / scale), den)

    def deriv(self, i: int) -> "Coefficient":
        """Derivative with respect to coordinate i, radical-aware."""
        ctx = self.ctx
        parts = []
        p1 = self.num.deriv_slot(i)
        if not p1.is_zero():
            parts.append(Coefficient.make(ctx, p1, dict(self.den)))
        for r in ctx.radicals:
            if i not in r.support:
                continue
            sub = self.num.select_slot(r.slot, 1)
            if sub.is_zero():
                continue
            # d rho/dx_i = x_i rho / S keeps radicals in the numerator
            num = sub.mul(ctx.x(i))
            den = dict(self.den)
            sscale, sfactors = ctx.den_factors(r.square)
            for aid, e in sfactors.items():
                den[aid] = den.get(aid, 0) + e
            parts.append(Coefficient.make(ctx, num.scale(1 / sscale), den))
        for aid, e in self.den:
            ad = ctx.atom_by_id(aid).derivs[i]
            if ad.is_zero():
                continue
            den = dict(self.den)
            den[aid] = e + 1
            parts.append(Coefficient.make(ctx, self.num.mul(ad).scale(-e), den))
        if not parts:
            return Coefficient(ctx, ctx.zero_poly(), ())
        out = parts[0]
        for p in parts[1:]:
            out = out.add(p)
        return out

    def substitute_params(self, bindings: dict) -> "Coefficient":
        ctx = self.ctx
        num = self.num
        for name, value in bindings.items():
            slot = ctx._param_slots.get(name)
            if slot is None:
                raise UndeclaredParameterError(f"parameter {name!r} not declared")
            num = num.substitute_slot(slot, Fraction(value))
        return Coefficient.make(ctx, num, dict(self.den))

    def eval_numeric(self, coord_values, param_values: dict):
        """Evaluate at numeric coordinates (scalars or numpy arrays)."""
        ctx = self.ctx
        values = list(coord_values)
        for name in ctx.param_names:
            if name not in param_values:
                raise UndeclaredParameterError(f"no numeric value bound for {name!r}")
            values.append(param_values[name])
        for r in ctx.radicals:
            s = 0.0
            for i in r.support:
                s = s + coord_values[i] ** 2
            values.append(s**0.5)
        num = self.num.eval_numeric(values)
        for aid, e in self.den:
            num = num / ctx.atom_by_id(aid).poly.eval_numeric(values) ** e
        return num

    def __eq__(self, other):
        return (
            isinstance(other, Coefficient)
            and self.ctx is other.ctx
            and self.den == other.den
            and self.num == other.num
        )

    def __hash__(self):
        return hash((self.num.key(), self.den))

    def to_text(self) -> str:
        ctx = self.ctx
        num = ctx.poly_text(self.num)
        if not self.den:
            return num
        bits = []
        for aid, e in self.den:
            at = ctx.poly_text(ctx.atom_by_id(aid).poly)
            at = at if len(ctx.atom_by_id(aid).poly.terms) == 1 else f"({at})"
            bits.append(at if e == 1 else f"{at}^{e}")
        return f"({num}) / [{'*'.join(bits)}]"

    def __repr__(self):
        return f"Coefficient({self.to_text()})"
