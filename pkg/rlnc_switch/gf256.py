"""
Arithmetic over GF(2^m).

Two multiplication backends are available: the shift-and-add ("Russian
peasant") loop, which only needs the reduction polynomial, and the
log/antilog table lookup, which needs tables built from a primitive element.
Both operate on plain ints in [0, 2^m).
"""
import enum
import functools
import typing as t

from rlnc_switch.exceptions import InverseOfZero
from rlnc_switch.exceptions import NotIrreducible
from rlnc_switch.exceptions import NotPrimitive


DEFAULT_FIELD_BITS = 8
# x^8 + x^4 + x^3 + x^2 + 1; 2 is a primitive root under it.
DEFAULT_REDUCTION_POLY = 0x11D
DEFAULT_PRIMITIVE_ELEMENT = 0x02

MIN_FIELD_BITS = 2
MAX_FIELD_BITS = 16


class MulAlgorithm(str, enum.Enum):
    PEASANT = "peasant"
    LOG_TABLE = "logtable"


class GfContext(t.NamedTuple):
    m: int
    q: int
    reduction_poly: int
    primitive_element: int
    # Indexed by element value; slot 0 is a placeholder and is never read.
    log_table: t.Tuple[int, ...] = ()
    # Indexed by exponent in [0, q - 1).
    antilog_table: t.Tuple[int, ...] = ()

    @property
    def table_entries(self) -> int:
        """Number of meaningful log + antilog entries (510 for GF(2^8))."""
        return max(len(self.log_table) - 1, 0) + len(self.antilog_table)

    @property
    def order(self) -> int:
        """Order of the multiplicative group, Q - 1."""
        return self.q - 1


def gf_add(a: int, b: int) -> int:
    return a ^ b


gf_sub = gf_add


def peasant_step(
        ctx: GfContext,
        product: int,
        a: int,
        b: int
) -> t.Tuple[int, int, int]:
    """One iteration of the shift-and-add loop (one "action call")."""
    product ^= -(b & 1) & a
    mask = (a >> (ctx.m - 1)) & 1
    a = ((a << 1) ^ (ctx.reduction_poly & -mask)) & (ctx.q - 1)
    b >>= 1
    return product, a, b


def mul_peasant(ctx: GfContext, a: int, b: int) -> int:
    product = 0
    for _ in range(ctx.m):
        product, a, b = peasant_step(ctx, product, a, b)
    return product


def mul_table(ctx: GfContext, a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    s = ctx.log_table[a] + ctx.log_table[b]
    if s >= ctx.q - 1:
        s -= ctx.q - 1
    return ctx.antilog_table[s]


def gf_inverse(ctx: GfContext, a: int) -> int:
    if a == 0:
        raise InverseOfZero
    e = ctx.q - 1 - ctx.log_table[a]
    if e == ctx.q - 1:
        # log(1) = 0
        e = 0
    return ctx.antilog_table[e]


def gf_div(ctx: GfContext, a: int, b: int) -> int:
    return mul_table(ctx, a, gf_inverse(ctx, b))


def gf_pow(ctx: GfContext, a: int, e: int) -> int:
    result = 1
    while e:
        if e & 1:
            result = mul_table(ctx, result, a)
        a = mul_table(ctx, a, a)
        e >>= 1
    return result


def element_order(ctx: GfContext, a: int) -> int:
    """Multiplicative order of a nonzero element, by repeated multiplication."""
    if a == 0:
        raise InverseOfZero("Zero has no multiplicative order.")
    x = a
    order = 1
    while x != 1:
        x = mul_peasant(ctx, x, a)
        order += 1
    return order


def _degree(poly: int) -> int:
    return poly.bit_length() - 1


def _poly_mod(a: int, b: int) -> int:
    """Remainder of carry-less division of a by b over GF(2)."""
    db = _degree(b)
    while a and _degree(a) >= db:
        a ^= b << (_degree(a) - db)
    return a


def is_irreducible(poly: int, m: int) -> bool:
    """Exhaustive trial division by every polynomial of degree 1..m // 2."""
    if _degree(poly) != m:
        return False
    for divisor in range(2, 1 << (m // 2 + 1)):
        if _poly_mod(poly, divisor) == 0:
            return False
    return True


def build_context(
        m: int = DEFAULT_FIELD_BITS,
        reduction_poly: int = DEFAULT_REDUCTION_POLY,
        primitive_element: int = DEFAULT_PRIMITIVE_ELEMENT
) -> GfContext:
    if not (MIN_FIELD_BITS <= m <= MAX_FIELD_BITS):
        raise NotIrreducible(
            poly=reduction_poly,
            m=m,
            issue=f"m must be between {MIN_FIELD_BITS} and {MAX_FIELD_BITS}."
        )
    if _degree(reduction_poly) != m:
        raise NotIrreducible(
            poly=reduction_poly,
            m=m,
            issue=f"the polynomial has degree {_degree(reduction_poly)}, not {m}."
        )
    if not is_irreducible(reduction_poly, m):
        raise NotIrreducible(
            poly=reduction_poly,
            m=m,
            issue="the polynomial has a nontrivial factor."
        )

    q = 1 << m
    bare = GfContext(
        m=m,
        q=q,
        reduction_poly=reduction_poly,
        primitive_element=primitive_element
    )
    if not (0 < primitive_element < q):
        raise NotPrimitive(element=primitive_element, order=0)

    log_table = [0] * q
    antilog_table = [0] * (q - 1)
    x = 1
    for i in range(q - 1):
        if i > 0 and x == 1:
            raise NotPrimitive(element=primitive_element, order=i)
        antilog_table[i] = x
        log_table[x] = i
        x = mul_peasant(bare, x, primitive_element)

    return bare._replace(
        log_table=tuple(log_table),
        antilog_table=tuple(antilog_table)
    )


@functools.lru_cache(maxsize=None)
def default_context() -> GfContext:
    return build_context()


_BACKENDS: t.Dict[MulAlgorithm, t.Callable[[GfContext, int, int], int]] = {
    MulAlgorithm.PEASANT: mul_peasant,
    MulAlgorithm.LOG_TABLE: mul_table,
}


def get_multiplier(
        algorithm: t.Union[MulAlgorithm, str]
) -> t.Callable[[GfContext, int, int], int]:
    return _BACKENDS[MulAlgorithm(algorithm)]


class Arithmetic(object):
    """Field arithmetic bound to one context and one multiplication backend.

    Every multiplication performed through this object is counted in
    `mul_count`, which is what the cost model reads.
    """

    __slots__ = ("ctx", "algorithm", "mul_count", "_mul")

    def __init__(
            self,
            ctx: t.Optional[GfContext] = None,
            algorithm: t.Union[MulAlgorithm, str] = MulAlgorithm.LOG_TABLE
    ):
        self.ctx = ctx or default_context()
        self.algorithm = MulAlgorithm(algorithm)
        self.mul_count = 0
        self._mul = get_multiplier(self.algorithm)

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(m={self.ctx.m},"
            f" algorithm={self.algorithm.value!r}, mul_count={self.mul_count})"
        )

    @staticmethod
    def add(a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        self.mul_count += 1
        return self._mul(self.ctx, a, b)

    def inverse(self, a: int) -> int:
        return gf_inverse(self.ctx, a)

    def axpy(
            self,
            coefficient: int,
            source: t.Sequence[int],
            target: t.MutableSequence[int]
    ) -> None:
        """target[i] += coefficient * source[i], in place."""
        mul = self._mul
        ctx = self.ctx
        self.mul_count += len(source)
        for i, x in enumerate(source):
            target[i] ^= mul(ctx, coefficient, x)

    def scale(
            self,
            coefficient: int,
            target: t.MutableSequence[int]
    ) -> None:
        mul = self._mul
        ctx = self.ctx
        self.mul_count += len(target)
        for i, x in enumerate(target):
            target[i] = mul(ctx, coefficient, x)

    def reset_count(self) -> int:
        count, self.mul_count = self.mul_count, 0
        return count
