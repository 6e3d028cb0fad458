"""
Generation-based random linear network coding.

A generation is G source packets of N field elements each. Encoding draws G
coefficients and combines the source rows; recoding combines buffered coded
payloads, coding vectors included, so the result stays expressed relative to
the original sources; decoding is online Gauss-Jordan elimination.
"""
import enum
import logging
import typing as t

import numpy as np

from rlnc_switch.exceptions import CoefficientsExhausted
from rlnc_switch.exceptions import InsufficientBuffer
from rlnc_switch.exceptions import InvalidTrialCount
from rlnc_switch.exceptions import NotFullRank
from rlnc_switch.exceptions import ShapeMismatch
from rlnc_switch.gf256 import Arithmetic
from rlnc_switch.gf256 import GfContext
from rlnc_switch.gf256 import MulAlgorithm
from rlnc_switch.gf256 import default_context


logger = logging.getLogger(__name__)

Row = t.Tuple[int, ...]


class CodingParams(t.NamedTuple):
    generation_size: int
    symbols_per_packet: int
    field: GfContext = None
    symbol_size: int = 1

    @classmethod
    def build(
            cls,
            generation_size: int,
            symbols_per_packet: int,
            *,
            field: t.Optional[GfContext] = None,
            symbol_size: int = 1
    ) -> "CodingParams":
        params = cls(
            generation_size=generation_size,
            symbols_per_packet=symbols_per_packet,
            field=field or default_context(),
            symbol_size=symbol_size
        )
        params.validate()
        return params

    def validate(self) -> bool:
        for name in ("generation_size", "symbols_per_packet", "symbol_size"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ShapeMismatch(what=name, expected=">= 1", actual=value)
        return True

    @property
    def elements_per_packet(self) -> int:
        """Field elements carried per payload; each byte is one element."""
        return self.symbols_per_packet * self.symbol_size

    @property
    def ctx(self) -> GfContext:
        return self.field or default_context()


class SourceSymbolMatrix(t.NamedTuple):
    rows: t.Tuple[Row, ...]

    @classmethod
    def from_rows(cls, rows: t.Iterable[t.Iterable[int]]) -> "SourceSymbolMatrix":
        return cls(tuple(tuple(int(x) for x in row) for row in rows))

    @classmethod
    def random(
            cls,
            params: CodingParams,
            rng: np.random.Generator
    ) -> "SourceSymbolMatrix":
        data = rng.integers(
            0,
            params.ctx.q,
            size=(params.generation_size, params.elements_per_packet)
        )
        return cls.from_rows(data.tolist())

    @property
    def shape(self) -> t.Tuple[int, int]:
        return len(self.rows), (len(self.rows[0]) if self.rows else 0)

    def check_shape(self, params: CodingParams) -> None:
        if len(self.rows) != params.generation_size:
            raise ShapeMismatch(
                what="source rows",
                expected=params.generation_size,
                actual=len(self.rows)
            )
        for row in self.rows:
            if len(row) != params.elements_per_packet:
                raise ShapeMismatch(
                    what="source row length",
                    expected=params.elements_per_packet,
                    actual=len(row)
                )


class CodedPayload(t.NamedTuple):
    coding_vector: Row
    coded_symbols: Row

    def check_shape(self, params: CodingParams) -> None:
        if len(self.coding_vector) != params.generation_size:
            raise ShapeMismatch(
                what="coding vector",
                expected=params.generation_size,
                actual=len(self.coding_vector)
            )
        if len(self.coded_symbols) != params.elements_per_packet:
            raise ShapeMismatch(
                what="coded symbols",
                expected=params.elements_per_packet,
                actual=len(self.coded_symbols)
            )


class InnovationResult(str, enum.Enum):
    INNOVATIVE = "innovative"
    REDUNDANT = "redundant"


class CoefficientSource(object):
    """Seeded stream of coefficients, uniform over the field."""

    def __init__(self, seed: t.Optional[int] = None, q: int = 256):
        self.seed = seed
        self.q = q
        self._rng = np.random.default_rng(seed)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(seed={self.seed!r}, q={self.q})"

    def draw(self, count: int) -> Row:
        return tuple(self._rng.integers(0, self.q, size=count).tolist())


class FixedCoefficients(CoefficientSource):
    """Replays a scripted coefficient sequence."""

    def __init__(self, values: t.Iterable[int], q: int = 256):
        super().__init__(seed=None, q=q)
        self._values = list(values)
        self._position = 0

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(remaining={self.remaining})"

    @property
    def remaining(self) -> int:
        return len(self._values) - self._position

    def draw(self, count: int) -> Row:
        if count > self.remaining:
            raise CoefficientsExhausted
        out = self._values[self._position:self._position + count]
        self._position += count
        return tuple(out)


def _arithmetic(
        params: CodingParams,
        arith: t.Optional[Arithmetic]
) -> Arithmetic:
    if arith is None:
        return Arithmetic(params.ctx, MulAlgorithm.LOG_TABLE)
    return arith


def systematic_payload(
        params: CodingParams,
        index: int,
        symbols: t.Sequence[int]
) -> CodedPayload:
    """An uncoded packet, expressed as a payload with a unit coding vector."""
    if not (0 <= index < params.generation_size):
        raise ShapeMismatch(
            what="systematic index",
            expected=f"[0, {params.generation_size})",
            actual=index
        )
    vector = [0] * params.generation_size
    vector[index] = 1
    payload = CodedPayload(tuple(vector), tuple(symbols))
    payload.check_shape(params)
    return payload


def combine(
        arith: Arithmetic,
        coefficients: t.Sequence[int],
        rows: t.Sequence[t.Sequence[int]],
        width: int
) -> Row:
    out = [0] * width
    for c, row in zip(coefficients, rows):
        arith.axpy(c, row, out)
    return tuple(out)


def encode(
        params: CodingParams,
        sources: SourceSymbolMatrix,
        coeffs: CoefficientSource,
        *,
        arith: t.Optional[Arithmetic] = None
) -> CodedPayload:
    sources.check_shape(params)
    arith = _arithmetic(params, arith)
    coefficients = coeffs.draw(params.generation_size)
    symbols = combine(arith, coefficients, sources.rows, params.elements_per_packet)
    return CodedPayload(tuple(coefficients), symbols)


def recode(
        params: CodingParams,
        buffered: t.Sequence[CodedPayload],
        coeffs: CoefficientSource,
        *,
        arith: t.Optional[Arithmetic] = None
) -> CodedPayload:
    if len(buffered) < params.generation_size:
        raise InsufficientBuffer(
            required=params.generation_size,
            available=len(buffered)
        )
    for payload in buffered:
        payload.check_shape(params)
    arith = _arithmetic(params, arith)
    local = coeffs.draw(len(buffered))
    symbols = combine(
        arith,
        local,
        [p.coded_symbols for p in buffered],
        params.elements_per_packet
    )
    vector = combine(
        arith,
        local,
        [p.coding_vector for p in buffered],
        params.generation_size
    )
    return CodedPayload(vector, symbols)


def verify_payload(
        params: CodingParams,
        payload: CodedPayload,
        sources: SourceSymbolMatrix,
        *,
        arith: t.Optional[Arithmetic] = None
) -> bool:
    """Check coded_symbols = coding_vector . sources."""
    arith = _arithmetic(params, arith)
    expected = combine(
        arith,
        payload.coding_vector,
        sources.rows,
        params.elements_per_packet
    )
    return expected == tuple(payload.coded_symbols)


class DecoderState(object):
    """Incremental Gauss-Jordan workspace for one generation.

    Rows are kept sorted by pivot column and in reduced row-echelon form
    after every call to `decoder_consume`.
    """

    def __init__(
            self,
            params: CodingParams,
            *,
            arith: t.Optional[Arithmetic] = None
    ):
        self.params = params
        self.arith = _arithmetic(params, arith)
        self.coeff_matrix: t.List[t.List[int]] = []
        self.payload_matrix: t.List[t.List[int]] = []
        self.pivots: t.List[int] = []

    def __repr__(self) -> str:
        return (
            f"{self.__class__.__name__}(rank={self.rank},"
            f" generation_size={self.params.generation_size})"
        )

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def missing(self) -> int:
        return self.params.generation_size - self.rank

    @property
    def is_complete(self) -> bool:
        return self.rank == self.params.generation_size


def decoder_consume(
        state: DecoderState,
        payload: CodedPayload
) -> InnovationResult:
    params = state.params
    payload.check_shape(params)
    arith = state.arith

    coeffs = list(payload.coding_vector)
    symbols = list(payload.coded_symbols)

    # Forward-eliminate against the existing pivots.
    for pivot, c_row, p_row in zip(state.pivots, state.coeff_matrix, state.payload_matrix):
        c = coeffs[pivot]
        if c:
            arith.axpy(c, c_row, coeffs)
            arith.axpy(c, p_row, symbols)

    pivot = next((i for i, c in enumerate(coeffs) if c), None)
    if pivot is None:
        logger.debug("Redundant payload at rank %d", state.rank)
        return InnovationResult.REDUNDANT

    inv = arith.inverse(coeffs[pivot])
    if inv != 1:
        arith.scale(inv, coeffs)
        arith.scale(inv, symbols)

    # Back-substitute into the stored rows.
    for c_row, p_row in zip(state.coeff_matrix, state.payload_matrix):
        c = c_row[pivot]
        if c:
            arith.axpy(c, coeffs, c_row)
            arith.axpy(c, symbols, p_row)

    position = sum(1 for p in state.pivots if p < pivot)
    state.pivots.insert(position, pivot)
    state.coeff_matrix.insert(position, coeffs)
    state.payload_matrix.insert(position, symbols)
    logger.debug(
        "Innovative payload, rank %d/%d",
        state.rank,
        params.generation_size
    )
    return InnovationResult.INNOVATIVE


def decoder_recover(state: DecoderState) -> SourceSymbolMatrix:
    if not state.is_complete:
        raise NotFullRank(
            rank=state.rank,
            generation_size=state.params.generation_size
        )
    return SourceSymbolMatrix.from_rows(state.payload_matrix)


def independence_probability(generation_size: int, q: int = 256) -> float:
    """Probability that G uniformly random G-vectors over GF(q) are independent."""
    p = 1.0
    for i in range(1, generation_size + 1):
        p *= 1.0 - float(q) ** (-i)
    return p


def independence_probability_estimate(
        params: CodingParams,
        trials: int,
        coeffs: CoefficientSource
) -> float:
    if trials < 1:
        raise InvalidTrialCount
    g = params.generation_size
    zeros = (0,) * params.elements_per_packet
    full_rank = 0
    for _ in range(trials):
        state = DecoderState(params)
        for _ in range(g):
            decoder_consume(state, CodedPayload(coeffs.draw(g), zeros))
        if state.is_complete:
            full_rank += 1
    return full_rank / trials
