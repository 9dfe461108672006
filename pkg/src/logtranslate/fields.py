"""Synthetic Apache field values and rendering of annotated log records.

Every log line produced here is paired with an annotation string of the same
length in which each character names the field the corresponding raw
character belongs to.  Inter-field spaces are annotated ``_`` and the
``"``/``[``/``]`` wrappers are kept literally.
"""

from __future__ import annotations

import calendar
import enum
import random
import string
from dataclasses import dataclass
from typing import Iterable, Sequence


class FieldKind(str, enum.Enum):
    """A log field, valued by its annotation symbol."""

    HOST = "h"
    LOGNAME = "l"
    USER = "u"
    TIME = "t"
    REQUEST = "r"
    STATUS = "s"
    BYTES = "b"
    METHOD = "m"
    PATH = "U"
    PROTOCOL = "H"
    QUERY = "q"
    SERVER = "v"
    SERVER_CANONICAL = "V"
    USER_AGENT = "i"
    REFERRER = "R"
    SEPARATOR = "_"

    @property
    def symbol(self) -> str:
        return self.value


#: The fifteen generatable fields, in table order.
DATA_FIELDS: tuple[FieldKind, ...] = tuple(k for k in FieldKind if k is not FieldKind.SEPARATOR)

WRAPPER_CHARS = '"[]'
ANNOTATION_ALPHABET = frozenset(k.symbol for k in FieldKind) | frozenset(WRAPPER_CHARS)


class Wrapper(enum.Enum):
    NONE = ("", "")
    QUOTES = ('"', '"')
    BRACKETS = ("[", "]")

    @property
    def left(self) -> str:
        return self.value[0]

    @property
    def right(self) -> str:
        return self.value[1]


@dataclass(frozen=True)
class FieldValue:
    kind: FieldKind
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"empty value for field {self.kind.symbol!r}")
        if "\n" in self.text or "\r" in self.text:
            raise ValueError(f"newline in value for field {self.kind.symbol!r}")
        if self.kind is FieldKind.SEPARATOR and self.text != " ":
            raise ValueError("separator value must be a single space")


@dataclass(frozen=True)
class AnnotatedRecord:
    raw: str
    ann: str

    def __post_init__(self):
        if len(self.raw) != len(self.ann):
            raise ValueError(
                f"raw/annotation length mismatch ({len(self.raw)} != {len(self.ann)})"
            )
        if "\n" in self.raw or "\r" in self.raw:
            raise ValueError("raw line contains a newline")
        bad = set(self.ann) - ANNOTATION_ALPHABET
        if bad:
            raise ValueError(f"annotation contains unknown symbols {sorted(bad)!r}")


@dataclass(frozen=True)
class FieldToken:
    kind: FieldKind
    wrapper: Wrapper = Wrapper.NONE


@dataclass(frozen=True)
class FormatSpec:
    """Ordered fields of one log layout; separators are implicit."""

    tokens: tuple[FieldToken, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("a format needs at least one field")
        if any(tok.kind is FieldKind.SEPARATOR for tok in self.tokens):
            raise ValueError("separators are implicit between fields")

    @classmethod
    def parse(cls, pattern: str) -> "FormatSpec":
        """Build a spec from a pattern such as ``'h l u [t] "r" s b'``."""
        tokens = []
        for word in pattern.split():
            wrapper = Wrapper.NONE
            if len(word) == 3 and word[0] + word[2] in ('""', "[]"):
                wrapper = Wrapper.QUOTES if word[0] == '"' else Wrapper.BRACKETS
                word = word[1]
            tokens.append(FieldToken(FieldKind(word), wrapper))
        return cls(tuple(tokens))

    @property
    def kinds(self) -> tuple[FieldKind, ...]:
        return tuple(tok.kind for tok in self.tokens)

    def __str__(self) -> str:
        return " ".join(t.wrapper.left + t.kind.symbol + t.wrapper.right for t in self.tokens)


CLF = FormatSpec.parse('h l u [t] "r" s b')
ELF = FormatSpec.parse('h l u [t] "r" s b "R" "i"')


@dataclass(frozen=True)
class FieldOptions:
    """Tunable probabilities of the value grammars."""

    user_empty: float = 0.3
    bytes_empty: float = 0.1
    query_empty: float = 0.4
    referrer_empty: float = 0.3
    ipv6_share: float = 0.5


DEFAULT_OPTIONS = FieldOptions()

MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
STATUS_CODES = ("200", "201", "204", "301", "302", "304", "400", "401", "403", "404", "500", "502", "503")
METHODS = ("GET", "POST", "PUT", "DELETE", "HEAD", "OPTIONS", "PATCH")
PROTOCOLS = ("HTTP/1.0", "HTTP/1.1", "HTTP/2")
TLDS = ("com", "net", "org", "io")
PAGE_SUFFIXES = (".html", ".php", ".png")

_PATH_CHARS = string.ascii_lowercase + string.digits + "~."
_ALNUM = string.ascii_lowercase + string.digits

_AGENT_PRODUCTS = ("Mozilla", "Opera", "curl", "Wget", "Dalvik", "python-requests", "Lynx")
_AGENT_TOKENS = (
    "compatible", "Windows NT 10.0", "Windows NT 6.1", "Win64", "x64", "WOW64",
    "X11", "Linux x86_64", "Ubuntu", "Macintosh", "Intel Mac OS X 10_15_7",
    "iPhone", "CPU iPhone OS 14_4 like Mac OS X", "Android 11", "SM-G991B",
    "MSIE 8.0", "Trident/4.0", "rv:87.0", "U", "en-US", "KHTML, like Gecko",
)
_AGENT_DETAILS = (
    "Gecko/20100101", "Firefox", "Chrome", "Safari", "AppleWebKit", "Mobile",
    "Version", "Edg", "OPR", "Presto",
)


def _letters(rng: random.Random, lo: int, hi: int, alphabet: str = string.ascii_lowercase) -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))


def _version(rng: random.Random) -> str:
    return f"{rng.randint(0, 120)}.{rng.randint(0, 9)}"


def _host(rng: random.Random, opts: FieldOptions) -> str:
    if rng.random() < opts.ipv6_share:
        return ":".join(
            "".join(rng.choice("0123456789abcdef") for _ in range(rng.randint(1, 4)))
            for _ in range(8)
        )
    return ".".join(str(rng.randint(0, 255)) for _ in range(4))


def _timestamp(rng: random.Random) -> str:
    year = rng.randint(1970, 9999)
    month = rng.randint(1, 12)
    day = rng.randint(1, calendar.monthrange(year, month)[1])
    sign = rng.choice("+-")
    zone_h = rng.randint(0, 14)
    zone_m = 0 if zone_h == 14 else rng.choice((0, 15, 30, 45))
    return (
        f"{day:02d}/{MONTHS[month - 1]}/{year:04d}:"
        f"{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:{rng.randint(0, 59):02d} "
        f"{sign}{zone_h:02d}{zone_m:02d}"
    )


def _path(rng: random.Random) -> str:
    segments = [_letters(rng, 1, 10, _PATH_CHARS) for _ in range(rng.randint(1, 4))]
    if rng.random() < 0.5:
        segments[-1] += rng.choice(PAGE_SUFFIXES)
    path = "/".join(segments)
    return "/" + path if rng.random() < 0.5 else path


def _query(rng: random.Random, opts: FieldOptions) -> str:
    if rng.random() < opts.query_empty:
        return "-"
    pairs = (
        f"{_letters(rng, 1, 6, _ALNUM)}={_letters(rng, 1, 8, _ALNUM)}"
        for _ in range(rng.randint(1, 3))
    )
    return "?" + "&".join(pairs)


def _domain(rng: random.Random) -> str:
    return f"{_letters(rng, 3, 12)}.{rng.choice(TLDS)}"


def _user_agent(rng: random.Random) -> str:
    product = f"{rng.choice(_AGENT_PRODUCTS)}/{_version(rng)}"
    tokens = "; ".join(rng.sample(_AGENT_TOKENS, rng.randint(1, 4)))
    details = " ".join(
        f"{rng.choice(_AGENT_DETAILS)}/{_version(rng)}" for _ in range(rng.randint(1, 3))
    )
    return f"{product} ({tokens}) {details}"


def _request(rng: random.Random, opts: FieldOptions) -> str:
    query = _query(rng, opts)
    target = _path(rng) + ("" if query == "-" else query)
    return f"{rng.choice(METHODS)} {target} {rng.choice(PROTOCOLS)}"


def gen_field_value(
    kind: FieldKind, rng: random.Random, opts: FieldOptions = DEFAULT_OPTIONS
) -> FieldValue:
    """Draw one value of ``kind`` from ``rng``."""
    kind = FieldKind(kind)
    if kind is FieldKind.SEPARATOR:
        raise ValueError("separators carry no generated value")
    if kind is FieldKind.HOST:
        text = _host(rng, opts)
    elif kind is FieldKind.LOGNAME:
        text = "-"
    elif kind is FieldKind.USER:
        text = "-" if rng.random() < opts.user_empty else _letters(rng, 3, 12)
    elif kind is FieldKind.TIME:
        text = _timestamp(rng)
    elif kind is FieldKind.REQUEST:
        text = _request(rng, opts)
    elif kind is FieldKind.STATUS:
        text = rng.choice(STATUS_CODES)
    elif kind is FieldKind.BYTES:
        text = "-" if rng.random() < opts.bytes_empty else str(rng.randint(0, 9_999_999))
    elif kind is FieldKind.METHOD:
        text = rng.choice(METHODS)
    elif kind is FieldKind.PATH:
        text = _path(rng)
    elif kind is FieldKind.PROTOCOL:
        text = rng.choice(PROTOCOLS)
    elif kind is FieldKind.QUERY:
        text = _query(rng, opts)
    elif kind in (FieldKind.SERVER, FieldKind.SERVER_CANONICAL):
        text = _domain(rng)
    elif kind is FieldKind.USER_AGENT:
        text = _user_agent(rng)
    else:  # REFERRER
        if rng.random() < opts.referrer_empty:
            text = "-"
        else:
            text = f"{rng.choice(('http', 'https'))}://{_domain(rng)}/{_path(rng).lstrip('/')}"
    return FieldValue(kind, text)


def gen_record_values(
    spec: FormatSpec, rng: random.Random, opts: FieldOptions = DEFAULT_OPTIONS
) -> list[FieldValue]:
    """Values for every field of ``spec``; ``V`` mirrors ``v`` when both occur."""
    values = [gen_field_value(kind, rng, opts) for kind in spec.kinds]
    by_kind = {v.kind: v for v in values}
    if FieldKind.SERVER in by_kind and FieldKind.SERVER_CANONICAL in by_kind:
        mirrored = FieldValue(FieldKind.SERVER_CANONICAL, by_kind[FieldKind.SERVER].text)
        values = [mirrored if v.kind is FieldKind.SERVER_CANONICAL else v for v in values]
    return values


def render_record(spec: FormatSpec, values: Sequence[FieldValue]) -> AnnotatedRecord:
    if len(values) != len(spec.tokens):
        raise ValueError(f"spec has {len(spec.tokens)} fields but {len(values)} values given")
    raw_parts: list[str] = []
    ann_parts: list[str] = []
    for i, (tok, value) in enumerate(zip(spec.tokens, values)):
        if value.kind is not tok.kind:
            raise ValueError(
                f"value #{i} is a {value.kind.symbol!r} field, spec expects {tok.kind.symbol!r}"
            )
        if "\n" in value.text or "\r" in value.text:
            raise ValueError(f"value #{i} contains a newline")
        if i:
            raw_parts.append(" ")
            ann_parts.append(FieldKind.SEPARATOR.symbol)
        left, right = tok.wrapper.left, tok.wrapper.right
        raw_parts.append(left + value.text + right)
        ann_parts.append(left + tok.kind.symbol * len(value.text) + right)
    return AnnotatedRecord("".join(raw_parts), "".join(ann_parts))


def generate_record(
    spec: FormatSpec, rng: random.Random, opts: FieldOptions = DEFAULT_OPTIONS
) -> AnnotatedRecord:
    return render_record(spec, gen_record_values(spec, rng, opts))


def field_runs(ann: str) -> Iterable[tuple[str, int, int]]:
    """Yield ``(symbol, start, stop)`` for each maximal run of equal symbols."""
    start = 0
    for i in range(1, len(ann) + 1):
        if i == len(ann) or ann[i] != ann[start]:
            yield ann[start], start, i
            start = i
