"""Line-oriented text formats for instances, points and solutions.

Instance:
    ppack <m> <n>
    rhs <B_1> ... <B_m>
    w <c_1> ... <c_n>
    [wscale <divisor>]          only written when weights were rescaled
    wfloor <p>                  weight floor, min weight >= 1/p
    row <j> <idx_1> ... <idx_k>  m lines, 0-based sorted indices

Fractional point:  `frac <n>` then one line of n decimals.
Solution:          `sol <n>` then one line of n space-separated 0/1.

Blank lines and lines starting with '#' are ignored. Floats are written with
up to 12 significant digits, or with the shortest exact form when 12 digits
would not read back to the same value.
"""
import hashlib
from pathlib import Path
from typing import Iterable, List, Sequence, Union

from schemas.instances import FractionalPoint, PackingInstance
from services.errors import InstanceFormatError

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    text = f"{value:.12g}"
    if float(text) != value:
        text = repr(float(value))
    return text


def _content_lines(text: str) -> List[List[str]]:
    lines = []
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            lines.append(line.split())
    return lines


def _parse_floats(tokens: Iterable[str], what: str) -> List[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError as e:
        raise InstanceFormatError(f"bad {what} value: {e}") from e


def _parse_ints(tokens: Iterable[str], what: str) -> List[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError as e:
        raise InstanceFormatError(f"bad {what} value: {e}") from e


def format_instance(instance: PackingInstance) -> str:
    """Serialize an instance to the text format."""
    out = [f"ppack {instance.m} {instance.n_vars}"]
    out.append(" ".join(["rhs"] + [format_float(b) for b in instance.rhs]))
    out.append(" ".join(["w"] + [format_float(c) for c in instance.weights]))
    if instance.weight_scale != 1.0:
        out.append(f"wscale {format_float(instance.weight_scale)}")
    out.append(f"wfloor {format_float(instance.weight_floor)}")
    for j, row in enumerate(instance.rows):
        out.append(" ".join(["row", str(j)] + [str(i) for i in row]))
    return "\n".join(out) + "\n"


def parse_instance(text: str, strict: bool = False) -> PackingInstance:
    """Parse the text format back into an instance."""
    lines = _content_lines(text)
    if not lines or lines[0][0] != "ppack" or len(lines[0]) != 3:
        raise InstanceFormatError("missing 'ppack <m> <n>' header")
    m, n = _parse_ints(lines[0][1:], "header")
    rhs = weights = None
    weight_scale = 1.0
    weight_floor = None
    rows: List[List[int]] = [None] * m  # type: ignore[list-item]
    for tokens in lines[1:]:
        tag = tokens[0]
        if tag == "rhs":
            rhs = _parse_floats(tokens[1:], "rhs")
        elif tag == "w":
            weights = _parse_floats(tokens[1:], "weight")
        elif tag == "wscale":
            weight_scale = _parse_floats(tokens[1:2], "wscale")[0]
        elif tag == "wfloor":
            weight_floor = _parse_floats(tokens[1:2], "wfloor")[0]
        elif tag == "row":
            values = _parse_ints(tokens[1:], "row")
            if not values or not 0 <= values[0] < m:
                raise InstanceFormatError(f"row line has bad index: {' '.join(tokens)}")
            if rows[values[0]] is not None:
                raise InstanceFormatError(f"row {values[0]} given twice")
            rows[values[0]] = values[1:]
        else:
            raise InstanceFormatError(f"unknown line tag '{tag}'")
    if rhs is None or len(rhs) != m:
        raise InstanceFormatError(f"expected {m} rhs values")
    if weights is None or len(weights) != n:
        raise InstanceFormatError(f"expected {n} weights")
    missing = [j for j, row in enumerate(rows) if row is None]
    if missing:
        raise InstanceFormatError(f"rows missing: {missing[:10]}")
    try:
        instance = PackingInstance.create(rows, n, rhs=rhs, weights=weights,
                                           weight_floor=weight_floor, strict=strict)
        if weight_scale != 1.0:
            instance = instance.model_copy(update={"weight_scale": weight_scale})
    except ValueError as e:
        raise InstanceFormatError(str(e)) from e
    return instance


def format_point(point: FractionalPoint) -> str:
    values = " ".join(format_float(v) for v in point.values)
    return f"frac {len(point.values)}\n{values}\n"


def parse_point(text: str) -> FractionalPoint:
    lines = _content_lines(text)
    if not lines or lines[0][0] != "frac" or len(lines[0]) != 2:
        raise InstanceFormatError("missing 'frac <n>' header")
    n = _parse_ints(lines[0][1:], "header")[0]
    values = _parse_floats([t for tokens in lines[1:] for t in tokens], "point")
    if len(values) != n:
        raise InstanceFormatError(f"expected {n} point values, found {len(values)}")
    try:
        return FractionalPoint(values=tuple(values))
    except ValueError as e:
        raise InstanceFormatError(str(e)) from e


def format_solution(solution: Sequence[int]) -> str:
    return f"sol {len(solution)}\n{' '.join(str(int(s)) for s in solution)}\n"


def parse_solution(text: str) -> List[int]:
    lines = _content_lines(text)
    if not lines or lines[0][0] != "sol" or len(lines[0]) != 2:
        raise InstanceFormatError("missing 'sol <n>' header")
    n = _parse_ints(lines[0][1:], "header")[0]
    values = _parse_ints([t for tokens in lines[1:] for t in tokens], "solution")
    if len(values) != n or any(v not in (0, 1) for v in values):
        raise InstanceFormatError(f"expected {n} values in {{0, 1}}")
    return values


def instance_digest(instance: PackingInstance) -> str:
    """SHA-256 of the canonical text form; identifies an instance in results."""
    return hashlib.sha256(format_instance(instance).encode("utf-8")).hexdigest()


def read_instance(path: PathLike, strict: bool = False) -> PackingInstance:
    return parse_instance(Path(path).read_text(encoding="utf-8"), strict=strict)


def write_instance(instance: PackingInstance, path: PathLike) -> None:
    Path(path).write_text(format_instance(instance), encoding="utf-8")


def read_point(path: PathLike) -> FractionalPoint:
    return parse_point(Path(path).read_text(encoding="utf-8"))


def write_point(point: FractionalPoint, path: PathLike) -> None:
    Path(path).write_text(format_point(point), encoding="utf-8")


def write_solution(solution: Sequence[int], path: PathLike) -> None:
    Path(path).write_text(format_solution(solution), encoding="utf-8")
