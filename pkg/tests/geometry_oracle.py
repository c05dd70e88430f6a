"""Floating-point coordinate model used as an independent soundness oracle.

Every predicate and attribute of the bundled library gets a numeric reading
over explicit point coordinates.  Tests derive as much as possible with the
exact engine and then check each derived fact and equation against this
model.  Nothing here imports the engine's algebra.
"""

from __future__ import annotations

import math
from fractions import Fraction

from georeason.lang import Attr, Eq, Fact, Num, Op

TOL = 1e-6


def _sub(p, q):
    return (p[0] - q[0], p[1] - q[1])


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1]


def _norm(u):
    return math.hypot(*u)


def _close(a, b, tol=TOL):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def angle(c, a, b, d) -> float:
    """Angle at ``b`` between rays b->a and b->d, in degrees."""
    u, v = _sub(c[a], c[b]), _sub(c[d], c[b])
    cos = _dot(u, v) / (_norm(u) * _norm(v))
    return math.degrees(math.acos(max(-1.0, min(1.0, cos))))


def length(c, a, b) -> float:
    return _norm(_sub(c[a], c[b]))


def tri_area(c, a, b, d) -> float:
    return abs(_cross(_sub(c[b], c[a]), _sub(c[d], c[a]))) / 2


def quad_area(c, *pts) -> float:
    s = 0.0
    for i in range(len(pts)):
        p, q = c[pts[i]], c[pts[(i + 1) % len(pts)]]
        s += p[0] * q[1] - q[0] * p[1]
    return abs(s) / 2


def _between(c, a, b, d) -> bool:
    u, v = _sub(c[a], c[b]), _sub(c[d], c[b])
    scale = _norm(u) * _norm(v)
    return abs(_cross(u, v)) <= TOL * scale and _dot(u, v) < 0


def _triangle(c, a, b, d) -> bool:
    return tri_area(c, a, b, d) > TOL * max(1.0, length(c, a, b) * length(c, b, d))


def _convex(c, pts) -> bool:
    signs = []
    for i in range(len(pts)):
        p, q, r = c[pts[i]], c[pts[(i + 1) % 4]], c[pts[(i + 2) % 4]]
        signs.append(_cross(_sub(q, p), _sub(r, q)))
    return all(s > TOL for s in signs) or all(s < -TOL for s in signs)


def _parallel(c, a, b, d, e) -> bool:
    u, v = _sub(c[b], c[a]), _sub(c[e], c[d])
    same_dir = abs(_cross(u, v)) <= TOL * _norm(u) * _norm(v) and _dot(u, v) > 0
    off_line = abs(_cross(u, _sub(c[d], c[a]))) > TOL * _norm(u)
    return same_dir and off_line


def fact_holds(c: dict, fact: Fact) -> bool:
    p = fact.points
    name = fact.predicate
    if name == "Angle":
        return 1e-6 < angle(c, *p) < 180 - 1e-6
    if name == "Collinear":
        return _between(c, *p)
    if name == "Polygon":
        return _triangle(c, *p)
    if name == "Quadrilateral":
        return _convex(c, p)
    if name == "Parallel":
        return _parallel(c, *p)
    if name == "Perpendicular":
        return _close(angle(c, *p), 90)
    if name in ("InteriorRay", "Bisector"):
        a, b, d, e = p
        whole, left, right = angle(c, a, b, d), angle(c, a, b, e), angle(c, e, b, d)
        ok = _close(left + right, whole) and left > 1e-6 and right > 1e-6
        return ok and (name == "InteriorRay" or _close(left, right))
    if name == "Midpoint":
        m, a, b = p
        return all(_close(c[m][i], (c[a][i] + c[b][i]) / 2) for i in (0, 1))
    if name == "Altitude":
        a, d, b, e = p
        return _between(c, b, d, e) and _close(angle(c, a, d, b), 90)
    if name == "RightTriangle":
        return _triangle(c, *p) and _close(angle(c, *p), 90)
    if name == "IsoscelesTriangle":
        a, b, d = p
        return _triangle(c, *p) and _close(length(c, a, b), length(c, a, d))
    if name == "EquilateralTriangle":
        a, b, d = p
        return (_triangle(c, *p) and _close(length(c, a, b), length(c, b, d))
                and _close(length(c, b, d), length(c, d, a)))
    if name in ("Parallelogram", "Rectangle"):
        a, b, d, e = p
        ok = _convex(c, p) and all(_close(c[a][i] + c[d][i], c[b][i] + c[e][i]) for i in (0, 1))
        return ok and (name == "Parallelogram" or _close(angle(c, a, b, d), 90))
    raise KeyError(f"no numeric reading for predicate {name}")


def attr_value(c: dict, attr: Attr) -> float:
    p = attr.points
    name = attr.name
    if name == "MeasureOfAngle":
        return angle(c, *p)
    if name == "LengthOfLine":
        return length(c, *p)
    if name == "AreaOfTriangle":
        return tri_area(c, *p)
    if name == "PerimeterOfTriangle":
        a, b, d = p
        return length(c, a, b) + length(c, b, d) + length(c, d, a)
    if name == "AreaOfQuadrilateral":
        return quad_area(c, *p)
    if name == "PerimeterOfQuadrilateral":
        return sum(length(c, p[i], p[(i + 1) % 4]) for i in range(4))
    raise KeyError(f"no numeric reading for attribute {name}")


def term_value(c: dict, term) -> float:
    if isinstance(term, Attr):
        return attr_value(c, term)
    if isinstance(term, Num):
        return float(term.value)
    args = [term_value(c, a) for a in term.args]
    op = term.op
    if op == "Add":
        return math.fsum(args)
    if op == "Mul":
        return math.prod(args)
    if op == "Sub":
        return args[0] - args[1]
    if op == "Div":
        return args[0] / args[1]
    if op == "Pow":
        return args[0] ** args[1]
    if op == "Sqrt":
        return math.sqrt(args[0])
    raise KeyError(op)


def equation_holds(c: dict, eq: Eq) -> bool:
    return _close(term_value(c, eq.lhs), term_value(c, eq.rhs))


def value_matches(c: dict, attr: Attr, value: Fraction) -> bool:
    return _close(attr_value(c, attr), float(value))
