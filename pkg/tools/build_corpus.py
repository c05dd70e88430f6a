"""Regenerate the bundled seed corpus.

Each problem below is written by hand together with point coordinates.  The
script checks every construction fact, condition and the goal target against
the coordinates, finds a shortest solving sequence by exhaustive breadth-first
search, replays it, and writes ``src/georeason/data/corpus/<id>.json``.

    python3 tools/build_corpus.py
"""

from __future__ import annotations

import json
import math
import sys
from collections import deque
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from geometry_oracle import equation_holds, fact_holds, term_value  # noqa: E402

from georeason import default_library_path  # noqa: E402
from georeason.dataset import difficulty_of  # noqa: E402
from georeason.deduction import Environment  # noqa: E402
from georeason.lang import RelationGoal, ValueGoal, parse_gdl, problem_from_dict  # noqa: E402

OUT = ROOT / "src" / "georeason" / "data" / "corpus"


# -- coordinate helpers -------------------------------------------------------

def polar(origin, r, deg):
    return (origin[0] + r * math.cos(math.radians(deg)),
            origin[1] + r * math.sin(math.radians(deg)))


def extend(p, q, t):
    """Point beyond q on ray p->q, at t times |pq| past q."""
    return (q[0] + t * (q[0] - p[0]), q[1] + t * (q[1] - p[1]))


def mid(p, q):
    return ((p[0] + q[0]) / 2, (p[1] + q[1]) / 2)


def triangle(beta, gamma, a=10.0):
    """Triangle with BC = a on the x-axis, angle beta at B and gamma at C."""
    alpha = 180 - beta - gamma
    ab = a * math.sin(math.radians(gamma)) / math.sin(math.radians(alpha))
    B, C = (0.0, 0.0), (a, 0.0)
    return {"A": polar(B, ab, beta), "B": B, "C": C}


def right_at_b(ab, bc):
    return {"A": (0.0, float(ab)), "B": (0.0, 0.0), "C": (float(bc), 0.0)}


def foot(a, b, c):
    """Foot of the perpendicular from a to line bc."""
    bx, by = c[0] - b[0], c[1] - b[1]
    t = ((a[0] - b[0]) * bx + (a[1] - b[1]) * by) / (bx * bx + by * by)
    return (b[0] + t * bx, b[1] + t * by)


# -- problem specifications ---------------------------------------------------

SPECS = []


def problem(pid, category, coords, construction, conditions, goal):
    SPECS.append(dict(id=pid, category=category, coordinates=coords,
                      construction=construction, conditions=conditions, goal=goal))


def L(a, b, v):
    return f"Equal(LengthOfLine({a},{b}),{v})"


def M(a, b, c, v):
    return f"Equal(MeasureOfAngle({a},{b},{c}),{v})"


# Angle ------------------------------------------------------------------------

problem("ang01", "Angle", triangle(60, 70), ["Polygon(A,B,C)"],
        [M("A", "B", "C", 60), M("B", "C", "A", 70)], "Value(MeasureOfAngle(C,A,B))=50")
problem("ang02", "Angle", triangle(35, 85), ["Polygon(A,B,C)"],
        [M("A", "B", "C", 35), M("C", "A", "B", 60)], "Value(MeasureOfAngle(B,C,A))=85")

c = triangle(50, 60)
c["D"] = extend(c["B"], c["C"], 0.5)
problem("ang03", "Angle", c, ["Polygon(A,B,C)", "Collinear(B,C,D)"],
        [M("C", "A", "B", 70), M("A", "B", "C", 50)], "Value(MeasureOfAngle(A,C,D))=120")

c = {"A": (-4.0, 0.0), "B": (0.0, 0.0), "C": (5.0, 0.0), "D": polar((0, 0), 4, 115)}
problem("ang04", "Angle", c, ["Collinear(A,B,C)", "Angle(A,B,D)"],
        [M("A", "B", "D", 65)], "Value(MeasureOfAngle(D,B,C))=115")

c = {"A": (-4.0, 0.0), "B": (0.0, 0.0), "C": (5.0, 0.0),
     "D": polar((0, 0), 4, 140), "E": polar((0, 0), 3, -40)}
problem("ang05", "Angle", c, ["Collinear(A,B,C)", "Collinear(D,B,E)", "Angle(A,B,D)"],
        [M("A", "B", "D", 40)], "Value(MeasureOfAngle(E,B,C))=40")

c = {"A": (0.0, 0.0), "B": (4.0, 0.0), "C": (7.0, 3.0), "D": (11.0, 3.0)}
problem("ang06", "Angle", c, ["Parallel(A,B,C,D)"],
        [M("A", "B", "C", 135)], "Value(MeasureOfAngle(B,C,D))=135")

c = {"A": (0.0, 0.0), "B": (4.0, 0.0), "C": (3.0, 3.0), "D": (7.0, 3.0)}
problem("ang07", "Angle", c, ["Parallel(A,B,C,D)"],
        [M("B", "A", "C", 45)], "Value(MeasureOfAngle(A,C,D))=135")

problem("ang08", "Angle", triangle(70, 70), ["IsoscelesTriangle(A,B,C)"],
        [M("B", "A", "C", 40)], "Value(MeasureOfAngle(A,B,C))=70")

problem("ang09", "Angle", triangle(65, 65), ["Polygon(A,B,C)"],
        ["Equal(LengthOfLine(A,B),LengthOfLine(A,C))", M("B", "A", "C", 50)],
        "Value(MeasureOfAngle(A,B,C))=65")

c = {"A": polar((0, 0), 5, 84), "B": (0.0, 0.0), "C": (6.0, 0.0), "D": polar((0, 0), 4, 42)}
problem("ang10", "Angle", c, ["Bisector(A,B,C,D)"],
        [M("A", "B", "C", 84)], "Value(MeasureOfAngle(A,B,D))=42")

c = triangle(80, 40)
# D on AC with BD bisecting angle B: angle bisector theorem AD/DC = AB/BC
ab, bc = math.dist(c["A"], c["B"]), 10.0
t = ab / (ab + bc)
c["D"] = (c["A"][0] + t * (c["C"][0] - c["A"][0]), c["A"][1] + t * (c["C"][1] - c["A"][1]))
problem("ang11", "Angle", c,
        ["Polygon(A,B,C)", "Bisector(A,B,C,D)", "Collinear(A,D,C)", "Polygon(A,B,D)",
         "Polygon(D,B,C)"],
        [M("B", "A", "C", 60), M("B", "C", "A", 40)], "Value(MeasureOfAngle(B,D,C))=100")

c = {"A": (0.0, 0.0), "B": (6.0, 0.0), "C": (4.0, 2.0), "D": (2.0, 2.0)}
problem("ang12", "Angle", c, ["Quadrilateral(A,B,C,D)"],
        [M("D", "A", "B", 45), M("A", "B", "C", 45), M("B", "C", "D", 135)],
        "Value(MeasureOfAngle(C,D,A))=135")

c = {"A": (0.0, 0.0), "B": (5.0, 0.0), "C": (7.0, 2.0), "D": (2.0, 2.0)}
problem("ang13", "Angle", c, ["Parallelogram(A,B,C,D)"],
        [M("D", "A", "B", 45)], "Value(MeasureOfAngle(A,B,C))=135")
problem("ang14", "Angle", c, ["Parallelogram(A,B,C,D)"],
        [M("D", "A", "B", 45)], "Value(MeasureOfAngle(B,C,D))=45")

problem("ang15", "Angle", triangle(90, 30), ["RightTriangle(A,B,C)"],
        [M("B", "C", "A", 30)], "Value(MeasureOfAngle(C,A,B))=60")

c = triangle(60, 60)
c["D"] = extend(c["B"], c["C"], 0.6)
problem("ang16", "Angle", c, ["EquilateralTriangle(A,B,C)", "Collinear(B,C,D)"], [],
        "Value(MeasureOfAngle(A,C,D))=120")

c = triangle(60, 70)
c["D"] = extend(c["A"], c["C"], 0.5)
c["E"] = extend(c["B"], c["C"], 0.4)
problem("ang17", "Angle", c,
        ["Polygon(A,B,C)", "Collinear(A,C,D)", "Collinear(B,C,E)", "Angle(D,C,E)"],
        [M("D", "C", "E", 70), M("C", "A", "B", 50)], "Value(MeasureOfAngle(A,B,C))=60")

c = triangle(60, 50)
c["D"] = extend(c["B"], c["C"], 0.5)
c["E"] = extend(c["C"], c["A"], 0.5)
problem("ang18", "Angle", c,
        ["Polygon(A,B,C)", "Collinear(B,C,D)", "Collinear(C,A,E)"],
        [M("A", "C", "D", 130), M("A", "B", "C", 60)], "Value(MeasureOfAngle(B,A,E))=110")

c = triangle(70, 70)
# triangle ACD has angles 30 at A and 110 at C, so CD = AC sin30 / sin40
ac = math.dist(c["A"], c["C"])
c["D"] = (c["C"][0] + ac * math.sin(math.radians(30)) / math.sin(math.radians(40)), 0.0)
problem("ang19", "Angle", c,
        ["Polygon(A,B,C)", "Collinear(B,C,D)", "Polygon(A,C,D)"],
        ["Equal(LengthOfLine(A,B),LengthOfLine(A,C))", M("B", "A", "C", 40),
         M("C", "A", "D", 30)], "Value(MeasureOfAngle(A,D,C))=40")

c = {"A": (0.0, 0.0), "B": polar((0, 0), 4, 70), "C": (6.0, 0.0),
     "E": (-3.0, 0.0)}
c["D"] = polar(c["C"], 4, 70)
problem("ang20", "Angle", c, ["Parallel(A,B,C,D)", "Collinear(E,A,C)"],
        [M("E", "A", "B", 110)], "Value(MeasureOfAngle(A,C,D))=110")

c = triangle(50, 60)
c["D"] = (c["A"][0] - 4, c["A"][1])
c["E"] = (c["A"][0] + 4, c["A"][1])
problem("ang21", "Angle", c,
        ["Polygon(A,B,C)", "Collinear(D,A,E)", "Parallel(D,A,B,C)", "Parallel(A,E,B,C)"],
        [M("D", "A", "B", 50), M("E", "A", "C", 60)], "Value(MeasureOfAngle(B,A,C))=70")

# Length -----------------------------------------------------------------------

problem("len01", "Length", right_at_b(3, 4), ["RightTriangle(A,B,C)"],
        [L("A", "B", 3), L("B", "C", 4)], "Value(LengthOfLine(A,C))=5")
problem("len02", "Length", right_at_b(5, 12), ["RightTriangle(A,B,C)"],
        [L("A", "C", 13), L("A", "B", 5)], "Value(LengthOfLine(B,C))=12")

c = {"A": (0.0, 0.0), "B": (10.0, 0.0), "M": (5.0, 0.0)}
problem("len03", "Length", c, ["Midpoint(M,A,B)"], [L("A", "M", 5)],
        "Value(LengthOfLine(A,B))=10")

c = {"A": (0.0, 0.0), "B": (3.0, 0.0), "C": (8.0, 0.0)}
problem("len04", "Length", c, ["Collinear(A,B,C)"], [L("A", "B", 3), L("B", "C", 5)],
        "Value(LengthOfLine(A,C))=8")

c = {"A": (0.0, 0.0), "B": (7.0, 0.0), "C": (9.0, 3.0), "D": (2.0, 3.0)}
problem("len05", "Length", c, ["Parallelogram(A,B,C,D)"], [L("A", "B", 7)],
        "Value(LengthOfLine(C,D))=7")

c = triangle(50, 50, a=7 * math.sin(math.radians(80)) / math.sin(math.radians(50)))
problem("len06", "Length", c, ["Polygon(A,B,C)"],
        [M("A", "B", "C", 50), M("B", "C", "A", 50), L("A", "B", 7)],
        "Value(LengthOfLine(A,C))=7")

c = right_at_b(3, 4)
c["M"] = mid(c["B"], c["C"])
problem("len07", "Length", c, ["RightTriangle(A,B,C)", "Midpoint(M,B,C)"],
        [L("B", "M", 2), L("A", "B", 3)], "Value(LengthOfLine(A,C))=5")

c = {"A": (0.0, 4.0), "B": (-3.0, 0.0), "C": (5.0, 0.0), "D": (0.0, 0.0)}
problem("len08", "Length", c, ["Polygon(A,B,C)", "Polygon(A,D,B)", "Altitude(A,D,B,C)"],
        [L("A", "D", 4), L("B", "D", 3)], "Value(LengthOfLine(A,B))=5")


def hidden_right(ab, bc):
    c = right_at_b(ab, bc)
    c["M"] = mid(c["A"], c["B"])
    return c


HIDDEN = ["Polygon(A,B,C)", "Polygon(M,B,C)", "Midpoint(M,A,B)"]
HIDDEN_EQ = "Equal(Add(MeasureOfAngle(B,A,C),MeasureOfAngle(A,C,B)),90)"

problem("len09", "Length", hidden_right(16, 6), HIDDEN,
        [L("A", "B", 16), L("B", "C", 6), HIDDEN_EQ], "Value(LengthOfLine(M,C))=10")
problem("len10", "Length", hidden_right(24, 5), HIDDEN,
        [L("A", "B", 24), L("B", "C", 5), HIDDEN_EQ], "Value(LengthOfLine(M,C))=13")

c = {"A": (0.0, 6.0), "B": (0.0, 0.0), "C": (8.0, 0.0), "D": (8.0, 6.0)}
problem("len11", "Length", c, ["Rectangle(A,B,C,D)", "Polygon(A,B,C)"],
        [L("A", "B", 6), L("B", "C", 8)], "Value(LengthOfLine(A,C))=10")

problem("len12", "Length", triangle(60, 60, a=4.0), ["EquilateralTriangle(A,B,C)"],
        [L("A", "B", 4)], "Value(LengthOfLine(B,C))=4")

c = {"A": (0.0, 12.0), "B": (-5.0, 0.0), "C": (9.0, 0.0), "D": (0.0, 0.0)}
problem("len13", "Length", c,
        ["Polygon(A,B,C)", "Polygon(A,D,B)", "Polygon(A,D,C)", "Altitude(A,D,B,C)"],
        [L("A", "B", 13), L("B", "D", 5), L("A", "C", 15)], "Value(LengthOfLine(B,C))=14")

c = {"A": (0.0, 6.0), "B": (0.0, 0.0), "C": (8.0, 0.0), "D": (8.0, 6.0), "E": (-3.0, 6.0)}
problem("len14", "Length", c,
        ["Parallelogram(A,B,C,D)", "Polygon(A,B,C)", "Collinear(D,A,E)", "Angle(E,A,B)"],
        [M("E", "A", "B", 90), L("A", "B", 6), L("B", "C", 8)], "Value(LengthOfLine(A,C))=10")

# Area -------------------------------------------------------------------------

problem("are01", "Area", right_at_b(6, 8), ["RightTriangle(A,B,C)"],
        [L("A", "B", 6), L("B", "C", 8)], "Value(AreaOfTriangle(A,B,C))=24")

c = {"A": (0.0, 3.0), "B": (0.0, 0.0), "C": (5.0, 0.0), "D": (5.0, 3.0)}
problem("are02", "Area", c, ["Rectangle(A,B,C,D)"], [L("A", "B", 3), L("B", "C", 5)],
        "Value(AreaOfQuadrilateral(A,B,C,D))=15")
problem("are03", "Area", c, ["Parallelogram(A,B,C,D)"],
        [M("A", "B", "C", 90), L("A", "B", 3), L("B", "C", 5)],
        "Value(AreaOfQuadrilateral(A,B,C,D))=15")

c = {"A": (0.0, 4.0), "B": (-3.0, 0.0), "C": (5.0, 0.0), "D": (0.0, 0.0)}
problem("are04", "Area", c, ["Polygon(A,B,C)", "Altitude(A,D,B,C)"],
        [L("A", "D", 4), L("B", "D", 3), L("D", "C", 5)], "Value(AreaOfTriangle(A,B,C))=16")

problem("are05", "Area", right_at_b(5, 12), ["RightTriangle(A,B,C)"],
        [L("A", "C", 13), L("A", "B", 5)], "Value(AreaOfTriangle(A,B,C))=30")

problem("are06", "Area", right_at_b(6, 8), ["Polygon(A,B,C)"],
        [HIDDEN_EQ, L("A", "B", 6), L("B", "C", 8)], "Value(AreaOfTriangle(A,B,C))=24")

c = {"A": (0.0, 4.0), "B": (-3.0, 0.0), "C": (6.0, 0.0), "D": (0.0, 0.0)}
problem("are07", "Area", c, ["Polygon(A,B,C)", "Altitude(A,D,B,C)", "Polygon(A,D,B)"],
        [L("A", "B", 5), L("B", "D", 3), L("D", "C", 6)], "Value(AreaOfTriangle(A,B,C))=18")

problem("are08", "Area", hidden_right(16, 6), HIDDEN,
        [L("A", "B", 16), L("B", "C", 6), HIDDEN_EQ], "Value(AreaOfTriangle(M,B,C))=24")

c = {"A": (0.0, 4.0), "B": (0.0, 0.0), "C": (7.0, 0.0), "D": (7.0, 4.0), "E": (-3.0, 4.0)}
problem("are09", "Area", c, ["Parallelogram(A,B,C,D)", "Collinear(D,A,E)", "Angle(E,A,B)"],
        [M("E", "A", "B", 90), L("A", "B", 4), L("B", "C", 7)],
        "Value(AreaOfQuadrilateral(A,B,C,D))=28")

problem("are10", "Area", hidden_right(24, 5), HIDDEN,
        [L("A", "B", 24), L("B", "C", 5), HIDDEN_EQ], "Value(AreaOfTriangle(M,B,C))=30")

# Perimeter --------------------------------------------------------------------

c = {"A": (0.0, 0.0), "B": (3.0, 0.0)}
# triangle with sides AB=3, BC=4, CA=6 via the law of cosines
cos_b = (9 + 16 - 36) / (2 * 3 * 4)
c["C"] = (3 - 4 * cos_b, 4 * math.sqrt(1 - cos_b ** 2))
problem("per01", "Perimeter", c, ["Polygon(A,B,C)"],
        [L("A", "B", 3), L("B", "C", 4), L("C", "A", 6)], "Value(PerimeterOfTriangle(A,B,C))=13")

problem("per02", "Perimeter", right_at_b(3, 4), ["RightTriangle(A,B,C)"],
        [L("A", "B", 3), L("B", "C", 4)], "Value(PerimeterOfTriangle(A,B,C))=12")
problem("per03", "Perimeter", triangle(60, 60, a=4.0), ["EquilateralTriangle(A,B,C)"],
        [L("A", "B", 4)], "Value(PerimeterOfTriangle(A,B,C))=12")

c = {"A": (0.0, 3.0), "B": (0.0, 0.0), "C": (5.0, 0.0), "D": (5.0, 3.0)}
problem("per04", "Perimeter", c, ["Rectangle(A,B,C,D)"], [L("A", "B", 3), L("B", "C", 5)],
        "Value(PerimeterOfQuadrilateral(A,B,C,D))=16")

c = {"A": (2.0, math.sqrt(21)), "B": (0.0, 0.0), "C": (4.0, 0.0)}
problem("per05", "Perimeter", c, ["Polygon(A,B,C)"],
        ["Equal(MeasureOfAngle(A,B,C),MeasureOfAngle(B,C,A))", L("A", "B", 5), L("B", "C", 4)],
        "Value(PerimeterOfTriangle(A,B,C))=14")

problem("per06", "Perimeter", hidden_right(16, 6), HIDDEN,
        [L("A", "B", 16), L("B", "C", 6), HIDDEN_EQ], "Value(PerimeterOfTriangle(M,B,C))=24")

cos_c = (16 + 25 - 16) / (2 * 4 * 5)   # AC=4, BC=5, AB=4
c = {"B": (0.0, 0.0), "C": (5.0, 0.0)}
c["A"] = (5 - 4 * cos_c, 4 * math.sqrt(1 - cos_c ** 2))
c["M"] = mid(c["A"], c["B"])
problem("per07", "Perimeter", c, ["Polygon(A,B,C)", "Midpoint(M,A,B)"],
        [L("A", "M", 2), L("B", "C", 5), L("C", "A", 4)], "Value(PerimeterOfTriangle(A,B,C))=13")

c = {"A": (0.0, 0.0), "B": (3.0, 0.0), "C": (6.0, 4.0), "D": (3.0, 4.0)}
problem("per08", "Perimeter", c, ["Parallelogram(A,B,C,D)"], [L("A", "B", 3), L("A", "D", 5)],
        "Value(PerimeterOfQuadrilateral(A,B,C,D))=16")

c = {"A": (0.0, 12.0), "B": (-5.0, 0.0), "C": (9.0, 0.0), "D": (0.0, 0.0)}
problem("per09", "Perimeter", c,
        ["Polygon(A,B,C)", "Polygon(A,D,B)", "Polygon(A,D,C)", "Altitude(A,D,B,C)"],
        [L("A", "B", 13), L("B", "D", 5), L("A", "C", 15)], "Value(PerimeterOfTriangle(A,B,C))=42")

problem("per10", "Perimeter", hidden_right(24, 5), HIDDEN,
        [L("A", "B", 24), L("B", "C", 5), HIDDEN_EQ], "Value(PerimeterOfTriangle(M,B,C))=30")

# Other (relations) ------------------------------------------------------------

problem("oth01", "Other", triangle(90, 60), ["Polygon(A,B,C)"],
        [M("B", "A", "C", 30), M("B", "C", "A", 60)], "Perpendicular(A,B,C)")
problem("oth02", "Other", triangle(70, 70), ["Polygon(A,B,C)"],
        [M("B", "A", "C", 40), M("A", "B", "C", 70)], "IsoscelesTriangle(A,B,C)")
c = {"A": (0.0, 0.0), "B": (5.0, 0.0), "C": (7.0, 2.0), "D": (2.0, 2.0)}
problem("oth03", "Other", c, ["Quadrilateral(A,B,C,D)", "Parallel(A,B,D,C)", "Parallel(A,D,B,C)"],
        [], "Parallelogram(A,B,C,D)")
c = {"A": (0.0, 3.0), "B": (0.0, 0.0), "C": (5.0, 0.0), "D": (5.0, 3.0)}
problem("oth04", "Other", c, ["Parallelogram(A,B,C,D)"], [M("A", "B", "C", 90)],
        "Rectangle(A,B,C,D)")
problem("oth05", "Other", right_at_b(6, 8), ["Polygon(A,B,C)"],
        ["Equal(Add(MeasureOfAngle(B,A,C),MeasureOfAngle(B,C,A)),90)"], "RightTriangle(A,B,C)")
problem("oth06", "Other", triangle(60, 60, a=5.0), ["Polygon(A,B,C)"],
        [L("A", "B", 5), L("B", "C", 5), L("C", "A", 5)], "EquilateralTriangle(A,B,C)")
c = {"A": (0.0, 0.0), "B": (5.0, 0.0), "C": (7.0, 2.0), "D": (2.0, 2.0)}
problem("oth07", "Other", c, ["Quadrilateral(A,B,C,D)", "Parallel(A,B,D,C)"],
        [L("A", "B", 5), L("C", "D", 5)], "Parallelogram(A,B,C,D)")
c = {"A": (0.0, 4.0), "B": (0.0, 0.0), "C": (7.0, 0.0), "D": (7.0, 4.0), "E": (-3.0, 4.0)}
problem("oth08", "Other", c, ["Parallelogram(A,B,C,D)", "Collinear(D,A,E)", "Angle(E,A,B)"],
        [M("E", "A", "B", 90)], "Rectangle(A,B,C,D)")
problem("oth09", "Other", hidden_right(16, 6), HIDDEN, [HIDDEN_EQ], "RightTriangle(M,B,C)")
c = triangle(50, 50, a=9.0)
c["D"] = extend(c["B"], c["C"], 0.5)
problem("oth10", "Other", c, ["Polygon(A,B,C)", "Collinear(B,C,D)"],
        [M("A", "C", "D", 130), M("B", "A", "C", 80)], "IsoscelesTriangle(A,B,C)")


# -- build --------------------------------------------------------------------

def check_numeric(spec, problem_obj):
    coords = spec["coordinates"]
    for f in problem_obj.construction:
        assert fact_holds(coords, f), (spec["id"], str(f))
    for e in problem_obj.conditions:
        assert equation_holds(coords, e), (spec["id"], str(e))
    goal = problem_obj.goal
    if isinstance(goal, RelationGoal):
        assert fact_holds(coords, goal.fact), (spec["id"], "goal")
    elif isinstance(goal, ValueGoal):
        assert abs(term_value(coords, goal.term) - float(goal.target)) < 1e-6, (spec["id"], "goal")


def shortest(env, problem_obj, max_depth=8):
    root = env.init_state(problem_obj)
    if env.solved(root):
        return []
    seen = {root.digest}
    frontier = deque([(root, [])])
    while frontier:
        state, path = frontier.popleft()
        if len(path) >= max_depth:
            continue
        for i in env.legal_indices(state):
            nxt, n = env.apply_action(state, i)
            if not n or nxt.digest in seen:
                continue
            seen.add(nxt.digest)
            if env.solved(nxt):
                return path + [i]
            frontier.append((nxt, path + [i]))
    return None


def main():
    lib = parse_gdl(default_library_path().read_text())
    env = Environment(lib)
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    ids = set()
    for spec in SPECS:
        assert spec["id"] not in ids
        ids.add(spec["id"])
        points = sorted(spec["coordinates"])
        data = {"id": spec["id"], "category": spec["category"], "points": points,
                "construction": [_fact_obj(f) for f in spec["construction"]],
                "conditions": spec["conditions"], "goal": spec["goal"]}
        prob = problem_from_dict(data, lib)
        check_numeric(spec, prob)
        seq = shortest(env, prob)
        if seq is None:
            raise SystemExit(f"{spec['id']}: no solution within depth 8")
        actions = [env.actions[i] for i in seq]
        assert env.verify_sequence(prob, actions).verified
        data["annotated_sequence"] = [a.to_dict() for a in actions]
        data["level"] = difficulty_of(len(actions))
        data["coordinates"] = {k: [round(v[0], 12), round(v[1], 12)]
                               for k, v in sorted(spec["coordinates"].items())}
        (OUT / f"{spec['id']}.json").write_text(json.dumps(data, indent=2) + "\n")
        print(f"{spec['id']:6s} {spec['category']:9s} {data['level']} "
              f"{len(actions)} legal@init={len(env.legal_indices(env.init_state(prob)))} "
              + " ".join(str(a) for a in actions))


def _fact_obj(text):
    name, rest = text.split("(", 1)
    return {"predicate": name, "points": rest.rstrip(")").split(",")}


if __name__ == "__main__":
    main()
