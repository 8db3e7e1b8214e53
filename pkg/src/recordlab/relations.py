"""Output relations: how the output substring of the workspace is parsed and judged."""
from __future__ import annotations

from dataclasses import dataclass

from .state import RegisterLayout


@dataclass(frozen=True)
class OutputRelation:
    """``collision``: K triples (x1, x2, y) with all 2K positions distinct and
    f(x1) = f(x2) = y != empty.  ``ksearch``: K distinct positions holding 1.

    The output substring starts at workspace slot ``offset``.
    """

    kind: str
    K: int
    offset: int = 0

    def __post_init__(self):
        if self.kind not in ("collision", "ksearch"):
            raise ValueError(f"unknown relation kind {self.kind!r}")
        if self.K < 1:
            raise ValueError("K must be at least 1")

    @property
    def n_slots(self) -> int:
        return 3 * self.K if self.kind == "collision" else self.K

    def check_layout(self, layout: RegisterLayout) -> None:
        if self.offset + self.n_slots > len(layout.slots):
            raise ValueError(f"layout {layout} has no room for {self}")
        z = layout.slots[self.offset: self.offset + self.n_slots]
        if self.kind == "collision":
            ok = all(z[3 * i: 3 * i + 3] == (layout.M, layout.M, layout.N + 1) for i in range(self.K))
        else:
            ok = layout.N == 2 and all(s == layout.M for s in z)
        if not ok:
            raise ValueError(f"output slots {z} do not match a {self.kind} relation on {layout}")

    def required_values(self, w, bot: int) -> dict | None:
        """Map position -> value the input must take there, or None if ``z`` is malformed."""
        z = w[self.offset: self.offset + self.n_slots]
        req: dict = {}
        if self.kind == "collision":
            for i in range(self.K):
                x1, x2, y = z[3 * i: 3 * i + 3]
                if y == bot or x1 == x2 or x1 in req or x2 in req:
                    return None
                req[x1] = y
                req[x2] = y
        else:
            for x in z:
                if x in req:
                    return None
                req[x] = 1
        return req

    def satisfied(self, w, f, bot: int) -> bool:
        req = self.required_values(w, bot)
        return req is not None and all(f[x] == v for x, v in req.items())

    def to_json(self) -> dict:
        return {"kind": self.kind, "K": self.K, "offset": self.offset}
