import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from metacirculant.perm_core import Permutation

FLAG_NAMES = (
    "vertex_transitive",
    "cayley",
    "weak_metacirculant",
    "split_weak_metacirculant",
    "metacirculant",
    "weak_metacirculant_cayley",
)

IMPLICATIONS = (
    ("metacirculant", "split_weak_metacirculant"),
    ("split_weak_metacirculant", "weak_metacirculant"),
    ("weak_metacirculant_cayley", "cayley"),
    ("weak_metacirculant_cayley", "weak_metacirculant"),
    ("cayley", "vertex_transitive"),
    ("weak_metacirculant", "vertex_transitive"),
)


class FlagStatus(str, Enum):
    YES = "yes"
    NO = "no"
    INCONCLUSIVE = "inconclusive"


@dataclass
class FlagResult:
    status: FlagStatus
    witness: List[Permutation] = field(default_factory=list)
    certificate: Dict[str, Any] = field(default_factory=dict)

    @property
    def value(self) -> Optional[bool]:
        if self.status is FlagStatus.INCONCLUSIVE:
            return None
        return self.status is FlagStatus.YES

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "witness": [g.to_line() for g in self.witness],
            "certificate": {k: self.certificate[k] for k in sorted(self.certificate)},
        }


@dataclass
class ClassificationReport:
    order: int
    prime: int
    aut_order: Optional[int] = None
    flags: Dict[str, FlagResult] = field(default_factory=dict)

    @property
    def inconclusive(self) -> bool:
        return any(f.status is FlagStatus.INCONCLUSIVE for f in self.flags.values())

    def value(self, name: str) -> Optional[bool]:
        return self.flags[name].value

    def implication_violations(self) -> List[str]:
        bad = []
        for premise, conclusion in IMPLICATIONS:
            if self.value(premise) is True and self.value(conclusion) is False:
                bad.append(f"{premise} => {conclusion}")
        return bad

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "prime": self.prime,
            "aut_order": self.aut_order,
            "flags": {
                name: self.flags[name].to_dict() for name in FLAG_NAMES if name in self.flags
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class Check:
    name: str
    expected: Any
    observed: Any
    provenance: str = "derived"

    @property
    def passed(self) -> bool:
        return self.expected == self.observed


@dataclass
class ScenarioResult:
    scenario: str
    status: str
    checks: List[Check] = field(default_factory=list)
    wall_time: float = 0.0
    detail: str = ""

    @property
    def passed_checks(self) -> int:
        return sum(c.passed for c in self.checks)

    def to_dict(self, timing: bool = True) -> Dict[str, Any]:
        data: Dict[str, Any] = {"scenario": self.scenario, "status": self.status}
        if timing:
            data["wall_time"] = round(self.wall_time, 3)
        data["detail"] = self.detail
        data["checks"] = [
            {
                "name": c.name,
                "expected": c.expected,
                "observed": c.observed,
                "provenance": c.provenance,
                "passed": c.passed,
            }
            for c in self.checks
        ]
        return data
