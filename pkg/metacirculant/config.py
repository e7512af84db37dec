import os
from dataclasses import dataclass, field
from typing import Optional

from dotenv import load_dotenv

from metacirculant.errors import SearchBudgetExceeded


class Config:
    MAX_GROUP_ORDER = 2000000
    FINITE_GROUP_CAP = 6561
    MAX_AUT_DEGREE = 512
    SEARCH_NODES = 50000000
    SEED = 0
    SYLOW_TRIALS = 20000
    STABILIZER_ENUMERATION_LIMIT = 200000
    TABLE_EXPORT_LIMIT = 512
    THREADS = 1

    @classmethod
    def reload(cls) -> None:
        """Re-read every setting from the environment, after ``load_dotenv``."""
        load_dotenv()
        cls.MAX_GROUP_ORDER = int(os.getenv("METACIRCULANT_MAX_GROUP_ORDER", "2000000"))
        cls.FINITE_GROUP_CAP = int(os.getenv("METACIRCULANT_FINITE_GROUP_CAP", "6561"))
        cls.MAX_AUT_DEGREE = int(os.getenv("METACIRCULANT_MAX_AUT_DEGREE", "512"))
        cls.SEARCH_NODES = int(float(os.getenv("METACIRCULANT_SEARCH_NODES", "5e7")))
        cls.SEED = int(os.getenv("METACIRCULANT_SEED", "0"))
        cls.SYLOW_TRIALS = int(os.getenv("METACIRCULANT_SYLOW_TRIALS", "20000"))
        cls.STABILIZER_ENUMERATION_LIMIT = int(
            os.getenv("METACIRCULANT_STABILIZER_ENUMERATION_LIMIT", "200000")
        )
        cls.TABLE_EXPORT_LIMIT = int(os.getenv("METACIRCULANT_TABLE_EXPORT_LIMIT", "512"))
        cls.THREADS = int(os.getenv("METACIRCULANT_THREADS", "1"))


Config.reload()


def setting(value: Optional[int], name: str) -> int:
    """``value`` when given, else the current ``Config`` attribute ``name``."""
    return int(getattr(Config, name)) if value is None else value


@dataclass
class SearchBudget:
    """Node counter shared by one search; raises once ``max_nodes`` is spent."""

    max_nodes: int = field(default_factory=lambda: Config.SEARCH_NODES)
    used: int = 0
    label: str = "search"

    def tick(self, nodes: int = 1) -> None:
        self.used += nodes
        if self.used > self.max_nodes:
            raise SearchBudgetExceeded(self.label, self.used, self.max_nodes)

    @property
    def remaining(self) -> int:
        return max(self.max_nodes - self.used, 0)
