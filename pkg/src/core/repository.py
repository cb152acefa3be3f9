from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Optional

from ..config import FUNCTIONS_FILE

logger = logging.getLogger(__name__)

_repository: Optional[_FunctionRepository] = None  # Global repository instance

Term = tuple[int, int]  # (coefficient index, power of r)


@dataclass(frozen=True)
class FunctionForm:
    """Numerator and denominator terms of a distortion function; both carry an implicit leading 1."""
    code: str
    formula: str
    num_coefficients: int
    numerator: tuple[Term, ...]
    denominator: tuple[Term, ...]

    @property
    def rational(self) -> bool:
        return bool(self.denominator)


class _FunctionRepository:
    FUNCTIONS_FILE = FUNCTIONS_FILE

    def __init__(self):
        self.forms: dict[str, FunctionForm] = {}
        self.embeddings: dict[str, list[Optional[int]]] = {}
        self.analytic: set[str] = set()
        self.catalog: list[str] = []

        self._load_functions()

    def _load_functions(self) -> None:
        """Load the function catalog, the general-rational embeddings and the analytic set."""
        with open(self.FUNCTIONS_FILE, 'r', encoding='utf-8') as file:
            data = json.load(file)

        for entry in data['functions']:
            numerator = tuple((int(i), int(p)) for i, p in entry['numerator'])
            denominator = tuple((int(i), int(p)) for i, p in entry['denominator'])
            form = FunctionForm(entry['code'], entry['formula'], int(entry['coefficients']),
                                numerator, denominator)
            self._validate(form)
            self.forms[form.code] = form

        self.embeddings = {code: list(slots) for code, slots in data['embeddings'].items()}
        self.analytic = set(data['analytic'])
        self.catalog = list(data['catalog'])
        logger.debug("Loaded %d distortion functions", len(self.forms))

    @staticmethod
    def _validate(form: FunctionForm) -> None:
        indices = {i for i, _ in form.numerator + form.denominator}
        if indices != set(range(form.num_coefficients)):
            raise ValueError(f"Inconsistent coefficient indices for function '{form.code}'")

    def form(self, code: str) -> FunctionForm:
        if code not in self.forms:
            raise ValueError(f"Unknown distortion function code: '{code}'")
        return self.forms[code]


def initialize():
    """Initializes the global function repository."""
    global _repository
    if _repository is not None:
        raise RuntimeError("Function repository has already been initialized.")
    _repository = _FunctionRepository()


def is_initialized() -> bool:
    return _repository is not None


def get() -> _FunctionRepository:
    """Retrieves the global function repository."""
    if _repository is None:
        raise RuntimeError("Function repository has not been initialized.")
    return _repository
