from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

from .. import repository
from ..errors import PoleAtRadius
from ..repository import FunctionForm
from ...config import POLE_EPSILON, MAX_CATALOG_COEFFICIENTS


class FunctionKind(Enum):
    """Distortion function kinds with their catalog codes."""
    T1 = '1'
    T2 = '2'
    T3 = '3'
    T4 = '4'
    T5 = '5'
    T6 = '6'
    T7 = '7'
    T8 = '8'
    T9 = '9'
    T10 = '10'
    POLY_EVEN = 'poly'
    GENERAL_RATIONAL = 'general'
    DECENTERING = 'heikkila'

    def __init__(self, code: str):
        self.code = code

    @classmethod
    def get_by_code(cls, code: str) -> FunctionKind:
        """Retrieve a FunctionKind by its code."""
        for kind in cls:
            if kind.code == code:
                return kind
        raise ValueError(f"Invalid distortion function code: {code}")

    @classmethod
    def catalog(cls) -> list[FunctionKind]:
        """The ten rows of the function table, in table order."""
        return [cls.get_by_code(code) for code in repository.get().catalog]

    @property
    def in_catalog(self) -> bool:
        return self.code in repository.get().catalog

    @property
    def analytic(self) -> bool:
        """Whether the geometric model built on this kind has a closed-form inverse."""
        return self.code in repository.get().analytic


def poly_even_form(order: int) -> FunctionForm:
    """1 + k1 r^2 + k2 r^4 + ... + k_m r^(2m)."""
    if order < 1:
        raise ValueError(f"Polynomial order must be positive, got {order}")
    numerator = tuple((i, 2 * (i + 1)) for i in range(order))
    formula = ' + '.join(['1'] + [f"k{i + 1} r^{2 * (i + 1)}" for i in range(order)])
    return FunctionForm(f"poly{order}", formula, order, numerator, ())


def function_form(kind: FunctionKind, order: int = 0) -> FunctionForm:
    match kind:
        case FunctionKind.POLY_EVEN:
            return poly_even_form(order)
        case FunctionKind.DECENTERING:
            raise ValueError("The decentering model has no radial function form")
        case _:
            return repository.get().form(kind.code)


def num_coefficients(kind: FunctionKind, order: int = 0) -> int:
    if kind == FunctionKind.DECENTERING:
        return 6
    return function_form(kind, order).num_coefficients


# =============================================
# Evaluation kernels
# =============================================
def _polynomial(terms, coefficients, r: np.ndarray) -> np.ndarray:
    """1 + sum(k_i r^p_i), accumulated in term order."""
    total = np.ones_like(r)
    for index, power in terms:
        total = total + coefficients[index] * r ** power
    return total


def _polynomial_derivative(terms, coefficients, r: np.ndarray) -> np.ndarray:
    total = np.zeros_like(r)
    for index, power in terms:
        total = total + coefficients[index] * power * r ** (power - 1)
    return total


def evaluate(form: FunctionForm, coefficients, r) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized f(r, k); returns the values and a mask of radii at a pole."""
    r = np.asarray(r, dtype=float)
    numerator = _polynomial(form.numerator, coefficients, r)
    if not form.denominator:
        return numerator, np.zeros(r.shape, dtype=bool)
    denominator = _polynomial(form.denominator, coefficients, r)
    pole = np.abs(denominator) < POLE_EPSILON
    with np.errstate(divide='ignore', invalid='ignore'):
        return numerator / denominator, pole


def evaluate_derivative(form: FunctionForm, coefficients, r) -> np.ndarray:
    """df/dr by the quotient rule."""
    r = np.asarray(r, dtype=float)
    numerator = _polynomial(form.numerator, coefficients, r)
    d_numerator = _polynomial_derivative(form.numerator, coefficients, r)
    if not form.denominator:
        return d_numerator
    denominator = _polynomial(form.denominator, coefficients, r)
    d_denominator = _polynomial_derivative(form.denominator, coefficients, r)
    with np.errstate(divide='ignore', invalid='ignore'):
        return (d_numerator * denominator - numerator * d_denominator) / (denominator * denominator)


# =============================================
# Distortion function value type
# =============================================
@dataclass(frozen=True)
class DistortionFn:
    """A catalog function together with its coefficient vector."""
    kind: FunctionKind
    coefficients: tuple[float, ...]
    order: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'coefficients', tuple(float(c) for c in self.coefficients))
        if self.kind == FunctionKind.POLY_EVEN and self.order < 1:
            object.__setattr__(self, 'order', len(self.coefficients))
        expected = num_coefficients(self.kind, self.order)
        if len(self.coefficients) != expected:
            raise ValueError(f"Function '{self.kind.code}' takes {expected} coefficients, "
                             f"got {len(self.coefficients)}")
        if self.kind.in_catalog and expected > MAX_CATALOG_COEFFICIENTS:
            raise ValueError(f"Catalog functions carry at most {MAX_CATALOG_COEFFICIENTS} coefficients")

    @cached_property
    def form(self) -> FunctionForm:
        return function_form(self.kind, self.order)

    @classmethod
    def zeros(cls, kind: FunctionKind, order: int = 0) -> DistortionFn:
        return cls(kind, (0.0,) * num_coefficients(kind, order), order)

    def with_coefficients(self, coefficients) -> DistortionFn:
        return DistortionFn(self.kind, tuple(coefficients), self.order)

    def negated(self) -> DistortionFn:
        return self.with_coefficients(-c for c in self.coefficients)

    def values(self, r) -> tuple[np.ndarray, np.ndarray]:
        return evaluate(self.form, self.coefficients, r)

    def derivative(self, r) -> np.ndarray:
        return evaluate_derivative(self.form, self.coefficients, r)

    def to_general(self) -> Optional[DistortionFn]:
        """The general rational function this kind embeds into, or None for kinds outside it."""
        slots = repository.get().embeddings.get(self.kind.code)
        if slots is None:
            return None
        kappa = tuple(0.0 if slot is None else self.coefficients[slot] for slot in slots)
        return DistortionFn(FunctionKind.GENERAL_RATIONAL, kappa)


def eval_fn(fn: DistortionFn, r: float) -> float:
    """f(r, k) at a single radius."""
    if r < 0.0:
        raise ValueError(f"Radius must be non-negative, got {r}")
    value, pole = fn.values(r)
    if pole:
        raise PoleAtRadius(r)
    return float(value)
