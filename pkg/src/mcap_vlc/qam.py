"""Gray-coded square QAM mapping and hard-decision demapping."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ParameterError

SUPPORTED_ORDERS = (4, 16, 64)


@dataclass(frozen=True)
class ConstellationSpec:
    """Square M-QAM with unit average energy.

    Each axis carries ``bits_per_symbol // 2`` bits on the odd-integer levels
    ``-(L-1), ..., -1, 1, ..., L-1`` with ``L = sqrt(M)``, labelled in binary
    reflected Gray order, then scaled by ``1 / normalization``.
    """

    order: int

    def __post_init__(self):
        if self.order not in SUPPORTED_ORDERS:
            raise ParameterError(
                f"QAM order must be one of {SUPPORTED_ORDERS}, got {self.order}", field="qam_order"
            )

    @property
    def bits_per_symbol(self) -> int:
        return int(self.order).bit_length() - 1

    @property
    def bits_per_axis(self) -> int:
        return self.bits_per_symbol // 2

    @property
    def levels_per_axis(self) -> int:
        return 1 << self.bits_per_axis

    @property
    def normalization(self) -> float:
        return float(np.sqrt(2.0 * (self.order - 1) / 3.0))

    @cached_property
    def _axis_gray(self) -> np.ndarray:
        """Gray label (as integer) of level index ``i`` (most negative level first)."""
        i = np.arange(self.levels_per_axis)
        return i ^ (i >> 1)

    @cached_property
    def _axis_index_of_label(self) -> np.ndarray:
        inv = np.empty(self.levels_per_axis, dtype=np.int64)
        inv[self._axis_gray] = np.arange(self.levels_per_axis)
        return inv

    def points(self) -> np.ndarray:
        """All M points, indexed by the integer value of their bit label (MSB first)."""
        labels = np.arange(self.order)
        bits = ((labels[:, None] >> np.arange(self.bits_per_symbol - 1, -1, -1)) & 1).astype(np.uint8)
        return map_bits(bits.ravel(), self)


def _axis_levels(index: np.ndarray, levels: int) -> np.ndarray:
    return 2.0 * index - (levels - 1)


def _bits_to_int(groups: np.ndarray) -> np.ndarray:
    k = groups.shape[1]
    weights = 1 << np.arange(k - 1, -1, -1)
    return groups.astype(np.int64) @ weights


def _int_to_bits(values: np.ndarray, k: int) -> np.ndarray:
    return ((values[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)


def map_bits(bits, spec: ConstellationSpec) -> np.ndarray:
    """Map a bit sequence to complex unit-energy QAM symbols."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    k = spec.bits_per_symbol
    if len(bits) % k:
        raise ParameterError(f"{len(bits)} bits is not a multiple of {k} bits per symbol")
    groups = bits.reshape(-1, k)
    half = spec.bits_per_axis
    lut = spec._axis_index_of_label
    i_idx = lut[_bits_to_int(groups[:, :half])]
    q_idx = lut[_bits_to_int(groups[:, half:])]
    L = spec.levels_per_axis
    return (_axis_levels(i_idx, L) + 1j * _axis_levels(q_idx, L)) / spec.normalization


def _axis_decide(values: np.ndarray, spec: ConstellationSpec) -> np.ndarray:
    L = spec.levels_per_axis
    u = (values * spec.normalization + (L - 1)) / 2.0
    # ceil(u - 1/2) rounds exact midpoints down, i.e. toward the smaller level
    idx = np.ceil(u - 0.5)
    return np.clip(idx, 0, L - 1).astype(np.int64)


def decide(symbols, spec: ConstellationSpec) -> np.ndarray:
    """Nearest constellation point for each received symbol."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    L = spec.levels_per_axis
    i_idx = _axis_decide(symbols.real, spec)
    q_idx = _axis_decide(symbols.imag, spec)
    return (_axis_levels(i_idx, L) + 1j * _axis_levels(q_idx, L)) / spec.normalization


def demap_symbols(symbols, spec: ConstellationSpec) -> np.ndarray:
    """Hard-decision demapping: bits of the nearest point, per-axis Gray labels."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    half = spec.bits_per_axis
    gray = spec._axis_gray
    i_bits = _int_to_bits(gray[_axis_decide(symbols.real, spec)], half)
    q_bits = _int_to_bits(gray[_axis_decide(symbols.imag, spec)], half)
    return np.concatenate([i_bits, q_bits], axis=1).ravel()
