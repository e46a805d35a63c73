"""Trusted-device detector models: dark counts, finite efficiency, inversion.

Only Bob's detectors are imperfect; Alice's POVMs pass through unchanged.
Efficiency is applied first (it adds a vacuum level and a ``"vac"``
outcome), dark counts second, so a dark count can turn a would-be vacuum
event into a click.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import quantum as qc
from .errors import InconsistentStatistics, InvalidArgument

VAC = "vac"
COMPLETENESS_TOL = 1e-9
INVERSION_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Povm:
    """Finite POVM: an ``(n, d, d)`` array of PSD elements summing to identity."""

    elements: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2] or el.shape[0] < 1:
            raise InvalidArgument(f"POVM elements must have shape (n, d, d), got {el.shape}")
        el = np.array([qc.hermitian(e, tol=1e-9) for e in el])
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != el.shape[0]:
            raise InvalidArgument("one label per POVM element required")
        for e in el:
            if np.linalg.eigvalsh(e)[0] < -COMPLETENESS_TOL:
                raise InvalidArgument("POVM element is not positive semidefinite")
        if np.max(np.abs(el.sum(0) - np.eye(el.shape[1]))) > COMPLETENESS_TOL:
            raise InvalidArgument("POVM elements do not sum to the identity")
        el.setflags(write=False)
        object.__setattr__(self, "elements", el)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self) -> int:
        return self.elements.shape[0]

    @property
    def click_indices(self) -> list[int]:
        return [k for k, lab in enumerate(self.labels) if lab != VAC]

    @property
    def has_vacuum(self) -> bool:
        return VAC in self.labels

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "elements": [qc.matrix_to_json(e) for e in self.elements]}

    @classmethod
    def from_json(cls, obj: dict) -> "Povm":
        try:
            elements = [qc.matrix_from_json(e) for e in obj["elements"]]
            labels = obj.get("labels") or [str(k) for k in range(len(elements))]
        except (KeyError, TypeError) as exc:
            raise InvalidArgument(f"malformed POVM object: {exc}") from exc
        return cls(np.array(elements), tuple(labels))


@dataclass(frozen=True)
class DetectorSpec:
    """Bob's detector parameters.

    ``dark_split`` and ``efficiencies`` are per click outcome; ``None`` means
    the equal split ``d/n`` and perfect efficiency respectively, resolved
    against the POVM they are applied to. A scalar efficiency applies to all
    detectors.
    """

    dark_total: float = 0.0
    dark_split: tuple[float, ...] | None = None
    efficiencies: tuple[float, ...] | float | None = None

    def __post_init__(self):
        d = float(self.dark_total)
        if not 0.0 <= d < 1.0:
            raise InvalidArgument(f"dark count probability {d} outside [0, 1)")
        object.__setattr__(self, "dark_total", d)
        if self.dark_split is not None:
            split = tuple(float(x) for x in self.dark_split)
            if any(x < 0 for x in split) or abs(sum(split) - d) > 1e-12:
                raise InvalidArgument("dark_split must be nonnegative and sum to dark_total")
            object.__setattr__(self, "dark_split", split)
        eta = self.efficiencies
        if eta is not None:
            eta = float(eta) if np.isscalar(eta) else tuple(float(x) for x in eta)
            values = [eta] if isinstance(eta, float) else list(eta)
            if any(not 0.0 < x <= 1.0 for x in values):
                raise InvalidArgument(f"efficiency values {values} outside (0, 1]")
            object.__setattr__(self, "efficiencies", eta)

    @property
    def has_losses(self) -> bool:
        eta = self.efficiencies
        if eta is None:
            return False
        values = [eta] if isinstance(eta, float) else list(eta)
        return any(x < 1.0 for x in values)

    @property
    def is_ideal(self) -> bool:
        return self.dark_total == 0.0 and not self.has_losses

    def split_for(self, n_clicks: int) -> np.ndarray:
        if self.dark_split is None:
            return np.full(n_clicks, self.dark_total / n_clicks)
        if len(self.dark_split) != n_clicks:
            raise InvalidArgument(f"dark_split has {len(self.dark_split)} entries for {n_clicks} click outcomes")
        return np.array(self.dark_split)

    def efficiencies_for(self, n_clicks: int) -> np.ndarray:
        eta = self.efficiencies
        if eta is None:
            return np.ones(n_clicks)
        if isinstance(eta, float):
            return np.full(n_clicks, eta)
        if len(eta) != n_clicks:
            raise InvalidArgument(f"{len(eta)} efficiencies given for {n_clicks} click outcomes")
        return np.array(eta)

    def to_json(self) -> dict:
        eta = self.efficiencies
        return {
            "dark_total": self.dark_total,
            "dark_split": None if self.dark_split is None else list(self.dark_split),
            "efficiencies": list(eta) if isinstance(eta, tuple) else eta,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DetectorSpec":
        split = obj.get("dark_split")
        eta = obj.get("efficiencies", obj.get("efficiency"))
        if isinstance(eta, list):
            eta = tuple(eta)
        return cls(
            dark_total=obj.get("dark_total", 0.0),
            dark_split=None if split is None else tuple(split),
            efficiencies=eta,
        )


def _outcome_dark_weights(labels: Sequence[str], spec: DetectorSpec) -> np.ndarray:
    clicks = [k for k, lab in enumerate(labels) if lab != VAC]
    weights = np.zeros(len(labels))
    weights[clicks] = spec.split_for(len(clicks))
    return weights


def apply_dark_counts(povm: Povm, spec: DetectorSpec) -> Povm:
    """Click elements become (1-d) B_j + d_j 1; a vacuum element becomes (1-d) B_vac."""
    d = spec.dark_total
    if d == 0.0:
        return povm
    weights = _outcome_dark_weights(povm.labels, spec)
    eye = np.eye(povm.dim)
    elements = (1 - d) * povm.elements + weights[:, None, None] * eye
    return Povm(elements, povm.labels)


def apply_efficiency(povm: Povm, spec: DetectorSpec) -> Povm:
    """Lossy detection on the signal (+) vacuum space.

    Click elements are eta_j B_j padded with a zero vacuum row/column; the
    new ``"vac"`` outcome is sum_j (1 - eta_j) B_j (+) |vac><vac|.
    """
    if povm.has_vacuum:
        raise InvalidArgument("POVM already contains a vacuum outcome")
    eta = spec.efficiencies_for(len(povm))
    d = povm.dim
    elements = np.zeros((len(povm) + 1, d + 1, d + 1), dtype=complex)
    elements[:-1, :d, :d] = eta[:, None, None] * povm.elements
    elements[-1, :d, :d] = np.einsum("j,jab->ab", 1 - eta, povm.elements)
    elements[-1, d, d] = 1.0
    return Povm(elements, povm.labels + (VAC,))


def noisy_povm(povm: Povm, spec: DetectorSpec | None) -> Povm:
    """Efficiency (if lossy) then dark counts; identity for ideal detectors."""
    if spec is None or spec.is_ideal:
        return povm
    if spec.has_losses:
        povm = apply_efficiency(povm, spec)
    return apply_dark_counts(povm, spec)


def dark_count_forward(p, spec: DetectorSpec, labels: Sequence[str] | None = None) -> np.ndarray:
    """p~_ij = (1-d) p_ij + d_j p_i, with d_j = 0 for vacuum columns."""
    p = np.asarray(p, dtype=float)
    labels = labels or [str(j) for j in range(p.shape[1])]
    weights = _outcome_dark_weights(labels, spec)
    return (1 - spec.dark_total) * p + np.outer(p.sum(1), weights)


def invert_dark_counts(observed, spec: DetectorSpec, labels: Sequence[str] | None = None) -> np.ndarray:
    """Trusted-device inversion p_ij = (p~_ij - d_j p_i) / (1 - d), p_i = sum_j p~_ij."""
    p = np.asarray(observed, dtype=float)
    if p.ndim != 2:
        raise InvalidArgument("expected an Alice x Bob table")
    labels = labels or [str(j) for j in range(p.shape[1])]
    if len(labels) != p.shape[1]:
        raise InvalidArgument("one label per Bob outcome required")
    d = spec.dark_total
    if d == 0.0:
        return p.copy()
    weights = _outcome_dark_weights(labels, spec)
    out = (p - np.outer(p.sum(1), weights)) / (1 - d)
    if np.any(out < -INVERSION_TOL):
        raise InconsistentStatistics(
            f"dark-count inversion produced probability {out.min():.3g}; "
            "observed data is not explainable with the declared dark counts"
        )
    return np.where(out < 0, 0.0, out)


def invert_efficiency(observed, spec: DetectorSpec, labels: Sequence[str]) -> np.ndarray:
    """Recover lossless click statistics p_ij = q_ij / eta_j and drop the vacuum column.

    Requires the vacuum column to be fully explained by the losses, i.e. no
    population of the vacuum level in the shared state.
    """
    q = np.asarray(observed, dtype=float)
    clicks = [k for k, lab in enumerate(labels) if lab != VAC]
    eta = spec.efficiencies_for(len(clicks))
    p = q[:, clicks] / eta[None, :]
    if abs(p.sum() - 1) > 1e-9:
        raise InconsistentStatistics(
            f"loss inversion gives total probability {p.sum():.12g}; "
            "vacuum statistics do not match the declared efficiencies"
        )
    return p / p.sum()


def embed_state(rho, dims: Sequence[int] = (2, 2)) -> np.ndarray:
    """Pad Bob's factor with one (empty) vacuum level: dA*dB -> dA*(dB+1)."""
    rho = np.asarray(rho, dtype=complex)
    da, db = (int(x) for x in dims)
    if rho.shape != (da * db, da * db):
        raise InvalidArgument(f"state of shape {rho.shape} does not match dims {dims}")
    t = rho.reshape(da, db, da, db)
    out = np.zeros((da, db + 1, da, db + 1), dtype=complex)
    out[:, :db, :, :db] = t
    n = da * (db + 1)
    return out.reshape(n, n)
