"""Key-rate upper bounds for the depolarized four- and six-state protocols.

The main entry point is :func:`corollary2_bound`, which returns
(1 - lambda_max) * I_ent(A;B). Here lambda_max is the largest separable
weight among states reproducing the detector-corrected statistics, and
I_ent is the mutual information of the entangled part measured with the
real (noisy, lossy) key-basis detectors.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bsa import EquivalenceClassSpec, max_separable_weight
from .detectors import DetectorSpec, invert_dark_counts, invert_efficiency
from .errors import KeyboundError
from .info import binary_entropy, mutual_information
from .protocols import (ProtocolSpec, check_channel_param, depolarized_bell_state, key_basis_distribution,
                        protocol_povms, tomography_distribution)
from .sdp import SolverOptions

CSV_COLUMNS = ("e", "lambda_max", "i_ent", "upper_bound", "mutual_info", "e_r")
E_R_LABEL = "E_r (single copy, >= E_r^inf)"


@dataclass
class BoundReport:
    e: float
    lambda_max: float
    i_ent: float
    upper_bound: float
    mutual_info: float
    e_r: float | None
    detector: DetectorSpec
    protocol: str = ""
    purity: float | None = None
    decomposition_residual: float | None = None
    duality_gap: float | None = None
    error: str | None = None

    def consistent(self, tol: float = 1e-10) -> bool:
        """upper_bound == (1 - lambda_max) * i_ent and 0 <= upper_bound <= i_ent."""
        if self.error is not None:
            return True
        expected = (1 - self.lambda_max) * self.i_ent
        return (abs(self.upper_bound - expected) <= tol and self.upper_bound >= 0
                and self.upper_bound <= self.i_ent + tol)

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "e": self.e,
            "lambda_max": self.lambda_max,
            "i_ent": self.i_ent,
            "upper_bound": self.upper_bound,
            "mutual_info": self.mutual_info,
            "e_r": self.e_r,
            "e_r_label": E_R_LABEL,
            "rho_ent_purity": self.purity,
            "decomposition_residual": self.decomposition_residual,
            "duality_gap": self.duality_gap,
            "detector": self.detector.to_json(),
            "error": self.error,
        }


def _protocol(protocol) -> ProtocolSpec:
    return protocol if isinstance(protocol, ProtocolSpec) else protocol_povms(protocol)


def detector_corrected_statistics(observed, bob_labels, detectors: DetectorSpec | None) -> np.ndarray:
    """Undo dark counts and losses of trusted detectors to recover ideal p_ij."""
    if detectors is None or detectors.is_ideal:
        return np.asarray(observed, dtype=float)
    p = invert_dark_counts(observed, detectors, bob_labels)
    if detectors.has_losses:
        p = invert_efficiency(p, detectors, bob_labels)
    return p


def mutual_info_bound(protocol, e: float, detectors: DetectorSpec | None = None) -> float:
    """I(A;B) of the noisy key-basis statistics of the depolarized Bell state."""
    spec = _protocol(protocol)
    rho = depolarized_bell_state(e)
    return mutual_information(key_basis_distribution(rho, spec, detectors))


def relative_entropy_bell_diagonal(e: float) -> float:
    """Single-copy relative entropy of entanglement of the depolarized Bell state.

    Equals 1 - h(1 - 3e/2) below e = 1/3 and 0 above; this upper-bounds the
    regularized quantity.
    """
    e = check_channel_param(e)
    if e >= 1 / 3:
        return 0.0
    return max(0.0, 1.0 - binary_entropy(1 - 1.5 * e))


@dataclass
class StateBound:
    """Bound ingredients for one state measured by one protocol."""

    lambda_max: float
    i_ent: float
    upper_bound: float
    purity: float | None
    decomposition_residual: float
    duality_gap: float


def state_bound(protocol, rho, detectors: DetectorSpec | None = None,
                options: SolverOptions | None = None) -> StateBound:
    """(1 - lambda_max) * I_ent for the statistics an arbitrary two-qubit state produces.

    The statistics are simulated through ``detectors``, corrected back to
    ideal ones, and the entangled part is then measured with the same
    detectors. Separable-compatible data give exactly 0.
    """
    spec = _protocol(protocol)
    detectors = detectors or DetectorSpec()
    observed, bob_noisy = tomography_distribution(rho, spec, detectors)
    ideal = detector_corrected_statistics(observed, bob_noisy.labels, detectors)
    povm = spec.tomography_povm
    result = max_separable_weight(EquivalenceClassSpec(povm, povm, ideal), options)

    lam = result.lambda_max
    if result.separable_compatible:
        i_ent, bound, purity = 0.0, 0.0, None
    else:
        i_ent = mutual_information(key_basis_distribution(result.rho_ent, spec, detectors))
        bound = (1 - lam) * i_ent
        purity = float(np.trace(result.rho_ent @ result.rho_ent).real)
    return StateBound(lam, i_ent, bound, purity, result.decomposition_residual(), result.duality_gap)


def corollary2_bound(protocol, e: float, detectors: DetectorSpec | None = None,
                     options: SolverOptions | None = None) -> BoundReport:
    """Bound report for the depolarized Bell state with error rate ``e``."""
    spec = _protocol(protocol)
    detectors = detectors or DetectorSpec()
    e = check_channel_param(e)
    sb = state_bound(spec, depolarized_bell_state(e), detectors, options)
    return BoundReport(
        e=e,
        lambda_max=sb.lambda_max,
        i_ent=sb.i_ent,
        upper_bound=sb.upper_bound,
        mutual_info=mutual_info_bound(spec, e, detectors),
        e_r=relative_entropy_bell_diagonal(e),
        detector=detectors,
        protocol=spec.name,
        purity=sb.purity,
        decomposition_residual=sb.decomposition_residual,
        duality_gap=sb.duality_gap,
    )


def _failed_report(spec: ProtocolSpec, e: float, detectors: DetectorSpec, exc: Exception) -> BoundReport:
    nan = math.nan
    return BoundReport(e, nan, nan, nan, nan, None, detectors, spec.name, error=f"{type(exc).__name__}: {exc}")


def scan(protocol, e_grid: Iterable[float], detectors: DetectorSpec | None = None,
         options: SolverOptions | None = None, workers: int = 1) -> list[BoundReport]:
    """One report per grid point, in grid order; failures are recorded, not raised."""
    spec = _protocol(protocol)
    detectors = detectors or DetectorSpec()
    grid = [check_channel_param(e) for e in e_grid]

    def point(e):
        try:
            return corollary2_bound(spec, e, detectors, options)
        except KeyboundError as exc:
            return _failed_report(spec, e, detectors, exc)

    if workers <= 1:
        return [point(e) for e in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(point, grid))


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{float(x):.9g}"


def reports_to_csv(reports: Sequence[BoundReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow([_fmt(getattr(r, col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def reports_from_csv(text: str) -> list[dict]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append({k: (float(v) if v != "" else None) for k, v in rec.items()})
    return rows


def reports_to_json(reports: Sequence[BoundReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2, allow_nan=False, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
