from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from breather.utils.enums import StabilityVerdict


class BreathingReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    period: float
    period_std: float
    frequency: float
    amplitude_min: float
    amplitude_max: float
    peak_max: float
    trough_min: float
    fwhm_time: float
    fwhm_space: Optional[float] = None
    peak_times: List[float]
    peak_heights: List[float]


class Target(BaseModel):
    value: float
    rel_tol: float


class ExpectedReport(BaseModel):
    """Reference values for BreathingReport fields, each with a relative tolerance."""

    targets: Dict[str, Target] = Field(default_factory=dict)

    def compare(self, report: BreathingReport) -> Dict[str, dict]:
        results = {}
        for field_name, target in self.targets.items():
            measured = getattr(report, field_name)
            ok = measured is not None and abs(measured - target.value) <= target.rel_tol * abs(target.value)
            results[field_name] = {
                "expected": target.value,
                "measured": measured,
                "rel_tol": target.rel_tol,
                "ok": bool(ok)
            }
        return results


class PeakDelay(BaseModel):
    peak_index: int
    delay: float


class StabilityReport(BaseModel):
    seed: int
    perturbation: float
    horizon: float
    reference_min: float
    reference_max: float
    envelope_min: Optional[float] = None
    envelope_max: Optional[float] = None
    verdict: StabilityVerdict
    detail: Optional[str] = None
