"""Computation services."""

from misbelief.services.reports import ReportService
from misbelief.services.sweep import SweepResult, Trend
from misbelief.services.verification import CheckResult, Suite, SuiteReport, VerificationService

__all__ = [
    "CheckResult",
    "ReportService",
    "Suite",
    "SuiteReport",
    "SweepResult",
    "Trend",
    "VerificationService",
]
