"""Stimulus for the golden trace; run as a script to rewrite the reference file."""

import io
from pathlib import Path

import numpy as np

from beamsnr.estimator import ThresholdSchedule
from beamsnr.hwmodel import FxPipeline

GOLDEN = Path(__file__).parent / "data" / "trace_m8_published.txt"


def golden_trace() -> str:
    ybar = np.array([0.5, 0.5j, -0.5, -0.5j, 0.5, 0.5j, 4, -4j])
    buf = io.StringIO()
    FxPipeline(8, ThresholdSchedule.constant(4.0, 8), "published", trace=buf).process(np.fft.ifft(ybar, norm="ortho"))
    return buf.getvalue()


if __name__ == "__main__":
    GOLDEN.write_text(golden_trace())
