"""Blind single-sample noise power and SNR estimation in sparse beamspace."""

from .baselines import (BaselineConfig, mad_noise_power, mad_refined_noise_power,
                        truncated_mean_noise_power)
from .beamspace import SortedPowerVector, dft_unitary, power_sort
from .channel import (ChannelConfig, IdealSparseSpec, add_awgn, ideal_sparse_signal, scale_to_snr,
                      steering_vector, synth_channel)
from .errors import DegenerateInputError, InvalidArgumentError, SampleParseError
from .estimator import (BoundaryResult, EstimateResult, ThresholdSchedule, build_schedule,
                        detect_boundary, estimate, estimate_from_sorted, estimate_noise_power,
                        estimate_signal_power, estimate_snr, fixed_schedule, gamma_coefficient,
                        harmonic_gap_sum, naive_detect_boundary, oracle_noise_power)
from .harness import (SweepConfig, SweepRecord, estimate_file, run_fxcompare,
                      run_orderstat_validation, run_separation_validation, run_sweep)
from .hwmodel import (FxFormat, FxPipeline, FxValue, ReciprocalLUT, fx_front_end,
                      fx_pipeline_estimate, fx_quantize, fx_separating_unit,
                      fx_signal_snr_unit, fx_systolic_sort)
from .kernels import BACKEND

__version__ = "0.1.0"
