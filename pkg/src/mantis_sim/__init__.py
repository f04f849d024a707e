"""Behavioral simulator of a mixed-signal near-sensor convolutional imager SoC.

Signal chain: 3T pixel array -> DS3 units (delta-reset sampling, voltage
downshifting, image downsampling) -> 16x128 analog memory -> charge-domain
MAC units and SC amplifiers -> SAR ADCs with charge-sharing aggregation.
On top of the chain sit an execution/scheduling model, an analytical
performance model reproducing the measured operating points, and an RoI
detection head.
"""

from .analog_memory import (AnalogMemoryState, MemoryParams, read_cell, read_cells,
                            retention_ok, storage_pattern, write_row)
from .ds3 import Ds3Params, drs_downshift, ds3_output_noise_sigma, ds3_process_block
from .filters import FilterBank, load_filters, save_filters
from .mac import MacParams, Weight4b, encode_weight, psum_row, psum_row_oracle
from .noise import NoiseContext, NoiseFlags
from .params import SimParams, make_context
from .perf import (OpCountBasis, PowerProfile, data_reduction, energy_per_op, fmap_size,
                   processing_energy, rmse_percent, throughput)
from .pipeline import (ConvConfig, FeatureMapSet, frame_timing, reference_convolution,
                       run_feature_extraction, run_imaging, stride_schedule)
from .roi import DetectionResult, RoiHead, detection_metrics, fc_combine, run_roi
from .sar_adc import (AdcParams, OffsetRegister, charge_share, ideal_transfer_check,
                      sar_convert)
from .sensor import PixelParams, RawPixelFrame, expose, pixel_readout_noise_sigma

__version__ = "0.1.0"
