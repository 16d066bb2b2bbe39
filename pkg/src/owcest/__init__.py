"""Indoor optical wireless DCO-OFDM link simulation and channel estimation.

The package covers the full chain: two-path Lambertian/specular channel
generation, DCO-OFDM slot simulation, classical LS/MMSE estimation, compact
neural estimators trained from scratch, delay-spread adaptive dispatch, and
reproducible NMSE/BER experiments.
"""

from .channel import (
    ChannelRealization,
    DEFAULT_HDS_TEMPLATE,
    DEFAULT_LDS_TEMPLATE,
    DelayClass,
    PAPER_HDS_TEMPLATE,
    PAPER_LDS_TEMPLATE,
    PdpTemplate,
    Pose,
    ScenarioConfig,
    frequency_response,
    impulse_taps,
    label_class,
    lambertian_order,
    los_gain,
    sample_realization,
    specular_path,
)
from .classical import (
    CorrelationSet,
    direct_detection_gain,
    estimate_correlations,
    ls_estimate,
    ls_interpolate,
    mmse_estimate,
)
from .config import Config, ExperimentConfig, load_config
from .dataset import (
    Dataset,
    MIXED_TAG,
    generate_dataset,
    read_dataset,
    rejection_sample_class,
    split_dataset,
    write_dataset,
)
from .estimators import (
    AdaptiveChannelEstimator,
    LeastSquaresEstimator,
    MmseChannelEstimator,
    NeuralChannelEstimator,
)
from .metrics import ber, nmse
from .modem import (
    ModemConfig,
    PilotPattern,
    apply_channel,
    assemble_slot,
    default_pattern,
    demap_qam64,
    demodulate,
    equalize_and_decode,
    map_qam64,
    modulate,
    noise_std_for_snr,
    pilot_observations,
)
from .nn import ModelWeights, TrainConfig, forward, train
from .selector import (
    SelectorBank,
    adaptive_estimate,
    adaptive_estimate_batch,
    classify,
    estimate_cir_magnitudes,
)
from .serialization import (
    load_correlations,
    load_weights,
    save_correlations,
    save_weights,
)

__version__ = "0.1.0"
