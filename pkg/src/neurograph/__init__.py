"""EEG preference-recognition pipeline: band features, spatial inputs, CNNs.

The package turns multichannel EEG trials into per-band feature tensors
(power topographies or ordered connectivity matrices), trains small CNNs on
them, and evaluates classification/regression performance under k-fold
cross-validation. A synthetic generator with planted connectivity supplies
ground-truth corpora.
"""

from .bands import BAND_NAMES, DEFAULT_BANDS, BandDefinition, band_by_name
from .corpus import (
    DISLIKE,
    LIKE,
    LabeledExample,
    TrialRecord,
    assign_folds,
    import_csv_trials,
    label,
    write_trial,
)
from .etns import read_tensors, write_tensors
from .evaluate import (
    EvalReport,
    confusion_counts,
    cross_validate,
    f1,
    failure_analysis,
    macro_f1,
    rmse,
)
from .features import (
    ConnectivityMatrix,
    WelchConfig,
    band_power,
    connectivity_matrix,
    pcc,
    pcc_matrix,
    plv,
    plv_matrix,
    psd_feature,
    te_matrix,
    transfer_entropy,
    welch_psd,
)
from .layout import (
    ElectrodeMontage,
    ElectrodeOrdering,
    FeatureTensor,
    apply_ordering,
    distance_ordering,
    head_mask,
    identity_ordering,
    load_montage,
    make_montage,
    random_ordering,
    render_topography,
    stack_bands,
)
from .models import CnnModel
from .pipeline import ExtractedDataset, FeatureConfig, extract_corpus, extract_trial
from .signals import (
    BandSegment,
    MultichannelRecording,
    bandpass,
    instantaneous_phase,
    segment,
    segment_baseline,
)
from .synth import SynthesisPlan, synthesize

__version__ = "0.1.0"
