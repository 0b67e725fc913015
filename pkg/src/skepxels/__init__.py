"""Skepxels: spatio-temporal skeletal image encoding and action descriptors."""

from .arrangement import (
    Arrangement,
    ArrangementSet,
    brute_force_best,
    generate_set,
    radial_distance,
    set_metric,
)
from .codec import (
    SkeletalImage,
    WindowPlan,
    build_frame_tensor,
    build_location_image,
    build_skepxel,
    build_velocity_image,
    compose_locvel,
    export_image,
    import_raw,
    pad_joints,
    plan_windows,
    sample_frames,
)
from .errors import ParseError, SamplingError, SkepxelsError, ValidationError
from .ftp import (
    FeatureSeries,
    FtpDescriptor,
    PyramidConfig,
    dft_low_freq,
    ftp_encode,
    load_external_features,
    write_feature_series,
)
from .normalize import (
    AugmentationConfig,
    augment_gaussian,
    normalize_pose,
    scale_channels,
    unscale_channels,
)
from .pipeline import EncodeOptions, dataset_descriptors, encode_windows, video_descriptor
from .recognizer import (
    BaselineExtractorConfig,
    EvalReport,
    KnnModel,
    RidgeModel,
    SynthConfig,
    baseline_extract,
    evaluate,
    knn_predict,
    knn_train,
    load_model,
    predict,
    ridge_predict,
    ridge_train,
    save_model,
    synth_actions,
)
from .skeleton import (
    DatasetManifest,
    ManifestEntry,
    SkeletonLayout,
    SkeletonSequence,
    interleave_bodies,
    ntu_layout,
    parse_generic_json,
    parse_ntu_skeleton,
    serialize_generic_json,
)

__version__ = "0.1.0"
