"""Interactive LiDAR-to-camera calibration toolbox."""

from .correspond import (CameraFrameRef, Correspondence, CorrespondenceSet,
                         add_annotation, match_camera_frame, split)
from .errors import (BehindCamera, DuplicateAnnotation, EmptyInput,
                     EmptyLedger, FormatError, LidarcamError, MalformedRecord,
                     MissingColumn, SkewExceeded, TooFewCorrespondences)
from .estimator import GeneticCalibrator
from .geometry import (Calibration, ExtrinsicParams, FisheyeIntrinsics,
                       PinholeIntrinsics, error_by_angle, extrinsic_transform,
                       project, project_fisheye, project_pinhole,
                       project_points, reprojection_error, rotation_matrix)
from .solver import (CalibrationResult, GaConfig, ParamBounds, SolveReport,
                     default_bounds, fitness, ga_run, params_to_calibration,
                     solve)
from .synth import (SyntheticRecording, SyntheticScene, generate,
                    make_correspondences, make_scene)
from .vertex import (LidarFrame, RoiBox, VertexDetection, derive_rings,
                     detect_sequence, detect_vertex, roi_filter)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
