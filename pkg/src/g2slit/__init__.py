"""Second-order (intensity-correlation) double-slit interference toolkit.

Analytic correlation surfaces for pseudo-thermal and entangled-pair sources,
a speckle Monte-Carlo estimator that cross-checks them, scan-line extraction
with fringe-spacing prediction, and a synthetic CCD frame pipeline.
"""

from .analysis import FringeReport, TooFewPeaksError, detect_peaks, measure_visibility
from .analytic import (
    CorrelationSurface,
    evaluate_surface,
    g2_entangled,
    g2_thermal,
    load_surface,
    save_surface,
    young_reference,
)
from .frames import FrameStack, correlate_frames, load_stack, save_stack, synthesize_frames
from .geometry import (
    ApertureSpec,
    DetectorGrid,
    OpticalConfig,
    SourceGrid,
    aperture_spectrum,
    custom_aperture,
    double_slit,
    load_config,
    paper_preset,
    transmission,
)
from .montecarlo import (
    EnsembleConfig,
    G2Estimate,
    SpeckleField,
    estimate_g2,
    fluctuation_surface,
    fraunhofer_propagate,
    fraunhofer_propagate_fft,
    sample_thermal_source,
)
from .scanline import (
    FLAT,
    CrossSection,
    ScanLine,
    classical_baseline,
    extract_cross_section,
    predict_fringe_spacing,
    preset_line,
    resolution_factor,
)

__version__ = "0.1.0"
