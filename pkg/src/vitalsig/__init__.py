"""Camera-based vital-sign features and multimodal classification.

Subpackages and modules
-----------------------
dataio      trace and manifest file formats
synthgen    synthetic traces and datasets with known ground truth
rppg        POS pulse extraction, windowed heart rate, cleaning, quality index
hrv         NN intervals and time/frequency-domain HRV metrics
ecgref      R-peak detection and r-PPG/ECG agreement sweeps
thermal     thermal ROI segment features
stats       Pearson and t-test kernels
ml          datasets, random forest, SVM, cross-validation, fusion
attribution Shapley-value feature attribution
pipeline    end-to-end session processing
"""

from . import attribution, dataio, ecgref, hrv, ml, pipeline, rppg, stats, synthgen, thermal
from .errors import VitalsigError

__version__ = "0.1.0"

__all__ = ["attribution", "dataio", "ecgref", "hrv", "ml", "pipeline", "rppg", "stats",
           "synthgen", "thermal", "VitalsigError", "__version__"]
