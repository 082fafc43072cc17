"""Cartoon/texture decomposition with Perona-Malik diffusion and Gabor texture features."""

from .classify import CvConfig, CvReport, FeatureTable, cross_validate, knn_predict
from .datasets import Dataset, Manifest, SynthSpec, ingest, read_manifest, synth_dataset
from .diffusion import ConductionKind, DiffusionParams, conduction, decompose, diffuse, diffuse_step
from .gabor import BankParams, FeatureVector, FilterBank, build_filter_bank, convolve, energy, extract_features
from .imgcore import load_image, save_image, split_tiles
from .operators import OperatorKind, apply_operator, operator_decompose
from .pipeline import Component, OperatorDecomposer, PeronaMalik, PipelineConfig, featurize_dataset, featurize_sweep

__version__ = "0.1.0"
