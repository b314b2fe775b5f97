"""
Transmit/receive beamformer design for digital, hybrid and analog phased
arrays by component-image addition, plus a far-field imaging simulator.
"""

from .banks import DigitalBank, HybridBank, load_bank, save_bank
from .closedform import (ARCHITECTURES, closed_form_bank, closed_form_image_count,
                         lemma1_factor, lemma1_general, lemma2_analog, lemma3_flatten,
                         lemma3_indices, remark1_merge, thm1_hybrid_cont, thm2_hybrid_1bit,
                         thm3_analog_cont, thm4_analog_1bit)
from .digital import (DesignProblem, SolverConfig, altmin, coarray_problem, psf_problem,
                      spectral_init, svd_factorize)
from .experiments import ExperimentConfig, ResultTable, run_experiment
from .geometry import (ArrayGeometry, SumCoarray, make_boundary, make_custom, make_mra,
                       make_ula, make_ura, q_lower_bound, selection_matrix, sum_coarray)
from .hybrid import (closed_form_candidate, design, greedy_main, greedy_sub, min_q_search,
                     normalize_tx, quantized_thm1, refine_digital)
from .imaging import ImageResult, Scene, form_image, measure, scene_rough_surface
from .numerics import lstsq_regularized, pinv_regularized, quantize_phase, svd_truncated
from .steering import (DirectionGrid, TargetSpec, psf_eval, steer_target, steering_matrix,
                       target_stochastic, target_window)

__version__ = "0.1.0"
