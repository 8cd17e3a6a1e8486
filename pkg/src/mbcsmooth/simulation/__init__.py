from .functions import FUNCTIONS, TestFunction, get_function
from .rng import normals, open_uniforms, stream
from .studies import (
    EnvelopeTable,
    GlobalStudyReport,
    LocalStudyReport,
    SimConfig,
    StudyGrids,
    envelope_data,
    generate_sample,
    global_study,
    ise,
    local_reproduction_grids,
    local_study,
    reproduction_grids,
    with_noise,
)
