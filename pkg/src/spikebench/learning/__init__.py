"""Weight-update rules. Every ``*_update`` is pure and returns a :class:`WeightDelta`."""
from .common import (
    DEFAULT_W_MAX,
    TeacherSignal,
    WeightDelta,
    apply_delta,
    exp_window,
    make_teacher,
    spike_time,
    surrogate_grad,
    window_correlation,
)
from .hybrid import (
    ann_snn_convert,
    bal_update,
    convert_weights,
    mutual_information,
    output_lzc,
    reward_for,
    reward_stdp_update,
    train_ann,
    uncertainty,
)
from .rules import (
    CATEGORY,
    RULES,
    AnnSnn,
    Bal,
    Bp,
    Chronotron,
    Hebbian,
    ReSuMe,
    RewardStdp,
    RATE_FIELD,
    RuleConfig,
    Sdsp,
    SpikeProp,
    Stbp,
    Stdp,
    Tempotron,
    make_rule,
    rule_from_dict,
    rule_to_dict,
    with_rate,
)
from .supervised import (
    bp_update,
    chronotron_errors,
    chronotron_loss,
    chronotron_update,
    rate_loss,
    readout,
    resume_update,
    spike_timings,
    spikeprop_update,
    stbp_update,
    surrogate_gradients,
    tempotron_kernel,
    tempotron_update,
    timing_delta,
)
from .unsupervised import hebbian_update, sdsp_update, stdp_update, stdp_window

__all__ = [name for name in dir() if not name.startswith("_")]
