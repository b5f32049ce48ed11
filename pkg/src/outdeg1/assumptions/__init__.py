"""Diagnostics for the loop-breaking and shielding hypotheses."""

from .loops import (
    AlmostLoopingParams,
    AlmostLoopingReport,
    LoopBreakError,
    LoopBreakWitness,
    LoopingReport,
    construct_loop_break,
    construct_navigation_loop_break,
    construct_segment_loop_break,
    extend,
    verify_almost_looping,
    verify_k_looping,
)
from .shields import (
    MShieldCheck,
    ShieldCheck,
    ShieldReport,
    check_m_shielded,
    check_navigation_shield_event,
    chords_blocked,
    estimate_p_epsilon,
    is_epsilon_shield,
    shield_trial,
    wilson_interval,
    winding_circuit,
)
