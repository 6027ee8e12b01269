from dissect.avnav.agent.actions import (
    WaypointTransition,
    execute_to_cell,
    execute_waypoint,
    select_waypoint,
    waypoint_cell,
    waypoint_mask,
)
from dissect.avnav.agent.continuous import (
    ContinuousController,
    ContinuousDiscretizer,
    squash_action,
)
from dissect.avnav.agent.policy import (
    PolicyArch,
    PolicyInput,
    PolicyOutput,
    PolicyParameters,
    decode_audio,
    encode_audio,
    encode_depth,
    encode_spatial_audio,
    fuse_audio_visual,
    init_policy,
    policy_backward,
    policy_forward,
    policy_input,
)
from dissect.avnav.agent.profiles import PROFILES, NetworkProfile, get_profile

__all__ = [
    "PROFILES",
    "ContinuousController",
    "ContinuousDiscretizer",
    "NetworkProfile",
    "PolicyArch",
    "PolicyInput",
    "PolicyOutput",
    "PolicyParameters",
    "WaypointTransition",
    "decode_audio",
    "encode_audio",
    "encode_depth",
    "encode_spatial_audio",
    "execute_to_cell",
    "execute_waypoint",
    "fuse_audio_visual",
    "get_profile",
    "init_policy",
    "policy_backward",
    "policy_forward",
    "policy_input",
    "select_waypoint",
    "squash_action",
    "waypoint_cell",
    "waypoint_mask",
]
