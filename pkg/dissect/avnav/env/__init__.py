from dissect.avnav.env.episode import (
    EpisodeSpec,
    MapSpec,
    build_map_pool,
    generate_episode,
    parse_gen_spec,
)
from dissect.avnav.env.grid import (
    Action,
    AgentPose,
    GridMap,
    action_distances,
    action_plan,
    generate_map,
    geodesic_distance,
    load_map,
    shortest_action_count,
    shortest_path,
    step_low_level,
)
from dissect.avnav.env.sensing import (
    DepthScan,
    GeometricMap,
    Observation,
    ray_cast_scan,
    update_geometric_map,
)

__all__ = [
    "Action",
    "AgentPose",
    "DepthScan",
    "EpisodeSpec",
    "GeometricMap",
    "GridMap",
    "MapSpec",
    "Observation",
    "action_distances",
    "action_plan",
    "build_map_pool",
    "generate_episode",
    "generate_map",
    "geodesic_distance",
    "load_map",
    "parse_gen_spec",
    "ray_cast_scan",
    "shortest_action_count",
    "shortest_path",
    "step_low_level",
    "update_geometric_map",
]
