"""Joint time-frequency spectrum sharing for satellite-ground networks.

A link-level simulator for a hybrid scenario where low-altitude
aircraft transmit to a satellite in carriers shared with a terrestrial
downlink.  The planner clusters the aircraft by interference features,
assigns clusters to carriers, controls powers against a protection
threshold, and schedules users under coarse time synchronization; Monte
Carlo evaluation compares the pipeline against idealized and naive
benchmarks.
"""

from .channel import (FadingModel, FlatPattern, ParabolicEnvelopePattern,
                      PlannerCsi, antenna_gain, build_planner_csi,
                      expected_rate, laa_gain_rows, path_loss,
                      rayleigh_rate_closed_form, sample_fading,
                      tbs_gain_table)
from .config import (ConfigError, Diagnostic, ScenarioConfig, channel_digest,
                     config_digest, default_config_path, load_config,
                     validate_mapping)
from .clustering import (LinkClusterSet, balanced_kmeans, cluster_dispersion,
                         hierarchical_cluster)
from .features import (build_feature_matrix, build_feature_vector,
                       degraded_rate, feature_distance,
                       interference_free_rates, link_rate_matrix,
                       planner_draws)
from .geometry import (EARTH_RADIUS_M, SPEED_OF_LIGHT, Topology,
                       elevation_angle, generate_topology,
                       geodetic_to_cartesian, off_axis_angle,
                       propagation_delay, region_bounds, slant_range,
                       topology_digest)
from .power import (PowerAllocation, candidate_co_channel_tus,
                    control_all_laa_powers, laa_power_control, set_tbs_powers,
                    tbs_power_objective, validate_powers, verify_interference)
from .radiomap import (RadioMap, RadioMapError, build_radio_map,
                       csi_from_radiomap, load_radio_map, nearest_node,
                       query, save_radio_map, snap_topology, verify_radio_map)
from .scheduling import (CarrierAssignment, SchedulePlan, TimeSliceLayout,
                         allowed_carriers, assign_satellite_clusters,
                         assign_tbs_tu_links, build_schedule_plan,
                         build_time_slices, hungarian, overlap_matrix,
                         pair_satellite_windows, plan_digest,
                         tu_carrier_quotas, validate_plan)
from .seeding import derive_rng, derive_seed
from .simulator import (SCHEMES, SchemeResult, SimulationReport, SweepResult,
                        TopologyResult, realized_sum_rate, replicate,
                        report_json, run_finesync, run_nosharing,
                        run_proposed, run_randscheme, sweep)

__version__ = "0.1.0"
