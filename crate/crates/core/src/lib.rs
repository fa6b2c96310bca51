//! Capacity scaling of multi-packet transmission and reception in random
//! wireless networks.
//!
//! Nodes are dropped uniformly in the unit square and talk under a protocol
//! interference model that may let one transmitter reach several receivers
//! (MPT), one receiver decode several transmitters (MPR), or both.
//! The crate builds the cell/TDMA schemes, routing trees, a slot-level
//! multicast simulator, cut-set bounds and the log-log regression used to
//! read off scaling exponents.

pub mod capacity;
pub mod cells;
pub mod cut;
pub mod error;
pub mod experiment;
pub mod geom;
pub mod protocol;
pub mod scaling;
pub mod trees;

pub use capacity::{
    gain_vs_ptp, simulate, simulate_on, theoretical_capacity, AggregateRow, SimConfig,
    ThroughputReport,
};
pub use cells::{
    build_cell_graph, build_grid, build_schedule, compute_l, count_simultaneous_links,
    disk_bipartite_assignment, simultaneous_links, CellGraph, CellGrid, CellId, SlotLinks,
    TdmaSchedule,
};
pub use cut::{
    count_property_p, cut_capacity, cut_transmission_set, nc_upper_bound_rate, reduce_to_unicast,
    Cut, CutAxis, UnicastReduction,
};
pub use error::{Error, Result};
pub use experiment::{run, Check, ExperimentKind, ExperimentOutcome, ExperimentSpec, Fit};
pub use geom::{
    connectivity_range, distance, generate_network, nodes_in_disk, union_of_disks_area, CommRange,
    NetworkInstance, NodeId, Point,
};
pub use protocol::{is_feasible, max_feasible_brute, Admission, Link, Mode, TransmissionSet};
pub use scaling::{
    fit_loglog, fit_points, fit_samples, geometric_sweep, mean_stderr, ScalingResult, SweepPoint,
};
pub use trees::{
    emst, emst_scaling_study, emst_trial_length, mamt_area, memtc_count, random_sessions,
    route_session, EuclideanTree, MulticastSession, Router, RoutingTree, VertexKind,
};
