//! Max-min fair bandwidth allocation for networks with multipoint-to-point
//! virtual connections, and a discrete-event simulation of the ABR
//! explicit-rate feedback loop with merge-point RM-cell handling.

pub mod fairness;
pub mod rate;
pub mod scenario;
pub mod sim;
pub mod topology;

pub use fairness::{
    compare_policies, verify_maxmin, water_fill, AllocationVector, BottleneckCertificate, FairnessPolicy,
    PolicyComparison,
};
pub use rate::Rate;
pub use scenario::{builtin_scenario, parse_scenario, Scenario};
pub use sim::{run_simulation, MergeAlgorithm, MergeMode, SimConfig, SimulationResult};
pub use topology::{validate_topology, Network, SourceId, TopologyError, VcId};
