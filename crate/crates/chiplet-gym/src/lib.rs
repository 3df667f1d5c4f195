//! Analytical Power/Performance/Area/Cost (PPAC) modeling and design-space
//! search for chiplet-based AI accelerators.
//!
//! The library models a package that integrates AI accelerator chiplets and
//! HBM chiplets through 2.5D (CoWoS, EMIB) and 3D (SoIC, FOVEROS)
//! interconnects. A design point fixes 14 parameters: packaging architecture,
//! chiplet count, HBM placement, and the interconnect type / data rate / link
//! count / trace length of each link class. [`ppac`] evaluates a design point
//! analytically (throughput, energy, yield-adjusted die cost, packaging cost)
//! and folds the result into a scalar reward. Three optimizers search the
//! space: modified simulated annealing ([`sa`]), a from-scratch PPO agent
//! ([`ppo`]) over the episodic environment in [`env`], and a best-of hybrid
//! loop ([`hybrid`]).
//!
//! All evaluation is pure and deterministic; optimizers are deterministic per
//! seed, so multi-seed farms can run concurrently and reproduce bit-identical
//! traces.

pub mod calib;
pub mod design_space;
pub mod env;
pub mod hybrid;
pub mod optimizer;
pub mod ppac;
pub mod ppo;
pub mod sa;
pub mod workloads;

pub use calib::Calibration;
pub use design_space::{DesignPoint, DesignSpace, FeasibilityReport, MeshLayout, PackageConstraints};
pub use env::{ChipletGymEnv, EnvConfig, Observation};
pub use optimizer::{OptKind, OptimizerRun};
pub use ppac::{evaluate, PpacResult};
