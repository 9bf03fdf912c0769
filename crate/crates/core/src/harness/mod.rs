//! Experiment orchestration: scenario configuration, the motion path, the
//! SER heatmap, the per-waypoint secrecy comparison, self-checks and
//! deterministic CSV/manifest artifacts.

pub mod checks;
pub mod config;
pub mod csvio;
pub mod heatmap;
pub mod manifest;
pub mod motion;
pub mod path;

pub use checks::{GRAD_CHECK_TOL, GradCheckReport, ORACLE_L1_THRESHOLD, OracleReport, run_grad_check, run_oracle_check};
pub use config::ScenarioConfig;
pub use heatmap::run_heatmap;
pub use manifest::run_manifest;
pub use motion::{AdaptMethod, run_motion_eval};
pub use path::{MotionPath, gen_motion_path};
