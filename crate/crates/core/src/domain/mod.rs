//! Value types, configuration and validation shared by every module.

pub mod amount;
pub mod config;
pub mod record;

pub use amount::{
    format_float, format_rational, parse_decimal, rational_from_f64, snap_check, snap_check_amount, Amount, Grid,
    GridError,
};
pub use config::{
    validate_config, AgentKind, BidderId, ConfigErrors, ConfigIssue, EnvKind, Environment, ExperimentConfig, Family,
    InterventionKind, Mechanism, MechanismSpec, OffGridPolicy, ValidConfig, ValueEnvironment,
};
pub use record::{ActionLog, Audit, ClockDecision, EbayDecision, EbayMove, MechanismLog, Outcome, RoundRecord};
