//! Stochastic reaction networks: Gillespie simulation, exact path likelihoods
//! from sufficient statistics, multiscale effective dynamics and the posterior
//! targets built from them.

mod grn;
mod multiscale;
mod network;
mod posterior;
mod ssa;
mod stats;

pub use grn::{
    grn_loglikelihood, observe_grn, FastSubsystem, GrnSlowData, QeaGeneSwitch, TotalLevel,
    GRN_INITIAL_STATE,
};
pub use multiscale::{
    cma_effective_propensity, project_to_slow, qea_effective_propensity, reduced_loglikelihood,
    EffectiveRate, EffectiveVariant, SlowStats,
};
pub use network::{
    mass_action_propensity, NetworkRecord, Reaction, ReactionNetwork, ReactionRecord, GRN_RATES,
    TWO_SPECIES_RATES,
};
pub use posterior::{
    build_posterior, full_model_slow_log_evidence, Experiment, Posterior, SrnData, SyntheticData,
};
pub use ssa::{ssa_simulate, PathRecord};
pub use stats::{
    channel_log_evidence, conjugate_posterior, full_loglikelihood, sufficient_stats,
    SufficientStats,
};
