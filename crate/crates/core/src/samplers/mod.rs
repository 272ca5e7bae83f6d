//! Metropolis-Hastings and ensemble importance samplers, with optional
//! transport-map proposals.

mod ensemble;
mod kernel;
mod mh;
mod run;

pub use ensemble::{
    etais_step, mixture_log_weights, mixture_weights, tetais_step, StepOutput, WeightedEnsemble,
};
pub use kernel::ProposalKernel;
pub use mh::{mh_step, MhState};
pub(crate) use run::weighted_moments;
pub use run::{
    draw_initial, read_samples_csv, read_summary_csv, run_sampler, run_sampler_with,
    write_samples_csv, write_summary_csv, Algorithm, IterationSummary, PartialRun, RefitRecord,
    SampleLog, SamplerConfig,
};
