//! Posterior computation: the constrained dose-response sampler, conjugate Beta
//! updates, probability-of-best, the non-inferiority statistic and HPD intervals.

pub mod conjugate;
pub mod dose_response;
pub mod hpd;
pub mod mcmc;

pub use conjugate::{beta_posterior, noninferiority_stat, prob_best, prob_best_beta, sample_beta};
pub use dose_response::{dose_response_probs, multinomial_loglik, BetaVector, SimplexViolation};
pub use hpd::{hpd_interval, hpd_interval_in_place, Interval};
pub use mcmc::{sample_dose_response, DoseResponseModel, PosteriorDraws, SamplerMeta};
