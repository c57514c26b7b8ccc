//! Gaussian-process regression on the unit cube.
//!
//! Inputs live in `[0,1]^d`, outputs are standardized before fitting and
//! predictions are mapped back to raw units. The kernel is Matérn-5/2 with ARD
//! lengthscales; hyperparameters are fitted by multi-start maximum likelihood.

mod dataset;
mod kernel;
mod model;
mod optim;

pub use dataset::{Dataset, DUPLICATE_JITTER, DUPLICATE_TOL};
pub use kernel::{kernel_eval, KernelParams};
pub use model::{
    fit, fit_detailed, log_marginal_likelihood, log_marginal_likelihood_grad, FitOutcome, GPModel,
    DEFAULT_RESTARTS,
};
