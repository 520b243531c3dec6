//! Minimum-distance estimation of the time-change marginal law.
//!
//! The tempered stable subordinator family is fitted to an empirical Laplace
//! curve by minimizing `∫ (L̂(u) − L(u; θ))² κ(u) du` with a Gaussian weight
//! `κ(u) = exp(−2u²/u_max²)`; standard errors come from the sandwich
//! `B⁻¹ Ξ B⁻¹ / T` with `B = ∫ ∇L ∇L' κ` and `Ξ = ∫∫ Σ(u,v) ∇L(u) ∇L(v)' κ(u) κ(v)`.

mod estimate;
mod kernel;
mod laplace;
mod simplex;

pub use estimate::{
    bread_matrix, default_starts, fit_standard_errors, fit_theta, fit_theta_multistart, FitOptions,
    FitResult, Quadrature,
};
pub use kernel::{solve_u_max, solve_u_max_model, KernelSpec, UMaxSource, U_MAX_SLOPE};
pub use laplace::{ts_laplace, ts_laplace_derivative, TemperedStableParams};
pub use simplex::{nelder_mead, SimplexOptions, SimplexOutcome};
