//! Independent brute-force checks of the field-theory results.

pub mod lindblad;
pub mod lyapunov;

pub use lindblad::{lindblad_steady_state, FockTruncation, LindbladSteadyState};
pub use lyapunov::{lyapunov_density, lyapunov_solution, DiscretizedBath, LyapunovSolution};
