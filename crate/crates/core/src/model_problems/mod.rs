//! Analytic spectra used as oracles: the boundary-damped string and the
//! unit disk with constant impedance.
//!
//! Both come from `λ²βp + div(α^{-1}∇p) = 0` with the impedance condition
//! `iλζ p = ∂_n p`, time dependence `e^{−iλt}`, so accretive `ζ` puts the
//! spectrum in `Im λ ≤ 0`.
//!
//! * String on `[0, 1]`, `p(0) = 0`: `p = sin λx` gives
//!   `g(λ) = iζ sin λ − cos λ`, i.e. `e^{2iλ} = (ζ + 1)/(ζ − 1)`.
//! * Disk: `p = J_m(λr) e^{imθ}` gives `h(λ) = iζ J_m(λ) − J_m'(λ)`.

mod bessel;
mod disk;
mod string;

pub use bessel::{bessel_j, bessel_j_sequence};
pub use disk::{disk_mode_roots, disk_spectrum, DiskSpec, ModeRoots, SearchBox, MAX_ANGULAR_MODES};
pub use string::{string_closed_form, string_cross_check, string_newton_roots, string_spectrum, StringSpec, CRITICAL_DAMPING};
