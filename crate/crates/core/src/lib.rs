//! Localization densities for one-particle states of a free scalar field.
//!
//! The crate computes three competing answers to "where is the particle?"
//! for a state `psi(p)` of mass `m` in one dimension or radially symmetric
//! three dimensions:
//!
//! * the Newton-Wigner density `|psi_NW(x, t)|^2`,
//! * the energy density normalized by `<H>`, and
//! * the POVM density `<Psi| H^-1/2 T00(x, t) H^-1/2 |Psi>`,
//!
//! together with region probabilities, mixture rules and the numerical
//! studies in [`analysis`]. Natural units, `hbar = c = 1`.
//!
//! ```
//! use locdens::{density, state};
//!
//! let params = state::ModelParams::new(1.0, state::Dim::One)?;
//! let s = state::make_gaussian(params, 1.0, 0.25, state::GridSpec::default())?;
//! let total = density::total_integral(&s, density::Prescription::Povm, 2.0)?;
//! assert!((total - 1.0).abs() < 1e-8);
//! # Ok::<(), locdens::Error>(())
//! ```

pub mod analysis;
pub mod cli;
pub mod density;
mod error;
pub mod quadrature;
pub mod spatial;
pub mod state;
pub mod transform;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/densities.md")]
    mod densities {}
    #[doc = include_str!("../../../book/src/mixtures.md")]
    mod mixtures {}
    #[doc = include_str!("../../../book/src/tails.md")]
    mod tails {}
    #[doc = include_str!("../../../book/src/bound.md")]
    mod bound {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
