//! Numerical toolkit for additive-noise channels `Y = X sqrt(gamma) + U`:
//! entropies and mutual information over mixed discrete/continuous laws,
//! MMSE curves and the derivative identity linking them, high/low-SNR limit
//! sweeps with convergence-rate fits, and entropy-power inequality checks.

// negated float comparisons are deliberate: `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod distributions;
pub mod epi;
pub mod error;
pub mod geom;
pub mod limits;
pub mod linalg;
pub mod mmse;
pub mod quadrature;

pub use channel::{ChannelModel, EntropyBreakdown};
pub use distributions::{Atom, DensityFamily, MixedDistribution};
pub use error::{Error, Result};
pub use geom::BoxDomain;
pub use limits::LimitVerdict;
pub use linalg::SpdMatrix;
pub use mmse::MmseCurve;
pub use quadrature::{
    integrate, integrate_mc, log_grid, truncate_support, QuadratureConfig, QuadratureResult,
    SingularityPolicy,
};

pub use epi::EpiVerdict;
