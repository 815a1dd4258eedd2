//! Decay-exponent calculus, catalog curves, 1+1 kernels, a characteristic
//! simulator and a Gronwall blow-up oracle for semilinear wave systems in
//! spherical symmetry.
//!
//! The exponent modules are generic over [`scalar::Exponent`] and the
//! numerical modules over [`scalar::Real`]; the aliases below fix the
//! usual choices (exact rationals and `f64`).

pub mod blowup_oracle;
pub mod catalog;
pub mod decay_rules;
pub mod exponent_algebra;
pub mod kernels1d;
pub mod scalar;
pub mod simulator;

pub use num_bigint::BigInt;
pub use num_rational::BigRational as Rational;

pub type MinMaxSystemQ = exponent_algebra::MinMaxSystem<Rational>;
pub type MaxSystemQ = exponent_algebra::MaxSystem<Rational>;
pub type AffineTermQ = exponent_algebra::AffineTerm<Rational>;
pub type WaveSystemQ = decay_rules::WaveSystem<Rational>;
pub type NonlinearTermQ = decay_rules::NonlinearTerm<Rational>;
pub type ClassificationQ = decay_rules::Classification<Rational>;
pub type ForcingF64 = kernels1d::Forcing<f64>;
pub type Grid64 = simulator::Grid<f64>;
pub type SimSystem64 = simulator::SimSystem<f64>;
pub type GronwallSystem64 = blowup_oracle::GronwallSystem<f64>;
