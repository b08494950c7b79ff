//! Post-quantum multivariate identity-based signatures with fog-side
//! aggregation.
//!
//! The arithmetic is generic over a [`PrimeField`]; the concrete aliases
//! below fix the default field `F_31` used by every shipped profile.

pub mod aggsig;
pub mod codec;
pub mod error;
pub mod gf;
pub mod hash;
pub mod ibs;
pub mod mqmap;
pub mod params;
pub mod verdict;

pub use error::{Error, Result};
pub use gf::{FieldMatrix, FieldVector, Fp, PrimeField};
pub use params::{rounds_for_security, ParamSet};
pub use verdict::{RejectReason, Verdict};

/// The default field `F_31`.
pub type Gf31 = Fp<31>;

pub type QuadraticMap31 = mqmap::QuadraticMap<Gf31>;
pub type MasterPublicKey31 = ibs::MasterPublicKey<Gf31>;
pub type MasterSecretKey31 = ibs::MasterSecretKey<Gf31>;
pub type UserSecretKey31 = ibs::UserSecretKey<Gf31>;
pub type IbsSignature31 = ibs::IbsSignature<Gf31>;
pub type SignedMessage31 = aggsig::SignedMessage<Gf31>;
pub type AggregateSignature31 = aggsig::AggregateSignature<Gf31>;
