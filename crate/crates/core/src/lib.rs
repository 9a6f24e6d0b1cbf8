//! Exact verification of congruence-subgroup indices, coset transversals,
//! level-structure bijections and divisor identities for `GSp_2g` and
//! `GU(2,2)` over `Z/p^K` and `O_F/p^K`.

pub mod congruence;
pub mod divisor;
pub mod error;
pub mod groups;
pub mod gsp6;
pub mod lift;
pub mod matrix;
pub mod order;
pub mod report;
pub mod unitary;
pub mod appendix;
pub mod enumeration;
pub mod ring;

pub use congruence::{CongruencePattern, DiagTarget, SubgroupSpec};
pub use error::{Error, Result};
pub use groups::{Cocharacter, GroupElem, GroupKind};
pub use matrix::Mat;
pub use ring::{Elem, Ring, RingKind, RingSpec};
