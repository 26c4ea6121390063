//! Social interaction network analysis: contact sessionization, community
//! measures, description-based community mining, exceptional model mining,
//! link prediction, expert ranking and socially boosted localization.

pub mod attributes;
pub mod comodo;
pub mod compensated;
pub mod contact;
pub mod error;
pub mod expertrank;
pub mod gpgrowth;
pub mod io;
pub mod linkpred;
pub mod localizer;
pub mod netstats;
pub mod synth;

pub use attributes::{AttributeTable, Selector};
pub use contact::{ActorPair, ContactSession, InteractionGraph, ProximityEvent, SessionRules, WeightingMode};
pub use error::{Error, Result};
