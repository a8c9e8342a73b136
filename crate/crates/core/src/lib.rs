//! Executable metric geometry for order isomorphisms of Lipschitz-type
//! function spaces on finite pointed metric spaces.

pub mod classify;
pub mod derived;
pub mod io;
pub mod lipschitz;
pub mod lp;
pub mod metric;
pub mod order_iso;
pub mod random;
pub mod suite;
pub mod witness;
