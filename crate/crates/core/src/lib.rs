//! Rule-based student advisement.
//!
//! * [`dsl`] parses and validates the CLIPS-style rule language.
//! * [`engine`] runs validated programs by forward chaining.
//! * [`kb`] ships the faculty knowledge base, compiles faculty criteria into
//!   rules and evaluates a student into an advisement report.
//! * [`assessment`] administers the timed ability and intelligence tests.

pub mod assessment;
pub mod dsl;
pub mod engine;
pub mod kb;
pub mod number;

pub use number::Number;
