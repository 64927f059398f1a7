pub mod birth;
pub mod error;
pub mod network;
pub mod harness;
pub mod ibrw;
pub mod operator;
pub mod parallel;
pub mod quad;
pub mod rule;
pub mod streams;

pub use error::{Error, Result};
pub use rule::AttachmentRule;
