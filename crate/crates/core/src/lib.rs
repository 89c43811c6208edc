pub mod channel_bounds;
pub mod entropy;
pub mod error;
pub mod hyptest;
pub mod metaconverse;
pub mod oracle_sim;
pub mod qcore;
pub mod sdp;

pub use error::{Error, Result};
