//! Talking-point extraction, prominent-talking-point clustering, partisan
//! perspectives, evaluation harnesses and event-discourse snapshots.

pub mod corpus;
pub mod gateway;
pub mod vector;
pub mod jsonfix;
pub mod prompts;
pub mod talking_points;
pub mod ptp;
pub mod perspectives;
pub mod evaluation;
pub mod snapshot;
