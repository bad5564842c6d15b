//! Statistical forensics for polling-station-level election results.
//!
//! The toolkit ingests station-level counts (electorate, valid votes, votes
//! for one option), computes vote-turnout fingerprints, fits a parametric
//! ballot-stuffing model, measures the displacement between small and large
//! stations in standardized coordinates, and runs numerical-anomaly tests
//! (second-digit Benford, within-village vote-assignment randomness).
//! A synthetic-election generator with injectable fraud mechanisms serves
//! as the verification baseline for every test.

pub mod anomaly;
pub mod error;
pub mod fingerprint;
pub mod ingest;
pub mod optim;
pub mod pipeline;
pub mod plot;
pub mod report;
pub mod rigging;
pub mod rng;
pub mod stuffing;
pub mod synth;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
