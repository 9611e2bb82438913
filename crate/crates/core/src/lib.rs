//! Barnes-Wall lattice coding toolkit.
//!
//! * [`lattice`]: construction of BW_n, membership, generator matrices and
//!   closed-form constants.
//! * [`decoders`]: recursive bounded-distance and list decoders.
//! * [`oracle`]: brute-force closest-vector and sphere enumeration for
//!   n ≤ 16, used as ground truth.
//! * [`sim`]: seeded AWGN Monte-Carlo campaigns.
//! * [`constellation`]: Voronoi constellations over BW_n / 2^η BW_n.

pub mod constellation;
pub mod decoders;
pub mod error;
pub mod lattice;
pub mod oracle;
pub mod sim;

pub use error::{Error, Result};
