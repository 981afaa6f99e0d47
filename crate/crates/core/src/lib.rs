//! Permutation-coded steganography over generative-model distributions.
//!
//! The encoder samples each token bit from a bivariate group split, choosing
//! which group sits on the left of the unit interval by the current secret
//! bit. The decoder needs only the key: it rescores every token bit against
//! the shared keystream and runs a sequential hypothesis test.

pub mod cli;
pub mod codec;
pub mod keystream;
pub mod lab;
pub mod provider;
pub mod sampler;
pub mod vocab;
