//! A token-map image codec in which one spatial prior serves two jobs: it
//! supplies the probabilities for entropy coding the tokens that are kept,
//! and its argmax regenerates the tokens that were deliberately dropped.
//!
//! Pipeline, encoder side:
//!
//! 1. [`vq::tokenize`] turns an image into a [`TokenMap`] with a patch
//!    k-means [`Codebook`].
//! 2. [`mask`] builds the keep-mask from the checkerboard template and a
//!    Sobel-derived preserved region.
//! 3. [`codec::encode_image`] walks the multi-stage [`coding_order`], asks the
//!    [`ContextModel`] for a distribution at every kept position and range
//!    codes the true token.
//!
//! [`codec::decode_image`] walks the same order, decoding kept tokens and
//! filling dropped ones with the prior's most probable symbol.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod categorical;
pub mod cli;
pub mod codec;
pub mod eval;
pub mod mask;
pub mod pnm;
pub mod prior;
pub mod range_coder;
pub mod synth;
pub mod token_core;
pub mod vq;

pub use categorical::QuantizedCategorical;
pub use codec::{decode_image, encode_image, stats, CodecError, EncodeOptions, Mode, RatePoint};
pub use mask::BinaryGrid;
pub use prior::{train_prior, ContextModel, Prior, Variant};
pub use token_core::{coding_order, group_of, Cell, Position, TokenMap, WindowRect};
pub use vq::{Codebook, ImageBuffer};

use std::hash::Hasher;

/// 64-bit FNV-1a, used for codebook, model and container identities.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    h.finish()
}

#[cfg(test)]
mod tests {
    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(super::fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(super::fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(super::fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }
}
