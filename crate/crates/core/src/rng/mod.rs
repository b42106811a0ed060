//! Random and quasi-random number generation.
//!
//! Everything the simulator draws goes through this module: keyed
//! pseudo-random streams, Gray-code Sobol' points with digital-shift
//! randomization, and the inverse normal CDF that turns uniforms into
//! standard-normal deviates.

mod normal;
mod sobol;
mod stream;

pub use normal::{clamp_probability, inverse_normal_cdf, standard_normal, PROBABILITY_CLIP};
pub use sobol::{nested_uniform_scramble, DirectionTable, SobolGenerator, EMBEDDED_DIMENSIONS, SOBOL_BITS};
pub use stream::{
    pseudo_normal_block, shuffle, stream_id, PseudoStream, Purpose, UniformSource,
};
