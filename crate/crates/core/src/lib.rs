//! Carbon-aware design space exploration for 2D and 3D memory-on-logic DNN
//! accelerators.
//!
//! The crate models, for a systolic-array accelerator described by a small
//! chromosome (PE array dimensions plus local and global buffer sizes):
//!
//! * silicon area of bfloat16 MAC units, register files, SRAM dies and the
//!   package ([`area`]),
//! * embodied manufacturing carbon, including yield-adjusted per-area
//!   footprint, wasted wafer silicon, die bonding and packaging
//!   ([`carbon`], [`techlib`]),
//! * inference delay under delay-optimized loop tiling with distinct 2D
//!   NoC and 3D vertical-bandwidth regimes ([`perf`]),
//! * the accuracy cost of swapping the exact mantissa multiplier for an
//!   approximate one ([`approxmul`], [`accproxy`]), and
//! * a seeded genetic algorithm minimizing the carbon-delay product under
//!   throughput and accuracy constraints ([`dse`]).

pub mod accproxy;
pub mod approxmul;
pub mod area;
pub mod assets;
pub mod carbon;
pub mod dse;
pub mod error;
pub mod experiments;
pub mod perf;
pub mod techlib;

pub use error::{Error, Result};
