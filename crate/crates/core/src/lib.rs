//! Interpreter and analyzer for While^dt, a While language extended with an
//! infinitesimal time step `dt` and an infinite natural `infinity`.
//!
//! Programs are run stagewise: stage `n` reads `dt` as `1/(n+1)`. The
//! sequence of results across stages is then read as a hyperreal, and the
//! resources spent per stage decide whether the program is a good or a bad
//! supertask.
//!
//! ```
//! use whdt::cli::{run_source, RunConfig};
//!
//! let src = "input; output lamp;
//!     time := 0; lamp := 0;
//!     while time < 1 do { time := time + dt; lamp := 1 - lamp }";
//! let report = run_source("thomson", src, &RunConfig::default()).unwrap();
//! assert_eq!(report.outputs[0].summary, "periodic(2)");
//! assert_eq!(report.supertask.unwrap().metered.class, "bad");
//! ```

pub mod cli;
pub mod exactnum;
pub mod hyperreal;
pub mod oracles;
pub mod resources;
pub mod semantics;
pub mod syntax;
