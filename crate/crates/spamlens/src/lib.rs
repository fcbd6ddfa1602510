//! File formats, the external tagger client, charts and the command-line
//! pipeline around `spamlens-core`.

pub mod charts;
pub mod cli;
pub mod error;
pub mod io;
pub mod nlu;
pub mod pipeline;
