pub mod bench;
pub mod io;
pub mod pipeline;
pub mod report;
