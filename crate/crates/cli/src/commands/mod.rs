pub mod dist;
pub mod eval;
pub mod features;
pub mod prep;
pub mod report;
pub mod stitch;
