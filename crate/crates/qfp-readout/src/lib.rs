pub mod anneal;
pub mod bases;
pub mod hilbert;
pub mod jcm;
pub mod measurement;
pub mod models;
pub mod special;
pub mod sweep;
