pub mod coordforms;
pub mod detsys;
pub mod exterior;
pub mod jetalg;
pub mod kernel;
pub mod linalg;
pub mod multiindex;
pub mod parse;
pub mod structure;
