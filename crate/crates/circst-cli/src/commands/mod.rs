pub mod fit;
pub mod predict;
pub mod score;
pub mod simulate;
pub mod study;
pub mod summarize;
