pub mod grid;
pub mod mixed;
pub mod prune;
pub mod quant;
pub mod split;
