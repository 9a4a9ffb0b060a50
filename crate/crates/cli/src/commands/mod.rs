pub mod bench;
pub mod eval_cmd;
pub mod gen;
pub mod saliency_cmd;
pub mod segment;
