pub mod bench;
pub mod jl_check;
pub mod subgen_eval;
pub mod witness;
