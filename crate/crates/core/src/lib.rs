pub mod abstraction;
pub mod automata;
pub mod bernstein;
pub mod cegar;
pub mod games;
pub mod ltl;
pub mod monitor;
pub mod poly;
pub mod speclang;
pub mod testgen;
