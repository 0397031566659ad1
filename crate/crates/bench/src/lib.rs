//! Benchmarks for the simulator live in `benches/simulation.rs`; run them
//! with `cargo bench -p iabsim-bench`.
