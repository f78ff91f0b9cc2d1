//! Criterion benchmarks for the multinorm library; run with `cargo bench -p multinorm-bench`.
