//! Criterion benchmarks (`benches/`) and the acceptance checks (`tests/acceptance.rs`) for `deconv-core`.
