//! Criterion benchmarks for `tvflow`; see the `benches` directory.
