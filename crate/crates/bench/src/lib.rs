//! Criterion benchmarks for the element, assembly and multigrid kernels live
//! under `benches/`; run them with `cargo bench -p dpgmg-bench`.
