//! Benchmark-only crate. The measurements live in `benches/workbench.rs`;
//! there is no library surface.
