//! Shared inputs for the criterion benchmarks under `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stancegraph::synthgen::{generate, SizePreset, SynthConfig};
use stancegraph::HeteroGraph;

/// Synthetic graph of the given size preset with seed 0.
pub fn synth_graph(preset: SizePreset) -> HeteroGraph {
    generate(&SynthConfig::preset(preset)).expect("preset config is valid").0
}

/// Scores on a coarse grid, so many tie, with roughly balanced labels.
pub fn scores_and_labels(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    (0..n).map(|_| (f64::from(rng.gen_range(0..1_000u32)) / 1_000.0, f64::from(u8::from(rng.gen_bool(0.5))))).unzip()
}
