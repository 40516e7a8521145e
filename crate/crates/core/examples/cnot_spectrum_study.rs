//! Per-mode power of GECKO-smoothed and Gaussian-filtered CNOT pulses on the
//! two-channel model, summarized over a few seeds.

use gecko::experiment::{study_seed, study_summary, Settings};

fn main() {
    let settings = Settings {
        model: Some("tfim2".into()),
        target: Some("CNOT".into()),
        eps: Some(1e-4),
        ..Default::default()
    };
    let (l0, rounds) = (10, 3);
    let runs: Vec<_> = (0..3).filter_map(|seed| study_seed(&settings, seed, l0, rounds).ok()).collect();
    println!("{} seeds, L = {}", runs.len(), l0 << rounds);
    let summary = study_summary(&runs, l0 << rounds);
    // the lowest modes of each method and channel
    for line in summary.lines() {
        let mode = line.split(',').nth(2).and_then(|m| m.parse::<usize>().ok());
        if mode.is_none_or(|m| m <= 3) {
            println!("{line}");
        }
    }
}
