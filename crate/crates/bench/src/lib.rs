//! Fixtures shared by the benchmarks.

use genbath::amplifier::{build_amplifier, Amplifier};
use genbath::AmplifierConfig;

/// The flagship amplifier truncated at `n_fock` levels.
pub fn amplifier(n_fock: usize) -> Amplifier {
    build_amplifier(&AmplifierConfig { n_fock, ..Default::default() }).expect("flagship config is valid")
}
