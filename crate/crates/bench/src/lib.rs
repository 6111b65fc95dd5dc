//! Shared fixtures for the benchmark targets.

use frakt_core::FractalSystem;

pub fn quarter_half() -> FractalSystem {
    FractalSystem::fibonacci_cantor()
}

pub fn cantor() -> FractalSystem {
    FractalSystem::middle_third_cantor()
}
