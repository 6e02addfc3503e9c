//! Shared inputs for the benchmarks.

use nhep_core::{scenarios, EnergyGrid, HamiltonianFamily, SearchBox, SweepConfig};

/// Three coupled levels, the largest preset.
pub fn three_levels() -> HamiltonianFamily {
    scenarios::three_level_weak()
}

/// 200 parameter rows for contour grids.
pub fn contour_rows() -> SweepConfig {
    SweepConfig::over(0.0, 1.0, 200)
}

pub fn contour_energies() -> EnergyGrid {
    EnergyGrid::Auto { steps: 2001 }
}

/// Critical region of the three-level preset, both signs of the coupling.
pub fn critical_region() -> SearchBox {
    SearchBox::ParameterAndScale {
        a: (0.55, 0.80),
        s: (-1.5, 1.5),
    }
}
