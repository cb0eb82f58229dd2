#pragma once

#include <cstdint>
#include <string>

#include "slicedrift/dataset.hpp"

// Deterministic synthetic datasets for tests and the acceptance suite.
namespace synthetic {

/// Tabular testbed with planted weak regions. Eight features: three
/// correlated numeric pairs drive two multi-feature weak regions, one
/// categorical value forms a third, and the rest is noise. Overall MCR lands
/// near 0.15. Misclassification probability is elevated inside the regions,
/// so weak slices on a baseline half concentrate there.
slicedrift::Dataset planted(std::size_t n_rows, std::uint64_t seed);

/// Single numeric feature x ~ U[0,1] with theta = (x > 0.9).
slicedrift::Dataset top_decile_errors(std::size_t n_rows, std::uint64_t seed);

/// Scratch directory for test files (created on first use).
std::string temp_dir();
std::string temp_path(const std::string& name);

}  // namespace synthetic
