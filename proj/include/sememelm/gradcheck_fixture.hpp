#pragma once

#include <cstddef>
#include <cstdint>

namespace sememelm {

inline constexpr double kGradCheckThreshold = 1e-4;
inline constexpr double kGradCheckEps = 1e-5;

struct GradCheckReport {
  double max_rel_err = 0.0;
  size_t parameter_count = 0;
};

// Builds a randomized end-to-end fixture (small sememe graph, a handful of
// words, two relations with positives and negatives), evaluates the full
// three-loss objective through the graph and encoder paths, and compares
// every parameter gradient against central finite differences.
GradCheckReport run_gradcheck_fixture(uint64_t seed, int nodes, int dim);

}  // namespace sememelm
