// Small hand-built feature matrices for engine and selection tests.
#pragma once

#include "smartdx/features.hpp"
#include "smartdx/rng.hpp"

namespace fixture {

/// `groups` groups of `width` columns over `n` rows alternating PD and HC.
/// Columns of `informative` are shifted by +-`shift` with the label; all other
/// columns are unit normal noise.
inline smartdx::FeatureMatrix one_informative(std::size_t n, int groups, int informative,
                                              double shift, std::uint64_t seed,
                                              std::size_t width = 4) {
  using namespace smartdx;
  FeatureMatrix m;
  for (int g = 1; g <= groups; ++g)
    for (std::size_t f = 0; f < width; ++f)
      m.columns.push_back({g, g, Side::left, Sensor::accelerometer, Axis::x, f});
  Rng rng(seed);
  for (std::size_t r = 0; r < n; ++r) {
    const bool pd = r % 2 == 0;
    m.participant_ids.push_back("P" + std::to_string(r));
    m.labels.push_back(pd ? DiagnosisLabel::PD : DiagnosisLabel::HC);
    m.handedness.push_back(Handedness::right);
    for (const auto& c : m.columns) {
      double v = rng.normal();
      if (c.group == informative) v += pd ? shift : -shift;
      m.values.push_back(v);
    }
  }
  return m;
}

}  // namespace fixture
