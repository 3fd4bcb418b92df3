#pragma once

#include <vector>

#include "flowguard/matrix.hpp"
#include "flowguard/rng.hpp"
#include "flowguard/synthgen.hpp"

namespace fgbench {

inline std::vector<flowguard::PacketRecord> capture(flowguard::Scenario s, double duration_s, std::size_t rtus) {
  flowguard::ScenarioConfig cfg;
  cfg.scenario = s;
  cfg.seed = 42;
  cfg.duration_s = duration_s;
  cfg.n_rtus = rtus;
  std::vector<flowguard::PacketRecord> out;
  for (const auto& p : flowguard::simulate(cfg).packets) out.push_back(p.record);
  return out;
}

/// Points scattered around `centres` random centres in [-10, 10]^dims.
inline flowguard::Matrix points(std::size_t n, std::size_t dims, std::size_t centres, std::uint64_t seed = 1) {
  flowguard::SplitMix64 rng(seed);
  std::vector<std::vector<double>> c(centres, std::vector<double>(dims));
  for (auto& v : c) {
    for (auto& x : v) x = rng.uniform() * 20 - 10;
  }
  flowguard::Matrix m(n, dims);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ctr = c[rng.below(centres)];
    for (std::size_t d = 0; d < dims; ++d) m(i, d) = ctr[d] + (rng.uniform() - 0.5) * 2.0;
  }
  return m;
}

}  // namespace fgbench
