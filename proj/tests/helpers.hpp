#pragma once

#include <cmath>

#include <nckrm/kernels.hpp>
#include <nckrm/rng.hpp>

namespace nckrm_test {

// Random hyper-parameters in a moderate range: decay rates bounded away from
// 1 so truncated-sum oracles converge, scales of order one so absolute
// tolerances are meaningful, and dynamics bounded away from 0 so the
// generator representation applies.
inline nckrm::KernelSpec sample_test_spec(nckrm::KernelFamily f,
                                          nckrm::Rng& rng) {
  auto kinds = nckrm::kernel_coord_kinds(f);
  auto names = nckrm::kernel_eta_names(f);
  std::vector<double> eta;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    switch (kinds[i]) {
      case nckrm::CoordKind::kDecay01:
        eta.push_back(rng.uniform(0.05, 0.92));
        break;
      case nckrm::CoordKind::kSignedUnit: {
        double mag = names[i][0] == 'r' ? rng.uniform(0.0, 0.95)
                                        : rng.uniform(0.05, 0.9);
        eta.push_back(rng.uniform(0.0, 1.0) < 0.5 ? -mag : mag);
        break;
      }
      case nckrm::CoordKind::kPositive:
        eta.push_back(rng.uniform(0.05, 2.0));
        break;
      case nckrm::CoordKind::kSignedScale:
        eta.push_back(rng.uniform(-2.0, 2.0));
        break;
    }
  }
  return nckrm::KernelSpec(f, std::move(eta));
}

}  // namespace nckrm_test
