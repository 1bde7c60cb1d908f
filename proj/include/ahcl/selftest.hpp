#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ahcl::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  /// Adds a small bias to analytic gradients before comparison. Used to show
  /// the gradient check can fail.
  bool perturb_gradient = false;
  std::uint64_t seed = 20240601;
};

/// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||) of
/// the full encoder+decoder gradient on one random small instance, labels
/// frozen at the unperturbed point.
double network_gradient_error(std::uint64_t seed, bool perturb = false);

std::vector<CheckResult> run_all(const Options& options = {});

}  // namespace ahcl::selftest
