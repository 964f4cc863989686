#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rbreg/model.hpp"

namespace rbreg::gibbs {

// Joint-distribution ("getting it right") check of the sampler kernels.
//
// Marginal-conditional simulator: parameters drawn straight from the prior.
// Successive-conditional simulator: alternate one Gibbs sweep given Y with a
// fresh Y drawn from the likelihood given (beta, sigma^2). Both target the
// prior marginal of the parameters, so test-function means must agree.
struct TestFunction {
  std::string name;
  std::function<double(const GibbsState&)> eval;
};

// beta_1, beta_1^2, theta^2, delta_1^2, phi/p, N_1.
std::vector<TestFunction> default_test_functions();

struct GewekeConfig {
  Eigen::Index n = 20;
  Eigen::Index p = 5;
  long cycles = 100000;
  // Shapes above 2 keep every default test function square-integrable.
  PriorHyperparams hyper{6.0, 5.0, 6.0, 0.5, 2.0, 3.0, 1.0};
  ThetaShapeRule theta_shape = ThetaShapeRule::joint;
  std::uint64_t seed = 20240917;
  // Batch count for the successive-conditional variance; 0 means floor(sqrt(cycles)).
  long batches = 0;
};

struct GewekeResult {
  std::vector<std::string> names;
  std::vector<double> z_scores;
  std::vector<double> marginal_means;
  std::vector<double> successive_means;
  // Successive-conditional cycles completed; fewer than requested when the
  // chain broke down (a sampler error), in which case the z-scores use the
  // cycles before the failure.
  long completed_cycles = 0;
  bool diverged = false;

  double max_abs_z() const;
};

GewekeResult geweke_joint_test(const GewekeConfig& config,
                               const std::vector<TestFunction>& functions = default_test_functions());

}  // namespace rbreg::gibbs
