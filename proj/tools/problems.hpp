#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riemopt/manifold.hpp"
#include "riemopt/problem.hpp"

namespace riemopt::cli {

/// A problem instance the command line can run or check.
struct BundledProblem {
  std::string name;
  Manifold manifold;
  Problem problem;
  Point x0;
  std::optional<double> oracle;  // known minimum, when there is one
};

struct ProblemInfo {
  std::string name;
  std::string summary;
};

const std::vector<ProblemInfo>& problem_catalog();
bool is_problem(const std::string& name);

/// Builds the named instance from `seed`. With `corrupt_gradient` the
/// Euclidean gradient is scaled by 1.5, which a derivative check must catch.
BundledProblem make_problem(const std::string& name, std::uint64_t seed,
                            bool corrupt_gradient = false);

}  // namespace riemopt::cli
