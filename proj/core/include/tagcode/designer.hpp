#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tagcode/channel.hpp"
#include "tagcode/codes.hpp"
#include "tagcode/criteria.hpp"

namespace tagcode {

enum class StepRule {
  Armijo,       // backtracking projected gradient (average design default)
  Diminishing,  // c / sqrt(k) normalised (sub)gradient steps
};

struct DesignOptions {
  std::size_t max_iterations = 300;
  StepRule step_rule = StepRule::Armijo;
  double tolerance = 1e-8;  // relative objective decrease that counts as converged
  std::size_t design_grid_size = 500;
  PairFilter pair_filter{};
  double step_scale = 0.5;  // c in c / sqrt(k)
  std::size_t minimax_iterations = 3000;
  std::size_t minimax_polish_iterations = 1600;  // smoothed refinement after the subgradient phase
};

struct DesignResult {
  ProportionVector proportions;  // relaxed simplex point of the selected candidate
  Code code;                     // largest-remainder rounding of `proportions`
  double objective = 0.0;        // objective at `proportions`
  double rounded_objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;  // false: iteration budget ran out, best iterate returned
  std::string selected;    // "optimizer", "uniform", "orthogonal" or "repetition:<index>"
  std::vector<double> history;  // objective per iteration, non-increasing
};

// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::vector<double> v);

// Gradient of average_upper_bound with respect to pi.
std::vector<double> average_upper_bound_gradient(const ProportionVector& pi, std::size_t length,
                                                 const PairDistanceTable& pairs, double sigma);

/// Minimises U(pi) on the simplex, then picks the best of
/// {optimizer, uniform, orthogonal, every repetition} by the objective of
/// its rounded code.
DesignResult design_average(const PairDistanceTable& pairs, std::size_t length, int tag_count,
                            double sigma, const DesignOptions& opts = {});

/// Minimises V(pi) via the log form max_p [log(theta_p/4) - T pi^T g_p / (2 sigma^2)]
/// with projected subgradient steps, then applies the same candidate fallback.
DesignResult design_minimax(const PairDistanceTable& pairs, std::size_t length, int tag_count,
                            double sigma, const DesignOptions& opts = {});

// Best repetition code under U; ties go to the lowest codeword index.
Code design_repetition(const PairDistanceTable& pairs, std::size_t length, int tag_count,
                       double sigma);

/// Channel-estimate perturbation: every stored output of orientation q gets
/// an independent complex Gaussian draw at the design SNR (same variance
/// rule as NoiseModel), from substream (seed, q). +inf returns the input.
ResponseTable perturb_table(const ResponseTable& table, double design_snr_db, std::uint64_t seed);

// Sorted, seed-determined subset of grid indices of the requested size.
std::vector<std::size_t> design_subsample(std::size_t grid_size, std::size_t count,
                                          std::uint64_t seed);

}  // namespace tagcode
