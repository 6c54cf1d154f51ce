#include "tagcode/designer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "tagcode/error.hpp"
#include "tagcode/estimator.hpp"
#include "tagcode/rng.hpp"

namespace tagcode {
namespace {

void check_inputs(const PairDistanceTable& pairs, std::size_t length, int tag_count,
                  double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidArgument("noise standard deviation must be positive");
  if (length == 0) throw InvalidArgument("code length must be positive");
  if (pairs.codewords() != codeword_count(tag_count))
    throw InvalidArgument("pair table does not cover all 2^N codewords");
  if (pairs.size() == 0) throw InvalidArgument("pair table is empty");
}

// Clears rounding residue so the weights satisfy the simplex invariants exactly.
ProportionVector to_proportions(std::vector<double> w) {
  for (auto& x : w) x = std::max(0.0, x);
  double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= sum;
  sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-13) {
    auto it = std::max_element(w.begin(), w.end());
    *it += 1.0 - sum;
  }
  return ProportionVector(std::move(w));
}

double dot(std::span<const double> a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Candidate {
  std::string name;
  ProportionVector pi;
};

template <typename Objective>
DesignResult select_candidate(std::vector<Candidate> candidates, std::size_t length, int tag_count,
                              Objective&& objective, std::size_t iterations, bool converged,
                              std::vector<double> history) {
  std::size_t best = 0;
  double best_rounded = std::numeric_limits<double>::infinity();
  std::vector<double> rounded(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Code c = code_from_proportions(candidates[i].pi, length, tag_count);
    rounded[i] = objective(proportions_of(c));
    if (rounded[i] < best_rounded) {
      best_rounded = rounded[i];
      best = i;
    }
  }
  auto& chosen = candidates[best];
  DesignResult r{chosen.pi, code_from_proportions(chosen.pi, length, tag_count),
                 objective(chosen.pi), best_rounded, iterations, converged, chosen.name,
                 std::move(history)};
  return r;
}

std::vector<Candidate> baseline_candidates(std::size_t m, std::size_t length, int tag_count) {
  std::vector<Candidate> out;
  out.push_back({"uniform", ProportionVector::uniform(m)});
  if (length % static_cast<std::size_t>(tag_count) == 0)
    out.push_back({"orthogonal", proportions_of(orthogonal_code(tag_count, length))});
  for (std::size_t i = 0; i < m; ++i)
    out.push_back({"repetition:" + std::to_string(i), ProportionVector::indicator(m, i)});
  return out;
}

}  // namespace

std::vector<double> project_to_simplex(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("cannot project an empty vector");
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double running = -1.0;
  double shift = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    running += sorted[j];
    const double candidate = running / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) shift = candidate;
  }
  for (auto& x : v) x = std::max(0.0, x - shift);
  return v;
}

std::vector<double> average_upper_bound_gradient(const ProportionVector& pi, std::size_t length,
                                                 const PairDistanceTable& pairs, double sigma) {
  const std::size_t m = pairs.codewords();
  const double scale = static_cast<double>(length) / (8.0 * sigma * sigma);
  const double inv_sqrt_pi = 1.0 / std::sqrt(kPi);
  std::vector<double> grad(m, 0.0);
  const std::vector<double>& w = pi.weights();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto g = pairs.g(p);
    const double x = std::max(scale * dot(g, w), 1e-30);
    // d/dx erfc(sqrt x) = -exp(-x) / sqrt(pi x); ordered pairs count twice.
    const double coeff = -2.0 * pairs.theta(p) * std::exp(-x) * inv_sqrt_pi / std::sqrt(x) * scale;
    if (coeff == 0.0) continue;
    for (std::size_t c = 0; c < m; ++c) grad[c] += coeff * g[c];
  }
  return grad;
}

DesignResult design_average(const PairDistanceTable& pairs, std::size_t length, int tag_count,
                            double sigma, const DesignOptions& opts) {
  check_inputs(pairs, length, tag_count, sigma);
  if (!(opts.tolerance > 0.0)) throw InvalidArgument("design tolerance must be positive");
  const std::size_t m = pairs.codewords();
  const auto objective = [&](const ProportionVector& pi) {
    return average_upper_bound(pi, length, pairs, sigma);
  };

  ProportionVector pi = ProportionVector::uniform(m);
  double value = objective(pi);
  std::vector<double> history{value};
  bool converged = false;
  std::size_t iter = 0;
  double step = 0.0;
  for (; iter < opts.max_iterations; ++iter) {
    const std::vector<double> grad = average_upper_bound_gradient(pi, length, pairs, sigma);
    double gmax = 0.0;
    for (const double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax == 0.0) {
      converged = true;
      break;
    }
    if (opts.step_rule == StepRule::Diminishing) {
      const double alpha = opts.step_scale / std::sqrt(static_cast<double>(iter + 1)) / gmax;
      std::vector<double> next(m);
      for (std::size_t c = 0; c < m; ++c) next[c] = pi[c] - alpha * grad[c];
      ProportionVector cand = to_proportions(project_to_simplex(std::move(next)));
      const double v = objective(cand);
      if (v < value) {
        const bool small = value - v <= opts.tolerance * std::max(1.0, std::abs(value));
        pi = std::move(cand);
        value = v;
        if (small) {
          converged = true;
          history.push_back(value);
          ++iter;
          break;
        }
      }
      history.push_back(value);
      continue;
    }

    if (step == 0.0) step = 0.5 / gmax;
    bool accepted = false;
    for (int backtrack = 0; backtrack < 60; ++backtrack, step *= 0.5) {
      std::vector<double> next(m);
      for (std::size_t c = 0; c < m; ++c) next[c] = pi[c] - step * grad[c];
      ProportionVector cand = to_proportions(project_to_simplex(std::move(next)));
      double decrease = 0.0;
      for (std::size_t c = 0; c < m; ++c) decrease += grad[c] * (cand[c] - pi[c]);
      const double v = objective(cand);
      if (v <= value + 1e-4 * decrease && v < value) {
        const bool small = value - v <= opts.tolerance * std::max(1.0, std::abs(value));
        pi = std::move(cand);
        value = v;
        accepted = true;
        converged = small;
        break;
      }
    }
    history.push_back(value);
    if (!accepted) {
      // No descent along the projected direction: stationary to working precision.
      converged = true;
      ++iter;
      break;
    }
    step *= 2.0;
    if (converged) {
      ++iter;
      break;
    }
  }

  std::vector<Candidate> candidates{{"optimizer", pi}};
  for (auto& c : baseline_candidates(m, length, tag_count)) candidates.push_back(std::move(c));
  return select_candidate(std::move(candidates), length, tag_count, objective, iter, converged,
                          std::move(history));
}

DesignResult design_minimax(const PairDistanceTable& pairs, std::size_t length, int tag_count,
                            double sigma, const DesignOptions& opts) {
  check_inputs(pairs, length, tag_count, sigma);
  const std::size_t m = pairs.codewords();
  const double scale = static_cast<double>(length) / (2.0 * sigma * sigma);

  // Pairs whose largest attainable exponent term is below the smallest
  // attainable maximum can never be active.
  std::vector<double> offset(pairs.size());
  double floor_of_max = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto g = pairs.g(p);
    offset[p] = std::log(pairs.theta(p) / 4.0);
    floor_of_max = std::max(floor_of_max, offset[p] - scale * *std::max_element(g.begin(), g.end()));
  }
  std::vector<std::size_t> active;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto g = pairs.g(p);
    if (offset[p] - scale * *std::min_element(g.begin(), g.end()) >= floor_of_max)
      active.push_back(p);
  }

  const auto log_objective = [&](const std::vector<double>& w, std::size_t* argmax) {
    double best = -std::numeric_limits<double>::infinity();
    for (const std::size_t p : active) {
      const double v = offset[p] - scale * dot(pairs.g(p), w);
      if (v > best) {
        best = v;
        if (argmax) *argmax = p;
      }
    }
    return best;
  };

  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  std::size_t arg = 0;
  double current = log_objective(w, &arg);
  std::vector<double> best_w = w;
  double best = current;
  std::vector<double> history{std::exp(best)};
  std::size_t iter = 0;
  bool converged = false;
  for (; iter < opts.minimax_iterations; ++iter) {
    const auto g = pairs.g(arg);
    double norm = 0.0;
    for (const double x : g) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      // The active pair is indistinguishable under every codeword.
      converged = true;
      break;
    }
    const double alpha = opts.step_scale / std::sqrt(static_cast<double>(iter + 1));
    // Subgradient of the active term is -scale * g; step against it.
    for (std::size_t c = 0; c < m; ++c) w[c] += alpha * g[c] / norm;
    w = project_to_simplex(std::move(w));
    current = log_objective(w, &arg);
    if (current < best) {
      best = current;
      best_w = w;
    }
    history.push_back(std::exp(best));
  }
  // Smoothed polish: projected gradient on mu * log sum exp(term / mu) with a
  // shrinking temperature. Plain subgradient steps stall well above the LP
  // optimum once many pairs are nearly active.
  std::vector<double> weights(active.size());
  const auto smooth = [&](const std::vector<double>& x, double mu, std::vector<double>* grad) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < active.size(); ++i) {
      weights[i] = offset[active[i]] - scale * dot(pairs.g(active[i]), x);
      top = std::max(top, weights[i]);
    }
    double z = 0.0;
    for (auto& v : weights) z += (v = std::exp((v - top) / mu));
    if (grad) {
      grad->assign(m, 0.0);
      for (std::size_t i = 0; i < active.size(); ++i) {
        const double c = -scale * weights[i] / z;
        const auto g = pairs.g(active[i]);
        for (std::size_t k = 0; k < m; ++k) (*grad)[k] += c * g[k];
      }
    }
    return top + mu * std::log(z);
  };
  std::size_t polish = 0;
  w = best_w;
  for (double mu = 0.1; mu >= 1e-4 && polish < opts.minimax_polish_iterations; mu *= 0.3) {
    std::vector<double> grad;
    double value = smooth(w, mu, &grad);
    double step = 0.0;
    for (std::size_t k = 0; k < opts.minimax_polish_iterations / 8 &&
                            polish < opts.minimax_polish_iterations;
         ++k, ++polish) {
      double gmax = 0.0;
      for (const double x : grad) gmax = std::max(gmax, std::abs(x));
      if (gmax == 0.0) break;
      if (step == 0.0) step = 0.5 / gmax;
      bool accepted = false;
      for (int backtrack = 0; backtrack < 50; ++backtrack, step *= 0.5) {
        std::vector<double> next(m);
        for (std::size_t c = 0; c < m; ++c) next[c] = w[c] - step * grad[c];
        next = project_to_simplex(std::move(next));
        double decrease = 0.0;
        for (std::size_t c = 0; c < m; ++c) decrease += grad[c] * (next[c] - w[c]);
        const double v = smooth(next, mu, nullptr);
        if (v < value && v <= value + 1e-4 * decrease) {
          w = std::move(next);
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      step *= 2.0;
      value = smooth(w, mu, &grad);
      current = log_objective(w, nullptr);
      if (current < best) {
        best = current;
        best_w = w;
      }
      history.push_back(std::exp(best));
    }
  }
  iter += polish;

  if (!converged && history.size() > 1) {
    // Subgradient steps have no stopping test; call it converged when the last
    // fifth of the run stopped improving the best value.
    const double earlier = std::log(history[history.size() * 4 / 5]);
    converged = earlier - best <= opts.tolerance * std::max(1.0, std::abs(best));
  }

  const auto objective = [&](const ProportionVector& pi) {
    return worst_lower_bound(pi, length, pairs, sigma);
  };
  std::vector<Candidate> candidates{{"optimizer", to_proportions(best_w)}};
  for (auto& c : baseline_candidates(m, length, tag_count)) candidates.push_back(std::move(c));
  return select_candidate(std::move(candidates), length, tag_count, objective, iter, converged,
                          std::move(history));
}

Code design_repetition(const PairDistanceTable& pairs, std::size_t length, int tag_count,
                       double sigma) {
  check_inputs(pairs, length, tag_count, sigma);
  const std::size_t m = pairs.codewords();
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const double v = average_upper_bound(ProportionVector::indicator(m, i), length, pairs, sigma);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return repetition_code(Codeword(static_cast<std::uint32_t>(best), tag_count), length);
}

ResponseTable perturb_table(const ResponseTable& table, double design_snr_db, std::uint64_t seed) {
  if (std::isnan(design_snr_db)) throw InvalidArgument("design SNR is NaN");
  const NoiseModel noise(design_snr_db, table.antenna_count());
  ResponseTable out = table;
  if (noise.is_noiseless()) return out;
  const double sigma = noise.sigma();
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t q = 0; q < out.grid_size(); ++q) {
    Xoshiro256 gen(derive_seed(seed, "perturb", {q}));
    gauss.reset();
    for (std::size_t slot = 0; slot < out.codeword_slots(); ++slot)
      for (auto& v : out.mutable_output(q, slot)) {
        const double re = gauss(gen);
        const double im = gauss(gen);
        v += cdouble(sigma * re, sigma * im);
      }
  }
  return out;
}

std::vector<std::size_t> design_subsample(std::size_t grid_size, std::size_t count,
                                          std::uint64_t seed) {
  std::vector<std::size_t> idx(grid_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= grid_size) return idx;
  if (count < 2) throw InvalidArgument("design grid needs at least 2 orientations");
  Xoshiro256 gen(derive_seed(seed, "design-subsample"));
  // Partial Fisher-Yates with an explicit draw so the result does not depend
  // on the standard library's shuffle.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(gen() % (grid_size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace tagcode
