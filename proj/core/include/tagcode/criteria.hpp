#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tagcode/channel.hpp"
#include "tagcode/codes.hpp"
#include "tagcode/geometry.hpp"

namespace tagcode {

enum class PairPruning {
  Auto,    // prune only when the grid is larger than full_table_limit
  Full,    // every unordered pair
  Pruned,  // always prune
};

struct PairFilter {
  PairPruning mode = PairPruning::Auto;
  std::size_t nearest = 50;         // neighbours kept per orientation, output-space distance
  double theta_percentile = 99.0;   // plus every pair whose theta is above this percentile
  std::size_t full_table_limit = 600;
};

/// Unordered orientation pairs (i < j) with their rotation distance and the
/// per-codeword squared output distances g_ij[m] = ||f(Q_i;c_m) - f(Q_j;c_m)||^2,
/// m in canonical codeword order.
class PairDistanceTable {
 public:
  PairDistanceTable(std::size_t grid_size, std::size_t codewords, std::vector<std::uint32_t> first,
                    std::vector<std::uint32_t> second, std::vector<double> theta,
                    std::vector<double> g);

  std::size_t grid_size() const noexcept { return grid_size_; }
  std::size_t codewords() const noexcept { return m_; }
  std::size_t size() const noexcept { return theta_.size(); }
  bool complete() const noexcept { return size() == grid_size_ * (grid_size_ - 1) / 2; }

  std::uint32_t first(std::size_t p) const { return first_[p]; }
  std::uint32_t second(std::size_t p) const { return second_[p]; }
  double theta(std::size_t p) const { return theta_[p]; }
  std::span<const double> g(std::size_t p) const { return {g_.data() + p * m_, m_}; }

  const std::vector<double>& theta_values() const noexcept { return theta_; }
  const std::vector<double>& g_values() const noexcept { return g_; }

  // Keeps only the listed pair positions (in order).
  PairDistanceTable select(const std::vector<std::size_t>& pairs) const;

 private:
  std::size_t grid_size_;
  std::size_t m_;
  std::vector<std::uint32_t> first_;
  std::vector<std::uint32_t> second_;
  std::vector<double> theta_;
  std::vector<double> g_;
};

// Throws InvalidArgument when the table does not cover all 2^N codewords.
PairDistanceTable build_pair_table(const ResponseTable& table, const OrientationGrid& grid,
                                   const PairFilter& filter = {});

void save_pair_table(const std::filesystem::path& path, const PairDistanceTable& pairs,
                     std::uint64_t key);
// Empty when the file is missing, has another version, or another key.
std::optional<PairDistanceTable> load_pair_table(const std::filesystem::path& path,
                                                 std::uint64_t key);

// T * pi^T g for one pair.
double pair_exponent(const PairDistanceTable& pairs, std::size_t p, const ProportionVector& pi,
                     std::size_t length);

/// U(pi): every unordered pair counted twice (the ordered double sum) with
/// summand erfc(sqrt(T pi^T g / (8 sigma^2))) * theta.
double average_upper_bound(const ProportionVector& pi, std::size_t length,
                           const PairDistanceTable& pairs, double sigma);

// V(pi) = max over pairs of exp(-T pi^T g / (2 sigma^2)) * theta / 4.
double worst_lower_bound(const ProportionVector& pi, std::size_t length,
                         const PairDistanceTable& pairs, double sigma);

// U(C) evaluated directly on concatenated outputs, all ordered pairs.
double average_upper_bound_direct(const ResponseTable& table, const Code& code,
                                  const OrientationGrid& grid, double sigma);

// V(C) evaluated directly on concatenated outputs.
double worst_lower_bound_direct(const ResponseTable& table, const Code& code,
                                const OrientationGrid& grid, double sigma);

struct LeCamBound {
  double value = 0.0;       // +inf when every reflectivity in the code is zero
  bool unbounded = false;
  double optimal_delta = 0.0;  // maximiser of the two-point bound in sqrt(theta)
  bool delta_feasible = true;  // optimal_delta^2 <= 2 sqrt 2
};

// Distance from the rotation center to the antenna centroid.
double antenna_range(const ArrayGeometry& geom);

/// Closed-form worst-case lower bound
///   32 pi^2 lambda^2 sigma_eff^2 D^4 / (27 K^2 ||X_tag||_F^2 sum_t ||(I - B R_t)^{-1}||_F^2 ||r(c_t)||^2)
/// with sigma_eff = sigma / |s|; the transmit signal must be uniform.
/// range <= 0 selects antenna_range(geom).
LeCamBound lecam_bound(const ArrayGeometry& geom, const Code& code, const ReflectivityMap& refl,
                       double sigma, double range = 0.0);

}  // namespace tagcode
