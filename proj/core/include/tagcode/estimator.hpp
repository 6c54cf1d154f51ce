#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tagcode/channel.hpp"
#include "tagcode/codes.hpp"
#include "tagcode/geometry.hpp"

namespace tagcode {

/// Complex white Gaussian noise at a given SNR. The variance is K / SNR
/// (linear SNR) and is the variance of each real and of each imaginary
/// component, so that pairwise error probabilities are
/// erfc(||a|| / (2 sqrt 2 sigma)) / 2.
class NoiseModel {
 public:
  NoiseModel(double snr_db, std::size_t antenna_count);

  // Noise-free model (sigma = 0).
  static NoiseModel noiseless(std::size_t antenna_count);

  double snr_db() const noexcept { return snr_db_; }
  std::size_t antenna_count() const noexcept { return k_; }
  double variance() const noexcept { return variance_; }
  double sigma() const noexcept;
  bool is_noiseless() const noexcept { return variance_ == 0.0; }

 private:
  double snr_db_;
  std::size_t k_;
  double variance_;
};

enum class LossKind { AngleLoss, RotationDistance };

struct LossOptions {
  LossKind kind = LossKind::AngleLoss;
  Vec3 reference = Vec3::UnitZ();
  bool wrap_azimuth = false;
};

// Loss between grid entries `truth` and `estimate`, precomputing per-grid angles.
class LossFunction {
 public:
  LossFunction(const OrientationGrid& grid, LossOptions opts);
  double operator()(std::size_t truth, std::size_t estimate) const;

 private:
  const OrientationGrid* grid_;
  LossOptions opts_;
  std::vector<AnglePair> angles_;
};

/// Reference minimum-distance decoder on a full K x T observation. The
/// per-slot squared distances are summed in sorted order, which makes the
/// result exactly invariant to a joint permutation of code columns and
/// observation columns. Ties go to the lowest grid index.
std::size_t decode(const CMat& observation, const ResponseTable& table);

/// Fast decoder for a fixed code. Observations enter through the per-codeword
/// sums z_u = sum_{t : c_t = u} y_t, and candidates are scored by
/// ||F||^2 - 2 Re <Y, F>.
class Decoder {
 public:
  Decoder(const ResponseTable& table, const Code& code);

  std::size_t grid_size() const noexcept { return grid_size_; }
  std::size_t antenna_count() const noexcept { return k_; }
  // Distinct codewords used by the code, in canonical order.
  const std::vector<Codeword>& groups() const noexcept { return groups_; }
  const std::vector<std::size_t>& group_counts() const noexcept { return counts_; }
  // Slot order in which noise columns are drawn: columns sorted by codeword.
  const std::vector<std::size_t>& canonical_order() const noexcept { return order_; }
  std::size_t group_of_column(std::size_t t) const { return column_group_[t]; }

  // z is groups().size() * K entries, group-major.
  std::size_t decode_aggregated(std::span<const cdouble> z) const;
  std::size_t decode(const CMat& observation) const;

  // Noiseless group sums for orientation q.
  std::vector<cdouble> aggregated_mean(std::size_t q) const;

 private:
  std::size_t grid_size_;
  std::size_t k_;
  std::vector<Codeword> groups_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> column_group_;
  std::vector<double> re_;  // [q][group][k]
  std::vector<double> im_;
  std::vector<double> energy_;
};

struct SimulationOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  LossOptions loss{};
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct ErrorReport {
  std::vector<double> per_orientation_mean;
  std::vector<double> per_orientation_sd;  // sample sd of the trial losses
  std::size_t trials = 0;
  double average = 0.0;
  double worst = 0.0;
  std::size_t worst_index = 0;
  double variance_across_orientations = 0.0;
  // Standard error of `average`, treating (orientation, trial) losses as iid.
  double average_se = 0.0;
  // Standard error of the mean loss at the worst orientation.
  double worst_se = 0.0;
  double average_root = 0.0;  // mean of sqrt(loss)
  double misdecode_rate = 0.0;
  std::uint64_t seed = 0;
};

/// Monte Carlo estimate of average and worst-case error. Noise for
/// (orientation q, trial) comes from its own substream, and columns are
/// filled in the decoder's canonical order, so column-permuted codes receive
/// block-permuted noise and produce identical reports.
ErrorReport simulate(const ResponseTable& table, const Code& code, const OrientationGrid& grid,
                     const NoiseModel& noise, const SimulationOptions& opts);

}  // namespace tagcode
