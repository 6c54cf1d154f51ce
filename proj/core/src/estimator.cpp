#include "tagcode/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "tagcode/error.hpp"
#include "tagcode/rng.hpp"

namespace tagcode {

NoiseModel::NoiseModel(double snr_db, std::size_t antenna_count)
    : snr_db_(snr_db), k_(antenna_count), variance_(0.0) {
  if (antenna_count == 0) throw InvalidArgument("noise model needs K >= 1");
  if (std::isnan(snr_db)) throw InvalidArgument("SNR is NaN");
  if (std::isinf(snr_db) && snr_db > 0) return;
  if (std::isinf(snr_db)) throw InvalidArgument("SNR of -inf dB is not meaningful");
  variance_ = static_cast<double>(k_) / std::pow(10.0, snr_db / 10.0);
}

NoiseModel NoiseModel::noiseless(std::size_t antenna_count) {
  return NoiseModel(std::numeric_limits<double>::infinity(), antenna_count);
}

double NoiseModel::sigma() const noexcept { return std::sqrt(variance_); }

LossFunction::LossFunction(const OrientationGrid& grid, LossOptions opts)
    : grid_(&grid), opts_(std::move(opts)) {
  if (opts_.kind == LossKind::AngleLoss) {
    if (std::abs(opts_.reference.norm() - 1.0) > 1e-9)
      throw InvalidArgument("loss reference vector must have unit norm");
    angles_.reserve(grid.size());
    for (const auto& q : grid.rotations()) angles_.push_back(reference_angles(q, opts_.reference));
  }
}

double LossFunction::operator()(std::size_t truth, std::size_t estimate) const {
  if (truth == estimate) return 0.0;
  if (opts_.kind == LossKind::RotationDistance)
    return rotation_distance((*grid_)[truth], (*grid_)[estimate]);
  return angle_loss(angles_[truth], angles_[estimate], opts_.wrap_azimuth);
}

std::size_t decode(const CMat& observation, const ResponseTable& table) {
  if (!table.code()) throw InvalidArgument("decode needs a response table with a code");
  const Code& code = *table.code();
  const auto k = static_cast<Eigen::Index>(table.antenna_count());
  if (observation.rows() != k || observation.cols() != static_cast<Eigen::Index>(code.length()))
    throw InvalidArgument("observation shape does not match K x T");
  std::vector<std::size_t> slots(code.length());
  for (std::size_t t = 0; t < code.length(); ++t) slots[t] = table.slot_of(code[t]);

  std::vector<double> per_slot(code.length());
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < table.grid_size(); ++q) {
    for (std::size_t t = 0; t < code.length(); ++t) {
      const auto f = table.output(q, slots[t]);
      double d = 0.0;
      for (Eigen::Index i = 0; i < k; ++i)
        d += std::norm(observation(i, static_cast<Eigen::Index>(t)) - f[i]);
      per_slot[t] = d;
    }
    std::sort(per_slot.begin(), per_slot.end());
    double score = 0.0;
    for (const double d : per_slot) score += d;
    if (score < best_score) {
      best_score = score;
      best = q;
    }
  }
  return best;
}

Decoder::Decoder(const ResponseTable& table, const Code& code)
    : grid_size_(table.grid_size()), k_(table.antenna_count()) {
  if (static_cast<int>(code.tag_count()) != table.tag_count())
    throw InvalidArgument("code and response table disagree on N");
  const std::size_t t_len = code.length();
  order_.resize(t_len);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return code[a].index() < code[b].index(); });
  column_group_.resize(t_len);
  for (const std::size_t t : order_) {
    if (groups_.empty() || groups_.back() != code[t]) {
      groups_.push_back(code[t]);
      counts_.push_back(0);
    }
    ++counts_.back();
    column_group_[t] = groups_.size() - 1;
  }
  const std::size_t u = groups_.size();
  std::vector<std::size_t> slots(u);
  for (std::size_t g = 0; g < u; ++g) slots[g] = table.slot_of(groups_[g]);

  re_.resize(grid_size_ * u * k_);
  im_.resize(grid_size_ * u * k_);
  energy_.assign(grid_size_, 0.0);
  for (std::size_t q = 0; q < grid_size_; ++q) {
    for (std::size_t g = 0; g < u; ++g) {
      const auto f = table.output(q, slots[g]);
      double e = 0.0;
      for (std::size_t k = 0; k < k_; ++k) {
        re_[(q * u + g) * k_ + k] = f[k].real();
        im_[(q * u + g) * k_ + k] = f[k].imag();
        e += std::norm(f[k]);
      }
      energy_[q] += static_cast<double>(counts_[g]) * e;
    }
  }
}

std::size_t Decoder::decode_aggregated(std::span<const cdouble> z) const {
  const std::size_t width = groups_.size() * k_;
  if (z.size() != width) throw InvalidArgument("aggregated observation has the wrong size");
  std::vector<double> zr(width), zi(width);
  for (std::size_t i = 0; i < width; ++i) {
    zr[i] = z[i].real();
    zi[i] = z[i].imag();
  }
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  const double* re = re_.data();
  const double* im = im_.data();
  for (std::size_t q = 0; q < grid_size_; ++q, re += width, im += width) {
    double corr = 0.0;
    for (std::size_t i = 0; i < width; ++i) corr += re[i] * zr[i] + im[i] * zi[i];
    const double score = energy_[q] - 2.0 * corr;
    if (score < best_score) {
      best_score = score;
      best = q;
    }
  }
  return best;
}

std::size_t Decoder::decode(const CMat& observation) const {
  if (observation.rows() != static_cast<Eigen::Index>(k_) ||
      observation.cols() != static_cast<Eigen::Index>(column_group_.size()))
    throw InvalidArgument("observation shape does not match K x T");
  std::vector<cdouble> z(groups_.size() * k_, cdouble{});
  for (const std::size_t t : order_) {
    const std::size_t g = column_group_[t];
    for (std::size_t k = 0; k < k_; ++k)
      z[g * k_ + k] += observation(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t));
  }
  return decode_aggregated(z);
}

std::vector<cdouble> Decoder::aggregated_mean(std::size_t q) const {
  const std::size_t u = groups_.size();
  std::vector<cdouble> z(u * k_);
  for (std::size_t g = 0; g < u; ++g)
    for (std::size_t k = 0; k < k_; ++k) {
      const std::size_t i = (q * u + g) * k_ + k;
      z[g * k_ + k] = static_cast<double>(counts_[g]) * cdouble(re_[i], im_[i]);
    }
  return z;
}

namespace {

struct OrientationStats {
  double mean = 0.0;
  double sum_sq = 0.0;  // sum of squared losses
  double sd = 0.0;
  double root_mean = 0.0;
  std::size_t misdecodes = 0;
};

OrientationStats run_orientation(const Decoder& decoder, const LossFunction& loss,
                                 const NoiseModel& noise, std::size_t q, std::size_t trials,
                                 std::uint64_t seed) {
  const std::size_t k = decoder.antenna_count();
  const auto& order = decoder.canonical_order();
  const std::vector<cdouble> mean = decoder.aggregated_mean(q);
  std::vector<cdouble> z(mean.size());
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma = noise.sigma();

  OrientationStats s;
  double sum = 0.0, sum_sq = 0.0, sum_root = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::copy(mean.begin(), mean.end(), z.begin());
    if (!noise.is_noiseless()) {
      Xoshiro256 gen(derive_seed(seed, "noise", {q, trial}));
      gauss.reset();
      for (const std::size_t t : order) {
        const std::size_t g = decoder.group_of_column(t);
        for (std::size_t i = 0; i < k; ++i) {
          const double re = gauss(gen);
          const double im = gauss(gen);
          z[g * k + i] += cdouble(sigma * re, sigma * im);
        }
      }
    }
    const std::size_t estimate = decoder.decode_aggregated(z);
    const double l = loss(q, estimate);
    if (estimate != q) ++s.misdecodes;
    sum += l;
    sum_sq += l * l;
    sum_root += std::sqrt(l);
  }
  const double n = static_cast<double>(trials);
  s.mean = sum / n;
  s.sum_sq = sum_sq;
  s.root_mean = sum_root / n;
  s.sd = trials > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * s.mean * s.mean) / (n - 1.0))) : 0.0;
  return s;
}

}  // namespace

ErrorReport simulate(const ResponseTable& table, const Code& code, const OrientationGrid& grid,
                     const NoiseModel& noise, const SimulationOptions& opts) {
  if (opts.trials < 1) throw InvalidArgument("simulation needs at least one trial");
  if (table.grid_size() != grid.size())
    throw InvalidArgument("response table and grid sizes differ");
  if (noise.antenna_count() != table.antenna_count())
    throw InvalidArgument("noise model and table disagree on K");
  const Decoder decoder(table, code);
  const LossFunction loss(grid, opts.loss);
  const std::size_t nq = grid.size();

  std::vector<OrientationStats> stats(nq);
  unsigned threads = opts.threads == 0 ? std::thread::hardware_concurrency() : opts.threads;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(nq)));
  const auto worker = [&](std::size_t begin, std::size_t step) {
    for (std::size_t q = begin; q < nq; q += step)
      stats[q] = run_orientation(decoder, loss, noise, q, opts.trials, opts.seed);
  };
  if (threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w, threads);
  }

  ErrorReport r;
  r.trials = opts.trials;
  r.seed = opts.seed;
  r.per_orientation_mean.resize(nq);
  r.per_orientation_sd.resize(nq);
  double sum = 0.0, sum_sq = 0.0, sum_root = 0.0;
  std::size_t misdecodes = 0;
  for (std::size_t q = 0; q < nq; ++q) {
    const auto& s = stats[q];
    r.per_orientation_mean[q] = s.mean;
    r.per_orientation_sd[q] = s.sd;
    sum += s.mean;
    sum_sq += s.sum_sq;
    sum_root += s.root_mean;
    misdecodes += s.misdecodes;
    if (q == 0 || s.mean > r.worst) {
      r.worst = s.mean;
      r.worst_index = q;
    }
  }
  const double n = static_cast<double>(nq);
  r.average = sum / n;
  r.average_root = sum_root / n;
  double var = 0.0;
  for (const double m : r.per_orientation_mean) var += (m - r.average) * (m - r.average);
  r.variance_across_orientations = var / n;
  const double total = n * static_cast<double>(opts.trials);
  if (total > 1.0) {
    const double pooled = std::max(0.0, (sum_sq - total * r.average * r.average) / (total - 1.0));
    r.average_se = std::sqrt(pooled / total);
  }
  r.worst_se = r.per_orientation_sd[r.worst_index] / std::sqrt(static_cast<double>(opts.trials));
  r.misdecode_rate = static_cast<double>(misdecodes) / total;
  return r;
}

}  // namespace tagcode
