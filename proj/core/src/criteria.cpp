#include "tagcode/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <string>
#include <utility>

#include <Eigen/LU>

#include "tagcode/error.hpp"

namespace tagcode {
namespace {

constexpr std::uint64_t kPairCacheMagic = 0x5441474350414952ULL;  // "TAGCPAIR"
constexpr std::uint32_t kPairCacheVersion = 1;

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidArgument("noise standard deviation must be positive");
}

double squared_distance(std::span<const cdouble> a, std::span<const cdouble> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::norm(a[k] - b[k]);
  return s;
}

}  // namespace

PairDistanceTable::PairDistanceTable(std::size_t grid_size, std::size_t codewords,
                                     std::vector<std::uint32_t> first,
                                     std::vector<std::uint32_t> second, std::vector<double> theta,
                                     std::vector<double> g)
    : grid_size_(grid_size),
      m_(codewords),
      first_(std::move(first)),
      second_(std::move(second)),
      theta_(std::move(theta)),
      g_(std::move(g)) {
  if (first_.size() != theta_.size() || second_.size() != theta_.size() ||
      g_.size() != theta_.size() * m_)
    throw InvalidArgument("pair table arrays have inconsistent sizes");
}

PairDistanceTable PairDistanceTable::select(const std::vector<std::size_t>& pairs) const {
  std::vector<std::uint32_t> a, b;
  std::vector<double> th, g;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  th.reserve(pairs.size());
  g.reserve(pairs.size() * m_);
  for (const std::size_t p : pairs) {
    a.push_back(first_.at(p));
    b.push_back(second_[p]);
    th.push_back(theta_[p]);
    const auto gp = this->g(p);
    g.insert(g.end(), gp.begin(), gp.end());
  }
  return PairDistanceTable(grid_size_, m_, std::move(a), std::move(b), std::move(th),
                           std::move(g));
}

PairDistanceTable build_pair_table(const ResponseTable& table, const OrientationGrid& grid,
                                   const PairFilter& filter) {
  if (!table.covers_all_codewords())
    throw InvalidArgument("pair table needs outputs for all 2^N codewords");
  if (table.grid_size() != grid.size())
    throw InvalidArgument("response table and grid sizes differ");
  const std::size_t nq = grid.size();
  const std::size_t m = table.codeword_slots();
  std::vector<std::size_t> slot(m);
  for (std::size_t c = 0; c < m; ++c)
    slot[c] = table.slot_of(Codeword(static_cast<std::uint32_t>(c), table.tag_count()));

  const bool prune = filter.mode == PairPruning::Pruned ||
                     (filter.mode == PairPruning::Auto && nq > filter.full_table_limit);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> kept;
  if (!prune) {
    kept.reserve(nq * (nq - 1) / 2);
    for (std::uint32_t i = 0; i < nq; ++i)
      for (std::uint32_t j = i + 1; j < nq; ++j) kept.emplace_back(i, j);
  } else {
    // Output-space distance under the all-ones proportion is the squared norm
    // over every codeword, i.e. over the whole stored row.
    const std::size_t stride = m * table.antenna_count();
    const auto row = [&](std::size_t q) {
      return std::span<const cdouble>(table.raw().data() + q * stride, stride);
    };
    const std::size_t keep = std::min(filter.nearest, nq - 1);
    using Entry = std::pair<double, std::uint32_t>;
    std::vector<std::priority_queue<Entry>> nearest(nq);
    std::vector<double> thetas;
    thetas.reserve(nq * (nq - 1) / 2);
    const auto offer = [&](std::size_t i, double d, std::uint32_t j) {
      auto& heap = nearest[i];
      if (heap.size() < keep) {
        heap.emplace(d, j);
      } else if (keep > 0 && Entry(d, j) < heap.top()) {
        heap.pop();
        heap.emplace(d, j);
      }
    };
    for (std::uint32_t i = 0; i < nq; ++i) {
      for (std::uint32_t j = i + 1; j < nq; ++j) {
        const double d = squared_distance(row(i), row(j));
        offer(i, d, j);
        offer(j, d, i);
        thetas.push_back(rotation_distance(grid[i], grid[j]));
      }
    }
    double threshold = std::numeric_limits<double>::infinity();
    if (!thetas.empty() && filter.theta_percentile < 100.0) {
      const double frac = std::clamp(filter.theta_percentile / 100.0, 0.0, 1.0);
      const auto pos = static_cast<std::size_t>(frac * static_cast<double>(thetas.size() - 1));
      std::vector<double> sorted = thetas;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(pos),
                       sorted.end());
      threshold = sorted[pos];
    }
    std::vector<std::pair<std::uint32_t, std::uint32_t>> chosen;
    for (std::uint32_t i = 0; i < nq; ++i) {
      auto& heap = nearest[i];
      while (!heap.empty()) {
        const std::uint32_t j = heap.top().second;
        heap.pop();
        chosen.emplace_back(std::min(i, j), std::max(i, j));
      }
    }
    std::size_t p = 0;
    for (std::uint32_t i = 0; i < nq; ++i)
      for (std::uint32_t j = i + 1; j < nq; ++j, ++p)
        if (thetas[p] > threshold) chosen.emplace_back(i, j);
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
    kept = std::move(chosen);
  }

  std::vector<std::uint32_t> first, second;
  std::vector<double> theta, g;
  first.reserve(kept.size());
  second.reserve(kept.size());
  theta.reserve(kept.size());
  g.reserve(kept.size() * m);
  for (const auto& [i, j] : kept) {
    first.push_back(i);
    second.push_back(j);
    theta.push_back(rotation_distance(grid[i], grid[j]));
    for (std::size_t c = 0; c < m; ++c)
      g.push_back(squared_distance(table.output(i, slot[c]), table.output(j, slot[c])));
  }
  return PairDistanceTable(nq, m, std::move(first), std::move(second), std::move(theta),
                           std::move(g));
}

void save_pair_table(const std::filesystem::path& path, const PairDistanceTable& pairs,
                     std::uint64_t key) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write pair cache " + tmp.string());
    const auto put = [&](const auto& v) {
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    put(kPairCacheMagic);
    put(kPairCacheVersion);
    put(key);
    const std::uint64_t grid = pairs.grid_size(), m = pairs.codewords(), n = pairs.size();
    put(grid);
    put(m);
    put(n);
    for (std::size_t p = 0; p < n; ++p) {
      put(pairs.first(p));
      put(pairs.second(p));
    }
    out.write(reinterpret_cast<const char*>(pairs.theta_values().data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    out.write(reinterpret_cast<const char*>(pairs.g_values().data()),
              static_cast<std::streamsize>(n * m * sizeof(double)));
    if (!out) throw Error("failed writing pair cache " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::optional<PairDistanceTable> load_pair_table(const std::filesystem::path& path,
                                                 std::uint64_t key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  const auto get = [&](auto& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return static_cast<bool>(in);
  };
  std::uint64_t magic = 0, stored_key = 0, grid = 0, m = 0, n = 0;
  std::uint32_t version = 0;
  if (!get(magic) || magic != kPairCacheMagic) return std::nullopt;
  if (!get(version) || version != kPairCacheVersion) return std::nullopt;
  if (!get(stored_key) || stored_key != key) return std::nullopt;
  if (!get(grid) || !get(m) || !get(n)) return std::nullopt;
  std::vector<std::uint32_t> first(n), second(n);
  for (std::size_t p = 0; p < n; ++p)
    if (!get(first[p]) || !get(second[p])) return std::nullopt;
  std::vector<double> theta(n), g(n * m);
  in.read(reinterpret_cast<char*>(theta.data()), static_cast<std::streamsize>(n * sizeof(double)));
  in.read(reinterpret_cast<char*>(g.data()), static_cast<std::streamsize>(n * m * sizeof(double)));
  if (!in) return std::nullopt;
  return PairDistanceTable(grid, m, std::move(first), std::move(second), std::move(theta),
                           std::move(g));
}

double pair_exponent(const PairDistanceTable& pairs, std::size_t p, const ProportionVector& pi,
                     std::size_t length) {
  const auto g = pairs.g(p);
  double dot = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) dot += pi[c] * g[c];
  return static_cast<double>(length) * dot;
}

double average_upper_bound(const ProportionVector& pi, std::size_t length,
                           const PairDistanceTable& pairs, double sigma) {
  check_sigma(sigma);
  if (pi.size() != pairs.codewords())
    throw InvalidArgument("proportion vector does not match pair table");
  const double scale = 1.0 / (8.0 * sigma * sigma);
  double u = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p)
    u += std::erfc(std::sqrt(pair_exponent(pairs, p, pi, length) * scale)) * pairs.theta(p);
  return 2.0 * u;
}

double worst_lower_bound(const ProportionVector& pi, std::size_t length,
                         const PairDistanceTable& pairs, double sigma) {
  check_sigma(sigma);
  if (pi.size() != pairs.codewords())
    throw InvalidArgument("proportion vector does not match pair table");
  const double scale = 1.0 / (2.0 * sigma * sigma);
  double v = 0.0;
  for (std::size_t p = 0; p < pairs.size(); ++p)
    v = std::max(v, std::exp(-pair_exponent(pairs, p, pi, length) * scale) * pairs.theta(p) / 4.0);
  return v;
}

double average_upper_bound_direct(const ResponseTable& table, const Code& code,
                                  const OrientationGrid& grid, double sigma) {
  check_sigma(sigma);
  std::vector<CMat> outputs;
  outputs.reserve(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) outputs.push_back(table.concatenated(q, code));
  double u = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a)
    for (std::size_t b = 0; b < grid.size(); ++b) {
      if (a == b) continue;
      const double dist = (outputs[a] - outputs[b]).norm();
      u += std::erfc(dist / (2.0 * std::sqrt(2.0) * sigma)) * rotation_distance(grid[a], grid[b]);
    }
  return u;
}

double worst_lower_bound_direct(const ResponseTable& table, const Code& code,
                                const OrientationGrid& grid, double sigma) {
  check_sigma(sigma);
  std::vector<CMat> outputs;
  outputs.reserve(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) outputs.push_back(table.concatenated(q, code));
  double v = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a)
    for (std::size_t b = 0; b < grid.size(); ++b) {
      if (a == b) continue;
      const double d2 = (outputs[a] - outputs[b]).squaredNorm();
      v = std::max(v, std::exp(-d2 / (2.0 * sigma * sigma)) *
                          rotation_distance(grid[a], grid[b]) / 4.0);
    }
  return v;
}

double antenna_range(const ArrayGeometry& geom) {
  if (geom.antennas.empty()) throw InvalidArgument("geometry has no antennas");
  Vec3 c = Vec3::Zero();
  for (const auto& a : geom.antennas) c += a;
  return (c / static_cast<double>(geom.antennas.size())).norm();
}

LeCamBound lecam_bound(const ArrayGeometry& geom, const Code& code, const ReflectivityMap& refl,
                       double sigma, double range) {
  check_sigma(sigma);
  geom.validate();
  if (static_cast<std::size_t>(code.tag_count()) != geom.tag_count())
    throw InvalidArgument("code does not match tag count");
  const CVec s = geom.transmit_signal();
  const double amplitude = std::abs(s[0]);
  for (Eigen::Index k = 1; k < s.size(); ++k)
    if (std::abs(std::abs(s[k]) - amplitude) > 1e-12 * amplitude)
      throw InvalidArgument("closed-form bound assumes a uniform transmit signal");
  if (!(amplitude > 0.0)) throw InvalidArgument("transmit signal is zero");
  const double d = range > 0.0 ? range : antenna_range(geom);
  const double sigma_eff = sigma / amplitude;
  const double k = static_cast<double>(geom.antenna_count());

  double tag_norm2 = 0.0;
  for (const auto& x : geom.tags) tag_norm2 += x.squaredNorm();

  const CMat b = intertag_matrix(geom);
  const auto n = static_cast<Eigen::Index>(geom.tag_count());
  double energy = 0.0;
  for (const auto& c : code.columns()) {
    const CVec r = refl.reflectivities(c);
    // Reuses the singularity guard; the operator itself is R (I - B R)^{-1}.
    coupling_operator(b, refl, c);
    const CMat btilde = (CMat::Identity(n, n) - b * r.asDiagonal()).partialPivLu().inverse();
    energy += btilde.squaredNorm() * r.squaredNorm();
  }

  LeCamBound out;
  const double lambda = geom.wavelength;
  const double numerator = 32.0 * kPi * kPi * lambda * lambda * sigma_eff * sigma_eff * std::pow(d, 4);
  const double denominator = 27.0 * k * k * tag_norm2 * energy;
  if (!(denominator > 0.0)) {
    out.value = std::numeric_limits<double>::infinity();
    out.unbounded = true;
    out.optimal_delta = std::numeric_limits<double>::infinity();
    out.delta_feasible = false;
    return out;
  }
  out.value = numerator / denominator;
  // Sum of the per-slot Lipschitz terms; the two-point bound peaks at
  // delta = 4 sigma / (3 sqrt(sum)).
  const double lipschitz2 =
      k * k / (4.0 * kPi * kPi * lambda * lambda * std::pow(d, 4)) * tag_norm2 * energy;
  out.optimal_delta = 4.0 * sigma_eff / (3.0 * std::sqrt(lipschitz2));
  out.delta_feasible = out.optimal_delta * out.optimal_delta <= 2.0 * std::sqrt(2.0);
  return out;
}

}  // namespace tagcode
