#include "tagcode/channel.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "tagcode/error.hpp"

namespace tagcode {

CVec ArrayGeometry::transmit_signal() const {
  if (transmit.size() == 0) return CVec::Ones(static_cast<Eigen::Index>(antennas.size()));
  return transmit;
}

void ArrayGeometry::validate() const {
  if (antennas.empty()) throw InvalidArgument("geometry needs at least one antenna");
  if (tags.empty()) throw InvalidArgument("geometry needs at least one tag");
  if (!(wavelength > 0.0) || !std::isfinite(wavelength))
    throw InvalidArgument("wavelength must be positive");
  if (transmit.size() != 0 && static_cast<std::size_t>(transmit.size()) != antennas.size())
    throw InvalidArgument("transmit signal length must equal antenna count");
  for (std::size_t a = 0; a < tags.size(); ++a)
    for (std::size_t b = a + 1; b < tags.size(); ++b)
      if ((tags[a] - tags[b]).norm() == 0.0)
        throw SingularGeometryError("tags " + std::to_string(a) + " and " + std::to_string(b) +
                                    " coincide");
}

void ReflectivityMap::validate() const {
  if (std::abs(state0) > 1.0 || std::abs(state1) > 1.0)
    throw InvalidArgument("passive tag reflectivity magnitude must be <= 1");
}

CVec ReflectivityMap::reflectivities(const Codeword& c) const {
  CVec r(c.tag_count());
  for (int n = 0; n < c.tag_count(); ++n) r[n] = c.state(n) ? state1 : state0;
  return r;
}

cdouble path_loss(const Vec3& x1, const Vec3& x2, double wavelength) {
  const double d = (x1 - x2).norm();
  if (!(d > 0.0)) throw SingularGeometryError("path loss evaluated at coincident points");
  return std::polar(1.0 / (4.0 * kPi * d), -kTwoPi * d / wavelength);
}

cdouble reflector_loss(const Vec3& x1, const Vec3& xref, const Vec3& x2, double wavelength) {
  return path_loss(x1, xref, wavelength) * path_loss(xref, x2, wavelength);
}

CMat tag_channel_matrix(const ArrayGeometry& geom, const RotationMatrix& q,
                        const ChannelOptions& opts) {
  const auto k = static_cast<Eigen::Index>(geom.antenna_count());
  const auto n = static_cast<Eigen::Index>(geom.tag_count());
  CMat h(k, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec3 tag = q.apply(geom.tags[j]);
    for (Eigen::Index i = 0; i < k; ++i) {
      cdouble v = path_loss(geom.antennas[i], tag, geom.wavelength);
      if (opts.multipath) {
        for (const auto& ref : geom.reflectors)
          v += reflector_loss(geom.antennas[i], ref, tag, geom.wavelength);
      }
      h(i, j) = v;
    }
  }
  if (opts.multipath && opts.multipath_scale != 1.0) h *= opts.multipath_scale;
  return h;
}

namespace {

CMat pairwise_loss_matrix(const std::vector<Vec3>& points, double wavelength) {
  const auto n = static_cast<Eigen::Index>(points.size());
  CMat m = CMat::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const cdouble v = path_loss(points[a], points[b], wavelength);
      m(a, b) = v;
      m(b, a) = v;
    }
  return m;
}

}  // namespace

CMat intertag_matrix(const ArrayGeometry& geom) {
  return pairwise_loss_matrix(geom.tags, geom.wavelength);
}

CMat antenna_matrix(const ArrayGeometry& geom) {
  return pairwise_loss_matrix(geom.antennas, geom.wavelength);
}

CMat coupling_operator(const CMat& intertag, const ReflectivityMap& refl, const Codeword& c) {
  const CVec r = refl.reflectivities(c);
  const auto n = r.size();
  if (intertag.rows() != n || intertag.cols() != n)
    throw InvalidArgument("coupling matrix size does not match codeword length");
  const CMat br = intertag * r.asDiagonal();
  const CMat m = CMat::Identity(n, n) - br;
  Eigen::JacobiSVD<CMat> svd(m);
  const auto& sv = svd.singularValues();
  const double smin = sv[n - 1];
  if (!(smin > 0.0) || sv[0] / smin > kCouplingConditionLimit)
    throw CouplingSingularityError(
        "(I - B R) is singular for codeword " + std::to_string(c.index()), c.index());
  return r.asDiagonal() * m.partialPivLu().inverse();
}

CVec tag_response(const ArrayGeometry& geom, const RotationMatrix& q, const Codeword& c,
                  const ReflectivityMap& refl, const ChannelOptions& opts) {
  geom.validate();
  if (static_cast<std::size_t>(c.tag_count()) != geom.tag_count())
    throw InvalidArgument("codeword length does not match tag count");
  const CMat h = tag_channel_matrix(geom, q, opts);
  const CMat g = coupling_operator(intertag_matrix(geom), refl, c);
  return h * (g * (h.transpose() * geom.transmit_signal()));
}

ResponseTable::ResponseTable(std::size_t grid_size, std::size_t antenna_count, int tag_count,
                             std::vector<Codeword> codewords, std::vector<cdouble> data,
                             std::optional<Code> code)
    : grid_size_(grid_size),
      k_(antenna_count),
      n_(tag_count),
      codewords_(std::move(codewords)),
      slot_lookup_(codeword_count(tag_count), -1),
      data_(std::move(data)),
      code_(std::move(code)) {
  if (data_.size() != grid_size_ * codewords_.size() * k_)
    throw InvalidArgument("response table data has the wrong size");
  for (std::size_t s = 0; s < codewords_.size(); ++s) {
    if (codewords_[s].tag_count() != n_) throw InvalidArgument("codeword length mismatch");
    if (slot_lookup_[codewords_[s].index()] >= 0)
      throw InvalidArgument("duplicate codeword in response table");
    slot_lookup_[codewords_[s].index()] = static_cast<std::ptrdiff_t>(s);
  }
  if (code_) {
    for (const auto& c : code_->columns()) slot_of(c);
  }
}

bool ResponseTable::covers_all_codewords() const {
  return codewords_.size() == slot_lookup_.size();
}

std::size_t ResponseTable::slot_of(const Codeword& c) const {
  if (c.tag_count() != n_ || slot_lookup_[c.index()] < 0)
    throw InvalidArgument("codeword " + std::to_string(c.index()) +
                          " is not covered by the response table");
  return static_cast<std::size_t>(slot_lookup_[c.index()]);
}

CMat ResponseTable::concatenated(std::size_t q, const Code& code) const {
  CMat f(static_cast<Eigen::Index>(k_), static_cast<Eigen::Index>(code.length()));
  for (std::size_t t = 0; t < code.length(); ++t) {
    const auto out = output(q, slot_of(code[t]));
    for (std::size_t k = 0; k < k_; ++k)
      f(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = out[k];
  }
  return f;
}

ResponseTable ResponseTable::with_code(const Code& code) const {
  return ResponseTable(grid_size_, k_, n_, codewords_, data_, code);
}

ResponseTable ResponseTable::subset(const std::vector<std::size_t>& indices) const {
  const std::size_t stride = codewords_.size() * k_;
  std::vector<cdouble> data;
  data.reserve(indices.size() * stride);
  for (const std::size_t q : indices) {
    if (q >= grid_size_) throw InvalidArgument("subset index out of range");
    data.insert(data.end(), data_.begin() + static_cast<std::ptrdiff_t>(q * stride),
                data_.begin() + static_cast<std::ptrdiff_t>((q + 1) * stride));
  }
  return ResponseTable(indices.size(), k_, n_, codewords_, std::move(data), code_);
}

ResponseTable build_response_table(const ArrayGeometry& geom, const OrientationGrid& grid,
                                   const std::vector<Codeword>& codewords,
                                   const ReflectivityMap& refl, const ChannelOptions& opts) {
  geom.validate();
  refl.validate();
  if (codewords.empty()) throw InvalidArgument("response table needs at least one codeword");
  const int n = static_cast<int>(geom.tag_count());
  const CMat b = intertag_matrix(geom);
  std::vector<CMat> ops;
  ops.reserve(codewords.size());
  for (const auto& c : codewords) {
    if (c.tag_count() != n) throw InvalidArgument("codeword length does not match tag count");
    ops.push_back(coupling_operator(b, refl, c));
  }
  const CVec s = geom.transmit_signal();
  const std::size_t k = geom.antenna_count();
  std::vector<cdouble> data(grid.size() * codewords.size() * k);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    CMat h;
    try {
      h = tag_channel_matrix(geom, grid[q], opts);
    } catch (const SingularGeometryError& e) {
      throw SingularGeometryError(std::string(e.what()) + " at grid index " + std::to_string(q));
    }
    const CVec hts = h.transpose() * s;
    for (std::size_t slot = 0; slot < codewords.size(); ++slot) {
      const CVec f = h * (ops[slot] * hts);
      std::copy(f.data(), f.data() + k, data.begin() + static_cast<std::ptrdiff_t>(
                                                           (q * codewords.size() + slot) * k));
    }
  }
  return ResponseTable(grid.size(), k, n, codewords, std::move(data));
}

ResponseTable build_response_table(const ArrayGeometry& geom, const OrientationGrid& grid,
                                   const Code& code, const ReflectivityMap& refl,
                                   const ChannelOptions& opts) {
  std::vector<Codeword> distinct;
  std::vector<bool> seen(codeword_count(code.tag_count()), false);
  for (const auto& c : code.columns()) {
    if (!seen[c.index()]) {
      seen[c.index()] = true;
      distinct.push_back(c);
    }
  }
  return build_response_table(geom, grid, distinct, refl, opts).with_code(code);
}

double multipath_energy_scale(const ArrayGeometry& geom, const OrientationGrid& grid) {
  double los = 0.0;
  double multi = 0.0;
  const ChannelOptions mp{.multipath = true, .multipath_scale = 1.0};
  for (const auto& q : grid.rotations()) {
    los += tag_channel_matrix(geom, q).squaredNorm();
    multi += tag_channel_matrix(geom, q, mp).squaredNorm();
  }
  if (!(multi > 0.0)) throw InvalidArgument("multipath channel carries no energy");
  return std::sqrt(los / multi);
}

double mean_received_power(const ResponseTable& table) {
  double total = 0.0;
  for (const auto& v : table.raw()) total += std::norm(v);
  const double cells =
      static_cast<double>(table.grid_size() * table.codeword_slots() * table.antenna_count());
  return total / cells;
}

ArrayGeometry calibrate_transmit_power(const ArrayGeometry& geom, const OrientationGrid& grid,
                                       const ReflectivityMap& refl, const ChannelOptions& opts,
                                       double target_power) {
  if (!(target_power > 0.0)) throw InvalidArgument("target received power must be positive");
  const auto table =
      build_response_table(geom, grid, enumerate_codewords(static_cast<int>(geom.tag_count())),
                           refl, opts);
  const double p = mean_received_power(table);
  if (!(p > 0.0)) throw InvalidArgument("array receives no power; cannot calibrate");
  ArrayGeometry out = geom;
  out.transmit = geom.transmit_signal() * std::sqrt(target_power / p);
  return out;
}

}  // namespace tagcode
