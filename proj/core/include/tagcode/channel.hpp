#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tagcode/codes.hpp"
#include "tagcode/geometry.hpp"

namespace tagcode {

using cdouble = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Positions (meters) of antennas, tags (object frame, rotation center at the
/// origin) and reflectors, plus the carrier wavelength and per-antenna
/// transmit signal.
struct ArrayGeometry {
  std::vector<Vec3> antennas;
  std::vector<Vec3> tags;
  std::vector<Vec3> reflectors;
  double wavelength = 0.005;
  CVec transmit;  // K entries; empty means all ones

  std::size_t antenna_count() const noexcept { return antennas.size(); }
  std::size_t tag_count() const noexcept { return tags.size(); }
  CVec transmit_signal() const;

  // Throws InvalidArgument / SingularGeometryError when an invariant fails.
  void validate() const;
};

// Complex reflectivity selected by each binary tag state. |r| <= 1.
struct ReflectivityMap {
  cdouble state0{-0.5, 0.0};
  cdouble state1{0.5, 0.0};

  void validate() const;
  CVec reflectivities(const Codeword& c) const;
};

struct ChannelOptions {
  bool multipath = false;
  // Scalar applied to E_Q = H_Q + D_Q when multipath is on.
  double multipath_scale = 1.0;
};

// Free-space loss exp(-2 pi j d / lambda) / (4 pi d).
cdouble path_loss(const Vec3& x1, const Vec3& x2, double wavelength);

// Two-leg loss through a reflector treated as a virtual source.
cdouble reflector_loss(const Vec3& x1, const Vec3& xref, const Vec3& x2, double wavelength);

// K x N antenna-to-tag responses at orientation q (E_Q when multipath is on).
CMat tag_channel_matrix(const ArrayGeometry& geom, const RotationMatrix& q,
                        const ChannelOptions& opts = {});

// N x N tag-to-tag responses; zero diagonal; orientation independent.
CMat intertag_matrix(const ArrayGeometry& geom);

// K x K antenna-to-antenna responses; zero diagonal. Cancelled at the receiver.
CMat antenna_matrix(const ArrayGeometry& geom);

inline constexpr double kCouplingConditionLimit = 1e12;

/// R (I - B R)^{-1} for one codeword. Throws CouplingSingularityError when
/// cond(I - B R) exceeds kCouplingConditionLimit.
CMat coupling_operator(const CMat& intertag, const ReflectivityMap& refl, const Codeword& c);

// f(Q;c) = H R (I - B R)^{-1} H^T s.
CVec tag_response(const ArrayGeometry& geom, const RotationMatrix& q, const Codeword& c,
                  const ReflectivityMap& refl, const ChannelOptions& opts = {});

/// Noiseless outputs f(Q;c) for every grid orientation and each of a list of
/// codewords. Storage is [orientation][codeword slot][antenna].
class ResponseTable {
 public:
  ResponseTable(std::size_t grid_size, std::size_t antenna_count, int tag_count,
                std::vector<Codeword> codewords, std::vector<cdouble> data,
                std::optional<Code> code = std::nullopt);

  std::size_t grid_size() const noexcept { return grid_size_; }
  std::size_t antenna_count() const noexcept { return k_; }
  int tag_count() const noexcept { return n_; }
  std::size_t codeword_slots() const noexcept { return codewords_.size(); }
  const std::vector<Codeword>& codewords() const noexcept { return codewords_; }
  const std::optional<Code>& code() const noexcept { return code_; }

  // True when every one of the 2^N codewords has a slot.
  bool covers_all_codewords() const;

  // Slot index of a codeword; throws InvalidArgument if absent.
  std::size_t slot_of(const Codeword& c) const;

  std::span<const cdouble> output(std::size_t q, std::size_t slot) const {
    return {data_.data() + (q * codewords_.size() + slot) * k_, k_};
  }
  std::span<cdouble> mutable_output(std::size_t q, std::size_t slot) {
    return {data_.data() + (q * codewords_.size() + slot) * k_, k_};
  }

  // F(Q;C) as a K x T matrix.
  CMat concatenated(std::size_t q, const Code& code) const;

  ResponseTable with_code(const Code& code) const;

  // Restriction to a subset of orientations.
  ResponseTable subset(const std::vector<std::size_t>& indices) const;

  const std::vector<cdouble>& raw() const noexcept { return data_; }

 private:
  std::size_t grid_size_;
  std::size_t k_;
  int n_;
  std::vector<Codeword> codewords_;
  std::vector<std::ptrdiff_t> slot_lookup_;
  std::vector<cdouble> data_;
  std::optional<Code> code_;
};

/// Builds the table over the given codewords. A CouplingSingularityError is
/// thrown before any orientation is processed; a SingularGeometryError
/// carries the offending grid index in its message.
ResponseTable build_response_table(const ArrayGeometry& geom, const OrientationGrid& grid,
                                   const std::vector<Codeword>& codewords,
                                   const ReflectivityMap& refl, const ChannelOptions& opts = {});

// Table over the distinct codewords of `code`, with the code attached.
ResponseTable build_response_table(const ArrayGeometry& geom, const OrientationGrid& grid,
                                   const Code& code, const ReflectivityMap& refl,
                                   const ChannelOptions& opts = {});

// Scalar s with sum_Q ||s E_Q||_F^2 = sum_Q ||H_Q||_F^2 over the grid.
double multipath_energy_scale(const ArrayGeometry& geom, const OrientationGrid& grid);

/// Mean received power per antenna, averaged over grid orientations and all
/// 2^N codewords.
double mean_received_power(const ResponseTable& table);

/// Returns a copy of geom whose transmit signal is rescaled so that
/// mean_received_power over (grid, all codewords, opts) equals target_power.
ArrayGeometry calibrate_transmit_power(const ArrayGeometry& geom, const OrientationGrid& grid,
                                       const ReflectivityMap& refl,
                                       const ChannelOptions& opts = {},
                                       double target_power = 1.0);

}  // namespace tagcode
