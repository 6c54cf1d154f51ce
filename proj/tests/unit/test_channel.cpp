#include <array>
#include <cmath>
#include <random>

#include <Eigen/QR>
#include <gtest/gtest.h>

#include "tagcode/channel.hpp"
#include "tagcode/error.hpp"

using namespace tagcode;

namespace {

struct Instance {
  ArrayGeometry geom;
  RotationMatrix q;
  Codeword c;
  ReflectivityMap refl;
};

Instance random_instance(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Instance in;
  const int k = count(gen), n = count(gen);
  for (int i = 0; i < k; ++i) in.geom.antennas.emplace_back(u(gen), u(gen), 3.0 + u(gen));
  for (int i = 0; i < n; ++i) in.geom.tags.push_back(0.3 * Vec3(u(gen), u(gen), u(gen)));
  in.geom.wavelength = 0.005 + 0.002 * (u(gen) + 1.0);
  in.geom.transmit = CVec(k);
  for (int i = 0; i < k; ++i) in.geom.transmit[i] = cdouble(u(gen), u(gen));
  in.q = rotation_from_euler({3.0 * (u(gen) + 1.0), 1.5 * (u(gen) + 1.0), 3.0 * (u(gen) + 1.0)});
  in.c = Codeword(static_cast<std::uint32_t>(gen() % (1u << n)), n);
  in.refl.state0 = 0.6 * cdouble(u(gen), u(gen));
  in.refl.state1 = 0.6 * cdouble(u(gen), u(gen));
  return in;
}

// Independent construction from the scalar loss formula and a QR solve of
// psi' = H^T s + B R psi', psi = H R psi'.
CVec oracle_response(const Instance& in) {
  const auto& g = in.geom;
  const auto k = static_cast<Eigen::Index>(g.antennas.size());
  const auto n = static_cast<Eigen::Index>(g.tags.size());
  auto eta = [&](const Vec3& a, const Vec3& b) {
    const double d = (a - b).norm();
    return std::exp(cdouble(0.0, -2.0 * kPi * d / g.wavelength)) / (4.0 * kPi * d);
  };
  CMat h(k, n), b = CMat::Zero(n, n);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = eta(g.antennas[i], in.q.apply(g.tags[j]));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) b(i, j) = eta(g.tags[i], g.tags[j]);
  CMat r = CMat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    r(j, j) = in.c.state(static_cast<int>(j)) ? in.refl.state1 : in.refl.state0;
  const CMat system = CMat::Identity(n, n) - b * r;
  const CVec psi_prime = system.fullPivHouseholderQr().solve(h.transpose() * g.transmit);
  return h * (r * psi_prime);
}

double rel_error(const CVec& a, const CVec& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

ArrayGeometry desk_geometry() {
  ArrayGeometry g;
  g.antennas = {{-0.5, -0.5, 4}, {0.5, -0.5, 4}, {0.5, 0.5, 4}, {-0.5, 0.5, 4}};
  g.tags = {{0.1, 0.05, -0.02}, {-0.12, 0.08, 0.1}, {0.03, -0.15, 0.07}, {-0.05, -0.02, -0.18}};
  g.reflectors = {{1, 0, 0}, {0, -1, 0}, {0, 0.6, -0.8}};
  return g;
}

}  // namespace

TEST(PathLoss, WavelengthMultiples) {
  const double lambda = 0.005;
  const cdouble one = path_loss(Vec3::Zero(), Vec3(lambda, 0, 0), lambda);
  EXPECT_NEAR(one.real(), 1.0 / (4 * kPi * lambda), 1e-9);
  EXPECT_NEAR(one.imag(), 0.0, 1e-9);
  const cdouble half = path_loss(Vec3::Zero(), Vec3(0, lambda / 2, 0), lambda);
  EXPECT_NEAR(half.real(), -1.0 / (4 * kPi * lambda / 2), 1e-9);
  EXPECT_NEAR(half.imag(), 0.0, 1e-9);
}

TEST(PathLoss, SymmetricAndSingular) {
  const Vec3 a(0.3, -0.2, 1.1), b(-0.4, 0.9, 0.2);
  EXPECT_EQ(path_loss(a, b, 0.01), path_loss(b, a, 0.01));
  EXPECT_THROW(path_loss(a, a, 0.01), SingularGeometryError);
  EXPECT_THROW(reflector_loss(a, a, b, 0.01), SingularGeometryError);
}

TEST(ReflectorLoss, ProductOfLegs) {
  const double lambda = 0.005;
  const cdouble v = reflector_loss(Vec3::Zero(), Vec3(lambda, 0, 0), Vec3(lambda, lambda, 0), lambda);
  const double expect = 1.0 / ((4 * kPi * lambda) * (4 * kPi * lambda));
  EXPECT_NEAR(v.real(), expect, 1e-9 * expect);
  const Vec3 a(0.1, 0.2, 3), r(1, 0, 0), b(0, 0.1, 0);
  EXPECT_EQ(reflector_loss(a, r, b, lambda), path_loss(a, r, lambda) * path_loss(r, b, lambda));
  EXPECT_NEAR(std::abs(reflector_loss(a, r, b, lambda) - reflector_loss(b, r, a, lambda)), 0.0,
              1e-18);
}

TEST(ChannelMatrix, IdentityAndSingleEntry) {
  const auto g = desk_geometry();
  const CMat h = tag_channel_matrix(g, RotationMatrix{});
  for (std::size_t i = 0; i < g.antennas.size(); ++i)
    for (std::size_t j = 0; j < g.tags.size(); ++j)
      EXPECT_EQ(h(i, j), path_loss(g.antennas[i], g.tags[j], g.wavelength));
  ArrayGeometry one;
  one.antennas = {{0, 0, 2}};
  one.tags = {{0, 0, 0}};
  EXPECT_NEAR(std::abs(tag_channel_matrix(one, RotationMatrix{})(0, 0)), 1.0 / (4 * kPi * 2), 1e-15);
}

TEST(ChannelMatrix, JointRotationPreservesMagnitudes) {
  auto g = desk_geometry();
  const auto q = rotation_from_euler({0.4, 1.1, 2.0});
  const auto extra = rotation_from_euler({1.3, 0.2, 0.7});
  const CMat h = tag_channel_matrix(g, q);
  for (auto& a : g.antennas) a = extra.apply(a);
  const CMat h2 = tag_channel_matrix(g, extra * q);
  EXPECT_LT((h.cwiseAbs() - h2.cwiseAbs()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ChannelMatrix, FarFieldDecay) {
  auto g = desk_geometry();
  g.antennas = {{0, 0, 40}, {1, 0, 40}};
  const CMat h = tag_channel_matrix(g, RotationMatrix{});
  for (auto& a : g.antennas) a *= 2.0;
  const CMat h2 = tag_channel_matrix(g, RotationMatrix{});
  const double ratio = (h2.cwiseAbs().array() / h.cwiseAbs().array()).mean();
  EXPECT_NEAR(ratio, 0.5, 0.01);
}

TEST(IntertagMatrix, SymmetricZeroDiagonalInvariant) {
  auto g = desk_geometry();
  const CMat b = intertag_matrix(g);
  EXPECT_EQ(b, b.transpose());
  for (Eigen::Index i = 0; i < b.rows(); ++i) EXPECT_EQ(b(i, i), cdouble(0.0));
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int k = 0; k < 20; ++k) {
    const auto q = rotation_from_euler({2 * u(gen), u(gen), 2 * u(gen)});
    ArrayGeometry rotated = g;
    for (auto& t : rotated.tags) t = q.apply(t);
    EXPECT_LT((intertag_matrix(rotated) - b).cwiseAbs().maxCoeff(), 1e-12);
  }
  ArrayGeometry single;
  single.antennas = {{0, 0, 1}};
  single.tags = {{0, 0, 0}};
  EXPECT_EQ(intertag_matrix(single), CMat::Zero(1, 1));
  g.tags.push_back(g.tags[0]);
  EXPECT_THROW(intertag_matrix(g), SingularGeometryError);
}

TEST(AntennaMatrix, ZeroDiagonal) {
  const CMat a = antenna_matrix(desk_geometry());
  EXPECT_EQ(a.rows(), 4);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(a(i, i), cdouble(0.0));
  EXPECT_EQ(a, a.transpose());
}

TEST(TagResponse, MatchesLinearSystemOracle) {
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 100; ++i) {
    const Instance in = random_instance(gen);
    const CVec f = tag_response(in.geom, in.q, in.c, in.refl);
    EXPECT_LT(rel_error(f, oracle_response(in)), 1e-10);
  }
}

TEST(TagResponse, ZeroReflectivityAndNoCoupling) {
  const auto g = desk_geometry();
  const auto q = rotation_from_euler({0.3, 0.9, 4.0});
  ReflectivityMap zero{0.0, 0.0};
  EXPECT_EQ(tag_response(g, q, Codeword(5, 4), zero).norm(), 0.0);

  ReflectivityMap refl;
  const Codeword c(6, 4);
  const CMat h = tag_channel_matrix(g, q);
  const CVec s = g.transmit_signal();
  const CVec direct = h * (refl.reflectivities(c).asDiagonal() * (h.transpose() * s));
  const CVec uncoupled = h * (coupling_operator(CMat::Zero(4, 4), refl, c) * (h.transpose() * s));
  EXPECT_LT(rel_error(uncoupled, direct), 1e-14);
}

TEST(CouplingOperator, SingularThrowsWithCodeword) {
  CMat b(2, 2);
  b << 0, 2, 2, 0;
  ReflectivityMap refl{0.5, 0.5};
  try {
    coupling_operator(b, refl, Codeword(3, 2));
    FAIL() << "expected a coupling singularity";
  } catch (const CouplingSingularityError& e) {
    EXPECT_EQ(e.codeword_index(), 3u);
  }
}

TEST(ResponseTable, MatchesTagResponseAndConcatenation) {
  const auto g = desk_geometry();
  const auto grid = sample_orientation_grid(12, 4);
  ReflectivityMap refl;
  const auto table = build_response_table(g, grid, enumerate_codewords(4), refl);
  ASSERT_TRUE(table.covers_all_codewords());
  for (std::size_t q = 0; q < grid.size(); ++q)
    for (const auto& c : enumerate_codewords(4)) {
      const CVec f = tag_response(g, grid[q], c, refl);
      const auto out = table.output(q, table.slot_of(c));
      for (Eigen::Index k = 0; k < 4; ++k) EXPECT_EQ(out[k], f[k]);
    }
  const Code code(4, {Codeword(1, 4), Codeword(9, 4), Codeword(1, 4), Codeword(14, 4)});
  const CMat f0 = table.concatenated(0, code), f1 = table.concatenated(1, code);
  double sum = 0.0;
  for (std::size_t t = 0; t < code.length(); ++t)
    sum += (f0.col(static_cast<Eigen::Index>(t)) - f1.col(static_cast<Eigen::Index>(t))).squaredNorm();
  EXPECT_NEAR((f0 - f1).squaredNorm(), sum, 1e-12 * sum);

  const Code perm = code.permuted({3, 0, 2, 1});
  const CMat fp = table.concatenated(0, perm);
  for (Eigen::Index t = 0; t < 4; ++t) EXPECT_EQ(fp.col(t), f0.col(std::array{3, 0, 2, 1}[t]));

  const auto small = build_response_table(g, grid, code, refl);
  EXPECT_EQ(small.codeword_slots(), 3u);
  EXPECT_EQ(small.concatenated(5, code), table.concatenated(5, code));
}

TEST(ResponseTable, SingularGeometryNamesGridIndex) {
  auto g = desk_geometry();
  g.antennas.push_back(g.tags[2]);
  const auto grid = OrientationGrid({RotationMatrix{}}, {{0, 0, 0}}, 0, EulerConvention::IntrinsicZYZ);
  try {
    build_response_table(g, grid, enumerate_codewords(4), ReflectivityMap{});
    FAIL() << "expected a singular geometry error";
  } catch (const SingularGeometryError& e) {
    EXPECT_NE(std::string(e.what()).find("grid index 0"), std::string::npos);
  }
}

TEST(Multipath, ZeroReflectorsEqualsLineOfSight) {
  auto g = desk_geometry();
  g.reflectors.clear();
  const auto q = rotation_from_euler({1.0, 0.5, 0.2});
  EXPECT_EQ(tag_channel_matrix(g, q, {true, 1.0}), tag_channel_matrix(g, q));
}

TEST(Multipath, AddsReflectorTerms) {
  const auto g = desk_geometry();
  const auto q = rotation_from_euler({1.0, 0.5, 0.2});
  const CMat e = tag_channel_matrix(g, q, {true, 1.0});
  CMat expect = tag_channel_matrix(g, q);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (const auto& r : g.reflectors)
        expect(i, j) += reflector_loss(g.antennas[i], r, q.apply(g.tags[j]), g.wavelength);
  EXPECT_LT((e - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Multipath, EnergyNormalization) {
  const auto g = desk_geometry();
  const auto grid = sample_orientation_grid(30, 8);
  const double s = multipath_energy_scale(g, grid);
  double los = 0.0, scaled = 0.0;
  for (const auto& q : grid.rotations()) {
    los += tag_channel_matrix(g, q).squaredNorm();
    scaled += tag_channel_matrix(g, q, {true, s}).squaredNorm();
  }
  EXPECT_NEAR(scaled, los, 1e-12 * los);
}

TEST(Calibration, HitsTargetPower) {
  const auto g = desk_geometry();
  const auto grid = sample_orientation_grid(40, 3);
  ReflectivityMap refl;
  const auto cal = calibrate_transmit_power(g, grid, refl, {}, 4.0);
  const auto table = build_response_table(cal, grid, enumerate_codewords(4), refl);
  EXPECT_NEAR(mean_received_power(table), 4.0, 1e-10);
}
