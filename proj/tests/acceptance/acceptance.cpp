// Acceptance suite: one PASS/FAIL line per criterion.
//
//   tagcode_acceptance [--strict] [--only N] [--cli PATH]
//
// The exit status is 0 once every criterion has been evaluated, whatever the
// verdicts; --strict turns any FAIL into exit status 1. An exception inside a
// criterion is reported as FAIL and always yields a nonzero status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <unistd.h>

#include "tagcode/channel.hpp"
#include "tagcode/config.hpp"
#include "tagcode/criteria.hpp"
#include "tagcode/designer.hpp"
#include "tagcode/estimator.hpp"
#include "tagcode/experiments.hpp"
#include "tagcode/rng.hpp"

#ifndef TAGCODE_CLI_PATH
#define TAGCODE_CLI_PATH "tagcode"
#endif

namespace fs = std::filesystem;
using namespace tagcode;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  std::function<Verdict()> run;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string cli_path = TAGCODE_CLI_PATH;

// --- 1 -------------------------------------------------------------------

// Scattered waves psi solve psi = R (H^T s + B psi); the output is H psi.
CVec linear_system_response(const ArrayGeometry& g, const RotationMatrix& q, const Codeword& c,
                            const ReflectivityMap& refl) {
  const auto k = static_cast<Eigen::Index>(g.antennas.size());
  const auto n = static_cast<Eigen::Index>(g.tags.size());
  const auto eta = [&](const Vec3& a, const Vec3& b) {
    const double d = (a - b).norm();
    return std::polar(1.0 / (4.0 * kPi * d), -2.0 * kPi * d / g.wavelength);
  };
  std::vector<Vec3> placed;
  for (const auto& t : g.tags) placed.push_back(q.apply(t));
  CMat h(k, n);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = eta(g.antennas[i], placed[j]);
  CMat system = CMat::Identity(n, n);
  CVec rhs(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const cdouble r = c.state(static_cast<int>(j)) ? refl.state1 : refl.state0;
    cdouble incident = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) incident += h(i, j) * g.transmit[i];
    rhs[j] = r * incident;
    for (Eigen::Index m = 0; m < n; ++m)
      if (m != j) system(j, m) -= r * eta(placed[j], placed[m]);
  }
  const CVec psi = system.fullPivLu().solve(rhs);
  return h * psi;
}

Verdict channel_oracle() {
  std::mt19937_64 gen(101);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    ArrayGeometry g;
    const int k = count(gen), n = count(gen);
    for (int a = 0; a < k; ++a) g.antennas.emplace_back(u(gen), u(gen), 3.0 + u(gen));
    for (int t = 0; t < n; ++t) g.tags.push_back(0.3 * Vec3(u(gen), u(gen), u(gen)));
    g.transmit = CVec(k);
    for (int a = 0; a < k; ++a) g.transmit[a] = cdouble(u(gen), u(gen));
    const auto q = rotation_from_euler({3.0 * (u(gen) + 1), 1.5 * (u(gen) + 1), 3.0 * (u(gen) + 1)});
    const Codeword c(static_cast<std::uint32_t>(gen() % (1u << n)), n);
    ReflectivityMap refl{0.6 * cdouble(u(gen), u(gen)), 0.6 * cdouble(u(gen), u(gen))};
    const CVec f = tag_response(g, q, c, refl);
    const CVec o = linear_system_response(g, q, c, refl);
    const double scale = std::max(f.norm(), o.norm());
    if (scale > 0) worst = std::max(worst, (f - o).norm() / scale);
  }
  return {worst <= 1e-10, "max relative error " + fmt(worst)};
}

// --- shared desk scenario ---------------------------------------------------

ScenarioConfig desk(std::size_t grid) {
  ScenarioConfig c;
  c.grid_size = grid;
  c.design.design_grid_size = std::min<std::size_t>(grid, 500);
  return c;
}

// --- 2 -------------------------------------------------------------------

Verdict pairwise_error_law() {
  ScenarioConfig c = desk(2);
  ArrayGeometry g = make_geometry(c, 0);
  const auto base = sample_orientation_grid(2, derive_seed(c.seed, "grid"));
  // A small relative rotation keeps the error probability measurable at 10 dB.
  const RotationMatrix second(base[0].matrix() *
                              rotation_about_axis(Vec3(1, 2, 3).normalized(), 0.004).matrix());
  const OrientationGrid grid({base[0], second}, {}, 0, EulerConvention::IntrinsicZYZ);
  g = calibrate_transmit_power(g, grid, c.reflectivity, {}, 4.0);
  const Code code = orthogonal_code(4, 24);
  const ResponseTable table = build_response_table(g, grid, code, c.reflectivity);
  const double dist = (table.concatenated(0, code) - table.concatenated(1, code)).norm();

  bool ok = true;
  std::string detail;
  for (const double snr : {0.0, 5.0, 10.0}) {
    const NoiseModel noise(snr, 4);
    SimulationOptions so;
    so.trials = 100000;
    so.seed = derive_seed(7, "noise", {static_cast<std::uint64_t>(snr)});
    so.loss.kind = LossKind::RotationDistance;
    const ErrorReport r = simulate(table, code, grid, noise, so);
    const double p = 0.5 * std::erfc(dist / (2.0 * std::sqrt(2.0) * noise.sigma()));
    const double se = std::sqrt(p * (1.0 - p) / 200000.0);
    const bool pass = std::abs(r.misdecode_rate - p) <= 3.0 * se;
    ok = ok && pass;
    detail += fmt(snr) + " dB: " + fmt(r.misdecode_rate) + " vs " + fmt(p) + " (se " + fmt(se) +
              "); ";
  }
  return {ok, detail};
}

// --- 3 -------------------------------------------------------------------

Verdict pi_form_identities() {
  ScenarioConfig c = desk(60);
  const Scenario sc = prepare_scenario(c, 0);
  const PairDistanceTable pairs = build_pair_table(sc.table, sc.grid, {PairPruning::Full});
  std::mt19937_64 gen(303);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t t = 1 + gen() % 40;
    std::vector<Codeword> cols;
    for (std::size_t j = 0; j < t; ++j) cols.emplace_back(static_cast<std::uint32_t>(gen() % 16), 4);
    const Code code(4, cols);
    const double sigma = NoiseModel(-5.0 + static_cast<double>(i), 4).sigma();
    const auto pi = proportions_of(code);
    const double u1 = average_upper_bound(pi, t, pairs, sigma);
    const double u2 = average_upper_bound_direct(sc.table, code, sc.grid, sigma);
    const double v1 = worst_lower_bound(pi, t, pairs, sigma);
    const double v2 = worst_lower_bound_direct(sc.table, code, sc.grid, sigma);
    worst = std::max({worst, std::abs(u1 - u2) / std::abs(u2), std::abs(v1 - v2) / std::abs(v2)});
  }
  return {worst <= 1e-10, "max relative difference " + fmt(worst)};
}

// --- 4 -------------------------------------------------------------------

Verdict permutation_exactness() {
  ScenarioConfig c = desk(500);
  const Scenario sc = prepare_scenario(c, 0);
  const PairDistanceTable pairs = design_pair_table(c, sc, sc.table);
  const double sigma = NoiseModel(0.0, 4).sigma();
  const Code code = design_for_method(Method::AverageDesign, c, pairs, sigma).code;
  std::mt19937_64 gen(404);
  SimulationOptions so;
  so.trials = 20;
  so.seed = 404;
  const NoiseModel noise(0.0, 4);
  const ErrorReport ref = simulate(sc.table, code, sc.grid, noise, so);
  bool same = true;
  std::size_t decodes = 0;
  const ResponseTable coded = sc.table.with_code(code);
  for (int p = 0; p < 5; ++p) {
    std::vector<std::size_t> order(code.length());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), gen);
    const Code perm = code.permuted(order);
    const ErrorReport r = simulate(sc.table, perm, sc.grid, noise, so);
    same = same && r.per_orientation_mean == ref.per_orientation_mean &&
           r.per_orientation_sd == ref.per_orientation_sd && r.average == ref.average &&
           r.worst == ref.worst && r.misdecode_rate == ref.misdecode_rate;

    // Reference decoder: permuted observation against the permuted code.
    const ResponseTable pcoded = sc.table.with_code(perm);
    std::normal_distribution<double> n(0.0, sigma);
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t q = gen() % sc.grid.size();
      CMat y = sc.table.concatenated(q, code);
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += cdouble(n(gen), n(gen));
      CMat yp(y.rows(), y.cols());
      for (std::size_t t = 0; t < order.size(); ++t)
        yp.col(static_cast<Eigen::Index>(t)) = y.col(static_cast<Eigen::Index>(order[t]));
      same = same && decode(y, coded) == decode(yp, pcoded);
      ++decodes;
    }
  }
  return {same, "5 permutations, identical reports and " + std::to_string(decodes) +
                    " matching reference decodes"};
}

// --- 5 -------------------------------------------------------------------

Verdict bound_validity() {
  ScenarioConfig c = desk(200);
  c.loss.kind = LossKind::RotationDistance;
  c.trials = 200;
  const Scenario sc = prepare_scenario(c, 0);
  const PairDistanceTable pairs = design_pair_table(c, sc, sc.table);
  bool ok = true;
  std::string detail;
  for (std::size_t si = 0; si < 3; ++si) {
    const double snr = 5.0 * static_cast<double>(si);
    const NoiseModel noise(snr, 4);
    for (const Method m : {Method::Orthogonal, Method::AverageDesign, Method::MinimaxDesign}) {
      const Code code = design_for_method(m, c, pairs, noise.sigma()).code;
      SimulationOptions so;
      so.trials = c.trials;
      so.seed = derive_seed(c.seed, "noise", {si});
      so.loss = c.loss;
      const ErrorReport r = simulate(sc.table, code, sc.grid, noise, so);
      const double v = worst_lower_bound_direct(sc.table, code, sc.grid, noise.sigma());
      // With no observed errors the sample SE is 0; fall back to the
      // Agresti-Coull SE of a zero count times the largest possible loss.
      const double n = static_cast<double>(c.trials);
      const double p0 = 2.0 / (n + 4.0);
      const double se = r.worst_se > 0.0
                            ? r.worst_se
                            : 2.0 * std::sqrt(2.0) * std::sqrt(p0 * (1.0 - p0) / (n + 4.0));
      const bool pass = r.worst + 3.0 * se >= v;
      ok = ok && pass;
      if (!pass || si == 0)
        detail += std::string(method_name(m)) + "@" + fmt(snr) + " worst " + fmt(r.worst) +
                  " >= V " + fmt(v) + "; ";
    }
  }
  return {ok, detail};
}

// --- 6 -------------------------------------------------------------------

Verdict design_dominance() {
  ScenarioConfig c = desk(500);
  c.trials = 100;
  c.code_length = 24;
  c.eval_snr_db = 10.0;
  const auto recs = run_random_array_study(c, 10);
  std::size_t ran = 0, avg_ok = 0, worst_ok = 0, rep_best = 0;
  std::vector<double> ratios;
  for (const auto& r : recs) {
    if (r.skipped) continue;
    ++ran;
    const double rep = r.average[0], orth = r.average[1], avg = r.average[2], mm = r.average[3];
    avg_ok += avg <= orth ? 1 : 0;
    worst_ok += r.worst[3] <= r.worst[1] ? 1 : 0;
    // Best means strictly lower than each of the others.
    rep_best += (rep < orth && rep < avg && rep < mm) ? 1 : 0;
    ratios.push_back(r.ratio);
  }
  if (ran == 0) return {false, "every array was skipped"};
  std::sort(ratios.begin(), ratios.end());
  const std::size_t mid = ratios.size() / 2;
  const double median =
      ratios.size() % 2 ? ratios[mid] : 0.5 * (ratios[mid - 1] + ratios[mid]);
  const double need = 0.9 * static_cast<double>(ran);
  const bool a = static_cast<double>(avg_ok) >= need;
  const bool b = median >= 5.0;
  const bool cc = static_cast<double>(worst_ok) >= need;
  const bool d = rep_best == 0;
  std::string detail = "(a) " + std::to_string(avg_ok) + "/" + std::to_string(ran) +
                       (a ? " ok" : " FAIL") + "; (b) median ratio " + fmt(median) +
                       (b ? " ok" : " FAIL") + "; (c) " + std::to_string(worst_ok) + "/" +
                       std::to_string(ran) + (cc ? " ok" : " FAIL") + "; (d) REP_OPT best on " +
                       std::to_string(rep_best) + (d ? " ok" : " FAIL");
  return {a && b && cc && d, detail};
}

// --- 7 -------------------------------------------------------------------

Verdict multipath_null() {
  ScenarioConfig c = desk(500);
  c.energy_normalization = true;
  c.geometry.reflectors = 10;
  c.geometry.reflector_distance = 1.0;
  c.snr_db = {10.0};
  c.methods = {Method::AverageDesign, Method::MinimaxDesign};
  const auto rows = run_multipath_study(c);
  bool ok = true;
  std::string detail;
  for (const auto& los : rows) {
    if (los.channel != "los") continue;
    for (const auto& mp : rows) {
      if (mp.channel != "multipath" || mp.method != los.method) continue;
      const double diff = std::abs(mp.fixed_transmit.average - los.fixed_transmit.average);
      const double se = std::hypot(mp.fixed_transmit.average_se, los.fixed_transmit.average_se);
      const bool pass = diff <= 3.0 * se;
      ok = ok && pass;
      detail += std::string(method_name(los.method)) + " los " + fmt(los.fixed_transmit.average) +
                " multipath " + fmt(mp.fixed_transmit.average) + " (3se " + fmt(3 * se) + "); ";
    }
  }
  return {ok, detail};
}

// --- 8 -------------------------------------------------------------------

Verdict robustness() {
  ScenarioConfig c = desk(500);
  c.eval_snr_db = 10.0;
  c.design_snr_db = {10.0, 15.0};
  c.design_draws = 10;
  const auto rows = run_robustness_study(c);
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    if (std::isinf(r.design_snr_db)) continue;
    const auto perfect = std::find_if(rows.begin(), rows.end(), [&](const RobustnessRow& p) {
      return std::isinf(p.design_snr_db) && p.method == r.method;
    });
    const double ratio = error_ratio(r.avg_error, perfect->avg_error);
    const bool pass = ratio <= 2.0;
    ok = ok && pass;
    detail += std::string(method_name(r.method)) + "@" + fmt(r.design_snr_db) + " " +
              fmt(r.avg_error) + " vs " + fmt(perfect->avg_error) + "; ";
  }
  return {ok, detail};
}

// --- 9 -------------------------------------------------------------------

// Square of antennas 4 m above a regular tetrahedron of tags (radius 0.25 m),
// 5 mm carrier, unit transmit, orthogonal code of length 24 at 10 dB.
constexpr double kPinnedLeCam = 7.508116106365836e-05;

ArrayGeometry pinned_geometry() {
  ArrayGeometry g;
  g.antennas = {{-0.5, -0.5, 4}, {0.5, -0.5, 4}, {0.5, 0.5, 4}, {-0.5, 0.5, 4}};
  const double s = 0.25 / std::sqrt(3.0);
  g.tags = {s * Vec3(1, 1, 1), s * Vec3(1, -1, -1), s * Vec3(-1, 1, -1), s * Vec3(-1, -1, 1)};
  return g;
}

Verdict lecam_scaling() {
  const ArrayGeometry g = pinned_geometry();
  const Code code = orthogonal_code(4, 24);
  const ReflectivityMap refl;
  const double sigma = NoiseModel(10.0, 4).sigma();
  const double base = lecam_bound(g, code, refl, sigma).value;
  ArrayGeometry doubled = g;
  for (const auto& a : g.antennas) doubled.antennas.push_back(a);
  const double k_ratio = lecam_bound(doubled, code, refl, sigma).value / base;
  const double s_ratio = lecam_bound(g, code, refl, 2.0 * sigma).value / base;
  const double pin_err = std::abs(base - kPinnedLeCam) / kPinnedLeCam;
  const bool ok = std::abs(k_ratio - 0.25) <= 1e-14 && std::abs(s_ratio - 4.0) <= 4e-14 &&
                  pin_err <= 1e-12;
  return {ok, "K x2 -> " + fmt(k_ratio) + ", sigma x2 -> " + fmt(s_ratio) + ", pinned " +
                  fmt(base) + " (rel err " + fmt(pin_err) + ")"};
}

// --- 10 ------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / ("tagcode_accept_" + std::to_string(::getpid()));
  fs::create_directories(root);
  std::ofstream(root / "small.ini") << "[grid]\nsize = 60\n[simulation]\nsnr_db = 0, 5\n"
                                       "trials = 10\nseed = 17\n[design]\ngrid_size = 60\n";
  std::string outputs[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / ("run" + std::to_string(i));
    const std::string cmd = "\"" + cli_path + "\" sweep --config \"" + (root / "small.ini").string() +
                            "\" --out-dir \"" + out.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      fs::remove_all(root);
      return {false, "sweep run failed: " + cmd};
    }
    outputs[i] = slurp(out / "sweep.csv");
  }
  fs::remove_all(root);
  const bool ok = !outputs[0].empty() && outputs[0] == outputs[1];
  return {ok, std::to_string(outputs[0].size()) + " bytes, " +
                  (outputs[0] == outputs[1] ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--strict") {
      strict = true;
    } else if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (a == "--cli" && i + 1 < argc) {
      cli_path = argv[++i];
    } else {
      std::cerr << "usage: tagcode_acceptance [--strict] [--only N] [--cli PATH]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "channel closed form vs linear system", 1.0, channel_oracle},
      {2, "pairwise error law", 30.0, pairwise_error_law},
      {3, "pi-form identities", 1.0, pi_form_identities},
      {4, "column permutation exactness", 10.0, permutation_exactness},
      {5, "worst-case bound validity", 300.0, bound_validity},
      {6, "design dominance over random arrays", 1800.0, design_dominance},
      {7, "multipath diversity null", 600.0, multipath_null},
      {8, "robustness to channel estimation error", 1200.0, robustness},
      {9, "Le Cam bound scaling and pinned value", 1.0, lecam_scaling},
      {10, "sweep determinism", 60.0, determinism},
  };

  int failed = 0;
  bool crashed = false;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
      crashed = true;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = v.pass && in_time;
    failed += pass ? 0 : 1;
    std::cout << "CRITERION " << c.id << " " << (pass ? "PASS" : "FAIL") << "  " << c.name
              << "  [" << fmt(secs) << " s" << (in_time ? "" : ", over time limit") << "]  "
              << v.detail << std::endl;
  }
  std::cout << "SUMMARY " << failed << " failed" << std::endl;
  if (crashed) return 3;
  return strict && failed ? 1 : 0;
}
