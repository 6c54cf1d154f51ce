#include "tagcode/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "tagcode/error.hpp"
#include "tagcode/rng.hpp"

namespace tagcode {

namespace {

constexpr std::array<std::string_view, 4> kMethodNames{"REP_OPT", "ORTHOGONAL", "AVERAGE_DESIGN",
                                                       "MINIMAX_DESIGN"};

void require(bool ok, const char* field, const char* message) {
  if (!ok) throw ValidationError(field, message);
}

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

void note(const ProgressFn& log, const std::string& msg) {
  if (log) log(msg);
}

std::vector<Vec3> antenna_positions(const GeometrySpec& g) {
  // K points evenly spaced along the square's perimeter, starting at a corner.
  std::vector<Vec3> out;
  const double h = g.antenna_side / 2.0;
  const std::array<Vec3, 4> corners{Vec3(-h, -h, g.antenna_range), Vec3(h, -h, g.antenna_range),
                                    Vec3(h, h, g.antenna_range), Vec3(-h, h, g.antenna_range)};
  for (std::size_t k = 0; k < g.antennas; ++k) {
    const double pos = 4.0 * static_cast<double>(k) / static_cast<double>(g.antennas);
    const auto edge = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(edge);
    out.push_back(corners[edge] + frac * (corners[(edge + 1) % 4] - corners[edge]));
  }
  return out;
}

Vec3 uniform_direction(Xoshiro256& gen) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    const Vec3 v(gauss(gen), gauss(gen), gauss(gen));
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

std::vector<Vec3> random_tags(const GeometrySpec& g, Xoshiro256& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> tags;
  const double min_gap = 1e-6 * g.tag_radius;
  while (tags.size() < g.tags) {
    const Vec3 v(u(gen), u(gen), u(gen));
    if (v.squaredNorm() > 1.0) continue;
    const Vec3 p = g.tag_radius * v;
    const bool clear = std::none_of(tags.begin(), tags.end(),
                                    [&](const Vec3& t) { return (t - p).norm() < min_gap; });
    if (clear) tags.push_back(p);
  }
  return tags;
}

std::vector<Vec3> tetrahedron_tags(const GeometrySpec& g, Xoshiro256& gen) {
  const double s = g.tag_radius / std::sqrt(3.0);
  const std::array<Vec3, 4> v{Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto ranges = euler_ranges(EulerConvention::IntrinsicZYZ);
  const double a = u(gen) * ranges[0];
  const double b = u(gen) * ranges[1];
  const double c = u(gen) * ranges[2];
  const RotationMatrix r = rotation_from_euler({a, b, c});
  std::vector<Vec3> tags;
  for (const auto& p : v) tags.push_back(r.apply(s * p));
  return tags;
}

ErrorReport run_code(const ScenarioConfig& config, const ResponseTable& table,
                     const OrientationGrid& grid, const Code& code, double snr_db,
                     std::uint64_t noise_seed) {
  SimulationOptions so;
  so.trials = config.trials;
  so.seed = noise_seed;
  so.loss = config.loss;
  so.threads = config.threads;
  return simulate(table, code, grid, NoiseModel(snr_db, table.antenna_count()), so);
}

double noise_sigma(const ScenarioConfig& config, double snr_db) {
  return NoiseModel(snr_db, config.geometry.antennas).sigma();
}

std::string context(Method m, double snr_db) {
  return std::string(method_name(m)) + " at " + std::to_string(snr_db) + " dB: ";
}

}  // namespace

std::string_view method_name(Method m) { return kMethodNames[static_cast<std::size_t>(m)]; }

Method method_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i)
    if (kMethodNames[i] == name) return static_cast<Method>(i);
  throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::RepOpt, Method::Orthogonal,
                                           Method::AverageDesign, Method::MinimaxDesign};
  return methods;
}

void ScenarioConfig::validate() const {
  const auto& g = geometry;
  require(g.antennas >= 1, "geometry.antennas", "must be at least 1");
  require(positive_finite(g.antenna_side), "geometry.antenna_side", "must be positive");
  require(positive_finite(g.antenna_range), "geometry.antenna_range", "must be positive");
  require(g.tags >= 1 && g.tags <= 16, "geometry.tags", "must be between 1 and 16");
  require(positive_finite(g.tag_radius), "geometry.tag_radius", "must be positive");
  require(g.layout != TagLayout::Tetrahedron || g.tags == 4, "geometry.layout",
          "tetrahedron layout needs exactly 4 tags");
  require(positive_finite(g.reflector_distance), "geometry.reflector_distance",
          "must be positive");
  require(g.tag_radius < g.reflector_distance || g.reflectors == 0,
          "geometry.reflector_distance", "reflectors must lie outside the tag sphere");
  require(positive_finite(g.wavelength), "geometry.wavelength", "must be positive");
  require(grid_size >= 2, "grid.size", "must be at least 2");
  require(code_length >= 1, "code.length", "must be at least 1");
  require(std::abs(reflectivity.state0) <= 1.0, "reflectivity.state0", "magnitude must be <= 1");
  require(std::abs(reflectivity.state1) <= 1.0, "reflectivity.state1", "magnitude must be <= 1");
  require(received_power >= 0.0 && std::isfinite(received_power), "signal.received_power",
          "must be nonnegative");
  require(!snr_db.empty(), "simulation.snr_db", "must list at least one SNR");
  for (const double s : snr_db)
    require(std::isfinite(s), "simulation.snr_db", "values must be finite");
  require(std::isfinite(eval_snr_db), "simulation.eval_snr_db", "must be finite");
  require(trials >= 1, "simulation.trials", "must be at least 1");
  require(!methods.empty(), "simulation.methods", "must list at least one method");
  require(arrays >= 1, "study.arrays", "must be at least 1");
  require(!design_snr_db.empty(), "study.design_snr_db", "must list at least one SNR");
  for (const double s : design_snr_db)
    require(!std::isnan(s) && s != -std::numeric_limits<double>::infinity(),
            "study.design_snr_db", "values must be finite or inf");
  require(design_draws >= 1, "study.design_draws", "must be at least 1");
  require(std::abs(loss.reference.norm() - 1.0) < 1e-9, "loss.reference", "must have unit norm");
  require(design.max_iterations >= 1, "design.max_iterations", "must be at least 1");
  require(design.minimax_iterations >= 1, "design.minimax_iterations", "must be at least 1");
  require(design.tolerance > 0.0, "design.tolerance", "must be positive");
  require(design.design_grid_size >= 2, "design.grid_size", "must be at least 2");
  require(positive_finite(design.step_scale), "design.step_scale", "must be positive");
  require(design.pair_filter.theta_percentile >= 0.0 && design.pair_filter.theta_percentile <= 100.0,
          "design.theta_percentile", "must be in [0, 100]");
}

void apply_scale(ScenarioConfig& config, Scale scale) {
  if (scale == Scale::Paper) {
    config.grid_size = 4000;
    config.trials = 500;
    config.arrays = 200;
    config.design_draws = 50;
  } else {
    config.grid_size = 500;
    config.trials = 100;
    config.arrays = 20;
    config.design_draws = 10;
  }
}

ArrayGeometry make_geometry(const ScenarioConfig& config, std::size_t array_index) {
  const auto& spec = config.geometry;
  ArrayGeometry g;
  g.wavelength = spec.wavelength;
  g.antennas = antenna_positions(spec);
  Xoshiro256 place(derive_seed(config.seed, "placement", {array_index}));
  g.tags = spec.layout == TagLayout::Tetrahedron ? tetrahedron_tags(spec, place)
                                                 : random_tags(spec, place);
  Xoshiro256 refl(derive_seed(config.seed, "reflectors", {array_index}));
  for (std::size_t m = 0; m < spec.reflectors; ++m)
    g.reflectors.push_back(spec.reflector_distance * uniform_direction(refl));
  return g;
}

Scenario prepare_scenario(const ScenarioConfig& config, std::size_t array_index,
                          const ScenarioOptions& opts) {
  config.validate();
  ArrayGeometry geom = make_geometry(config, array_index);
  OrientationGrid grid =
      sample_orientation_grid(config.grid_size, derive_seed(config.seed, "grid"), config.convention);

  ChannelOptions channel = opts.channel;
  ChannelOptions calib = opts.calibration_channel.value_or(opts.channel);
  if (config.energy_normalization) {
    if (channel.multipath) channel.multipath_scale = multipath_energy_scale(geom, grid);
    if (calib.multipath) calib.multipath_scale = multipath_energy_scale(geom, grid);
  }
  const double target = config.received_power > 0.0
                            ? config.received_power
                            : static_cast<double>(config.geometry.antennas);
  geom = calibrate_transmit_power(geom, grid, config.reflectivity, calib, target);
  ResponseTable table = build_response_table(
      geom, grid, enumerate_codewords(static_cast<int>(geom.tag_count())), config.reflectivity,
      channel);
  auto design_indices = design_subsample(grid.size(), config.design.design_grid_size,
                                         derive_seed(config.seed, "design"));
  return Scenario{std::move(geom), std::move(grid), std::move(table), std::move(design_indices),
                  derive_seed(config.seed, "placement", {array_index})};
}

PairDistanceTable design_pair_table(const ScenarioConfig& config, const Scenario& scenario,
                                    const ResponseTable& table) {
  if (scenario.design_indices.size() == scenario.grid.size())
    return build_pair_table(table, scenario.grid, config.design.pair_filter);
  return build_pair_table(table.subset(scenario.design_indices),
                          scenario.grid.subset(scenario.design_indices),
                          config.design.pair_filter);
}

MethodCode design_for_method(Method m, const ScenarioConfig& config,
                             const PairDistanceTable& pairs, double sigma) {
  const std::size_t t = config.code_length;
  const int n = static_cast<int>(config.geometry.tags);
  switch (m) {
    case Method::Orthogonal:
      return {m, orthogonal_code(n, t), std::nullopt};
    case Method::RepOpt:
      return {m, design_repetition(pairs, t, n, sigma), std::nullopt};
    case Method::AverageDesign: {
      auto r = design_average(pairs, t, n, sigma, config.design);
      Code c = r.code;
      return {m, std::move(c), std::move(r)};
    }
    case Method::MinimaxDesign: {
      auto r = design_minimax(pairs, t, n, sigma, config.design);
      Code c = r.code;
      return {m, std::move(c), std::move(r)};
    }
  }
  throw InvalidArgument("unknown method");
}

double error_ratio(double a, double b) {
  if (b == 0.0) return a == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return a / b;
}

std::vector<SweepRow> run_snr_sweep(const ScenarioConfig& config, const ProgressFn& log) {
  const Scenario sc = prepare_scenario(config, 0, {ChannelOptions{config.multipath, 1.0}, {}});
  const PairDistanceTable pairs = design_pair_table(config, sc, sc.table);
  std::vector<SweepRow> rows;
  for (std::size_t si = 0; si < config.snr_db.size(); ++si) {
    const double snr = config.snr_db[si];
    const std::uint64_t noise_seed = derive_seed(config.seed, "noise", {si});
    for (const Method m : config.methods) {
      try {
        const MethodCode mc = design_for_method(m, config, pairs, noise_sigma(config, snr));
        ErrorReport r = run_code(config, sc.table, sc.grid, mc.code, snr, noise_seed);
        note(log, context(m, snr) + "avg " + std::to_string(r.average));
        rows.push_back({m, snr, std::move(r), config.seed});
      } catch (const Error& e) {
        throw Error(context(m, snr) + e.what());
      }
    }
  }
  return rows;
}

std::vector<ArrayRecord> run_random_array_study(const ScenarioConfig& config,
                                                std::size_t num_arrays, const ProgressFn& log) {
  if (num_arrays < 1) throw InvalidArgument("random array study needs at least one array");
  const double snr = config.eval_snr_db;
  const double sigma = noise_sigma(config, snr);
  std::vector<ArrayRecord> out;
  for (std::size_t a = 0; a < num_arrays; ++a) {
    ArrayRecord rec;
    rec.array_index = a;
    rec.array_seed = derive_seed(config.seed, "placement", {a});
    std::optional<Scenario> sc;
    try {
      sc.emplace(prepare_scenario(config, a, {ChannelOptions{config.multipath, 1.0}, {}}));
    } catch (const CouplingSingularityError& e) {
      rec.skipped = true;
      rec.skip_reason = e.what();
      note(log, "array " + std::to_string(a) + " skipped: " + e.what());
      out.push_back(std::move(rec));
      continue;
    }
    const PairDistanceTable pairs = design_pair_table(config, *sc, sc->table);
    const std::uint64_t noise_seed = derive_seed(config.seed, "noise", {a});
    double orth_avg = std::nan(""), orth_worst = std::nan("");
    double des_avg = std::nan(""), mm_worst = std::nan("");
    for (const Method m : config.methods) {
      ErrorReport r;
      try {
        const MethodCode mc = design_for_method(m, config, pairs, sigma);
        r = run_code(config, sc->table, sc->grid, mc.code, snr, noise_seed);
      } catch (const Error& e) {
        throw Error("array " + std::to_string(a) + ", " + context(m, snr) + e.what());
      }
      rec.methods.push_back(m);
      rec.average.push_back(r.average);
      rec.worst.push_back(r.worst);
      if (m == Method::Orthogonal) {
        orth_avg = r.average;
        orth_worst = r.worst;
      } else if (m == Method::AverageDesign) {
        des_avg = r.average;
      } else if (m == Method::MinimaxDesign) {
        mm_worst = r.worst;
      }
    }
    rec.ratio = std::isnan(orth_avg) || std::isnan(des_avg) ? std::nan("")
                                                             : error_ratio(orth_avg, des_avg);
    rec.worst_ratio = std::isnan(orth_worst) || std::isnan(mm_worst)
                          ? std::nan("")
                          : error_ratio(orth_worst, mm_worst);
    note(log, "array " + std::to_string(a) + ": ratio " + std::to_string(rec.ratio));
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<MultipathRow> run_multipath_study(const ScenarioConfig& config,
                                              const ProgressFn& log) {
  const ChannelOptions los{false, 1.0};
  const ChannelOptions mp{true, 1.0};
  const Scenario los_sc = prepare_scenario(config, 0, {los, {}});
  const Scenario mp_fixed = prepare_scenario(config, 0, {mp, los});
  const Scenario mp_recal = prepare_scenario(config, 0, {mp, {}});

  struct Channel {
    const char* name;
    const Scenario* fixed;
    const Scenario* recal;
  };
  const std::array<Channel, 2> channels{Channel{"los", &los_sc, &los_sc},
                                        Channel{"multipath", &mp_fixed, &mp_recal}};
  std::vector<MultipathRow> rows;
  for (const auto& ch : channels) {
    const PairDistanceTable fixed_pairs = design_pair_table(config, *ch.fixed, ch.fixed->table);
    const PairDistanceTable recal_pairs =
        ch.recal == ch.fixed ? fixed_pairs : design_pair_table(config, *ch.recal, ch.recal->table);
    for (std::size_t si = 0; si < config.snr_db.size(); ++si) {
      const double snr = config.snr_db[si];
      const double sigma = noise_sigma(config, snr);
      const std::uint64_t noise_seed = derive_seed(config.seed, "noise", {si});
      for (const Method m : config.methods) {
        try {
          MultipathRow row{ch.name, m, snr, {}, {}};
          const MethodCode fc = design_for_method(m, config, fixed_pairs, sigma);
          row.fixed_transmit =
              run_code(config, ch.fixed->table, ch.fixed->grid, fc.code, snr, noise_seed);
          if (ch.recal == ch.fixed) {
            row.received_reference = row.fixed_transmit;
          } else {
            const MethodCode rc = design_for_method(m, config, recal_pairs, sigma);
            row.received_reference =
                run_code(config, ch.recal->table, ch.recal->grid, rc.code, snr, noise_seed);
          }
          note(log, std::string(ch.name) + " " + context(m, snr) + "avg " +
                        std::to_string(row.fixed_transmit.average));
          rows.push_back(std::move(row));
        } catch (const Error& e) {
          throw Error(std::string(ch.name) + ", " + context(m, snr) + e.what());
        }
      }
    }
  }
  return rows;
}

std::vector<RobustnessRow> run_robustness_study(const ScenarioConfig& config,
                                                const ProgressFn& log) {
  if (config.design_snr_db.empty()) throw InvalidArgument("design-SNR list is empty");
  std::vector<Method> methods;
  for (const Method m : config.methods)
    if (m == Method::AverageDesign || m == Method::MinimaxDesign) methods.push_back(m);
  if (methods.empty()) methods = {Method::AverageDesign, Method::MinimaxDesign};

  const Scenario sc = prepare_scenario(config, 0, {ChannelOptions{config.multipath, 1.0}, {}});
  const double snr = config.eval_snr_db;
  const double sigma = noise_sigma(config, snr);
  const std::uint64_t noise_seed = derive_seed(config.seed, "noise", {0});
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> levels{inf};
  for (const double d : config.design_snr_db)
    if (std::find(levels.begin(), levels.end(), d) == levels.end()) levels.push_back(d);

  std::vector<RobustnessRow> rows;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const double level = levels[li];
    const std::size_t draws = std::isinf(level) ? 1 : config.design_draws;
    std::vector<std::vector<double>> avg(methods.size()), worst(methods.size());
    for (std::size_t d = 0; d < draws; ++d) {
      const ResponseTable noisy =
          perturb_table(sc.table, level, derive_seed(config.seed, "perturb", {li, d}));
      const PairDistanceTable pairs = design_pair_table(config, sc, noisy);
      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        try {
          const MethodCode mc = design_for_method(methods[mi], config, pairs, sigma);
          const ErrorReport r = run_code(config, sc.table, sc.grid, mc.code, snr, noise_seed);
          avg[mi].push_back(r.average);
          worst[mi].push_back(r.worst);
        } catch (const Error& e) {
          throw Error("design SNR " + std::to_string(level) + ", " + context(methods[mi], snr) +
                      e.what());
        }
      }
    }
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      const auto n = static_cast<double>(draws);
      double mean = 0.0, wmean = 0.0;
      for (std::size_t d = 0; d < draws; ++d) {
        mean += avg[mi][d];
        wmean += worst[mi][d];
      }
      mean /= n;
      wmean /= n;
      double ss = 0.0;
      for (const double v : avg[mi]) ss += (v - mean) * (v - mean);
      const double se = draws > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
      note(log, "design SNR " + std::to_string(level) + " " + context(methods[mi], snr) + "avg " +
                    std::to_string(mean));
      rows.push_back({level, methods[mi], mean, wmean, se, draws, config.seed});
    }
  }
  return rows;
}

}  // namespace tagcode
