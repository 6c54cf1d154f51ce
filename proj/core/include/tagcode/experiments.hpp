#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tagcode/channel.hpp"
#include "tagcode/codes.hpp"
#include "tagcode/criteria.hpp"
#include "tagcode/designer.hpp"
#include "tagcode/estimator.hpp"
#include "tagcode/geometry.hpp"

namespace tagcode {

enum class Method { RepOpt, Orthogonal, AverageDesign, MinimaxDesign };

std::string_view method_name(Method m);  // "REP_OPT", ...
Method method_from_name(std::string_view name);
const std::vector<Method>& all_methods();

enum class TagLayout { Random, Tetrahedron };
enum class Scale { Desk, Paper };

struct GeometrySpec {
  std::size_t antennas = 4;
  double antenna_side = 1.0;   // square side (m); antennas walk its perimeter
  double antenna_range = 4.0;  // distance of the antenna plane from the origin (m)
  std::size_t tags = 4;
  double tag_radius = 0.25;
  TagLayout layout = TagLayout::Random;
  std::size_t reflectors = 10;
  double reflector_distance = 1.0;
  double wavelength = 0.005;
};

struct ScenarioConfig {
  GeometrySpec geometry;
  std::size_t grid_size = 500;
  EulerConvention convention = EulerConvention::IntrinsicZYZ;
  std::size_t code_length = 24;
  ReflectivityMap reflectivity;
  // Mean received power per antenna that the transmit signal is calibrated
  // to; 0 means K, so that SNR = received power / (K / SNR) noise variance.
  double received_power = 0.0;
  std::vector<double> snr_db{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double eval_snr_db = 10.0;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  std::vector<Method> methods{Method::RepOpt, Method::Orthogonal, Method::AverageDesign,
                              Method::MinimaxDesign};
  bool multipath = false;
  bool energy_normalization = false;
  std::size_t arrays = 20;
  std::vector<double> design_snr_db{5, 10, 15};
  std::size_t design_draws = 10;
  LossOptions loss;
  DesignOptions design;
  unsigned threads = 0;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

// Scale::Paper: grid 4000, trials 500, arrays 200, design draws 50. Scale::Desk: the defaults.
void apply_scale(ScenarioConfig& config, Scale scale);

// Antenna positions, a tag layout, and reflectors for one array index.
ArrayGeometry make_geometry(const ScenarioConfig& config, std::size_t array_index);

/// Everything that one array needs before codes are chosen: calibrated
/// geometry, grid, and the table over all 2^N codewords.
struct Scenario {
  ArrayGeometry geometry;
  OrientationGrid grid;
  ResponseTable table;
  std::vector<std::size_t> design_indices;
  std::uint64_t array_seed = 0;
};

struct ScenarioOptions {
  ChannelOptions channel;
  // When set, calibrate the transmit power on this channel instead of `channel`.
  std::optional<ChannelOptions> calibration_channel;
};

Scenario prepare_scenario(const ScenarioConfig& config, std::size_t array_index,
                          const ScenarioOptions& opts = {});

struct MethodCode {
  Method method;
  Code code;
  std::optional<DesignResult> design;
};

/// Pair table over the scenario's design subsample, read from `table`
/// (the scenario's own table or a perturbed copy of it).
PairDistanceTable design_pair_table(const ScenarioConfig& config, const Scenario& scenario,
                                    const ResponseTable& table);

// Designs (or constructs) the code for one method at noise level sigma.
MethodCode design_for_method(Method m, const ScenarioConfig& config,
                             const PairDistanceTable& pairs, double sigma);

struct SweepRow {
  Method method;
  double snr_db;
  ErrorReport report;
  std::uint64_t seed;
};

struct ArrayRecord {
  std::size_t array_index;
  std::uint64_t array_seed;
  bool skipped = false;
  std::string skip_reason;
  std::vector<Method> methods;
  std::vector<double> average;  // per method, same order
  std::vector<double> worst;
  double ratio = 0.0;        // ORTHOGONAL / AVERAGE_DESIGN average error
  double worst_ratio = 0.0;  // ORTHOGONAL / MINIMAX_DESIGN worst error
};

struct MultipathRow {
  std::string channel;  // "los" or "multipath"
  Method method;
  double snr_db;
  ErrorReport fixed_transmit;     // transmit power calibrated on line of sight
  ErrorReport received_reference; // transmit recalibrated on this channel
};

struct RobustnessRow {
  double design_snr_db;  // +inf for perfect channel knowledge
  Method method;
  double avg_error;
  double worst_error;
  double avg_error_se;  // across design draws
  std::size_t draws;
  std::uint64_t seed;
};

using ProgressFn = std::function<void(const std::string&)>;

std::vector<SweepRow> run_snr_sweep(const ScenarioConfig& config, const ProgressFn& log = {});
std::vector<ArrayRecord> run_random_array_study(const ScenarioConfig& config,
                                                std::size_t num_arrays,
                                                const ProgressFn& log = {});
std::vector<MultipathRow> run_multipath_study(const ScenarioConfig& config,
                                              const ProgressFn& log = {});
std::vector<RobustnessRow> run_robustness_study(const ScenarioConfig& config,
                                                const ProgressFn& log = {});

// a / b with 0 / 0 = 1 and x / 0 = +inf.
double error_ratio(double a, double b);

}  // namespace tagcode
