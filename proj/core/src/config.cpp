#include "tagcode/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "tagcode/error.hpp"
#include "tagcode/rng.hpp"

namespace tagcode {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& text, const std::string& field) {
  const std::string t = lower(trim(text));
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ValidationError(field, "expected a number, got '" + text + "'");
  return v;
}

std::uint64_t to_u64(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ValidationError(field, "expected a nonnegative integer, got '" + text + "'");
  return v;
}

std::size_t to_size(const std::string& text, const std::string& field) {
  return static_cast<std::size_t>(to_u64(text, field));
}

bool to_bool(const std::string& text, const std::string& field) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ValidationError(field, "expected a boolean, got '" + text + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

Vec3 to_vec3(const std::string& text, const std::string& field) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) throw ValidationError(field, "expected three comma-separated numbers");
  return {to_double(parts[0], field), to_double(parts[1], field), to_double(parts[2], field)};
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt_double(v[i]);
  return out;
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

template <class E, std::size_t N>
E to_enum(const std::string& text, const std::string& field, const EnumName<E> (&names)[N]) {
  const std::string t = lower(trim(text));
  for (const auto& n : names)
    if (t == n.name) return n.value;
  std::string allowed;
  for (const auto& n : names) allowed += std::string(allowed.empty() ? "" : ", ") + n.name;
  throw ValidationError(field, "expected one of {" + allowed + "}, got '" + text + "'");
}

template <class E, std::size_t N>
std::string enum_text(E v, const EnumName<E> (&names)[N]) {
  for (const auto& n : names)
    if (n.value == v) return n.name;
  return "?";
}

constexpr EnumName<TagLayout> kLayouts[] = {{TagLayout::Random, "random"},
                                            {TagLayout::Tetrahedron, "tetrahedron"}};
constexpr EnumName<EulerConvention> kConventions[] = {{EulerConvention::IntrinsicZYZ, "zyz"},
                                                      {EulerConvention::IntrinsicZYX, "zyx"}};
constexpr EnumName<LossKind> kLosses[] = {{LossKind::AngleLoss, "angle"},
                                          {LossKind::RotationDistance, "rotation_distance"}};
constexpr EnumName<StepRule> kStepRules[] = {{StepRule::Armijo, "armijo"},
                                             {StepRule::Diminishing, "diminishing"}};
constexpr EnumName<PairPruning> kPrunings[] = {{PairPruning::Auto, "auto"},
                                               {PairPruning::Full, "full"},
                                               {PairPruning::Pruned, "pruned"}};

struct Entry {
  const char* key;  // "section.key"
  std::function<void(ScenarioConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

#define TAGCODE_ENTRY(KEY, MEMBER, PARSE, PRINT)                                          \
  Entry {                                                                                 \
    KEY, [](ScenarioConfig& c, const std::string& v, const std::string& f) {              \
      c.MEMBER = PARSE(v, f);                                                             \
    },                                                                                    \
        [](const ScenarioConfig& c) { return PRINT(c.MEMBER); }                           \
  }

std::string u64_text(std::uint64_t v) { return std::to_string(v); }
std::string bool_text(bool v) { return v ? "true" : "false"; }
std::string vec3_text(const Vec3& v) {
  return fmt_double(v.x()) + ", " + fmt_double(v.y()) + ", " + fmt_double(v.z());
}

std::vector<Method> to_methods(const std::string& text, const std::string& field) {
  std::vector<Method> out;
  for (const auto& name : split(text, ',')) {
    try {
      out.push_back(method_from_name(name));
    } catch (const InvalidArgument&) {
      throw ValidationError(field, "unknown method '" + name + "'");
    }
  }
  return out;
}

std::string methods_text(const std::vector<Method>& ms) {
  std::string out;
  for (std::size_t i = 0; i < ms.size(); ++i) out += (i ? ", " : "") + std::string(method_name(ms[i]));
  return out;
}

std::vector<double> to_list(const std::string& text, const std::string& field) {
  return parse_number_list(text, field);
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table{
      TAGCODE_ENTRY("geometry.antennas", geometry.antennas, to_size, u64_text),
      TAGCODE_ENTRY("geometry.antenna_side", geometry.antenna_side, to_double, fmt_double),
      TAGCODE_ENTRY("geometry.antenna_range", geometry.antenna_range, to_double, fmt_double),
      TAGCODE_ENTRY("geometry.tags", geometry.tags, to_size, u64_text),
      TAGCODE_ENTRY("geometry.tag_radius", geometry.tag_radius, to_double, fmt_double),
      Entry{"geometry.layout",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.geometry.layout = to_enum(v, f, kLayouts);
            },
            [](const ScenarioConfig& c) { return enum_text(c.geometry.layout, kLayouts); }},
      TAGCODE_ENTRY("geometry.reflectors", geometry.reflectors, to_size, u64_text),
      TAGCODE_ENTRY("geometry.reflector_distance", geometry.reflector_distance, to_double,
                    fmt_double),
      TAGCODE_ENTRY("geometry.wavelength", geometry.wavelength, to_double, fmt_double),
      TAGCODE_ENTRY("grid.size", grid_size, to_size, u64_text),
      Entry{"grid.convention",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.convention = to_enum(v, f, kConventions);
            },
            [](const ScenarioConfig& c) { return enum_text(c.convention, kConventions); }},
      TAGCODE_ENTRY("code.length", code_length, to_size, u64_text),
      Entry{"reflectivity.state0",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.reflectivity.state0.real(to_double(v, f));
            },
            [](const ScenarioConfig& c) { return fmt_double(c.reflectivity.state0.real()); }},
      Entry{"reflectivity.state0_imag",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.reflectivity.state0.imag(to_double(v, f));
            },
            [](const ScenarioConfig& c) { return fmt_double(c.reflectivity.state0.imag()); }},
      Entry{"reflectivity.state1",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.reflectivity.state1.real(to_double(v, f));
            },
            [](const ScenarioConfig& c) { return fmt_double(c.reflectivity.state1.real()); }},
      Entry{"reflectivity.state1_imag",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.reflectivity.state1.imag(to_double(v, f));
            },
            [](const ScenarioConfig& c) { return fmt_double(c.reflectivity.state1.imag()); }},
      TAGCODE_ENTRY("signal.received_power", received_power, to_double, fmt_double),
      TAGCODE_ENTRY("simulation.snr_db", snr_db, to_list, join_doubles),
      TAGCODE_ENTRY("simulation.eval_snr_db", eval_snr_db, to_double, fmt_double),
      TAGCODE_ENTRY("simulation.trials", trials, to_size, u64_text),
      TAGCODE_ENTRY("simulation.seed", seed, to_u64, u64_text),
      TAGCODE_ENTRY("simulation.methods", methods, to_methods, methods_text),
      Entry{"simulation.threads",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.threads = static_cast<unsigned>(to_u64(v, f));
            },
            [](const ScenarioConfig& c) { return std::to_string(c.threads); }},
      Entry{"loss.kind",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.loss.kind = to_enum(v, f, kLosses);
            },
            [](const ScenarioConfig& c) { return enum_text(c.loss.kind, kLosses); }},
      TAGCODE_ENTRY("loss.reference", loss.reference, to_vec3, vec3_text),
      TAGCODE_ENTRY("loss.wrap_azimuth", loss.wrap_azimuth, to_bool, bool_text),
      TAGCODE_ENTRY("multipath.enabled", multipath, to_bool, bool_text),
      TAGCODE_ENTRY("multipath.energy_normalization", energy_normalization, to_bool, bool_text),
      TAGCODE_ENTRY("study.arrays", arrays, to_size, u64_text),
      TAGCODE_ENTRY("study.design_snr_db", design_snr_db, to_list, join_doubles),
      TAGCODE_ENTRY("study.design_draws", design_draws, to_size, u64_text),
      TAGCODE_ENTRY("design.max_iterations", design.max_iterations, to_size, u64_text),
      TAGCODE_ENTRY("design.minimax_iterations", design.minimax_iterations, to_size, u64_text),
      TAGCODE_ENTRY("design.minimax_polish_iterations", design.minimax_polish_iterations, to_size,
                    u64_text),
      Entry{"design.step_rule",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.design.step_rule = to_enum(v, f, kStepRules);
            },
            [](const ScenarioConfig& c) { return enum_text(c.design.step_rule, kStepRules); }},
      TAGCODE_ENTRY("design.tolerance", design.tolerance, to_double, fmt_double),
      TAGCODE_ENTRY("design.step_scale", design.step_scale, to_double, fmt_double),
      TAGCODE_ENTRY("design.grid_size", design.design_grid_size, to_size, u64_text),
      Entry{"design.pair_pruning",
            [](ScenarioConfig& c, const std::string& v, const std::string& f) {
              c.design.pair_filter.mode = to_enum(v, f, kPrunings);
            },
            [](const ScenarioConfig& c) { return enum_text(c.design.pair_filter.mode, kPrunings); }},
      TAGCODE_ENTRY("design.nearest", design.pair_filter.nearest, to_size, u64_text),
      TAGCODE_ENTRY("design.theta_percentile", design.pair_filter.theta_percentile, to_double,
                    fmt_double),
      TAGCODE_ENTRY("design.full_table_limit", design.pair_filter.full_table_limit, to_size,
                    u64_text),
  };
  return table;
}

#undef TAGCODE_ENTRY

}  // namespace

std::vector<double> parse_number_list(std::string_view text, const std::string& field) {
  const std::string t = trim(text);
  if (t.empty()) throw ValidationError(field, "empty list");
  const auto dots = t.find("..");
  if (dots == std::string::npos) {
    std::vector<double> out;
    for (const auto& item : split(t, ',')) out.push_back(to_double(item, field));
    return out;
  }
  const double start = to_double(t.substr(0, dots), field);
  std::string rest = t.substr(dots + 2);
  double step = 1.0;
  const auto sp = lower(rest).find("step");
  if (sp != std::string::npos) {
    step = to_double(rest.substr(sp + 4), field);
    rest = rest.substr(0, sp);
  }
  const double stop = to_double(rest, field);
  if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0.0) || !std::isfinite(step))
    throw ValidationError(field, "range needs finite bounds and a positive step");
  if (stop < start) throw ValidationError(field, "range end is below its start");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (count > 100000) throw ValidationError(field, "range has too many values");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
  return out;
}

ScenarioConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message(), e.line());
  }
  ScenarioConfig config;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ValidationError(section, "key outside of any [section]");
    for (const auto& [key, value] : body) {
      const std::string field = section + "." + key;
      const Entry* entry = nullptr;
      for (const auto& e : entries())
        if (field == e.key) entry = &e;
      if (!entry) throw ValidationError(field, "unknown key");
      entry->set(config, value.data(), field);
    }
  }
  config.validate();
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'", 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string render_config(const ScenarioConfig& config) {
  std::string out;
  std::string section;
  for (const auto& e : entries()) {
    const std::string key = e.key;
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += key.substr(dot + 1) + " = " + e.get(config) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const ScenarioConfig& config) { return fnv1a64(render_config(config)); }

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tagcode
