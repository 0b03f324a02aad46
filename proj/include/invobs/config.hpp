#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "invobs/matrix_io.hpp"
#include "invobs/polynomial.hpp"
#include "invobs/realization.hpp"
#include "invobs/state_space.hpp"
#include "invobs/types.hpp"

namespace invobs {

enum class RunMode { Synthesize, Reconstruct, Track, TrackUc, BoundCurve };
enum class InputSpec { Impulse, Step, Harmonic, RandomSeeded };

/// One experiment definition, read from a flat key = value file. The system
/// comes either from explicit matrices (A, B, C, D) or from a transfer
/// function (zeros, poles, gain) -- exactly one of the two.
struct ExperimentConfig {
  RunMode mode = RunMode::Synthesize;

  std::optional<Matrix> A, B, C, D;
  std::optional<std::vector<Complex>> tf_zeros, tf_poles;
  std::optional<double> tf_gain;

  std::int64_t n_d = 1;
  std::int64_t n_c = 0;
  std::int64_t nd_max = 30;       // bound_curve sweep end
  InitPolicy init_policy = InitPolicy::Zero;
  InputSpec input_spec = InputSpec::RandomSeeded;
  std::optional<std::uint64_t> seed;
  std::int64_t steps = 200;
  double amplitude = 1.0;
  double frequency = 0.05;        // harmonic input, rad/step
  Vector x0;                      // empty: zero
  std::string output_dir = "out";
  Poly controller_num, controller_den;  // empty: track_uc uses the preset
  Tolerances tol;

  StateSpace build_system() const {
    const bool have_mats = A && B && C && D;
    const bool have_tf = tf_zeros && tf_poles && tf_gain;
    require(have_mats != have_tf, errc::bad_config,
            "exactly one system source: matrices A,B,C,D or zeros,poles,gain");
    if (have_mats) return StateSpace(*A, *B, *C, *D);
    return zpk_to_ss(*tf_zeros, *tf_poles, *tf_gain);
  }

  void validate() const {
    build_system();
    require(input_spec != InputSpec::RandomSeeded || seed.has_value(), errc::bad_config,
            "input_spec = random_seeded requires a seed");
    require(n_d >= 1, errc::bad_config, "n_d must be at least 1");
    require(steps > 0, errc::bad_config, "steps must be positive");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

/// Complex scalar literal: "1.5", "0.5+0.5i", "0.5-0.5i".
inline Complex parse_complex(const std::string& text) {
  std::string t = trim(text);
  require(!t.empty(), errc::bad_config, "empty complex literal");
  if (t.back() == 'i' || t.back() == 'j') {
    t.pop_back();
    // split at the last +/- that is not an exponent sign
    for (std::size_t i = t.size(); i-- > 1;) {
      if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
        return {std::stod(t.substr(0, i)), std::stod(t[i] == '+' ? t.substr(i + 1) : t.substr(i))};
      }
    }
    return {0.0, std::stod(t)};  // pure imaginary
  }
  return {std::stod(t), 0.0};
}

inline std::string format_complex(const Complex& z) {
  if (z.imag() == 0.0) return format_full(z.real());
  std::string s = format_full(z.real());
  s += z.imag() >= 0.0 ? "+" : "-";
  s += format_full(std::abs(z.imag()));
  s += "i";
  return s;
}

/// Bracketed list of complex scalars: [1.5 0.5+0.5i 0.5-0.5i]
inline std::vector<Complex> parse_complex_list(const std::string& text) {
  std::string t = trim(text);
  require(t.size() >= 2 && t.front() == '[' && t.back() == ']', errc::bad_config,
          "list literal must be bracketed: " + text);
  std::stringstream ss(t.substr(1, t.size() - 2));
  std::vector<Complex> out;
  std::string tok;
  while (ss >> tok) out.push_back(parse_complex(tok));
  return out;
}

inline std::vector<double> parse_real_list(const std::string& text) {
  std::string t = trim(text);
  require(t.size() >= 2 && t.front() == '[' && t.back() == ']', errc::bad_config,
          "list literal must be bracketed: " + text);
  std::stringstream ss(t.substr(1, t.size() - 2));
  std::vector<double> out;
  double v = 0.0;
  while (ss >> v) out.push_back(v);
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, errc::bad_config, "expected key = value: " + line);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    require(!key.empty() && !val.empty(), errc::bad_config, "expected key = value: " + line);
    require(!kv.count(key), errc::bad_config, "duplicate key: " + key);
    kv[key] = val;
  }

  ExperimentConfig cfg;
  auto take = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  if (auto v = take("mode")) {
    if (*v == "synthesize") cfg.mode = RunMode::Synthesize;
    else if (*v == "reconstruct") cfg.mode = RunMode::Reconstruct;
    else if (*v == "track") cfg.mode = RunMode::Track;
    else if (*v == "track_uc") cfg.mode = RunMode::TrackUc;
    else if (*v == "bound_curve") cfg.mode = RunMode::BoundCurve;
    else fail(errc::bad_config, "unknown mode: " + *v);
  }
  if (auto v = take("A")) cfg.A = parse_matrix_literal(*v);
  if (auto v = take("B")) cfg.B = parse_matrix_literal(*v);
  if (auto v = take("C")) cfg.C = parse_matrix_literal(*v);
  if (auto v = take("D")) cfg.D = parse_matrix_literal(*v);
  if (auto v = take("zeros")) cfg.tf_zeros = detail::parse_complex_list(*v);
  if (auto v = take("poles")) cfg.tf_poles = detail::parse_complex_list(*v);
  if (auto v = take("gain")) cfg.tf_gain = std::stod(*v);
  if (auto v = take("n_d")) cfg.n_d = std::stoll(*v);
  if (auto v = take("n_c")) cfg.n_c = std::stoll(*v);
  if (auto v = take("nd_max")) cfg.nd_max = std::stoll(*v);
  if (auto v = take("init_policy")) {
    if (*v == "zero") cfg.init_policy = InitPolicy::Zero;
    else if (*v == "warm_start") cfg.init_policy = InitPolicy::WarmStart;
    else fail(errc::bad_config, "unknown init_policy: " + *v);
  }
  if (auto v = take("input_spec")) {
    if (*v == "impulse") cfg.input_spec = InputSpec::Impulse;
    else if (*v == "step") cfg.input_spec = InputSpec::Step;
    else if (*v == "harmonic") cfg.input_spec = InputSpec::Harmonic;
    else if (*v == "random_seeded") cfg.input_spec = InputSpec::RandomSeeded;
    else fail(errc::bad_config, "unknown input_spec: " + *v);
  }
  if (auto v = take("seed")) cfg.seed = static_cast<std::uint64_t>(std::stoull(*v));
  if (auto v = take("steps")) cfg.steps = std::stoll(*v);
  if (auto v = take("amplitude")) cfg.amplitude = std::stod(*v);
  if (auto v = take("frequency")) cfg.frequency = std::stod(*v);
  if (auto v = take("x0")) {
    const Matrix m = parse_matrix_literal(*v);
    require(m.cols() == 1 || m.rows() == 1, errc::bad_config, "x0 must be a vector literal");
    cfg.x0 = m.cols() == 1 ? Vector(m.col(0)) : Vector(m.row(0).transpose());
  }
  if (auto v = take("output_dir")) cfg.output_dir = *v;
  if (auto v = take("controller_num")) cfg.controller_num = detail::parse_real_list(*v);
  if (auto v = take("controller_den")) cfg.controller_den = detail::parse_real_list(*v);
  if (auto v = take("rank_tol")) cfg.tol.rank_tol = std::stod(*v);
  if (auto v = take("unit_circle_tol")) cfg.tol.unit_circle_tol = std::stod(*v);
  if (auto v = take("residual_tol")) cfg.tol.residual_tol = std::stod(*v);
  if (auto v = take("grid_points")) cfg.tol.grid_points = static_cast<int>(std::stoll(*v));

  require(kv.empty(), errc::bad_config,
          kv.empty() ? "" : "unknown config key: " + kv.begin()->first);
  cfg.validate();
  return cfg;
}

/// Canonical serialization; parse(serialize(cfg)) reproduces cfg exactly.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "mode = ";
  switch (cfg.mode) {
    case RunMode::Synthesize: os << "synthesize"; break;
    case RunMode::Reconstruct: os << "reconstruct"; break;
    case RunMode::Track: os << "track"; break;
    case RunMode::TrackUc: os << "track_uc"; break;
    case RunMode::BoundCurve: os << "bound_curve"; break;
  }
  os << "\n";
  if (cfg.A) os << "A = " << format_matrix_literal(*cfg.A) << "\n";
  if (cfg.B) os << "B = " << format_matrix_literal(*cfg.B) << "\n";
  if (cfg.C) os << "C = " << format_matrix_literal(*cfg.C) << "\n";
  if (cfg.D) os << "D = " << format_matrix_literal(*cfg.D) << "\n";
  auto complex_list = [](const std::vector<Complex>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += " ";
      s += detail::format_complex(v[i]);
    }
    return s + "]";
  };
  if (cfg.tf_zeros) os << "zeros = " << complex_list(*cfg.tf_zeros) << "\n";
  if (cfg.tf_poles) os << "poles = " << complex_list(*cfg.tf_poles) << "\n";
  if (cfg.tf_gain) os << "gain = " << format_full(*cfg.tf_gain) << "\n";
  os << "n_d = " << cfg.n_d << "\n";
  os << "n_c = " << cfg.n_c << "\n";
  os << "nd_max = " << cfg.nd_max << "\n";
  os << "init_policy = " << (cfg.init_policy == InitPolicy::Zero ? "zero" : "warm_start") << "\n";
  os << "input_spec = ";
  switch (cfg.input_spec) {
    case InputSpec::Impulse: os << "impulse"; break;
    case InputSpec::Step: os << "step"; break;
    case InputSpec::Harmonic: os << "harmonic"; break;
    case InputSpec::RandomSeeded: os << "random_seeded"; break;
  }
  os << "\n";
  if (cfg.seed) os << "seed = " << *cfg.seed << "\n";
  os << "steps = " << cfg.steps << "\n";
  os << "amplitude = " << format_full(cfg.amplitude) << "\n";
  os << "frequency = " << format_full(cfg.frequency) << "\n";
  if (cfg.x0.size() > 0) os << "x0 = " << format_matrix_literal(cfg.x0) << "\n";
  os << "output_dir = " << cfg.output_dir << "\n";
  auto real_list = [](const Poly& p) {
    std::string s = "[";
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) s += " ";
      s += format_full(p[i]);
    }
    return s + "]";
  };
  if (!cfg.controller_num.empty()) os << "controller_num = " << real_list(cfg.controller_num) << "\n";
  if (!cfg.controller_den.empty()) os << "controller_den = " << real_list(cfg.controller_den) << "\n";
  os << "rank_tol = " << format_full(cfg.tol.rank_tol) << "\n";
  os << "unit_circle_tol = " << format_full(cfg.tol.unit_circle_tol) << "\n";
  os << "residual_tol = " << format_full(cfg.tol.residual_tol) << "\n";
  os << "grid_points = " << cfg.tol.grid_points << "\n";
  return os.str();
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), errc::io_failure, "cannot open config " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

}  // namespace invobs
