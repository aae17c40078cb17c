#include "mfcl/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mfcl/format.hpp"

namespace mfcl {
namespace {

// Smallest multiple of 8 >= n with no prime factor above 5.
Index fft_friendly(Index n) {
  for (Index m = (n + 7) / 8 * 8;; m += 8) {
    Index r = m;
    for (Index p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& what) {
  throw ConfigError(ConfigErrorCode::BadValue, key, "bad value for '" + key + "': " + what);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    bad_value(key, "expected a number, got '" + s + "'");
  return v;
}

std::int64_t to_int(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    bad_value(key, "expected an integer, got '" + s + "'");
  return v;
}

std::vector<std::string> split_array(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') bad_value(key, "expected [a, b, ...]");
  std::vector<std::string> items;
  const std::string body = trim(s.substr(1, s.size() - 2));
  if (body.empty()) return items;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

// Walks one table, remembering which keys were consumed.
class Table {
 public:
  Table(const pt::ptree* node, std::string prefix) : node_(node), prefix_(std::move(prefix)) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!node_) return std::nullopt;
    const auto it = node_->find(key);
    if (it == node_->not_found()) return std::nullopt;
    return trim(it->second.data());
  }

  std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  double real(const std::string& key, double fallback) {
    const auto r = raw(key);
    return r ? to_double(name(key), *r) : fallback;
  }
  double required_real(const std::string& key) {
    const auto r = raw(key);
    if (!r) throw ConfigError(ConfigErrorCode::MissingKey, name(key), "missing required key '" + name(key) + "'");
    return to_double(name(key), *r);
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const auto r = raw(key);
    return r ? to_int(name(key), *r) : fallback;
  }
  std::int64_t required_integer(const std::string& key) {
    const auto r = raw(key);
    if (!r) throw ConfigError(ConfigErrorCode::MissingKey, name(key), "missing required key '" + name(key) + "'");
    return to_int(name(key), *r);
  }
  bool boolean(const std::string& key, bool fallback) {
    const auto r = raw(key);
    if (!r) return fallback;
    if (*r == "true") return true;
    if (*r == "false") return false;
    bad_value(name(key), "expected true or false");
  }
  std::string word(const std::string& key, const std::string& fallback) {
    const auto r = raw(key);
    if (!r) return fallback;
    std::string s = *r;
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
  }
  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    const auto r = raw(key);
    if (!r) return fallback;
    std::vector<double> out;
    for (const auto& item : split_array(name(key), *r)) out.push_back(to_double(name(key), item));
    return out;
  }
  std::vector<Index> integers(const std::string& key, std::vector<Index> fallback) {
    const auto r = raw(key);
    if (!r) return fallback;
    std::vector<Index> out;
    for (const auto& item : split_array(name(key), *r)) out.push_back(to_int(name(key), item));
    return out;
  }

  /// Any key present in the file but never asked for is an error.
  void finish(const std::set<std::string>& subtables = {}) const {
    if (!node_) return;
    for (const auto& [key, child] : *node_) {
      if (subtables.count(key)) continue;
      if (!used_.count(key))
        throw ConfigError(ConfigErrorCode::UnknownKey, name(key), "unknown key '" + name(key) + "'");
    }
  }

 private:
  const pt::ptree* node_;
  std::string prefix_;
  std::set<std::string> used_;
};

Marginal::Shape parse_shape(const std::string& key, const std::string& s) {
  if (s == "point") return Marginal::Shape::Point;
  if (s == "uniform") return Marginal::Shape::Uniform;
  if (s == "cosine") return Marginal::Shape::Cosine;
  bad_value(key, "expected point, uniform or cosine");
}

const char* shape_name(Marginal::Shape s) {
  switch (s) {
    case Marginal::Shape::Point:
      return "point";
    case Marginal::Shape::Uniform:
      return "uniform";
    case Marginal::Shape::Cosine:
      return "cosine";
  }
  return "uniform";
}

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) bad_value(key, what);
}

std::string join(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_real(v[i]);
  return s + "]";
}

std::string join(const std::vector<Index>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

}  // namespace

const char* to_string(ConfigErrorCode code) {
  switch (code) {
    case ConfigErrorCode::Io:
      return "io";
    case ConfigErrorCode::Syntax:
      return "syntax";
    case ConfigErrorCode::UnknownKey:
      return "unknown-key";
    case ConfigErrorCode::MissingKey:
      return "missing-key";
    case ConfigErrorCode::BadValue:
      return "bad-value";
    case ConfigErrorCode::BoxTooSmall:
      return "box-too-small";
  }
  return "unknown";
}

Index SimConfig::steps() const { return static_cast<Index>(std::llround(horizon / dt)); }

double SimConfig::initial_radius() const {
  if (cloud.empty()) return initial.support_radius(dim);
  double best = 0.0;
  const std::size_t n = cloud.positions.size() / static_cast<std::size_t>(dim);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(dim); ++k) {
      const double x = cloud.positions[j * static_cast<std::size_t>(dim) + k];
      const double v = cloud.velocities[j * static_cast<std::size_t>(dim) + k];
      s += x * x + v * v;
    }
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

Model make_model(const SimConfig& c) {
  Model m{c.kernel.kind == KernelSpec::Kind::CuckerSmale
              ? AlignmentKernel::cucker_smale(c.dim, {c.kernel.beta, c.kernel.length, c.kernel.sigma},
                                              c.kernel.cert_radius)
              : AlignmentKernel::zero(c.dim),
          BumpSource(c.dim, c.bump.radius, c.bump.amplitude),
          c.force.kind == ForceSpec::Kind::Harmonic
              ? ExternalForce::harmonic(c.dim, c.force.stiffness, c.grid.half_width)
              : ExternalForce::zero(c.dim),
          c.field, c.eta};
  return m;
}

BoundConstants bound_constants(const SimConfig& c, const Model& m, double horizon) {
  return bound_constants(m.kernel, m.bump, m.force, c.eta, horizon, c.field.lip_gradient(c.dim),
                         c.field.sup_gradient());
}

BoundConstants bound_constants(const SimConfig& c, double horizon) {
  return bound_constants(c, make_model(c), horizon);
}

double required_half_width(const SimConfig& c) {
  const auto consts = bound_constants(c, c.horizon);
  const double h = c.grid.cells > 0 ? 2.0 * c.grid.half_width / static_cast<double>(c.grid.cells) : 0.0;
  return support_radius(c.initial_radius(), c.horizon, consts) + c.bump.radius +
         3.0 * std::sqrt(2.0 * c.diffusion * c.horizon) + 2.0 * h;
}

SimConfig validate(SimConfig c) {
  check(c.dim >= 1 && c.dim <= 3, "dim", "must be 1, 2 or 3");
  check(c.dt > 0.0 && std::isfinite(c.dt), "dt", "must be positive");
  check(c.horizon >= 0.0 && std::isfinite(c.horizon), "horizon", "must be nonnegative");
  check(c.eta >= 0.0, "eta", "must be nonnegative");
  check(c.diffusion >= 0.0, "diffusion", "must be nonnegative");
  check(c.decay >= 0.0, "decay", "must be nonnegative");
  check(c.replicates >= 1, "replicates", "must be at least 1");
  check(c.report_every >= 0, "report_every", "must be nonnegative");
  const double ratio = c.horizon / c.dt;
  check(std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio), "dt",
        "horizon must be an integer multiple of dt");
  check(c.kernel.beta >= 0.0 && c.kernel.length > 0.0 && c.kernel.sigma >= 0.0, "kernel",
        "need beta >= 0, length > 0, sigma >= 0");
  check(c.kernel.cert_radius > 0.0, "kernel.cert_radius", "must be positive");
  check(c.bump.radius > 0.0, "bump.radius", "must be positive");
  check(c.force.stiffness >= 0.0, "force.stiffness", "must be nonnegative");
  check(c.field.kind == InitialField::Kind::Zero || c.field.width > 0.0, "field.width",
        "must be positive");
  check(c.initial.position.half_width >= 0.0 && c.initial.velocity.half_width >= 0.0,
        "initial", "half-widths must be nonnegative");
  if (!c.cloud.empty()) {
    const auto d = static_cast<std::size_t>(c.dim);
    check(c.cloud.positions.size() % d == 0 && c.cloud.positions.size() == c.cloud.velocities.size(),
          "initial.positions", "cloud needs dim * N positions and as many velocities");
    c.particles = static_cast<Index>(c.cloud.positions.size() / d);
  }
  check(c.particles >= 1, "particles", "must be at least 1");
  for (std::size_t i = 0; i < c.experiment.sizes.size(); ++i)
    check(c.experiment.sizes[i] >= 1 && (i == 0 || c.experiment.sizes[i] > c.experiment.sizes[i - 1]),
          "experiment.sizes", "must be positive and strictly increasing");
  check(c.experiment.replicates >= 1, "experiment.replicates", "must be at least 1");
  check(c.experiment.reference_size >= 1, "experiment.reference_size", "must be positive");
  check(c.experiment.time >= 0.0, "experiment.time", "must be nonnegative");

  if (c.grid.half_width <= 0.0) {
    check(c.force.kind == ForceSpec::Kind::Zero, "grid.half_width",
          "an explicit box is required with a harmonic force");
    const double need = required_half_width(c);
    c.grid.half_width = std::ceil(1.05 * need + 0.5 * c.bump.radius);
  }
  if (c.grid.cells <= 0) {
    const double target_h = c.bump.radius / 8.0;
    const auto n = static_cast<Index>(std::ceil(2.0 * c.grid.half_width / target_h));
    c.grid.cells = fft_friendly(std::max<Index>(64, n));
  }
  check(c.grid.cells >= 8 && c.grid.cells % 2 == 0, "grid.cells", "must be even and at least 8");

  const double need = required_half_width(c);
  if (c.grid.half_width < need)
    throw ConfigError(ConfigErrorCode::BoxTooSmall, "grid.half_width",
                      "box half-width " + format_real(c.grid.half_width) +
                          " is below the required support_radius(R0, T) + r + 3 sqrt(2 D T) + 2 h = " +
                          format_real(need));
  return c;
}

ChemGrid initial_grid(const SimConfig& c, const Model& m) {
  return initial_grid(c.dim, c.grid.half_width, c.grid.cells, c.diffusion, c.decay, m.phi_in);
}

ParticleEnsemble initial_ensemble(const SimConfig& c, Index n, std::uint64_t replicate) {
  if (c.cloud.empty()) return sample_initial(c.initial, c.dim, n, c.seed, replicate);
  const Index count = static_cast<Index>(c.cloud.positions.size()) / c.dim;
  Eigen::MatrixXd x = Eigen::Map<const Eigen::MatrixXd>(c.cloud.positions.data(), c.dim, count);
  Eigen::MatrixXd v = Eigen::Map<const Eigen::MatrixXd>(c.cloud.velocities.data(), c.dim, count);
  return ParticleEnsemble::uniform(std::move(x), std::move(v));
}

SimConfig parse_config_string(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(ConfigErrorCode::Syntax, "", std::string("config syntax error: ") + e.what());
  }
  auto child = [&](const char* name) -> const pt::ptree* {
    const auto it = tree.find(name);
    if (it == tree.not_found()) return nullptr;
    if (it->second.empty() && !it->second.data().empty())
      throw ConfigError(ConfigErrorCode::Syntax, name, std::string("'") + name + "' must be a table");
    return &it->second;
  };

  SimConfig c;
  Table top(&tree, "");
  c.dim = static_cast<int>(top.required_integer("dim"));
  c.dt = top.required_real("dt");
  c.horizon = top.required_real("horizon");
  c.particles = top.integer("particles", c.particles);
  c.eta = top.real("eta", c.eta);
  c.diffusion = top.real("diffusion", c.diffusion);
  c.decay = top.real("decay", c.decay);
  c.seed = static_cast<std::uint64_t>(top.integer("seed", static_cast<std::int64_t>(c.seed)));
  c.replicates = top.integer("replicates", c.replicates);
  c.report_every = top.integer("report_every", c.report_every);

  const std::set<std::string> tables{"kernel", "bump", "force", "initial", "field", "grid", "experiment"};
  for (const auto& [key, node] : tree)
    if (tables.count(key) && (!node.empty() || node.data().empty())) continue;
    else if (!node.empty())
      throw ConfigError(ConfigErrorCode::UnknownKey, key, "unknown table '[" + key + "]'");

  Table kernel(child("kernel"), "kernel");
  const std::string kk = kernel.word("kind", "zero");
  if (kk == "zero")
    c.kernel.kind = KernelSpec::Kind::Zero;
  else if (kk == "cucker_smale")
    c.kernel.kind = KernelSpec::Kind::CuckerSmale;
  else
    bad_value("kernel.kind", "expected zero or cucker_smale");
  c.kernel.beta = kernel.real("beta", c.kernel.beta);
  c.kernel.length = kernel.real("length", c.kernel.length);
  c.kernel.sigma = kernel.real("sigma", c.kernel.sigma);
  c.kernel.cert_radius = kernel.real("cert_radius", c.kernel.cert_radius);
  kernel.finish();

  Table bump(child("bump"), "bump");
  c.bump.radius = bump.real("radius", c.bump.radius);
  c.bump.amplitude = bump.real("amplitude", c.bump.amplitude);
  bump.finish();

  Table force(child("force"), "force");
  const std::string fk = force.word("kind", "zero");
  if (fk == "zero")
    c.force.kind = ForceSpec::Kind::Zero;
  else if (fk == "harmonic")
    c.force.kind = ForceSpec::Kind::Harmonic;
  else
    bad_value("force.kind", "expected zero or harmonic");
  c.force.stiffness = force.real("stiffness", c.force.stiffness);
  force.finish();

  Table init(child("initial"), "initial");
  c.initial.position.shape = parse_shape("initial.position", init.word("position", "uniform"));
  c.initial.position.center = init.real("center", c.initial.position.center);
  c.initial.position.half_width = init.real("half_width", c.initial.position.half_width);
  c.initial.monokinetic = init.boolean("monokinetic", c.initial.monokinetic);
  c.initial.profile.offset = init.real("u_offset", c.initial.profile.offset);
  c.initial.profile.slope = init.real("u_slope", c.initial.profile.slope);
  c.initial.profile.amplitude = init.real("u_amplitude", c.initial.profile.amplitude);
  c.initial.profile.wavenumber = init.real("u_wavenumber", c.initial.profile.wavenumber);
  c.initial.velocity.shape = parse_shape("initial.velocity", init.word("velocity", "point"));
  c.initial.velocity.center = init.real("velocity_center", c.initial.velocity.center);
  c.initial.velocity.half_width = init.real("velocity_half_width", c.initial.velocity.half_width);
  c.cloud.positions = init.reals("positions", {});
  c.cloud.velocities = init.reals("velocities", {});
  init.finish();

  Table field(child("field"), "field");
  const std::string phk = field.word("kind", "zero");
  if (phk == "zero")
    c.field.kind = InitialField::Kind::Zero;
  else if (phk == "gaussian")
    c.field.kind = InitialField::Kind::Gaussian;
  else
    bad_value("field.kind", "expected zero or gaussian");
  c.field.amplitude = field.real("amplitude", c.field.amplitude);
  c.field.width = field.real("width", c.field.width);
  field.finish();

  Table grid(child("grid"), "grid");
  c.grid.half_width = grid.real("half_width", c.grid.half_width);
  c.grid.cells = grid.integer("cells", c.grid.cells);
  grid.finish();

  Table exp(child("experiment"), "experiment");
  c.experiment.sizes = exp.integers("sizes", c.experiment.sizes);
  c.experiment.replicates = exp.integer("replicates", c.experiment.replicates);
  c.experiment.reference_size = exp.integer("reference_size", c.experiment.reference_size);
  c.experiment.time = exp.real("time", c.experiment.time);
  exp.finish();

  top.finish(tables);
  return validate(std::move(c));
}

SimConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigErrorCode::Io, path.string(), "cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

std::string write_config(const SimConfig& c) {
  std::ostringstream o;
  o << "dim = " << c.dim << "\n"
    << "particles = " << c.particles << "\n"
    << "dt = " << format_real(c.dt) << "\n"
    << "horizon = " << format_real(c.horizon) << "\n"
    << "eta = " << format_real(c.eta) << "\n"
    << "diffusion = " << format_real(c.diffusion) << "\n"
    << "decay = " << format_real(c.decay) << "\n"
    << "seed = " << c.seed << "\n"
    << "replicates = " << c.replicates << "\n"
    << "report_every = " << c.report_every << "\n";
  o << "\n[kernel]\n"
    << "kind = \"" << (c.kernel.kind == KernelSpec::Kind::CuckerSmale ? "cucker_smale" : "zero") << "\"\n"
    << "beta = " << format_real(c.kernel.beta) << "\n"
    << "length = " << format_real(c.kernel.length) << "\n"
    << "sigma = " << format_real(c.kernel.sigma) << "\n"
    << "cert_radius = " << format_real(c.kernel.cert_radius) << "\n";
  o << "\n[bump]\n"
    << "radius = " << format_real(c.bump.radius) << "\n"
    << "amplitude = " << format_real(c.bump.amplitude) << "\n";
  o << "\n[force]\n"
    << "kind = \"" << (c.force.kind == ForceSpec::Kind::Harmonic ? "harmonic" : "zero") << "\"\n"
    << "stiffness = " << format_real(c.force.stiffness) << "\n";
  o << "\n[initial]\n"
    << "position = \"" << shape_name(c.initial.position.shape) << "\"\n"
    << "center = " << format_real(c.initial.position.center) << "\n"
    << "half_width = " << format_real(c.initial.position.half_width) << "\n"
    << "monokinetic = " << (c.initial.monokinetic ? "true" : "false") << "\n"
    << "u_offset = " << format_real(c.initial.profile.offset) << "\n"
    << "u_slope = " << format_real(c.initial.profile.slope) << "\n"
    << "u_amplitude = " << format_real(c.initial.profile.amplitude) << "\n"
    << "u_wavenumber = " << format_real(c.initial.profile.wavenumber) << "\n"
    << "velocity = \"" << shape_name(c.initial.velocity.shape) << "\"\n"
    << "velocity_center = " << format_real(c.initial.velocity.center) << "\n"
    << "velocity_half_width = " << format_real(c.initial.velocity.half_width) << "\n";
  if (!c.cloud.empty())
    o << "positions = " << join(c.cloud.positions) << "\n"
      << "velocities = " << join(c.cloud.velocities) << "\n";
  o << "\n[field]\n"
    << "kind = \"" << (c.field.kind == InitialField::Kind::Gaussian ? "gaussian" : "zero") << "\"\n"
    << "amplitude = " << format_real(c.field.amplitude) << "\n"
    << "width = " << format_real(c.field.width) << "\n";
  o << "\n[grid]\n"
    << "half_width = " << format_real(c.grid.half_width) << "\n"
    << "cells = " << c.grid.cells << "\n";
  o << "\n[experiment]\n"
    << "sizes = " << join(c.experiment.sizes) << "\n"
    << "replicates = " << c.experiment.replicates << "\n"
    << "reference_size = " << c.experiment.reference_size << "\n"
    << "time = " << format_real(c.experiment.time) << "\n";
  return o.str();
}

}  // namespace mfcl
