#include "mfcl/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "mfcl/format.hpp"

namespace mfcl {

namespace fs = std::filesystem;

namespace {

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string> header) {
    bool first = true;
    for (const auto& h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }
  Csv& header_cols(const std::vector<std::string>& cols) {
    // Only valid before any row; used when column count depends on dim.
    std::string s = out_.str();
    s.pop_back();
    for (const auto& c : cols) s += "," + c;
    out_.str("");
    out_ << s << '\n';
    return *this;
  }
  template <typename... T>
  void row(const T&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  void cells(const std::vector<std::string>& cs) {
    for (std::size_t k = 0; k < cs.size(); ++k) out_ << (k ? "," : "") << cs[k];
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

  static std::string cell(double x) { return format_real(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <typename I, typename = std::enable_if_t<std::is_integral_v<I>>>
  static std::string cell(I i) {
    return std::to_string(i);
  }

 private:
  std::ostringstream out_;
};

std::vector<std::string> axis_names(const char* prefix, int d) {
  std::vector<std::string> n;
  for (int k = 0; k < d; ++k) n.push_back(prefix + std::to_string(k));
  return n;
}

}  // namespace

std::string trajectory_csv(const Trajectory& tr) {
  const int d = tr.states.empty() ? 1 : tr.states.front().ensemble.dim();
  Csv csv{"t", "step", "particle"};
  auto cols = axis_names("x", d);
  for (auto& v : axis_names("v", d)) cols.push_back(v);
  cols.push_back("weight");
  csv.header_cols(cols);
  for (const auto& s : tr.states) {
    const auto& e = s.ensemble;
    for (Index i = 0; i < e.size(); ++i) {
      std::vector<std::string> cs{Csv::cell(s.t), Csv::cell(s.step), Csv::cell(i)};
      for (int k = 0; k < d; ++k) cs.push_back(Csv::cell(e.positions()(k, i)));
      for (int k = 0; k < d; ++k) cs.push_back(Csv::cell(e.velocities()(k, i)));
      cs.push_back(Csv::cell(e.weights()(i)));
      csv.cells(cs);
    }
  }
  return csv.str();
}

std::string monitor_csv(const Trajectory& tr) {
  Csv csv{"t", "max_speed", "velocity_bound", "velocity_slack", "max_radius", "support_bound",
          "support_slack", "printed_radius", "printed_slack", "field_max"};
  for (const auto& m : tr.monitor)
    csv.row(m.t, m.max_speed, m.velocity_bound, m.velocity_slack, m.max_radius, m.support_bound,
            m.support_slack, m.printed_radius, m.printed_slack, m.field_max);
  return csv.str();
}

std::string field_csv(const ChemGrid& grid) {
  Csv csv{"node"};
  auto cols = axis_names("x", grid.dim());
  cols.push_back("phi");
  csv.header_cols(cols);
  for (Index k = 0; k < grid.size(); ++k) {
    const Eigen::VectorXd p = grid.node_point(k);
    std::vector<std::string> cs{Csv::cell(k)};
    for (Index a = 0; a < p.size(); ++a) cs.push_back(Csv::cell(p(a)));
    cs.push_back(Csv::cell(grid.values()(k)));
    csv.cells(cs);
  }
  return csv.str();
}

std::string rate_table_csv(const RateTable& t) {
  Csv csv{"n", "replicates", "mean", "std_error"};
  for (const auto& r : t.rows) csv.row(r.n, r.replicates, r.mean, r.std_error);
  return csv.str();
}

std::string replicate_csv(const RateTable& t) {
  Csv csv{"n", "replicate", "value"};
  for (std::size_t k = 0; k < t.samples.size() && k < t.rows.size(); ++k)
    for (std::size_t r = 0; r < t.samples[k].size(); ++r) csv.row(t.rows[k].n, r, t.samples[k][r]);
  return csv.str();
}

std::string plan_csv(const TransportPlan& p) {
  Csv csv{"source", "target", "mass"};
  for (Index k = 0; k < p.size(); ++k) {
    const auto s = static_cast<std::size_t>(k);
    csv.row(p.source[s], p.target[s], p.mass[s]);
  }
  return csv.str();
}

std::string dobrushin_csv(const std::vector<DobrushinSample>& samples) {
  Csv csv{"t", "measured", "bound"};
  for (const auto& s : samples) csv.row(s.t, s.measured, s.bound);
  return csv.str();
}

std::string coupling_csv(const CoupledSeries& series) {
  Csv csv{"t", "distance", "envelope", "mismatch"};
  for (const auto& s : series.samples) csv.row(s.t, s.distance, s.envelope, s.mismatch);
  return csv.str();
}

std::string euler_state_csv(const EulerState& s) {
  Csv csv{"x", "mu", "u", "psi"};
  const Eigen::VectorXd u = s.velocity();
  for (Index k = 0; k < s.cells(); ++k) {
    // psi interpolated linearly between its own nodes.
    const double f = (s.center(k) + s.psi.half_width()) / s.psi.spacing();
    const auto i0 = static_cast<Index>(std::floor(f));
    const double w = f - static_cast<double>(i0);
    const Index n = s.psi.cells();
    const double psi = (1.0 - w) * s.psi.values()((i0 % n + n) % n) +
                       w * s.psi.values()(((i0 + 1) % n + n) % n);
    csv.row(s.center(k), s.mu(k), u(k), psi);
  }
  return csv.str();
}

std::string euler_compare_csv(const EulerCompare& r) {
  Csv csv{"study", "n", "cells", "spacing", "mean", "std_error"};
  for (const auto& row : r.by_n) csv.row("n", row.n, row.cells, row.spacing, row.mean, row.std_error);
  for (const auto& row : r.by_h) csv.row("h", row.n, row.cells, row.spacing, row.mean, row.std_error);
  return csv.str();
}

std::string sha1_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

std::string sha1_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha1_hex(bytes);
}

nlohmann::json to_json(const BoundConstants& c) {
  return {{"lip_kernel", c.lip_kernel},
          {"lip_chi", c.lip_chi},
          {"lip_grad_chi", c.lip_grad_chi},
          {"lip_force", c.lip_force},
          {"sup_force", c.sup_force},
          {"lip_grad_phi_in", c.lip_grad_phi_in},
          {"sup_grad_phi_in", c.sup_grad_phi_in},
          {"eta", c.eta},
          {"horizon", c.horizon},
          {"gamma0", c.gamma0()},
          {"gamma1", c.gamma1()},
          {"gamma2", c.gamma2()},
          {"L_prime", c.Lprime()},
          {"M_prime", c.Mprime()},
          {"K_prime", c.Kprime()},
          {"growth_rate", c.growth_rate()},
          {"coupling_rate", c.coupling_rate()},
          {"Gamma_at_horizon", c.Gamma(c.horizon)}};
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["schema"] = m.schema;
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["config"] = m.config ? nlohmann::json(write_config(*m.config)) : nlohmann::json(nullptr);
  j["constants"] = m.constants ? to_json(*m.constants) : nlohmann::json(nullptr);
  j["criteria"] = m.criteria;
  j["results"] = m.results;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : m.files) files.push_back({{"name", f.name}, {"sha1", f.sha1}, {"bytes", f.bytes}});
  j["files"] = files;
  j["wall_seconds"] = m.wall_seconds;
  j["steps"] = m.steps;
  return j;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed: " + std::strerror(errno));
}

}  // namespace

std::vector<OutputFile> write_outputs(const std::map<std::string, std::string>& records,
                                      RunManifest& manifest, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
  manifest.files.clear();
  for (const auto& [name, content] : records) {
    require(name != "manifest.json" && name.find('/') == std::string::npos,
            "output names must be plain file names other than manifest.json");
    write_file(dir / name, content);
    manifest.files.push_back({name, sha1_hex(content), content.size()});
  }
  write_file(dir / "manifest.json", to_json(manifest).dump(2) + "\n");
  return manifest.files;
}

std::string verify_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) return "manifest.json missing";
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    return std::string("manifest.json unreadable: ") + e.what();
  }
  if (!j.contains("schema") || j["schema"] != kManifestSchema) return "schema version missing or unknown";
  for (const auto& f : j.at("files")) {
    const std::string name = f.at("name");
    std::string digest;
    try {
      digest = sha1_file(dir / name);
    } catch (const std::exception& e) {
      return e.what();
    }
    if (digest != f.at("sha1").get<std::string>()) return "digest mismatch for " + name;
  }
  return {};
}

}  // namespace mfcl
