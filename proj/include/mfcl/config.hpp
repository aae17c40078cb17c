#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfcl/density.hpp"
#include "mfcl/fields.hpp"
#include "mfcl/model.hpp"

namespace mfcl {

struct KernelSpec {
  enum class Kind { Zero, CuckerSmale };
  Kind kind = Kind::Zero;
  double beta = 1.0;
  double length = 1.0;
  double sigma = 1.0;
  /// Ball in (dv, dx) on which Lip(gamma) is certified.
  double cert_radius = 4.0;

  bool operator==(const KernelSpec&) const = default;
};

struct BumpSpec {
  double radius = 0.5;
  double amplitude = 0.0;

  bool operator==(const BumpSpec&) const = default;
};

struct ForceSpec {
  enum class Kind { Zero, Harmonic };
  Kind kind = Kind::Zero;
  double stiffness = 0.0;

  bool operator==(const ForceSpec&) const = default;
};

struct GridSpec {
  double half_width = 0.0;
  Index cells = 0;

  bool operator==(const GridSpec&) const = default;
};

struct ExperimentSpec {
  std::vector<Index> sizes{64, 128, 256, 512, 1024, 2048, 4096};
  Index replicates = 32;
  Index reference_size = 16384;
  double time = 1.0;

  bool operator==(const ExperimentSpec&) const = default;
};

/// Explicit initial cloud (d x N, uniform weights); overrides the density.
struct CloudSpec {
  std::vector<double> positions;
  std::vector<double> velocities;
  bool empty() const { return positions.empty(); }
  bool operator==(const CloudSpec&) const = default;
};

struct SimConfig {
  int dim = 1;
  Index particles = 256;
  double dt = 0.01;
  double horizon = 1.0;
  double eta = 0.0;
  double diffusion = 0.0;
  double decay = 0.0;
  KernelSpec kernel{};
  BumpSpec bump{};
  ForceSpec force{};
  InitialSpec initial{};
  CloudSpec cloud{};
  InitialField field{};
  GridSpec grid{};
  std::uint64_t seed = 1;
  Index replicates = 1;
  /// Steps between recorded states; 0 records only the initial and final state.
  Index report_every = 0;
  ExperimentSpec experiment{};

  Index steps() const;
  /// Radius of a phase-space ball containing the initial support.
  double initial_radius() const;
  bool evolves_field() const { return bump.amplitude != 0.0 || field.kind != InitialField::Kind::Zero; }

  bool operator==(const SimConfig&) const = default;
};

enum class ConfigErrorCode { Io, Syntax, UnknownKey, MissingKey, BadValue, BoxTooSmall };

class ConfigError : public std::runtime_error {
 public:
  ConfigError(ConfigErrorCode code, std::string key, const std::string& message)
      : std::runtime_error(message), code_(code), key_(std::move(key)) {}
  ConfigErrorCode code() const { return code_; }
  const std::string& key() const { return key_; }

 private:
  ConfigErrorCode code_;
  std::string key_;
};

const char* to_string(ConfigErrorCode code);

/// Kernel, bump, force and initial field built from a config.
struct Model {
  AlignmentKernel kernel;
  BumpSource bump;
  ExternalForce force;
  InitialField phi_in;
  double eta = 0.0;
};

Model make_model(const SimConfig& config);
BoundConstants bound_constants(const SimConfig& config, double horizon);
BoundConstants bound_constants(const SimConfig& config, const Model& model, double horizon);

/// support_radius(R0, T) + r + 3 sqrt(2 D T) + 2 h.
double required_half_width(const SimConfig& config);

/// Fills in automatic grid geometry, then checks ranges and the box size.
SimConfig validate(SimConfig config);

ChemGrid initial_grid(const SimConfig& config, const Model& model);

/// Initial ensemble for one replicate (explicit cloud or iid draws).
ParticleEnsemble initial_ensemble(const SimConfig& config, Index n, std::uint64_t replicate);

SimConfig parse_config_string(const std::string& text);
SimConfig parse_config(const std::filesystem::path& path);
/// Every field written explicitly, so parse(write(c)) == c.
std::string write_config(const SimConfig& config);

}  // namespace mfcl
