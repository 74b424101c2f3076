#pragma once

// Config-driven experiments shared by the nodal_lab CLI and the acceptance
// runner. A config is flat key = value text with [sections]; see FORMATS.md.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nodal/types.hpp"

namespace nodal {

enum class ExperimentKind { Frequency, Ratio, Hodograph, LiouvilleFit, Corrector, Sweep, Hook, Convergence };

std::string_view kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Frequency;
  std::string name = "experiment";
  std::uint64_t seed = 0;

  // [field]
  std::vector<std::string> u;
  std::string v;
  /// Coefficient references; "catalog" expands to the whole catalog.
  std::vector<std::string> A{"identity"};
  std::vector<std::string> w;
  std::string family = "powers";

  // [params]
  double a = 0;
  double alpha = 0.5;
  double gamma = 0;
  double R = 0.5;
  double radius = 0.8;
  int N = 0;
  int n_max = 4;
  int level = 0;
  std::vector<int> levels;
  std::vector<double> radii;
  std::vector<double> epsilons;
  std::vector<double> angles;
  std::vector<double> a_values;
  std::vector<double> mesh_rotations{0.0};
  std::string centers = "origin";
  std::string mode = "degenerate";
  Vec2 x0 = Vec2::Zero();
  Vec2 seed_point = Vec2(0.5, 0.5);
  double r_min = 0.05;
  double r_max = 0.5;

  // [output]
  std::string out_dir = "out";

  /// Normalized "section.key = value" lines, sorted; hashed into the manifest.
  std::map<std::string, std::string> entries;
};

/// Throws Error(ConfigInvalid) on unknown keys or malformed values.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// Applies "section.key=value" (or "key=value" for top-level keys).
void apply_override(ExperimentConfig& config, const std::string& assignment);
/// Range and consistency checks; throws ConfigInvalid or ExponentBelowThreshold.
void validate(const ExperimentConfig& config);

struct ExperimentResult {
  int exit_code = 0;
  std::string error;    // error name, empty on success
  std::string message;
  /// File name -> contents.
  std::map<std::string, std::string> files;
  nlohmann::json summary;
};

/// Validates and runs. Exit code 2 for validation failures, 3 for numerical
/// ones; the error name is recorded either way.
ExperimentResult run_experiment(const ExperimentConfig& config, bool verbose = false);

/// Writes the files, summary.json and manifest.json (config hash,
/// tolerances, module versions, file hashes) into `dir`.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result, const std::string& dir);

std::string sha256_hex(const std::string& data);

}  // namespace nodal
