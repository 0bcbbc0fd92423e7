#pragma once

#include "semidelay/delays.hpp"
#include "semidelay/history.hpp"
#include "semidelay/integrator.hpp"
#include "semidelay/network.hpp"
#include "semidelay/systems.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semidelay {

enum class SystemKind { linear, cubic, neutral, odd_power };

std::string_view to_string(SystemKind kind);
std::optional<SystemKind> system_kind_from_string(std::string_view name);

struct SystemSpec {
  SystemKind kind = SystemKind::linear;
  /// Exponent parameter p of x^(2p+1); only read for odd_power.
  int power = 1;
  /// Number of delayed terms; only read for neutral.
  int m = 1;

  friend bool operator==(const SystemSpec&, const SystemSpec&) = default;
};

struct AnalysisSettings {
  double convergence_tol = 1e-3;
  double razumikhin_slack = 1e-9;

  friend bool operator==(const AnalysisSettings&, const AnalysisSettings&) = default;
};

/// Regression expectations carried by a scenario. Absent fields are not checked.
struct Expectation {
  std::optional<bool> converged;
  /// |alpha_observed - alpha_predicted| bound.
  std::optional<double> alpha_tol;
  /// Relative drift bound of the conserved quantity (constant-delay linear runs).
  std::optional<double> drift_tol;
  /// Lower bound on the residual decay factor (time-varying runs).
  std::optional<double> residual_decay;
  std::optional<bool> razumikhin_clean;

  bool empty() const noexcept {
    return !converged && !alpha_tol && !drift_tol && !residual_decay && !razumikhin_clean;
  }
  friend bool operator==(const Expectation&, const Expectation&) = default;
};

struct Scenario {
  std::string name;
  Index n = 1;
  SystemSpec system;
  /// 0-based; empty for the neutral kind.
  std::vector<Link> links;
  std::vector<DelayProfile> profiles;
  HistoryFunction history = HistoryFunction::constant(0.0, Vector::Zero(1));
  IntegrationConfig integration;
  AnalysisSettings analysis;
  Expectation expect;
  std::uint64_t seed = 0;

  /// Throws ModelError when the parts do not fit together.
  SystemRHS build_system() const;
  bool constant_delays() const;
  /// Builds the system and checks history coverage. Throws InputError naming the field.
  void validate() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses scenario text (JSON). Unknown or ill-typed keys raise InputError
/// whose field() is the key path, e.g. "integration.step".
Scenario parse_scenario(std::string_view text);
/// Reads and parses a file. A missing or unreadable file raises InputError("file").
Scenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const Scenario& s);

/// Every worked example, once with its time-varying delays and once with the
/// constant-delay limiting counterpart.
std::vector<Scenario> builtin_corpus();

}  // namespace semidelay
