#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdot/measures.hpp"

namespace rdot::cli {

/// Thrown for malformed problem files; the message names the field.
struct ProblemError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Distortion { kSquared, kHamming };

struct SourceProblem {
  DiscreteDistribution source;
  /// Reproduction grid; empty for Hamming on a categorical source.
  std::vector<double> reproduction_atoms;
  std::size_t reproduction_size = 0;
  Distortion distortion = Distortion::kSquared;

  DistortionMatrix distortion_matrix() const;
};

struct ChannelProblem {
  Matrix channel;
};

struct Problem {
  /// Built-in fixture name when the problem came from one.
  std::optional<std::string> fixture;
  std::optional<SourceProblem> source;
  std::optional<ChannelProblem> channel;
};

/// Names accepted by --fixture and by a file's "fixture" field.
const std::vector<std::string>& fixture_names();

Problem load_fixture(const std::string& name);
Problem parse_problem(const nlohmann::json& j);
/// Reads and parses a problem file.
Problem load_problem(const std::string& path);

/// The problem as a resolved JSON object, for embedding in reports.
nlohmann::ordered_json describe(const Problem& p);

const char* to_string(Distortion d);

}  // namespace rdot::cli
