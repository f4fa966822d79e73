#include "rdot_cli/problem.hpp"

#include <fstream>
#include <sstream>

#include "rdot/blahut_arimoto.hpp"
#include "rdot/fixtures.hpp"

namespace rdot::cli {

namespace {

using nlohmann::json;

std::vector<double> number_list(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) {
    throw ProblemError(field + ": expected a non-empty list of numbers");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ProblemError(field + "[" + std::to_string(i) +
                         "]: expected a number");
    }
    out.push_back(j[i].get<double>());
  }
  return out;
}

Distortion parse_distortion(const json& j) {
  if (!j.is_string()) throw ProblemError("distortion: expected a string");
  const auto s = j.get<std::string>();
  if (s == "squared") return Distortion::kSquared;
  if (s == "hamming") return Distortion::kHamming;
  throw ProblemError("distortion: unknown measure '" + s +
                     "' (expected squared or hamming)");
}

SourceProblem parse_source(const json& j) {
  if (!j.contains("weights")) throw ProblemError("weights: missing");
  auto weights = number_list(j.at("weights"), "weights");
  SourceProblem sp{DiscreteDistribution::uniform(1), {}, 0, Distortion::kSquared};
  try {
    if (j.contains("atoms")) {
      sp.source = DiscreteDistribution(number_list(j.at("atoms"), "atoms"),
                                       std::move(weights));
    } else {
      sp.source = DiscreteDistribution(std::move(weights));
    }
  } catch (const ProblemError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ProblemError(std::string("weights: ") + e.what());
  }
  sp.distortion = sp.source.has_atoms() ? Distortion::kSquared
                                        : Distortion::kHamming;
  if (j.contains("distortion")) sp.distortion = parse_distortion(j["distortion"]);

  if (sp.distortion == Distortion::kSquared) {
    if (!sp.source.has_atoms()) {
      throw ProblemError("atoms: squared distortion needs atom locations");
    }
    if (j.contains("reproduction_atoms")) {
      sp.reproduction_atoms =
          number_list(j["reproduction_atoms"], "reproduction_atoms");
    } else {
      const auto a = sp.source.atoms();
      sp.reproduction_atoms.assign(a.begin(), a.end());
    }
    sp.reproduction_size = sp.reproduction_atoms.size();
  } else {
    if (j.contains("reproduction_atoms")) {
      throw ProblemError(
          "reproduction_atoms: not used with hamming distortion");
    }
    sp.reproduction_size = sp.source.size();
  }
  return sp;
}

ChannelProblem parse_channel(const json& j) {
  if (!j.contains("matrix")) throw ProblemError("matrix: missing");
  const json& rows = j["matrix"];
  if (!rows.is_array() || rows.empty()) {
    throw ProblemError("matrix: expected a non-empty list of rows");
  }
  const auto first = number_list(rows[0], "matrix[0]");
  Matrix m(rows.size(), first.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string field = "matrix[" + std::to_string(i) + "]";
    const auto row = number_list(rows[i], field);
    if (row.size() != first.size()) {
      throw ProblemError(field + ": expected " + std::to_string(first.size()) +
                         " entries");
    }
    for (std::size_t k = 0; k < row.size(); ++k) m(i, k) = row[k];
  }
  try {
    validate_channel(m);
  } catch (const std::invalid_argument& e) {
    throw ProblemError(std::string("matrix: ") + e.what());
  }
  return {std::move(m)};
}

}  // namespace

DistortionMatrix SourceProblem::distortion_matrix() const {
  if (distortion == Distortion::kHamming) {
    return hamming_matrix(source.size(), reproduction_size);
  }
  return squared_error_matrix(source.atoms(), reproduction_atoms);
}

const char* to_string(Distortion d) {
  return d == Distortion::kSquared ? "squared" : "hamming";
}

const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{
      "fig-sd-rd-5atom", "fig-sq-emd-10atom", "binary-hamming", "bsc-0.11"};
  return names;
}

Problem load_fixture(const std::string& name) {
  Problem p;
  p.fixture = name;
  auto squared = [](DiscreteDistribution d) {
    const auto a = d.atoms();
    return SourceProblem{d, std::vector<double>(a.begin(), a.end()), a.size(),
                         Distortion::kSquared};
  };
  if (name == "fig-sd-rd-5atom") {
    p.source = squared(fixtures::five_atom_source());
  } else if (name == "fig-sq-emd-10atom") {
    p.source = squared(fixtures::ten_atom_source());
  } else if (name == "binary-hamming") {
    p.source = SourceProblem{fixtures::binary_uniform_source(), {}, 2,
                             Distortion::kHamming};
  } else if (name == "bsc-0.11") {
    p.channel = ChannelProblem{fixtures::binary_symmetric_channel(0.11)};
  } else {
    throw ProblemError("fixture: unknown name '" + name + "'");
  }
  return p;
}

Problem parse_problem(const json& j) {
  if (!j.is_object()) throw ProblemError("problem: expected a JSON object");
  if (j.contains("fixture")) {
    if (!j["fixture"].is_string()) {
      throw ProblemError("fixture: expected a string");
    }
    return load_fixture(j["fixture"].get<std::string>());
  }
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw ProblemError("kind: expected \"source\" or \"channel\"");
  }
  const auto kind = j["kind"].get<std::string>();
  Problem p;
  if (kind == "source") {
    p.source = parse_source(j);
  } else if (kind == "channel") {
    p.channel = parse_channel(j);
  } else {
    throw ProblemError("kind: expected \"source\" or \"channel\", got '" +
                       kind + "'");
  }
  return p;
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemError(path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ProblemError(path + ": " + e.what());
  }
  return parse_problem(j);
}

nlohmann::ordered_json describe(const Problem& p) {
  using ojson = nlohmann::ordered_json;
  ojson j = ojson::object();
  if (p.fixture) j["fixture"] = *p.fixture;
  if (p.source) {
    const auto& s = *p.source;
    j["kind"] = "source";
    if (s.source.has_atoms()) {
      j["atoms"] = std::vector<double>(s.source.atoms().begin(),
                                       s.source.atoms().end());
    }
    j["weights"] = std::vector<double>(s.source.weights().begin(),
                                       s.source.weights().end());
    j["distortion"] = to_string(s.distortion);
    if (s.distortion == Distortion::kSquared) {
      j["reproduction_atoms"] = s.reproduction_atoms;
    } else {
      j["reproduction_size"] = s.reproduction_size;
    }
  }
  if (p.channel) {
    j["kind"] = "channel";
    ojson rows = ojson::array();
    for (Eigen::Index i = 0; i < p.channel->channel.rows(); ++i) {
      ojson row = ojson::array();
      for (Eigen::Index k = 0; k < p.channel->channel.cols(); ++k) {
        row.push_back(p.channel->channel(i, k));
      }
      rows.push_back(std::move(row));
    }
    j["matrix"] = std::move(rows);
  }
  return j;
}

}  // namespace rdot::cli
