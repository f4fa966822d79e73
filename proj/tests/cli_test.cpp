#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rdot_cli/cli.hpp"
#include "rdot_cli/problem.hpp"

namespace rdot::cli {
namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("rdot_cli_test_" +
            std::string(::testing::UnitTest::GetInstance()
                             ->current_test_info()
                             ->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream(path) << content;
    return path.string();
  }

  std::filesystem::path dir_;
};

TEST(ParseGrid, LogSpacedAndLists) {
  const auto g = parse_grid("0.01:100:5");
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 0.01);
  EXPECT_DOUBLE_EQ(g.back(), 100.0);
  EXPECT_NEAR(g[2], 1.0, 1e-12);
  EXPECT_EQ(parse_grid("3"), std::vector<double>{3.0});
  EXPECT_EQ(parse_grid("1,2.5"), (std::vector<double>{1.0, 2.5}));
  EXPECT_THROW(parse_grid("0:1:3"), ProblemError);
  EXPECT_THROW(parse_grid("1:2:x"), ProblemError);
  EXPECT_THROW(parse_grid("-1"), ProblemError);
}

TEST(ParseLevels, SingleAndRange) {
  EXPECT_EQ(parse_levels("4"), std::vector<std::size_t>{4});
  EXPECT_EQ(parse_levels("2:4"), (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_THROW(parse_levels("0"), ProblemError);
  EXPECT_THROW(parse_levels("3:1"), ProblemError);
  EXPECT_THROW(parse_levels("a"), ProblemError);
}

TEST(Problem, ParsesSourceAndChannel) {
  const auto src = parse_problem(nlohmann::json::parse(
      R"({"kind":"source","atoms":[0,1,2],"weights":[0.2,0.3,0.5]})"));
  ASSERT_TRUE(src.source);
  EXPECT_EQ(src.source->distortion, Distortion::kSquared);
  EXPECT_EQ(src.source->reproduction_atoms, (std::vector<double>{0, 1, 2}));
  const auto ch = parse_problem(
      nlohmann::json::parse(R"({"kind":"channel","matrix":[[1,0],[0.5,0.5]]})"));
  ASSERT_TRUE(ch.channel);
  EXPECT_EQ(ch.channel->channel(1, 0), 0.5);
  const auto cat = parse_problem(
      nlohmann::json::parse(R"({"kind":"source","weights":[0.5,0.5]})"));
  EXPECT_EQ(cat.source->distortion, Distortion::kHamming);
}

TEST(Problem, ErrorsNameTheField) {
  auto message = [](const char* text) {
    try {
      parse_problem(nlohmann::json::parse(text));
    } catch (const ProblemError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_EQ(message(R"({"kind":"source","weights":[0.5,"x"]})").rfind("weights[1]", 0), 0u);
  EXPECT_EQ(message(R"({"kind":"source","weights":[0.6,0.6]})").rfind("weights", 0), 0u);
  EXPECT_EQ(message(R"({"kind":"channel","matrix":[[0.5,0.6]]})").rfind("matrix", 0), 0u);
  EXPECT_EQ(message(R"({"kind":"channel","matrix":[[1],[0.5,0.5]]})").rfind("matrix[1]", 0), 0u);
  EXPECT_EQ(message(R"({"kind":"thing"})").rfind("kind", 0), 0u);
  EXPECT_EQ(message(R"({"fixture":"nope"})").rfind("fixture", 0), 0u);
  EXPECT_EQ(message(R"({"kind":"source","weights":[1],"distortion":"l1"})").rfind("distortion", 0), 0u);
}

TEST(CmdRd, BinaryHammingComparison) {
  const auto r = run_cli({"rd", "--fixture", "binary-hamming", "-m", "both",
                          "-l", "0.1:20:20", "-f", "json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["version"], version());
  EXPECT_EQ(j["curves"]["ba"].size(), 20u);
  EXPECT_EQ(j["curves"]["sinkhorn"].size(), 20u);
  EXPECT_LE(j["comparison"]["max_abs_delta_rate_nats"].get<double>(), 1e-3);
  EXPECT_TRUE(j["converged"].get<bool>());
  for (const auto& p : j["curves"]["ba"]) {
    EXPECT_TRUE(p["converged"].get<bool>());
    EXPECT_NEAR(p["rate_bits"].get<double>(),
                p["rate_nats"].get<double>() / std::log(2.0), 1e-15);
  }
}

TEST(CmdRd, SingleLambdaGivesOneRow) {
  const auto r = run_cli({"rd", "--fixture", "fig-sd-rd-5atom", "-m", "ba",
                          "-l", "2"});
  ASSERT_EQ(r.code, kExitOk);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"lambda", "rate_nats",
                                               "rate_bits", "distortion",
                                               "method", "converged"}));
  EXPECT_EQ(rows[1][0], "2");
  EXPECT_EQ(rows[1][4], "ba");
  EXPECT_EQ(rows[1][5], "true");
}

TEST(CmdRd, NonConvergenceExitsTwo) {
  const auto r = run_cli({"rd", "--fixture", "fig-sd-rd-5atom", "-m", "ba",
                          "-l", "1e-4", "--ba-tol", "1e-300"});
  EXPECT_EQ(r.code, kExitNotConverged);
}

TEST(CmdRd, RejectsChannelInput) {
  EXPECT_EQ(run_cli({"rd", "--fixture", "bsc-0.11"}).code, kExitInputError);
  EXPECT_EQ(run_cli({"rd"}).code, kExitInputError);
  EXPECT_EQ(run_cli({"rd", "--fixture", "nope"}).code, kExitInputError);
  EXPECT_EQ(run_cli({"rd", "--fixture", "binary-hamming", "-l", "1:0:3"}).code,
            kExitInputError);
}

TEST(CmdQuantize, AllMethodsAgreeOnFixture) {
  const auto r = run_cli({"quantize", "--fixture", "fig-sq-emd-10atom", "-M",
                          "1:8", "-m", "all", "-r", "20"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 1u + 8 * 3);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"levels", "method",
                                               "distortion"}));
  for (std::size_t k = 1; k < rows.size(); k += 3) {
    const double exact = std::stod(rows[k + 2][2]);
    EXPECT_EQ(rows[k + 2][1], "exact");
    EXPECT_NEAR(std::stod(rows[k][2]), exact, 1e-9);
    EXPECT_NEAR(std::stod(rows[k + 1][2]), exact, 1e-9);
  }
}

TEST_F(TempDir, QuantizeEdgeCases) {
  const auto path = write(
      "src.json", R"({"kind":"source","atoms":[0,1,3],"weights":[0.25,0.5,0.25]})");
  const auto many = run_cli({"quantize", path, "-M", "3:4", "-m", "all"});
  ASSERT_EQ(many.code, kExitOk);
  for (const auto& row : parse_csv(many.out)) {
    if (row[0] != "levels") EXPECT_EQ(std::stod(row[2]), 0.0);
  }
  const auto one = run_cli({"quantize", path, "-M", "1", "-m", "lloyd"});
  const auto rows = parse_csv(one.out);
  // Variance of the source: mean 1.25, E[x^2] = 0.5 + 2.25 = 2.75.
  EXPECT_NEAR(std::stod(rows[1][2]), 2.75 - 1.25 * 1.25, 1e-12);
}

TEST(CmdCapacity, ArimotoOnBsc) {
  const auto r =
      run_cli({"capacity", "--fixture", "bsc-0.11", "-m", "ba", "-f", "json"});
  ASSERT_EQ(r.code, kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  const double expected = std::log(2.0) + 0.11 * std::log(0.11) +
                          0.89 * std::log(0.89);
  EXPECT_NEAR(j["ba"]["capacity_nats"].get<double>(), expected, 1e-6);
  EXPECT_FALSE(j.contains("ot"));
}

TEST(CmdCapacity, BothReportsExperimentalDiscrepancy) {
  const auto r = run_cli(
      {"capacity", "--fixture", "bsc-0.11", "-m", "both", "-f", "json"});
  ASSERT_EQ(r.code, kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["ot"]["experimental"].get<bool>());
  EXPECT_TRUE(j["ot"].contains("discrepancy"));
  EXPECT_NEAR(j["ot"]["discrepancy"].get<double>(),
              j["ot"]["value_nats"].get<double>() -
                  j["ba"]["capacity_nats"].get<double>(),
              1e-12);
}

TEST_F(TempDir, CapacityIdentityChannel) {
  const auto path =
      write("id.json", R"({"kind":"channel","matrix":[[1,0],[0,1]]})");
  const auto r = run_cli({"capacity", path, "-m", "ba"});
  ASSERT_EQ(r.code, kExitOk);
  const auto rows = parse_csv(r.out);
  EXPECT_NEAR(std::stod(rows[1][1]), std::log(2.0), 1e-10);
  EXPECT_NEAR(std::stod(rows[1][2]), 1.0, 1e-10);
}

TEST_F(TempDir, OtExactAndSweep) {
  const auto a = write("a.json",
                       R"({"kind":"source","atoms":[0,1],"weights":[0.5,0.5]})");
  const auto b = write("b.json",
                       R"({"kind":"source","atoms":[2],"weights":[1]})");
  const auto self = run_cli({"ot", a, a});
  ASSERT_EQ(self.code, kExitOk);
  EXPECT_EQ(parse_csv(self.out)[1][1], "0");

  const auto point = run_cli({"ot", b, b});
  EXPECT_EQ(parse_csv(point.out)[1][1], "0");
  const auto c = write("c.json",
                       R"({"kind":"source","atoms":[-1],"weights":[1]})");
  const auto pair = run_cli({"ot", b, c, "-f", "json"});
  EXPECT_EQ(nlohmann::json::parse(pair.out)["results"][0]["cost"], 9.0);

  const auto sweep = run_cli({"ot", a, a, "--eps-sweep", "10,1,0.1"});
  ASSERT_EQ(sweep.code, kExitOk);
  const auto rows = parse_csv(sweep.out);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"eps", "cost", "kl",
                                               "objective"}));
  for (std::size_t k = 2; k < rows.size(); ++k) {
    EXPECT_LE(std::stod(rows[k][1]), std::stod(rows[k - 1][1]));
  }
}

TEST_F(TempDir, InputErrorsExitOne) {
  const auto bad = write("bad.json", R"({"kind":"source","weights":[0.4,0.7]})");
  const auto broken = write("broken.json", "{not json");
  const auto r = run_cli({"rd", bad});
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("weights"), std::string::npos);
  EXPECT_EQ(run_cli({"rd", broken}).code, kExitInputError);
  EXPECT_EQ(run_cli({"rd", (dir_ / "missing.json").string()}).code,
            kExitInputError);
  EXPECT_EQ(run_cli({"ot", bad}).code, kExitInputError);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kExitInputError);
}

TEST_F(TempDir, OutputFileIsDeterministic) {
  const auto first = (dir_ / "a.json").string();
  const auto second = (dir_ / "b.json").string();
  for (const auto& path : {first, second}) {
    ASSERT_EQ(run_cli({"quantize", "--fixture", "fig-sq-emd-10atom", "-M",
                       "1:4", "-f", "json", "-o", path})
                  .code,
              kExitOk);
  }
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_FALSE(slurp(first).empty());
  EXPECT_EQ(slurp(first), slurp(second));
}

TEST(Cli, HelpAndVersionExitZero) {
  EXPECT_EQ(run_cli({"--help"}).code, kExitOk);
  const auto v = run_cli({"--version"});
  EXPECT_EQ(v.code, kExitOk);
  EXPECT_NE(v.out.find(version()), std::string::npos);
}

}  // namespace
}  // namespace rdot::cli
