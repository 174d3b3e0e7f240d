#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "cyberneuron/lab.hpp"
#include "cyberneuron/neuron.hpp"

using namespace cyberneuron;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cyberneuron_lab_" + name);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("gen_patterns is seeded, distinct and validated") {
  const auto single = gen_patterns(1, 8, 8, 7);
  REQUIRE(single.size() == 1);
  CHECK(single[0].size() == 8);

  const auto a = gen_patterns(200, 8, 8, 42);
  const auto b = gen_patterns(200, 8, 8, 42);
  CHECK(a == b);
  CHECK(std::set<Pattern>(a.begin(), a.end()).size() == 200);
  for (const Pattern& p : a)
    for (std::uint32_t v : p) CHECK(v < 256);

  CHECK(gen_patterns(4, 1, 2, 1).size() == 4);  // the whole space
  CHECK_THROWS_AS(gen_patterns(5, 1, 2, 1), std::invalid_argument);
}

TEST_CASE("config validation ties bytes to the input geometry") {
  ExperimentConfig config;  // 8 bytes over 8x8: fine
  CHECK_NOTHROW(validate(config));
  config.pattern_bytes = 16;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
  config = {};
  config.pattern_count = 0;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
}

TEST_CASE("false recognition rate of a fresh or single-pattern neuron") {
  CyberNeuron neuron(8, 8);
  const auto trained = gen_patterns(1, 8, 8, 3);
  CHECK(false_recognition_rate(neuron, trained, 1000, 5) == 0.0);

  neuron.train_add(trained[0]);
  // probes never repeat the trained pattern, and a single stored pattern
  // needs all eight coordinates to match before the sum reaches threshold
  CHECK(false_recognition_rate(neuron, trained, 10'000, 5) == 0.0);
}

TEST_CASE("single-pattern capacity run converges immediately") {
  ExperimentConfig config;
  config.pattern_count = 1;
  config.probe_count = 2000;
  const ExperimentSeries series = capacity_experiment(config);
  REQUIRE(series.rows.size() == 1);
  CHECK(series.rows[0].epoch == 1);
  CHECK(series.rows[0].fraction_learned == 1.0);
  CHECK(series.rows[0].fraction_false == 0.0);
}

TEST_CASE("capacity regression: 200 random 8-byte patterns on an 8x256 neuron") {
  ExperimentConfig config;
  config.pattern_count = 200;
  config.seed = 1;
  const ExperimentSeries series = capacity_experiment(config);
  REQUIRE(!series.rows.empty());
  const SeriesRow& last = series.rows.back();
  CHECK(last.fraction_learned == 1.0);
  CHECK(series.epochs_to_full_recall() == 1);
  // frozen regression values for this seed
  CHECK(last.cumulative_rounds == 3041);
  CHECK(last.fraction_false == doctest::Approx(0.0232).epsilon(1e-9));
}

TEST_CASE("denser training raises the false-recognition rate") {
  ExperimentConfig small;
  small.pattern_count = 200;
  small.probe_count = 4000;
  ExperimentConfig big = small;
  big.pattern_count = 800;

  int agree = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    small.seed = big.seed = seed;
    const auto rs = capacity_experiment(small);
    const auto rb = capacity_experiment(big);
    REQUIRE(rs.rows.back().fraction_learned == 1.0);
    REQUIRE(rb.rows.back().fraction_learned == 1.0);
    if (rb.rows.back().fraction_false > rs.rows.back().fraction_false) ++agree;
    // the denser run also takes strictly more training work
    CHECK(rb.rows.back().cumulative_rounds > rs.rows.back().cumulative_rounds);
  }
  CHECK(agree == 3);
}

TEST_CASE("false rate does not grow with table size") {
  // paired seeds, m = 16 vs m = 256, majority direction
  int agree = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ExperimentConfig narrow;  // 16 inputs x 4 bits = 8 bytes
    narrow.n_inputs = 16;
    narrow.bits_per_input = 4;
    narrow.pattern_count = 40;
    narrow.probe_count = 4000;
    narrow.seed = seed;
    ExperimentConfig wide;  // 8 inputs x 8 bits = 8 bytes
    wide.pattern_count = 40;
    wide.probe_count = 4000;
    wide.seed = seed;
    const auto rn = capacity_experiment(narrow);
    const auto rw = capacity_experiment(wide);
    REQUIRE(rn.rows.back().fraction_learned == 1.0);
    REQUIRE(rw.rows.back().fraction_learned == 1.0);
    if (rn.rows.back().fraction_false >= rw.rows.back().fraction_false) ++agree;
  }
  CHECK(agree >= 2);
}

TEST_CASE("learning-rate sweep shares the seed and keys the csv by divider") {
  ExperimentConfig base;
  base.pattern_count = 50;
  base.probe_count = 1000;
  base.seed = 9;

  const std::vector<std::uint32_t> dividers{1, 4};
  const auto series = learning_rate_sweep(base, dividers);
  REQUIRE(series.size() == 2);
  CHECK(series[0].config.divider == 1);
  CHECK(series[1].config.divider == 4);
  // the big-step run can never need more epochs than the small-step one
  CHECK(series[0].epochs_to_full_recall() <= series[1].epochs_to_full_recall());

  SUBCASE("a single divider reproduces capacity_experiment exactly") {
    ExperimentConfig one = base;
    one.divider = 4;
    const auto direct = capacity_experiment(one);
    std::ostringstream a, b;
    write_csv(a, std::span(series).subspan(1, 1));
    const std::vector<ExperimentSeries> just{direct};
    write_csv(b, just);
    CHECK(a.str() == b.str());
  }

  SUBCASE("sequential full training lands on the same tables for any divider") {
    // the divider only chunks the same unit-step walk
    CHECK(series[0].rows.back().fraction_false == series[1].rows.back().fraction_false);
  }
}

TEST_CASE("csv output is byte-stable for equal seeds") {
  ExperimentConfig config;
  config.pattern_count = 30;
  config.probe_count = 500;
  config.seed = 77;

  std::ostringstream first, second;
  const std::vector<ExperimentSeries> a{capacity_experiment(config)};
  const std::vector<ExperimentSeries> b{capacity_experiment(config)};
  write_csv(first, a);
  write_csv(second, b);
  CHECK(first.str() == second.str());
  CHECK(first.str().starts_with(
      "divider,epoch,fraction_learned,fraction_false,cumulative_rounds\n"));
}

TEST_CASE("table image maps zero to mid-gray and the bounds to the ends") {
  CyberNeuron neuron(2, 2);
  const auto path = temp_path("zero.pgm");
  export_table_image(neuron, path);
  std::string data = slurp(path);
  CHECK(data.starts_with("P5\n4 2\n255\n"));
  REQUIRE(data.size() == 11 + 8);
  for (std::size_t i = 11; i < data.size(); ++i)
    CHECK(static_cast<unsigned char>(data[i]) == 128);

  neuron.set_cell(0, 0, 127);   // cell_max
  neuron.set_cell(0, 1, -126);  // cell_min
  export_table_image(neuron, path);
  data = slurp(path);
  const auto* px = reinterpret_cast<const unsigned char*>(data.data() + data.size() - 8);
  CHECK(px[0] == 255);
  CHECK(px[1] == 0);
  CHECK(px[2] == 128);
  std::filesystem::remove(path);
}

TEST_CASE("an 8x256 trained neuron renders as a 256x8 graymap") {
  const auto patterns = gen_patterns(20, 8, 8, 5);
  CyberNeuron neuron(8, 8);
  neuron.batch_train(patterns, {}, 10);
  const auto path = temp_path("trained.pgm");
  export_table_image(neuron, path);
  const std::string data = slurp(path);
  const std::string header = "P5\n256 8\n255\n";
  REQUIRE(data.starts_with(header));
  CHECK(data.size() == header.size() + 256 * 8);
  std::filesystem::remove(path);
}
