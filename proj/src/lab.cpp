#include "cyberneuron/lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "cyberneuron/byteio.hpp"

namespace cyberneuron {

namespace {

// Packs a pattern into a hashable key (coordinates are at most 24 bits).
struct PatternKey {
  std::string bytes;

  explicit PatternKey(const Pattern& p) {
    bytes.reserve(p.size() * 3);
    for (std::uint32_t v : p) {
      bytes.push_back(static_cast<char>(v));
      bytes.push_back(static_cast<char>(v >> 8));
      bytes.push_back(static_cast<char>(v >> 16));
    }
  }
};

Pattern draw_pattern(Rng& rng, std::uint32_t n_inputs, std::uint64_t m) {
  Pattern p(n_inputs);
  for (auto& v : p) v = static_cast<std::uint32_t>(uniform_below(rng, m));
  return p;
}

}  // namespace

void validate(const ExperimentConfig& config) {
  if (config.pattern_count == 0) throw std::invalid_argument("pattern_count must be >= 1");
  if (config.epochs == 0) throw std::invalid_argument("epochs must be >= 1");
  if (config.divider == 0) throw std::invalid_argument("divider must be >= 1");
  if (static_cast<std::uint64_t>(config.pattern_bytes) * 8 !=
      static_cast<std::uint64_t>(config.n_inputs) * config.bits_per_input)
    throw std::invalid_argument("pattern_bytes * 8 must equal n_inputs * bits_per_input");
}

std::uint32_t ExperimentSeries::epochs_to_full_recall() const {
  for (const SeriesRow& row : rows)
    if (row.fraction_learned == 1.0) return row.epoch;
  return 0;
}

std::vector<Pattern> gen_patterns(std::size_t count, std::uint32_t n_inputs,
                                  std::uint32_t bits_per_input, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("count must be >= 1");
  if (n_inputs == 0 || bits_per_input == 0 || bits_per_input > 24)
    throw std::invalid_argument("bad pattern geometry");
  const std::uint64_t total_bits =
      static_cast<std::uint64_t>(n_inputs) * bits_per_input;
  if (total_bits < 64 && count > (std::uint64_t{1} << total_bits))
    throw std::invalid_argument("count exceeds the distinct-pattern space");

  const std::uint64_t m = std::uint64_t{1} << bits_per_input;
  Rng rng(seed);
  std::vector<Pattern> out;
  out.reserve(count);
  std::unordered_set<std::string> seen;
  while (out.size() < count) {
    Pattern p = draw_pattern(rng, n_inputs, m);
    if (seen.insert(PatternKey(p).bytes).second) out.push_back(std::move(p));
  }
  return out;
}

double false_recognition_rate(const CyberNeuron& neuron,
                              std::span<const Pattern> trained_set,
                              std::size_t probe_count, std::uint64_t seed) {
  if (probe_count == 0) throw std::invalid_argument("probe_count must be >= 1");
  std::unordered_set<std::string> trained;
  trained.reserve(trained_set.size());
  for (const Pattern& p : trained_set) trained.insert(PatternKey(p).bytes);

  const std::uint64_t m = std::uint64_t{1} << neuron.bits_per_input();
  Rng rng(seed);
  std::size_t known = 0;
  for (std::size_t i = 0; i < probe_count; ++i) {
    Pattern p;
    do {
      p = draw_pattern(rng, neuron.n_inputs(), m);
    } while (trained.contains(PatternKey(p).bytes));
    if (neuron.classify(neuron.evaluate(p).output) == Classification::Known) ++known;
  }
  return static_cast<double>(known) / static_cast<double>(probe_count);
}

ExperimentSeries capacity_experiment(const ExperimentConfig& config) {
  validate(config);
  ExperimentSeries series;
  series.config = config;

  const std::vector<Pattern> patterns =
      gen_patterns(config.pattern_count, config.n_inputs, config.bits_per_input, config.seed);
  CyberNeuron neuron(config.n_inputs, config.bits_per_input, 100, 20, config.divider);
  const std::uint64_t probe_seed = derive_seed(config.seed, 1);

  std::uint64_t cumulative_rounds = 0;
  for (std::uint32_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto metrics = neuron.batch_train(patterns, {}, 1);
    cumulative_rounds += metrics.at(0).cumulative_rounds;

    SeriesRow row;
    row.divider = config.divider;
    row.epoch = epoch;
    row.fraction_learned = metrics.at(0).fraction_learned;
    row.fraction_false =
        false_recognition_rate(neuron, patterns, config.probe_count, probe_seed);
    row.cumulative_rounds = cumulative_rounds;
    series.rows.push_back(row);
    if (row.fraction_learned == 1.0) break;
  }
  return series;
}

std::vector<ExperimentSeries> learning_rate_sweep(const ExperimentConfig& base,
                                                  std::span<const std::uint32_t> dividers) {
  if (dividers.empty()) throw std::invalid_argument("dividers must be non-empty");
  std::vector<ExperimentSeries> out;
  out.reserve(dividers.size());
  for (std::uint32_t d : dividers) {
    ExperimentConfig config = base;
    config.divider = d;
    out.push_back(capacity_experiment(config));
  }
  return out;
}

void write_csv(std::ostream& out, std::span<const ExperimentSeries> series) {
  out << "divider,epoch,fraction_learned,fraction_false,cumulative_rounds\n";
  char fl[32], ff[32];
  for (const ExperimentSeries& s : series) {
    for (const SeriesRow& row : s.rows) {
      std::snprintf(fl, sizeof fl, "%.6f", row.fraction_learned);
      std::snprintf(ff, sizeof ff, "%.6f", row.fraction_false);
      out << row.divider << ',' << row.epoch << ',' << fl << ',' << ff << ','
          << row.cumulative_rounds << '\n';
    }
  }
}

void write_csv(const std::filesystem::path& path, std::span<const ExperimentSeries> series) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  write_csv(out, series);
  if (!out) throw FormatError("error writing " + path.string());
}

void export_table_image(const CyberNeuron& neuron, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  const std::size_t width = neuron.table_size();
  const std::size_t height = neuron.n_inputs();
  out << "P5\n" << width << " " << height << "\n255\n";

  // Piecewise-linear shade: [cell_min, 0] onto [0, 128] and [0, cell_max]
  // onto [128, 255], so zero is exactly mid-gray and the bounds hit the ends.
  const double up = neuron.cell_max();
  const double down = neuron.cell_min();
  std::vector<std::uint8_t> row(width);
  for (std::size_t t = 0; t < height; ++t) {
    const auto table = neuron.table(t);
    for (std::size_t i = 0; i < width; ++i) {
      const std::int32_t v = table[i];
      int shade = 128;
      if (v > 0) shade = 128 + static_cast<int>(std::lround(127.0 * v / up));
      if (v < 0) shade = 128 - static_cast<int>(std::lround(128.0 * v / down));
      row[i] = static_cast<std::uint8_t>(std::clamp(shade, 0, 255));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(width));
  }
  if (!out) throw FormatError("error writing " + path.string());
}

}  // namespace cyberneuron
