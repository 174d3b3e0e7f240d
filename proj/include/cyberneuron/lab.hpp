#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <vector>

#include "cyberneuron/neuron.hpp"

namespace cyberneuron {

struct ExperimentConfig {
  std::uint32_t n_inputs = 8;
  std::uint32_t bits_per_input = 8;
  std::uint32_t pattern_count = 200;
  std::uint32_t pattern_bytes = 8;  // 8, 16, 32 or 64; bytes * 8 == inputs * bits
  std::uint32_t divider = 4;
  std::uint32_t epochs = 100;  // upper bound; runs stop at full recall
  std::uint32_t probe_count = 10'000;
  std::uint64_t seed = 1;
};

// Throws std::invalid_argument when the byte budget does not fill the
// inputs exactly or a count is zero.
void validate(const ExperimentConfig& config);

struct SeriesRow {
  std::uint32_t divider = 0;
  std::uint32_t epoch = 0;
  double fraction_learned = 0.0;
  double fraction_false = 0.0;
  std::uint64_t cumulative_rounds = 0;
};

struct ExperimentSeries {
  ExperimentConfig config;
  std::vector<SeriesRow> rows;

  // Epoch of the first row with full recall, or 0 if never reached.
  std::uint32_t epochs_to_full_recall() const;
};

// `count` distinct patterns with coordinates uniform over [0, 2^bits);
// bit-reproducible per seed. Throws when count exceeds the pattern space.
std::vector<Pattern> gen_patterns(std::size_t count, std::uint32_t n_inputs,
                                  std::uint32_t bits_per_input, std::uint64_t seed);

// Fraction of `probe_count` random patterns outside trained_set that the
// neuron classifies Known. Probe stream is derived from `seed` only.
double false_recognition_rate(const CyberNeuron& neuron,
                              std::span<const Pattern> trained_set,
                              std::size_t probe_count, std::uint64_t seed);

// Trains one fresh neuron on `pattern_count` random patterns, one batch
// epoch at a time, recording recall and false-recognition rate after each
// epoch until full recall or the epoch budget.
ExperimentSeries capacity_experiment(const ExperimentConfig& config);

// capacity_experiment per divider, same seed, for side-by-side series.
std::vector<ExperimentSeries> learning_rate_sweep(const ExperimentConfig& base,
                                                  std::span<const std::uint32_t> dividers);

// CSV: divider,epoch,fraction_learned,fraction_false,cumulative_rounds.
// Fixed 6-digit fractions so equal seeds reproduce byte-identical files.
void write_csv(std::ostream& out, std::span<const ExperimentSeries> series);
void write_csv(const std::filesystem::path& path, std::span<const ExperimentSeries> series);

// Binary PGM ("P5"), one row per table, one column per cell. Zero cells map
// to mid-gray 128, positive cells shade linearly to 255 at cell_max,
// negative ones to 0 at cell_min.
void export_table_image(const CyberNeuron& neuron, const std::filesystem::path& path);

}  // namespace cyberneuron
