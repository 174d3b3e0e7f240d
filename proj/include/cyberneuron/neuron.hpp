#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cyberneuron/rng.hpp"

namespace cyberneuron {

// A pattern is one table index per input. Values must be < 2^bits_per_input.
using Pattern = std::vector<std::uint32_t>;

enum class Classification { Known, Partial, Unknown };
enum class Strategy { Sequential, Random };
enum class Direction { Add, Remove };
enum class TrainStatus { Converged, Saturated, RoundLimit };

// Cells touched by one evaluation (one per table) and the summed output.
struct ActivationTrace {
  std::vector<std::uint32_t> active_cells;
  std::int64_t output = 0;
};

struct TrainOutcome {
  TrainStatus status = TrainStatus::Converged;
  std::uint32_t rounds = 0;
  // Net unit steps applied across all rounds; negative for removal.
  std::int64_t total_cell_increments = 0;
};

// One verification row of batch_train.
struct EpochMetrics {
  std::uint32_t epoch = 0;
  double fraction_learned = 1.0;         // add set at or above threshold
  double fraction_remove_pending = 0.0;  // remove set still above threshold2
  std::uint64_t cumulative_rounds = 0;
};

inline constexpr std::uint32_t kDefaultMaxRounds = 10'000;

// Lookup-table neuron: one substitution table per input, each input value
// indexes its table, the selected cells are summed into the output. There is
// no activation function; classification compares the raw sum against two
// thresholds. Training nudges only the active cells, one unit at a time.
class CyberNeuron {
 public:
  CyberNeuron(std::uint32_t n_inputs, std::uint32_t bits_per_input,
              std::int32_t threshold = 100, std::int32_t threshold2 = 20,
              std::uint32_t divider = 4, std::int32_t cell_min = -126,
              std::int32_t cell_max = 127);

  std::uint32_t n_inputs() const { return n_inputs_; }
  std::uint32_t bits_per_input() const { return bits_per_input_; }
  std::size_t table_size() const { return std::size_t{1} << bits_per_input_; }
  std::int32_t threshold() const { return threshold_; }
  std::int32_t threshold2() const { return threshold2_; }
  std::uint32_t divider() const { return divider_; }
  std::int32_t cell_min() const { return cell_min_; }
  std::int32_t cell_max() const { return cell_max_; }

  // Flat cell storage, table-major: cells()[t * table_size() + i].
  std::span<const std::int32_t> cells() const { return cells_; }
  std::span<const std::int32_t> table(std::size_t t) const;
  std::int32_t cell(std::size_t t, std::size_t i) const;
  void set_cell(std::size_t t, std::size_t i, std::int32_t value);

  // Pure: sums the active cells. Throws std::invalid_argument on a pattern
  // of the wrong arity or with an out-of-range index.
  ActivationTrace evaluate(const Pattern& pattern) const;

  Classification classify(std::int64_t output) const;

  // Number of unit steps for one training round. Add: (threshold - output) /
  // divider, at least +1; Remove: (threshold2 - output) / divider, at most
  // -1. Division truncates toward zero.
  std::int64_t compute_modifier(std::int64_t output, Direction direction) const;

  // Distributes |modifier| unit steps over the active cells, visiting tables
  // cyclically from `cursor` and leaving the cursor after the last visited
  // table. Cells pinned at a clamp bound are skipped without consuming a
  // step; returns the number of steps actually applied, which falls short of
  // |modifier| only when every active cell is saturated.
  std::size_t apply_modifier_sequential(const ActivationTrace& trace,
                                        std::int64_t modifier,
                                        std::size_t& cursor);
  std::size_t apply_modifier_sequential(const ActivationTrace& trace,
                                        std::int64_t modifier);

  // |modifier| iterations, each picking a table uniformly at random and
  // stepping its active cell; a pick at the clamp bound consumes the
  // iteration without changing anything. Returns the steps applied.
  std::size_t apply_modifier_random(const ActivationTrace& trace,
                                    std::int64_t modifier, Rng& rng);

  // Repeats evaluate / compute_modifier / apply until the output reaches the
  // upper threshold (Converged), no active cell can move (Saturated), or
  // max_rounds elapse (RoundLimit). Random strategy requires an rng.
  TrainOutcome train_add(const Pattern& pattern,
                         Strategy strategy = Strategy::Sequential,
                         Rng* rng = nullptr,
                         std::uint32_t max_rounds = kDefaultMaxRounds);

  // Same loop driving the output down to the lower threshold; removal
  // succeeds at output <= threshold2.
  TrainOutcome train_remove(const Pattern& pattern,
                            Strategy strategy = Strategy::Sequential,
                            Rng* rng = nullptr,
                            std::uint32_t max_rounds = kDefaultMaxRounds);

  // Each epoch trains every add-set pattern below threshold and removes
  // every remove-set pattern above threshold2, then re-verifies the lot.
  // Stops after the first epoch where everything classifies as desired, or
  // at max_epochs; one metrics row per epoch run.
  std::vector<EpochMetrics> batch_train(std::span<const Pattern> add_set,
                                        std::span<const Pattern> remove_set,
                                        std::uint32_t max_epochs,
                                        Strategy strategy = Strategy::Sequential,
                                        Rng* rng = nullptr);

  bool operator==(const CyberNeuron&) const = default;

 private:
  void check_pattern(const Pattern& pattern) const;
  void check_trace(const ActivationTrace& trace) const;
  bool any_movable(const ActivationTrace& trace, Direction direction) const;
  TrainOutcome train(const Pattern& pattern, Direction direction,
                     Strategy strategy, Rng* rng, std::uint32_t max_rounds);

  std::uint32_t n_inputs_;
  std::uint32_t bits_per_input_;
  std::int32_t threshold_;
  std::int32_t threshold2_;
  std::uint32_t divider_;
  std::int32_t cell_min_;
  std::int32_t cell_max_;
  std::vector<std::int32_t> cells_;
};

}  // namespace cyberneuron
