#include "cyberneuron/neuron.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace cyberneuron {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

CyberNeuron::CyberNeuron(std::uint32_t n_inputs, std::uint32_t bits_per_input,
                         std::int32_t threshold, std::int32_t threshold2,
                         std::uint32_t divider, std::int32_t cell_min,
                         std::int32_t cell_max)
    : n_inputs_(n_inputs),
      bits_per_input_(bits_per_input),
      threshold_(threshold),
      threshold2_(threshold2),
      divider_(divider),
      cell_min_(cell_min),
      cell_max_(cell_max) {
  if (n_inputs_ == 0) fail("neuron needs at least one input");
  if (bits_per_input_ == 0 || bits_per_input_ > 24)
    fail("bits_per_input must be in [1, 24]");
  if (divider_ == 0) fail("divider must be >= 1");
  if (threshold2_ >= threshold_) fail("threshold2 must be below threshold");
  if (cell_min_ > 0 || cell_max_ < 0 || cell_min_ == cell_max_)
    fail("cell bounds must straddle zero");
  if (cell_min_ < INT16_MIN || cell_max_ > INT16_MAX)
    fail("cell bounds must fit in 16 bits");
  cells_.assign(static_cast<std::size_t>(n_inputs_) * table_size(), 0);
}

std::span<const std::int32_t> CyberNeuron::table(std::size_t t) const {
  if (t >= n_inputs_) fail("table index out of range");
  return std::span<const std::int32_t>(cells_).subspan(t * table_size(), table_size());
}

std::int32_t CyberNeuron::cell(std::size_t t, std::size_t i) const {
  if (t >= n_inputs_ || i >= table_size()) fail("cell index out of range");
  return cells_[t * table_size() + i];
}

void CyberNeuron::set_cell(std::size_t t, std::size_t i, std::int32_t value) {
  if (t >= n_inputs_ || i >= table_size()) fail("cell index out of range");
  if (value < cell_min_ || value > cell_max_) fail("cell value outside bounds");
  cells_[t * table_size() + i] = value;
}

void CyberNeuron::check_pattern(const Pattern& pattern) const {
  if (pattern.size() != n_inputs_)
    fail("pattern has " + std::to_string(pattern.size()) + " inputs, neuron has " +
         std::to_string(n_inputs_));
  const std::uint32_t m = static_cast<std::uint32_t>(table_size());
  for (std::uint32_t v : pattern)
    if (v >= m) fail("pattern value " + std::to_string(v) + " exceeds table size");
}

void CyberNeuron::check_trace(const ActivationTrace& trace) const {
  if (trace.active_cells.size() != n_inputs_) fail("trace does not match neuron arity");
  const std::uint32_t m = static_cast<std::uint32_t>(table_size());
  for (std::uint32_t v : trace.active_cells)
    if (v >= m) fail("trace cell index exceeds table size");
}

ActivationTrace CyberNeuron::evaluate(const Pattern& pattern) const {
  check_pattern(pattern);
  ActivationTrace trace;
  trace.active_cells = pattern;
  const std::size_t m = table_size();
  std::int64_t sum = 0;
  for (std::size_t t = 0; t < n_inputs_; ++t) sum += cells_[t * m + pattern[t]];
  trace.output = sum;
  return trace;
}

Classification CyberNeuron::classify(std::int64_t output) const {
  if (output >= threshold_) return Classification::Known;
  if (output < threshold2_) return Classification::Unknown;
  return Classification::Partial;
}

std::int64_t CyberNeuron::compute_modifier(std::int64_t output, Direction direction) const {
  if (direction == Direction::Add) {
    std::int64_t m = (threshold_ - output) / divider_;
    return m == 0 ? 1 : m;
  }
  std::int64_t m = (threshold2_ - output) / divider_;
  return m == 0 ? -1 : m;
}

std::size_t CyberNeuron::apply_modifier_sequential(const ActivationTrace& trace,
                                                   std::int64_t modifier,
                                                   std::size_t& cursor) {
  check_trace(trace);
  if (cursor >= n_inputs_) fail("cursor out of range");
  const std::int32_t step = modifier >= 0 ? 1 : -1;
  const std::uint64_t steps = static_cast<std::uint64_t>(std::llabs(modifier));
  const std::size_t m = table_size();
  std::size_t applied = 0;
  std::size_t skipped = 0;
  while (applied < steps) {
    std::int32_t& cell = cells_[cursor * m + trace.active_cells[cursor]];
    const bool movable = step > 0 ? cell < cell_max_ : cell > cell_min_;
    if (movable) {
      cell += step;
      ++applied;
      skipped = 0;
    } else if (++skipped == n_inputs_) {
      break;  // full sweep with nothing movable: saturated
    }
    cursor = (cursor + 1) % n_inputs_;
  }
  return applied;
}

std::size_t CyberNeuron::apply_modifier_sequential(const ActivationTrace& trace,
                                                   std::int64_t modifier) {
  std::size_t cursor = 0;
  return apply_modifier_sequential(trace, modifier, cursor);
}

std::size_t CyberNeuron::apply_modifier_random(const ActivationTrace& trace,
                                               std::int64_t modifier, Rng& rng) {
  check_trace(trace);
  const std::int32_t step = modifier >= 0 ? 1 : -1;
  const std::uint64_t iterations = static_cast<std::uint64_t>(std::llabs(modifier));
  const std::size_t m = table_size();
  std::size_t applied = 0;
  for (std::uint64_t i = 0; i < iterations; ++i) {
    const std::size_t t = static_cast<std::size_t>(uniform_below(rng, n_inputs_));
    std::int32_t& cell = cells_[t * m + trace.active_cells[t]];
    if (step > 0 ? cell < cell_max_ : cell > cell_min_) {
      cell += step;
      ++applied;
    }
    // a clamped pick burns its iteration
  }
  return applied;
}

bool CyberNeuron::any_movable(const ActivationTrace& trace, Direction direction) const {
  const std::size_t m = table_size();
  for (std::size_t t = 0; t < n_inputs_; ++t) {
    const std::int32_t cell = cells_[t * m + trace.active_cells[t]];
    if (direction == Direction::Add ? cell < cell_max_ : cell > cell_min_) return true;
  }
  return false;
}

TrainOutcome CyberNeuron::train(const Pattern& pattern, Direction direction,
                                Strategy strategy, Rng* rng, std::uint32_t max_rounds) {
  if (strategy == Strategy::Random && rng == nullptr)
    fail("random strategy needs an rng");
  std::size_t cursor = 0;
  TrainOutcome outcome;
  for (;;) {
    const ActivationTrace trace = evaluate(pattern);
    const bool done = direction == Direction::Add ? trace.output >= threshold_
                                                  : trace.output <= threshold2_;
    if (done) {
      outcome.status = TrainStatus::Converged;
      return outcome;
    }
    if (!any_movable(trace, direction)) {
      outcome.status = TrainStatus::Saturated;
      return outcome;
    }
    if (outcome.rounds >= max_rounds) {
      outcome.status = TrainStatus::RoundLimit;
      return outcome;
    }
    const std::int64_t modifier = compute_modifier(trace.output, direction);
    const std::size_t applied =
        strategy == Strategy::Sequential
            ? apply_modifier_sequential(trace, modifier, cursor)
            : apply_modifier_random(trace, modifier, *rng);
    ++outcome.rounds;
    outcome.total_cell_increments +=
        direction == Direction::Add ? static_cast<std::int64_t>(applied)
                                    : -static_cast<std::int64_t>(applied);
  }
}

TrainOutcome CyberNeuron::train_add(const Pattern& pattern, Strategy strategy,
                                    Rng* rng, std::uint32_t max_rounds) {
  return train(pattern, Direction::Add, strategy, rng, max_rounds);
}

TrainOutcome CyberNeuron::train_remove(const Pattern& pattern, Strategy strategy,
                                       Rng* rng, std::uint32_t max_rounds) {
  return train(pattern, Direction::Remove, strategy, rng, max_rounds);
}

std::vector<EpochMetrics> CyberNeuron::batch_train(std::span<const Pattern> add_set,
                                                   std::span<const Pattern> remove_set,
                                                   std::uint32_t max_epochs,
                                                   Strategy strategy, Rng* rng) {
  std::vector<EpochMetrics> rows;
  std::uint64_t cumulative_rounds = 0;
  for (std::uint32_t epoch = 1; epoch <= max_epochs; ++epoch) {
    for (const Pattern& p : add_set)
      if (evaluate(p).output < threshold_)
        cumulative_rounds += train(p, Direction::Add, strategy, rng, kDefaultMaxRounds).rounds;
    for (const Pattern& p : remove_set)
      if (evaluate(p).output > threshold2_)
        cumulative_rounds += train(p, Direction::Remove, strategy, rng, kDefaultMaxRounds).rounds;

    std::size_t learned = 0;
    for (const Pattern& p : add_set)
      if (evaluate(p).output >= threshold_) ++learned;
    std::size_t pending = 0;
    for (const Pattern& p : remove_set)
      if (evaluate(p).output > threshold2_) ++pending;

    EpochMetrics row;
    row.epoch = epoch;
    row.fraction_learned =
        add_set.empty() ? 1.0 : static_cast<double>(learned) / static_cast<double>(add_set.size());
    row.fraction_remove_pending =
        remove_set.empty() ? 0.0
                           : static_cast<double>(pending) / static_cast<double>(remove_set.size());
    row.cumulative_rounds = cumulative_rounds;
    rows.push_back(row);
    if (learned == add_set.size() && pending == 0) break;
  }
  return rows;
}

}  // namespace cyberneuron
