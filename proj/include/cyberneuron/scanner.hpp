#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cyberneuron/neuron.hpp"
#include "cyberneuron/sigdb.hpp"

namespace cyberneuron {

inline constexpr std::size_t kBlockBytes = kFragmentBytes;  // scan block = fragment
inline constexpr std::size_t kPrefilterCells = std::size_t{1} << 24;

// Big-endian packing of a 6-byte block into its two 24-bit halves.
inline std::uint32_t pack_hi(const std::uint8_t* b) {
  return static_cast<std::uint32_t>(b[0]) << 16 | static_cast<std::uint32_t>(b[1]) << 8 | b[2];
}
inline std::uint32_t pack_lo(const std::uint8_t* b) {
  return static_cast<std::uint32_t>(b[3]) << 16 | static_cast<std::uint32_t>(b[4]) << 8 | b[5];
}
inline std::uint64_t pack_block(const std::uint8_t* b) {
  return static_cast<std::uint64_t>(pack_hi(b)) << 24 | pack_lo(b);
}

// Owners of one fragment content: which signature's window, at which of the
// six alignments.
struct FragmentOwner {
  std::uint32_t owner_id = 0;
  std::uint8_t shift = 0;
};

// Fragment-content lookup used by the verification stage. Windows are
// reconstructed from the shift slices, so the index round-trips through the
// prefilter file without storing them separately.
struct SignatureIndex {
  std::vector<FragmentEntry> entries;  // canonical order, as loaded
  std::vector<std::string> owner_names;
  std::vector<std::array<std::uint8_t, kWindowBytes>> windows;  // by owner_id
  std::vector<std::uint16_t> window_known;  // bitmask of reconstructed bytes
  std::unordered_map<std::uint64_t, std::vector<FragmentOwner>> by_content;

  static SignatureIndex build(const FragmentSet& fragments);
  const std::vector<FragmentOwner>* find(std::uint64_t content_key) const;
};

// Stage 1: a two-input neuron with 24-bit inputs, one signed byte per cell
// (16,777,216 cells per table, 32 MiB for both). Built by direct assignment:
// each trained fragment sets its two half-cells to 1 and the neuron fires
// when the two looked-up cells sum to fire_threshold.
class Prefilter {
 public:
  Prefilter();

  std::int32_t fire_threshold() const { return fire_threshold_; }
  std::span<const std::int8_t> table0() const { return table0_; }
  std::span<const std::int8_t> table1() const { return table1_; }
  const SignatureIndex& index() const { return index_; }

  bool fire(const std::uint8_t* block) const {
    return table0_[pack_hi(block)] + table1_[pack_lo(block)] >= fire_threshold_;
  }
  bool fire(std::span<const std::uint8_t> block) const;

  std::size_t nonzero_cells() const;

  friend Prefilter build_prefilter(const FragmentSet& fragments);
  friend std::vector<std::uint8_t> serialize_prefilter(const Prefilter& prefilter);
  friend Prefilter deserialize_prefilter(std::span<const std::uint8_t> data);
  friend std::vector<std::uint64_t> scan_blocks(std::span<const std::uint8_t> data,
                                                const Prefilter& prefilter, unsigned threads);

 private:
  void refresh_table1_max();

  std::int32_t fire_threshold_ = 2;
  std::vector<std::int8_t> table0_;
  std::vector<std::int8_t> table1_;
  std::int32_t table1_max_ = 0;  // lets the scan skip the second lookup
  SignatureIndex index_;
};

Prefilter build_prefilter(const FragmentSet& fragments);

// Offsets (multiples of 6, ascending) of the non-overlapping blocks the
// prefilter fires on; a trailing partial block is never evaluated. With
// threads > 1 the buffer is split at block boundaries and merged in order,
// which yields exactly the single-pass candidate list.
std::vector<std::uint64_t> scan_blocks(std::span<const std::uint8_t> data,
                                       const Prefilter& prefilter, unsigned threads = 1);

// Stage 2: an eight-input, 8-bit neuron trained on the four 8-byte
// substrings of every window.
CyberNeuron build_precise(std::span<const Window11> windows);

// True when any 8-byte stretch inside [offset - 10, offset + 15] (clamped to
// the data) classifies Known.
bool precise_confirm(const CyberNeuron& precise, std::span<const std::uint8_t> data,
                     std::uint64_t offset);

struct VerifiedHit {
  std::string name;
  std::uint64_t offset = 0;   // window start in the scanned data
  bool exact = false;
  std::uint32_t similarity = 0;  // matched bytes of 11; 11 when exact
};

// Stage 3: looks the candidate block up in the fragment index and compares
// the implied window placements byte-for-byte. Exact match wins; otherwise
// the closest owner at or above `nearest_floor` matched bytes.
std::optional<VerifiedHit> verify_exact(std::span<const std::uint8_t> data,
                                        std::uint64_t candidate_offset,
                                        const SignatureIndex& index,
                                        std::uint32_t nearest_floor = 8);

struct ScanConfig {
  bool use_precise = true;        // stage 2 runs only when a neuron is supplied
  std::uint32_t nearest_floor = 8;
  unsigned threads = 1;
};

struct StageTimings {
  double prefilter_ms = 0.0;
  double precise_ms = 0.0;
  double verify_ms = 0.0;
};

struct ScanReport {
  std::uint64_t bytes_scanned = 0;
  double elapsed_ms = 0.0;
  double mb_per_s = 0.0;
  std::uint64_t candidates = 0;
  std::uint64_t survivors = 0;
  std::vector<VerifiedHit> hits;
  StageTimings stage_ms;

  std::string to_json() const;
};

ScanReport scan(std::span<const std::uint8_t> data, const Prefilter& prefilter,
                const CyberNeuron* precise, const ScanConfig& config = {});
ScanReport scan_file(const std::filesystem::path& path, const Prefilter& prefilter,
                     const CyberNeuron* precise, const ScanConfig& config = {});

// Fraction of non-overlapping blocks of `byte_count` seeded random bytes the
// prefilter fires on.
double measure_fp_rate(const Prefilter& prefilter, std::size_t byte_count,
                       std::uint64_t seed);

struct BenchResult {
  std::string stage_set;
  double median_mb_s = 0.0;
  double best_mb_s = 0.0;
  std::vector<double> runs;
};

// Repeated scans over a buffer already resident in memory. One untimed pass
// warms the caches before the timed repetitions, so the figures reflect the
// steady state rather than first-touch faults.
BenchResult bench_scan(std::string stage_set, std::span<const std::uint8_t> buffer,
                       const Prefilter& prefilter, const CyberNeuron* precise,
                       unsigned repetitions, unsigned threads = 1);

// Prefilter file, magic "CPF1": u32 fire_threshold, the two raw cell tables,
// u32 entry count, fragment records as in the fragment-set file, u32 owner
// count and length-prefixed owner names.
std::vector<std::uint8_t> serialize_prefilter(const Prefilter& prefilter);
Prefilter deserialize_prefilter(std::span<const std::uint8_t> data);
void save_prefilter(const Prefilter& prefilter, const std::filesystem::path& path);
Prefilter load_prefilter(const std::filesystem::path& path);

}  // namespace cyberneuron
