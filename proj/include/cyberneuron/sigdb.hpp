#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cyberneuron {

inline constexpr std::size_t kWindowBytes = 11;
inline constexpr std::size_t kFragmentBytes = 6;
inline constexpr std::size_t kShiftCount = 6;

// Body token of a hex signature. '*' is a gap of arbitrary length; a hex
// pair containing '?' keeps the known nibble and a mask saying which half is
// literal (0xF0 high, 0x0F low, 0x00 fully wild).
struct Token {
  enum class Kind { Byte, NibbleWild, Gap };
  Kind kind = Kind::Byte;
  std::uint8_t value = 0;
  std::uint8_t mask = 0;

  bool operator==(const Token&) const = default;
};

enum class SigFormat { Db, Ndb };

struct RawSignature {
  std::string name;
  std::vector<Token> body;
  SigFormat source = SigFormat::Db;
  // ndb extras, carried verbatim and otherwise unused
  std::string target_type;
  std::string offset;
};

struct ParseError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

// Collecting parse: bad lines become errors, good lines are kept.
struct ParseResult {
  std::vector<RawSignature> signatures;
  std::vector<ParseError> errors;
};

ParseResult parse_db(std::string_view text);
ParseResult parse_ndb(std::string_view text);

// Lowercase hex with '*' for gaps and '?' for wild nibbles; reparses to the
// same token stream.
std::string render_body(std::span<const Token> body);

// The 11 literal bytes selected from one accepted signature.
struct Window11 {
  std::array<std::uint8_t, kWindowBytes> bytes{};
  std::string owner;
  std::size_t offset_in_body = 0;  // token index of the first window byte
};

enum class RejectReason { TooShort, NoLongRepeats, LowEntropy, HeaderLike, Duplicate };

std::string_view reject_reason_name(RejectReason reason);

struct FilterRules {
  std::size_t max_repeat_run = 3;   // identical-byte run allowed inside a window
  double min_entropy_bits = 2.0;    // byte entropy of the window
  std::vector<std::vector<std::uint8_t>> header_prefixes;  // window must not start with one

  static FilterRules defaults();
};

// Candidate windows that pass the rules, in body order; empty means the
// signature is rejected for `reason` (the first failing rule of the first
// candidate, or TooShort when no 11-byte literal run exists).
struct FilterOutcome {
  std::vector<Window11> candidates;
  RejectReason reason = RejectReason::TooShort;

  bool accepted() const { return !candidates.empty(); }
};

FilterOutcome quality_filter(const RawSignature& sig, const FilterRules& rules);

// First passing window of an accepted signature.
Window11 extract_window(const FilterOutcome& outcome);

double window_entropy_bits(std::span<const std::uint8_t> bytes);

// One (fragment content, owner, shift) association.
struct FragmentEntry {
  std::array<std::uint8_t, kFragmentBytes> bytes{};
  std::uint32_t owner_id = 0;
  std::uint8_t shift = 0;

  bool operator==(const FragmentEntry&) const = default;
};

struct FragmentSet {
  std::vector<std::string> owner_names;  // owner_id indexes this
  std::vector<FragmentEntry> entries;

  bool operator==(const FragmentSet&) const = default;
};

// The six aligned slices [s, s+6) of a window, shifts 0..5.
FragmentSet shift_expand(const Window11& window);

struct FilterReport {
  std::uint64_t loaded = 0;     // signatures parsed from .db/.ndb
  std::uint64_t rejected = 0;
  std::uint64_t extracted = 0;  // one window per accepted signature
  std::uint64_t fragments = 0;  // extracted * 6
  std::uint64_t parse_errors = 0;
  std::uint64_t hash_signatures = 0;  // .hdb/.mdb lines, recognized only
  std::map<std::string, std::uint64_t> rejected_by_reason;

  bool balanced() const;
  std::string to_json() const;
};

struct LoadResult {
  FragmentSet fragments;
  std::vector<Window11> windows;  // index == owner_id
  FilterReport report;
};

// Parses every file (extension selects the grammar), filters, extracts one
// window per accepted signature, shift-expands. A window whose content was
// already extracted rejects its signature as Duplicate, so report totals
// stay balanced and fragments == extracted * 6.
LoadResult load_database(std::span<const std::filesystem::path> paths,
                         const FilterRules& rules);

// Fragment set file, magic "CFR1": u32 entry count, entries of 6 content
// bytes + u32 owner id + u8 shift, then u32 owner count and length-prefixed
// owner names.
std::vector<std::uint8_t> serialize_fragments(const FragmentSet& set);
FragmentSet deserialize_fragments(std::span<const std::uint8_t> data);
void save_fragments(const FragmentSet& set, const std::filesystem::path& path);
FragmentSet load_fragments(const std::filesystem::path& path);

}  // namespace cyberneuron
