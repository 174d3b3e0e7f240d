#include "cyberneuron/sigdb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "cyberneuron/byteio.hpp"

#include <json.hpp>

namespace cyberneuron {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool is_hex_or_wild(char c) { return hex_value(c) >= 0 || c == '?'; }

// Hex body grammar: '*' is a gap, otherwise characters pair up into bytes;
// a pair containing '?' becomes a wild-nibble token.
bool parse_body(std::string_view hex, std::vector<Token>& body, std::string& error) {
  std::size_t i = 0;
  while (i < hex.size()) {
    const char c = hex[i];
    if (c == '*') {
      body.push_back({Token::Kind::Gap, 0, 0});
      ++i;
      continue;
    }
    if (!is_hex_or_wild(c)) {
      error = std::string("illegal character '") + c + "' in hex body";
      return false;
    }
    if (i + 1 >= hex.size() || !is_hex_or_wild(hex[i + 1])) {
      error = "odd-length hex run";
      return false;
    }
    const char d = hex[i + 1];
    Token tok;
    if (c != '?' && d != '?') {
      tok.kind = Token::Kind::Byte;
      tok.value = static_cast<std::uint8_t>(hex_value(c) << 4 | hex_value(d));
      tok.mask = 0xFF;
    } else {
      tok.kind = Token::Kind::NibbleWild;
      tok.value = 0;
      tok.mask = 0;
      if (c != '?') {
        tok.value |= static_cast<std::uint8_t>(hex_value(c) << 4);
        tok.mask |= 0xF0;
      }
      if (d != '?') {
        tok.value |= static_cast<std::uint8_t>(hex_value(d));
        tok.mask |= 0x0F;
      }
    }
    body.push_back(tok);
    i += 2;
  }
  if (body.empty()) {
    error = "empty body";
    return false;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Walks data lines (blank and '#' lines skipped) with 1-based numbering.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string_view trimmed = trim(line);
    if (!trimmed.empty() && trimmed.front() != '#') fn(line_no, trimmed);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::uint64_t window_key(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

ParseResult parse_db(std::string_view text) {
  ParseResult result;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      result.errors.push_back({line_no, "missing '='"});
      return;
    }
    RawSignature sig;
    sig.name = std::string(line.substr(0, eq));
    sig.source = SigFormat::Db;
    std::string err;
    if (!parse_body(line.substr(eq + 1), sig.body, err)) {
      result.errors.push_back({line_no, err});
      return;
    }
    result.signatures.push_back(std::move(sig));
  });
  return result;
}

ParseResult parse_ndb(std::string_view text) {
  ParseResult result;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto fields = split(line, ':');
    if (fields.size() != 4) {
      result.errors.push_back(
          {line_no, "expected 4 ':'-separated fields, got " + std::to_string(fields.size())});
      return;
    }
    RawSignature sig;
    sig.name = std::string(fields[0]);
    sig.source = SigFormat::Ndb;
    sig.target_type = std::string(fields[1]);
    sig.offset = std::string(fields[2]);
    std::string err;
    if (!parse_body(fields[3], sig.body, err)) {
      result.errors.push_back({line_no, err});
      return;
    }
    result.signatures.push_back(std::move(sig));
  });
  return result;
}

std::string render_body(std::span<const Token> body) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(body.size() * 2);
  for (const Token& tok : body) {
    switch (tok.kind) {
      case Token::Kind::Gap:
        out.push_back('*');
        break;
      case Token::Kind::Byte:
        out.push_back(digits[tok.value >> 4]);
        out.push_back(digits[tok.value & 0x0F]);
        break;
      case Token::Kind::NibbleWild:
        out.push_back(tok.mask & 0xF0 ? digits[tok.value >> 4] : '?');
        out.push_back(tok.mask & 0x0F ? digits[tok.value & 0x0F] : '?');
        break;
    }
  }
  return out;
}

std::string_view reject_reason_name(RejectReason reason) {
  switch (reason) {
    case RejectReason::TooShort: return "TooShort";
    case RejectReason::NoLongRepeats: return "NoLongRepeats";
    case RejectReason::LowEntropy: return "LowEntropy";
    case RejectReason::HeaderLike: return "HeaderLike";
    case RejectReason::Duplicate: return "Duplicate";
  }
  return "Unknown";
}

FilterRules FilterRules::defaults() {
  FilterRules rules;
  rules.header_prefixes = {
      {0x4D, 0x5A},              // "MZ"
      {0x50, 0x45, 0x00, 0x00},  // "PE\0\0"
      {0x00, 0x00, 0x00, 0x00},
  };
  return rules;
}

double window_entropy_bits(std::span<const std::uint8_t> bytes) {
  std::array<std::uint32_t, 256> counts{};
  for (std::uint8_t b : bytes) ++counts[b];
  const double n = static_cast<double>(bytes.size());
  double h = 0.0;
  for (unsigned c : counts) {
    if (c == 0) continue;
    const double p = c / n;
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

std::size_t max_repeat_run(std::span<const std::uint8_t> bytes) {
  std::size_t best = 0, run = 0;
  int prev = -1;
  for (std::uint8_t b : bytes) {
    run = (b == prev) ? run + 1 : 1;
    prev = b;
    best = std::max(best, run);
  }
  return best;
}

// Checks one candidate window; rule order fixes which reason is reported.
std::optional<RejectReason> window_violation(std::span<const std::uint8_t> w,
                                             const FilterRules& rules) {
  if (max_repeat_run(w) > rules.max_repeat_run) return RejectReason::NoLongRepeats;
  if (window_entropy_bits(w) < rules.min_entropy_bits) return RejectReason::LowEntropy;
  for (const auto& prefix : rules.header_prefixes) {
    if (prefix.size() <= w.size() && std::equal(prefix.begin(), prefix.end(), w.begin()))
      return RejectReason::HeaderLike;
  }
  return std::nullopt;
}

}  // namespace

FilterOutcome quality_filter(const RawSignature& sig, const FilterRules& rules) {
  FilterOutcome outcome;
  bool have_reason = false;

  // Maximal literal runs of the body, then every 11-byte window inside them.
  std::size_t i = 0;
  while (i < sig.body.size()) {
    if (sig.body[i].kind != Token::Kind::Byte) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::vector<std::uint8_t> run;
    while (i < sig.body.size() && sig.body[i].kind == Token::Kind::Byte) {
      run.push_back(sig.body[i].value);
      ++i;
    }
    if (run.size() < kWindowBytes) continue;
    for (std::size_t off = 0; off + kWindowBytes <= run.size(); ++off) {
      const std::span<const std::uint8_t> w(run.data() + off, kWindowBytes);
      if (const auto violation = window_violation(w, rules)) {
        if (!have_reason) {
          outcome.reason = *violation;
          have_reason = true;
        }
        continue;
      }
      Window11 window;
      std::copy(w.begin(), w.end(), window.bytes.begin());
      window.owner = sig.name;
      window.offset_in_body = start + off;
      outcome.candidates.push_back(std::move(window));
    }
  }
  if (!outcome.accepted() && !have_reason) outcome.reason = RejectReason::TooShort;
  return outcome;
}

Window11 extract_window(const FilterOutcome& outcome) {
  if (!outcome.accepted()) throw std::invalid_argument("signature was rejected");
  return outcome.candidates.front();
}

FragmentSet shift_expand(const Window11& window) {
  FragmentSet set;
  set.owner_names.push_back(window.owner);
  for (std::size_t s = 0; s < kShiftCount; ++s) {
    FragmentEntry entry;
    std::copy_n(window.bytes.begin() + s, kFragmentBytes, entry.bytes.begin());
    entry.owner_id = 0;
    entry.shift = static_cast<std::uint8_t>(s);
    set.entries.push_back(entry);
  }
  return set;
}

bool FilterReport::balanced() const {
  std::uint64_t by_reason = 0;
  for (const auto& [_, n] : rejected_by_reason) by_reason += n;
  return loaded == rejected + extracted && fragments == extracted * kShiftCount &&
         by_reason == rejected;
}

std::string FilterReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["loaded"] = loaded;
  j["rejected"] = rejected;
  j["extracted"] = extracted;
  j["fragments"] = fragments;
  j["parse_errors"] = parse_errors;
  j["hash_signatures"] = hash_signatures;
  j["rejected_by_reason"] = rejected_by_reason;
  return j.dump(2);
}

LoadResult load_database(std::span<const std::filesystem::path> paths,
                         const FilterRules& rules) {
  LoadResult result;
  std::unordered_set<std::uint64_t> seen_windows;

  for (const auto& path : paths) {
    const std::string ext = path.extension().string();
    if (ext == ".hdb" || ext == ".mdb") {
      // hash signatures: recognized, counted, never trained
      for_each_line(io::read_text_file(path),
                    [&](std::size_t, std::string_view) { ++result.report.hash_signatures; });
      continue;
    }
    ParseResult parsed;
    if (ext == ".db") {
      parsed = parse_db(io::read_text_file(path));
    } else if (ext == ".ndb") {
      parsed = parse_ndb(io::read_text_file(path));
    } else {
      throw FormatError("unrecognized signature file extension: " + path.string());
    }
    result.report.parse_errors += parsed.errors.size();
    for (const RawSignature& sig : parsed.signatures) {
      ++result.report.loaded;
      const FilterOutcome outcome = quality_filter(sig, rules);
      if (!outcome.accepted()) {
        ++result.report.rejected;
        ++result.report.rejected_by_reason[std::string(reject_reason_name(outcome.reason))];
        continue;
      }
      Window11 window = extract_window(outcome);
      if (!seen_windows.insert(window_key(window.bytes)).second) {
        ++result.report.rejected;
        ++result.report.rejected_by_reason[std::string(
            reject_reason_name(RejectReason::Duplicate))];
        continue;
      }
      const auto owner_id = static_cast<std::uint32_t>(result.windows.size());
      result.fragments.owner_names.push_back(window.owner);
      for (std::size_t s = 0; s < kShiftCount; ++s) {
        FragmentEntry entry;
        std::copy_n(window.bytes.begin() + s, kFragmentBytes, entry.bytes.begin());
        entry.owner_id = owner_id;
        entry.shift = static_cast<std::uint8_t>(s);
        result.fragments.entries.push_back(entry);
      }
      result.windows.push_back(std::move(window));
      ++result.report.extracted;
      result.report.fragments += kShiftCount;
    }
  }
  return result;
}

std::vector<std::uint8_t> serialize_fragments(const FragmentSet& set) {
  io::Writer w;
  w.magic("CFR1");
  w.u32(static_cast<std::uint32_t>(set.entries.size()));
  for (const FragmentEntry& e : set.entries) {
    w.bytes(e.bytes);
    w.u32(e.owner_id);
    w.u8(e.shift);
  }
  w.u32(static_cast<std::uint32_t>(set.owner_names.size()));
  for (const std::string& name : set.owner_names) w.str(name);
  return w.take();
}

FragmentSet deserialize_fragments(std::span<const std::uint8_t> data) {
  io::Reader r(data);
  r.expect_magic("CFR1");
  FragmentSet set;
  const std::uint32_t count = r.u32();
  set.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FragmentEntry e;
    const auto b = r.bytes(kFragmentBytes);
    std::copy(b.begin(), b.end(), e.bytes.begin());
    e.owner_id = r.u32();
    e.shift = r.u8();
    if (e.shift >= kShiftCount) throw FormatError("fragment shift out of range");
    set.entries.push_back(e);
  }
  const std::uint32_t owners = r.u32();
  set.owner_names.reserve(owners);
  for (std::uint32_t i = 0; i < owners; ++i) set.owner_names.push_back(r.str());
  for (const FragmentEntry& e : set.entries)
    if (e.owner_id >= owners) throw FormatError("fragment owner id out of range");
  r.expect_end();
  return set;
}

void save_fragments(const FragmentSet& set, const std::filesystem::path& path) {
  io::write_file(path, serialize_fragments(set));
}

FragmentSet load_fragments(const std::filesystem::path& path) {
  return deserialize_fragments(io::read_file(path));
}

}  // namespace cyberneuron
