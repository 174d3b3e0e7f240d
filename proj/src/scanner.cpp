#include "cyberneuron/scanner.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "cyberneuron/byteio.hpp"
#include "cyberneuron/rng.hpp"

#include <json.hpp>

namespace cyberneuron {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr double kMiB = 1024.0 * 1024.0;

}  // namespace

SignatureIndex SignatureIndex::build(const FragmentSet& fragments) {
  SignatureIndex index;
  index.entries = fragments.entries;
  index.owner_names = fragments.owner_names;
  index.windows.assign(fragments.owner_names.size(), {});
  index.window_known.assign(fragments.owner_names.size(), 0);
  for (const FragmentEntry& e : fragments.entries) {
    index.by_content[pack_block(e.bytes.data())].push_back({e.owner_id, e.shift});
    // window bytes [shift, shift+6) come straight from the slice
    for (std::size_t j = 0; j < kFragmentBytes; ++j) {
      index.windows[e.owner_id][e.shift + j] = e.bytes[j];
      index.window_known[e.owner_id] |= static_cast<std::uint16_t>(1u << (e.shift + j));
    }
  }
  return index;
}

const std::vector<FragmentOwner>* SignatureIndex::find(std::uint64_t content_key) const {
  const auto it = by_content.find(content_key);
  return it == by_content.end() ? nullptr : &it->second;
}

Prefilter::Prefilter()
    : table0_(kPrefilterCells, 0), table1_(kPrefilterCells, 0) {}

bool Prefilter::fire(std::span<const std::uint8_t> block) const {
  if (block.size() != kBlockBytes) throw std::invalid_argument("block must be 6 bytes");
  return fire(block.data());
}

std::size_t Prefilter::nonzero_cells() const {
  std::size_t n = 0;
  for (std::int8_t c : table0_) n += c != 0;
  for (std::int8_t c : table1_) n += c != 0;
  return n;
}

void Prefilter::refresh_table1_max() {
  std::int32_t best = INT8_MIN;
  for (std::int8_t c : table1_) best = std::max<std::int32_t>(best, c);
  table1_max_ = best;
}

Prefilter build_prefilter(const FragmentSet& fragments) {
  if (fragments.entries.empty()) throw std::invalid_argument("fragment set is empty");
  Prefilter pf;
  for (const FragmentEntry& e : fragments.entries) {
    pf.table0_[pack_hi(e.bytes.data())] = 1;
    pf.table1_[pack_lo(e.bytes.data())] = 1;
  }
  pf.fire_threshold_ = 2;
  pf.table1_max_ = 1;
  pf.index_ = SignatureIndex::build(fragments);
  return pf;
}

namespace {

// Stage-1 hot loop. The block stream is sequential but the table probes are
// random over 16 MiB, so the next iterations' rows are prefetched to keep
// several misses in flight; table1 is only touched when table0 alone could
// still reach the threshold.
void scan_block_range(const std::uint8_t* base, std::size_t begin_block,
                      std::size_t end_block, const std::int8_t* t0, const std::int8_t* t1,
                      std::int32_t t1_max, std::int32_t fire,
                      std::vector<std::uint64_t>& out) {
  constexpr std::size_t kAhead = 24;
  for (std::size_t b = begin_block; b < end_block; ++b) {
    const std::uint8_t* q = base + b * kBlockBytes;
#if defined(__GNUC__) || defined(__clang__)
    if (b + kAhead < end_block)
      __builtin_prefetch(t0 + pack_hi(base + (b + kAhead) * kBlockBytes), 0, 0);
#endif
    const std::int32_t first = t0[pack_hi(q)];
    if (first + t1_max < fire) continue;
    if (first + t1[pack_lo(q)] >= fire) out.push_back(b * kBlockBytes);
  }
}

}  // namespace

std::vector<std::uint64_t> scan_blocks(std::span<const std::uint8_t> data,
                                       const Prefilter& pf, unsigned threads) {
  const std::size_t nblocks = data.size() / kBlockBytes;
  if (threads <= 1 || nblocks < 1024) {
    std::vector<std::uint64_t> out;
    scan_block_range(data.data(), 0, nblocks, pf.table0_.data(), pf.table1_.data(),
                     pf.table1_max_, pf.fire_threshold_, out);
    return out;
  }

  const std::size_t workers = std::min<std::size_t>(threads, nblocks);
  std::vector<std::vector<std::uint64_t>> parts(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = nblocks * w / workers;
    const std::size_t end = nblocks * (w + 1) / workers;
    pool.emplace_back([&, w, begin, end] {
      scan_block_range(data.data(), begin, end, pf.table0_.data(), pf.table1_.data(),
                       pf.table1_max_, pf.fire_threshold_, parts[w]);
    });
  }
  for (auto& t : pool) t.join();

  std::size_t total = 0;
  for (const auto& part : parts) total += part.size();
  std::vector<std::uint64_t> out;
  out.reserve(total);
  for (const auto& part : parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

CyberNeuron build_precise(std::span<const Window11> windows) {
  CyberNeuron neuron(8, 8);
  Pattern pattern(8);
  for (const Window11& w : windows) {
    for (std::size_t start = 0; start + 8 <= kWindowBytes; ++start) {
      for (std::size_t i = 0; i < 8; ++i) pattern[i] = w.bytes[start + i];
      neuron.train_add(pattern);
    }
  }
  return neuron;
}

bool precise_confirm(const CyberNeuron& precise, std::span<const std::uint8_t> data,
                     std::uint64_t offset) {
  const std::size_t arity = precise.n_inputs();
  const std::size_t m = precise.table_size();
  const std::uint64_t begin = offset >= 10 ? offset - 10 : 0;
  const std::uint64_t end = std::min<std::uint64_t>(data.size(), offset + 16);
  if (end < begin + arity) return false;
  const auto cells = precise.cells();
  for (std::uint64_t s = begin; s + arity <= end; ++s) {
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < arity; ++i) sum += cells[i * m + data[s + i]];
    if (precise.classify(sum) == Classification::Known) return true;
  }
  return false;
}

std::optional<VerifiedHit> verify_exact(std::span<const std::uint8_t> data,
                                        std::uint64_t candidate_offset,
                                        const SignatureIndex& index,
                                        std::uint32_t nearest_floor) {
  if (candidate_offset + kBlockBytes > data.size())
    throw std::invalid_argument("candidate offset out of range");
  const auto* owners = index.find(pack_block(data.data() + candidate_offset));
  if (owners == nullptr) return std::nullopt;

  std::optional<VerifiedHit> best;
  for (const FragmentOwner& fo : *owners) {
    if (candidate_offset < fo.shift) continue;
    const std::uint64_t window_start = candidate_offset - fo.shift;
    if (window_start + kWindowBytes > data.size()) continue;

    const auto& window = index.windows[fo.owner_id];
    const std::uint16_t known = index.window_known[fo.owner_id];
    std::uint32_t matched = 0;
    for (std::size_t i = 0; i < kWindowBytes; ++i)
      if ((known & (1u << i)) && data[window_start + i] == window[i]) ++matched;

    if (matched == kWindowBytes) {
      VerifiedHit hit;
      hit.name = index.owner_names[fo.owner_id];
      hit.offset = window_start;
      hit.exact = true;
      hit.similarity = kWindowBytes;
      return hit;
    }
    if (!best || matched > best->similarity) {
      VerifiedHit hit;
      hit.name = index.owner_names[fo.owner_id];
      hit.offset = window_start;
      hit.exact = false;
      hit.similarity = matched;
      best = std::move(hit);
    }
  }
  if (best && best->similarity >= nearest_floor) return best;
  return std::nullopt;
}

ScanReport scan(std::span<const std::uint8_t> data, const Prefilter& prefilter,
                const CyberNeuron* precise, const ScanConfig& config) {
  ScanReport report;
  report.bytes_scanned = data.size();
  const auto total_start = Clock::now();

  auto stage_start = Clock::now();
  const std::vector<std::uint64_t> candidates = scan_blocks(data, prefilter, config.threads);
  report.stage_ms.prefilter_ms = ms_since(stage_start);
  report.candidates = candidates.size();

  std::vector<std::uint64_t> survivors;
  stage_start = Clock::now();
  if (precise != nullptr && config.use_precise) {
    survivors.reserve(candidates.size());
    for (std::uint64_t offset : candidates)
      if (precise_confirm(*precise, data, offset)) survivors.push_back(offset);
  } else {
    survivors = candidates;
  }
  report.stage_ms.precise_ms = ms_since(stage_start);
  report.survivors = survivors.size();

  stage_start = Clock::now();
  for (std::uint64_t offset : survivors) {
    if (auto hit = verify_exact(data, offset, prefilter.index(), config.nearest_floor))
      report.hits.push_back(std::move(*hit));
  }
  report.stage_ms.verify_ms = ms_since(stage_start);

  report.elapsed_ms = ms_since(total_start);
  if (report.elapsed_ms > 0.0)
    report.mb_per_s = (static_cast<double>(data.size()) / kMiB) / (report.elapsed_ms / 1000.0);
  return report;
}

ScanReport scan_file(const std::filesystem::path& path, const Prefilter& prefilter,
                     const CyberNeuron* precise, const ScanConfig& config) {
  const std::vector<std::uint8_t> data = io::read_file(path);
  return scan(data, prefilter, precise, config);
}

std::string ScanReport::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["bytes_scanned"] = bytes_scanned;
  j["elapsed_ms"] = elapsed_ms;
  j["mb_per_s"] = mb_per_s;
  j["candidates"] = candidates;
  j["survivors"] = survivors;
  j["hits"] = nlohmann::json::array();
  for (const VerifiedHit& hit : hits) {
    j["hits"].push_back({{"name", hit.name},
                         {"offset", hit.offset},
                         {"kind", hit.exact ? "exact" : "nearest"},
                         {"similarity", hit.similarity}});
  }
  j["stage_ms"] = {{"prefilter", stage_ms.prefilter_ms},
                   {"precise", stage_ms.precise_ms},
                   {"verify", stage_ms.verify_ms}};
  return j.dump(2);
}

double measure_fp_rate(const Prefilter& prefilter, std::size_t byte_count,
                       std::uint64_t seed) {
  if (byte_count < kBlockBytes) throw std::invalid_argument("need at least one block");
  const std::vector<std::uint8_t> data = random_bytes(byte_count, seed);
  const std::size_t blocks = data.size() / kBlockBytes;
  const std::vector<std::uint64_t> fired = scan_blocks(data, prefilter);
  return static_cast<double>(fired.size()) / static_cast<double>(blocks);
}

BenchResult bench_scan(std::string stage_set, std::span<const std::uint8_t> buffer,
                       const Prefilter& prefilter, const CyberNeuron* precise,
                       unsigned repetitions, unsigned threads) {
  if (repetitions == 0) throw std::invalid_argument("repetitions must be >= 1");
  BenchResult result;
  result.stage_set = std::move(stage_set);
  ScanConfig config;
  config.threads = threads;
  scan(buffer, prefilter, precise, config);  // untimed warm-up pass
  for (unsigned r = 0; r < repetitions; ++r) {
    const ScanReport report = scan(buffer, prefilter, precise, config);
    result.runs.push_back(report.mb_per_s);
  }
  std::vector<double> sorted = result.runs;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  result.median_mb_s =
      n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  result.best_mb_s = sorted.back();
  return result;
}

std::vector<std::uint8_t> serialize_prefilter(const Prefilter& pf) {
  io::Writer w;
  w.magic("CPF1");
  w.u32(static_cast<std::uint32_t>(pf.fire_threshold_));
  w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(pf.table0_.data()),
                    pf.table0_.size()));
  w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(pf.table1_.data()),
                    pf.table1_.size()));
  w.u32(static_cast<std::uint32_t>(pf.index_.entries.size()));
  for (const FragmentEntry& e : pf.index_.entries) {
    w.bytes(e.bytes);
    w.u32(e.owner_id);
    w.u8(e.shift);
  }
  w.u32(static_cast<std::uint32_t>(pf.index_.owner_names.size()));
  for (const std::string& name : pf.index_.owner_names) w.str(name);
  return w.take();
}

Prefilter deserialize_prefilter(std::span<const std::uint8_t> data) {
  io::Reader r(data);
  r.expect_magic("CPF1");
  Prefilter pf;
  pf.fire_threshold_ = static_cast<std::int32_t>(r.u32());
  const auto t0 = r.bytes(kPrefilterCells);
  std::copy(t0.begin(), t0.end(), reinterpret_cast<std::uint8_t*>(pf.table0_.data()));
  const auto t1 = r.bytes(kPrefilterCells);
  std::copy(t1.begin(), t1.end(), reinterpret_cast<std::uint8_t*>(pf.table1_.data()));

  FragmentSet fragments;
  const std::uint32_t count = r.u32();
  fragments.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FragmentEntry e;
    const auto b = r.bytes(kFragmentBytes);
    std::copy(b.begin(), b.end(), e.bytes.begin());
    e.owner_id = r.u32();
    e.shift = r.u8();
    if (e.shift >= kShiftCount) throw FormatError("fragment shift out of range");
    fragments.entries.push_back(e);
  }
  const std::uint32_t owners = r.u32();
  fragments.owner_names.reserve(owners);
  for (std::uint32_t i = 0; i < owners; ++i) fragments.owner_names.push_back(r.str());
  for (const FragmentEntry& e : fragments.entries)
    if (e.owner_id >= owners) throw FormatError("fragment owner id out of range");
  r.expect_end();

  pf.index_ = SignatureIndex::build(fragments);
  pf.refresh_table1_max();
  return pf;
}

void save_prefilter(const Prefilter& prefilter, const std::filesystem::path& path) {
  io::write_file(path, serialize_prefilter(prefilter));
}

Prefilter load_prefilter(const std::filesystem::path& path) {
  return deserialize_prefilter(io::read_file(path));
}

}  // namespace cyberneuron
