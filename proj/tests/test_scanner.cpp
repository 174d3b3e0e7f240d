#include <doctest.h>

#include <algorithm>

#include "cyberneuron/byteio.hpp"
#include "cyberneuron/rng.hpp"
#include "cyberneuron/scanner.hpp"

using namespace cyberneuron;

namespace {

Window11 make_window(const std::string& owner, std::uint64_t seed) {
  Window11 w;
  w.owner = owner;
  Rng rng(seed);
  for (auto& b : w.bytes) b = static_cast<std::uint8_t>(uniform_below(rng, 256));
  return w;
}

FragmentSet expand_all(std::span<const Window11> windows) {
  FragmentSet set;
  for (const Window11& w : windows) {
    const auto owner_id = static_cast<std::uint32_t>(set.owner_names.size());
    set.owner_names.push_back(w.owner);
    for (std::size_t s = 0; s < kShiftCount; ++s) {
      FragmentEntry e;
      std::copy_n(w.bytes.begin() + s, kFragmentBytes, e.bytes.begin());
      e.owner_id = owner_id;
      e.shift = static_cast<std::uint8_t>(s);
      set.entries.push_back(e);
    }
  }
  return set;
}

void plant(std::vector<std::uint8_t>& data, const Window11& w, std::size_t offset) {
  REQUIRE(offset + kWindowBytes <= data.size());
  std::copy(w.bytes.begin(), w.bytes.end(), data.begin() + offset);
}

FragmentEntry fragment_of(std::span<const std::uint8_t> bytes, std::uint32_t owner,
                          std::uint8_t shift) {
  FragmentEntry e;
  REQUIRE(bytes.size() == kFragmentBytes);
  std::copy(bytes.begin(), bytes.end(), e.bytes.begin());
  e.owner_id = owner;
  e.shift = shift;
  return e;
}

}  // namespace

TEST_CASE("prefilter training assigns the two half-cells") {
  FragmentSet set;
  set.owner_names = {"A"};
  const std::uint8_t frag[6] = {0, 0, 0, 0, 0, 1};
  set.entries.push_back(fragment_of(frag, 0, 0));
  const Prefilter pf = build_prefilter(set);

  CHECK(pf.table0()[0] == 1);
  CHECK(pf.table1()[1] == 1);
  CHECK(pf.nonzero_cells() == 2);
  CHECK(pf.fire_threshold() == 2);
  CHECK(pf.fire(frag));

  SUBCASE("an untrained high half cannot fire") {
    const std::uint8_t other[6] = {9, 9, 9, 0, 0, 1};
    CHECK(!pf.fire(other));
  }

  SUBCASE("a shared high half stores three cells") {
    const std::uint8_t second[6] = {0, 0, 0, 0, 0, 2};
    set.entries.push_back(fragment_of(second, 0, 1));
    const Prefilter two = build_prefilter(set);
    CHECK(two.nonzero_cells() == 3);
  }
}

TEST_CASE("cross-talk between fragments fires the prefilter") {
  FragmentSet set;
  set.owner_names = {"AB", "CD"};
  const std::uint8_t ab[6] = {0xAA, 0xAA, 0xAA, 0xBB, 0xBB, 0xBB};
  const std::uint8_t cd[6] = {0xCC, 0xCC, 0xCC, 0xDD, 0xDD, 0xDD};
  set.entries.push_back(fragment_of(ab, 0, 0));
  set.entries.push_back(fragment_of(cd, 1, 0));
  const Prefilter pf = build_prefilter(set);

  const std::uint8_t ad[6] = {0xAA, 0xAA, 0xAA, 0xDD, 0xDD, 0xDD};
  CHECK(pf.fire(ad));  // inherent stage-1 false positive

  SUBCASE("the verify stage drops it: the block is not an indexed fragment") {
    std::vector<std::uint8_t> data(ad, ad + 6);
    CHECK(!verify_exact(data, 0, pf.index()).has_value());
  }
}

TEST_CASE("an empty prefilter never fires") {
  const Prefilter pf;
  const auto data = random_bytes(1 << 20, 3);
  CHECK(scan_blocks(data, pf).empty());
  CHECK(measure_fp_rate(pf, 1 << 20, 3) == 0.0);
}

TEST_CASE("exactly one whole block lies inside any window placement") {
  for (std::size_t o = 0; o < 60; ++o) {
    std::size_t whole_blocks = 0;
    for (std::size_t b = 0; b * kBlockBytes < o + kWindowBytes; ++b) {
      const std::size_t start = b * kBlockBytes;
      if (start >= o && start + kBlockBytes <= o + kWindowBytes) ++whole_blocks;
    }
    CHECK(whole_blocks == 1);
  }
}

TEST_CASE("a planted window yields a candidate at the interior block") {
  const Window11 w = make_window("P", 5);
  const std::vector<Window11> windows{w};
  const Prefilter pf = build_prefilter(expand_all(windows));

  auto data = random_bytes(4096, 77);
  plant(data, w, 7);
  const auto candidates = scan_blocks(data, pf);
  // offset 12 is the only multiple of 6 with a whole block inside [7, 18)
  CHECK(std::find(candidates.begin(), candidates.end(), 12) != candidates.end());
}

TEST_CASE("precise stage confirms planted windows and skips empty neighborhoods") {
  const Window11 w = make_window("P", 6);
  const std::vector<Window11> windows{w};
  const CyberNeuron precise = build_precise(windows);
  CHECK(precise.n_inputs() == 8);
  CHECK(precise.table_size() == 256);

  auto data = random_bytes(2048, 13);
  plant(data, w, 31);
  CHECK(precise_confirm(precise, data, 36));  // the interior block offset

  const std::vector<std::uint8_t> tiny(6, 0);
  CHECK(!precise_confirm(precise, tiny, 0));
}

TEST_CASE("verification names the right owner at the right offset") {
  const Window11 w = make_window("Exact.Owner", 9);
  const std::vector<Window11> windows{w};
  const Prefilter pf = build_prefilter(expand_all(windows));

  auto data = random_bytes(512, 21);
  const std::size_t offset = 100;
  plant(data, w, offset);
  const std::size_t block = 102;  // first multiple of 6 inside the window

  SUBCASE("exact placement") {
    const auto hit = verify_exact(data, block, pf.index());
    REQUIRE(hit.has_value());
    CHECK(hit->exact);
    CHECK(hit->similarity == 11);
    CHECK(hit->name == "Exact.Owner");
    CHECK(hit->offset == offset);
  }

  SUBCASE("corruption outside the firing fragment degrades to nearest") {
    // block 102 holds window bytes [2, 8); corrupt bytes 0 and 10
    data[offset] ^= 0xFF;
    data[offset + 10] ^= 0xFF;
    const auto hit = verify_exact(data, block, pf.index());
    REQUIRE(hit.has_value());
    CHECK(!hit->exact);
    CHECK(hit->similarity == 9);
    CHECK(hit->name == "Exact.Owner");

    SUBCASE("the nearest floor filters weak matches") {
      CHECK(!verify_exact(data, block, pf.index(), 10).has_value());
    }
  }
}

TEST_CASE("full pipeline finds planted windows exactly once each") {
  std::vector<Window11> windows;
  for (int i = 0; i < 8; ++i)
    windows.push_back(make_window("W" + std::to_string(i), 100 + i));
  const Prefilter pf = build_prefilter(expand_all(windows));
  const CyberNeuron precise = build_precise(windows);

  auto data = random_bytes(1 << 22, 31);
  std::vector<std::pair<std::string, std::size_t>> expected;
  Rng rng(55);
  for (const Window11& w : windows) {
    const std::size_t offset = uniform_below(rng, data.size() - kWindowBytes);
    plant(data, w, offset);
    expected.emplace_back(w.owner, offset);
  }

  const ScanReport report = scan(data, pf, &precise);
  CHECK(report.bytes_scanned == data.size());
  CHECK(report.survivors <= report.candidates);
  CHECK(report.hits.size() <= report.survivors);
  for (const auto& [name, offset] : expected) {
    const bool found = std::any_of(report.hits.begin(), report.hits.end(),
                                   [&](const VerifiedHit& h) {
                                     return h.exact && h.name == name && h.offset == offset;
                                   });
    CHECK(found);
  }

  SUBCASE("scanning is pure: a second pass matches except timings") {
    const ScanReport again = scan(data, pf, &precise);
    CHECK(again.candidates == report.candidates);
    CHECK(again.survivors == report.survivors);
    REQUIRE(again.hits.size() == report.hits.size());
    for (std::size_t i = 0; i < report.hits.size(); ++i) {
      CHECK(again.hits[i].name == report.hits[i].name);
      CHECK(again.hits[i].offset == report.hits[i].offset);
    }
  }

  SUBCASE("chunked scans merge to the single-pass candidates") {
    const auto single = scan_blocks(data, pf, 1);
    for (unsigned threads : {2u, 3u, 7u}) CHECK(scan_blocks(data, pf, threads) == single);
  }

  SUBCASE("the survivor rate never exceeds the candidate rate on clean data") {
    const auto clean = random_bytes(1 << 21, 99);
    const ScanReport r = scan(clean, pf, &precise);
    CHECK(r.survivors <= r.candidates);
  }
}

TEST_CASE("scan report serializes with the pinned field names") {
  const Window11 w = make_window("Json.Owner", 1);
  const std::vector<Window11> windows{w};
  const Prefilter pf = build_prefilter(expand_all(windows));
  auto data = random_bytes(600, 5);
  plant(data, w, 60);

  const ScanReport report = scan(data, pf, nullptr);
  const std::string json = report.to_json();
  for (const char* field : {"\"schema_version\"", "\"bytes_scanned\"", "\"elapsed_ms\"",
                            "\"mb_per_s\"", "\"candidates\"", "\"survivors\"", "\"hits\"",
                            "\"name\"", "\"offset\"", "\"kind\"", "\"similarity\""})
    CHECK(json.find(field) != std::string::npos);
  CHECK(json.find("\"exact\"") != std::string::npos);
}

TEST_CASE("a single random fragment is effectively invisible in random data") {
  FragmentSet set;
  set.owner_names = {"lone"};
  const std::uint8_t frag[6] = {0x12, 0x34, 0x56, 0x78, 0x9a, 0xbc};
  set.entries.push_back(fragment_of(frag, 0, 0));
  const Prefilter pf = build_prefilter(set);
  CHECK(measure_fp_rate(pf, 6 * 1'000'000, 8) == 0.0);
}

TEST_CASE("prefilter files round-trip byte-identically") {
  std::vector<Window11> windows{make_window("S1", 3), make_window("S2", 4)};
  const Prefilter pf = build_prefilter(expand_all(windows));

  const auto bytes = serialize_prefilter(pf);
  const Prefilter copy = deserialize_prefilter(bytes);
  CHECK(serialize_prefilter(copy) == bytes);
  CHECK(copy.fire_threshold() == pf.fire_threshold());
  CHECK(copy.index().entries.size() == pf.index().entries.size());
  CHECK(copy.index().owner_names == pf.index().owner_names);
  CHECK(copy.index().windows == pf.index().windows);

  auto data = random_bytes(1 << 16, 17);
  plant(data, windows[0], 1234);
  CHECK(scan_blocks(data, copy) == scan_blocks(data, pf));

  SUBCASE("truncated or mislabeled files are rejected") {
    auto bad = bytes;
    bad.resize(bad.size() / 2);
    CHECK_THROWS_AS(deserialize_prefilter(bad), FormatError);
    auto wrong = bytes;
    wrong[0] = 'X';
    CHECK_THROWS_AS(deserialize_prefilter(wrong), FormatError);
  }
}

TEST_CASE("bench reports a median for one or many repetitions") {
  const std::vector<Window11> windows{make_window("B", 2)};
  const Prefilter pf = build_prefilter(expand_all(windows));
  const auto buffer = random_bytes(1 << 20, 4);

  const BenchResult one = bench_scan("prefilter-only", buffer, pf, nullptr, 1);
  CHECK(one.runs.size() == 1);
  CHECK(one.median_mb_s == one.runs[0]);

  const BenchResult five = bench_scan("prefilter-only", buffer, pf, nullptr, 5);
  CHECK(five.runs.size() == 5);
  CHECK(five.median_mb_s > 0.0);
  CHECK(five.best_mb_s >= five.median_mb_s);
}
