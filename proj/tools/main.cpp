#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cyberneuron/byteio.hpp"
#include "cyberneuron/lab.hpp"
#include "cyberneuron/neuron_io.hpp"
#include "cyberneuron/rng.hpp"
#include "cyberneuron/scanner.hpp"
#include "cyberneuron/sigdb.hpp"

namespace {

using namespace cyberneuron;

std::vector<std::uint8_t> parse_hex_prefix(const std::string& hex) {
  if (hex.size() % 2 != 0) throw CLI::ValidationError("--header-prefix", "odd hex length");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const std::string byte = hex.substr(i, 2);
    out.push_back(static_cast<std::uint8_t>(std::stoul(byte, nullptr, 16)));
  }
  return out;
}

int run_db_build(const std::vector<std::string>& db_paths, const std::string& out_path,
                 const std::string& precise_path, const std::string& report_path,
                 const FilterRules& rules, bool json) {
  std::vector<std::filesystem::path> paths(db_paths.begin(), db_paths.end());
  const LoadResult loaded = load_database(paths, rules);

  if (!loaded.fragments.entries.empty()) {
    const Prefilter prefilter = build_prefilter(loaded.fragments);
    save_prefilter(prefilter, out_path);
  } else {
    // zero-count artifact: an untrained prefilter
    save_prefilter(Prefilter{}, out_path);
  }
  if (!precise_path.empty()) save_neuron(build_precise(loaded.windows), precise_path);
  if (!report_path.empty()) {
    const std::string doc = loaded.report.to_json();
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot create " + report_path);
    out << doc << '\n';
  }

  if (json) {
    std::cout << loaded.report.to_json() << '\n';
  } else {
    const auto& r = loaded.report;
    std::cout << "loaded " << r.loaded << " signatures (" << r.parse_errors
              << " parse errors, " << r.hash_signatures << " hash signatures skipped)\n"
              << "rejected " << r.rejected;
    if (!r.rejected_by_reason.empty()) {
      std::cout << " (";
      bool first = true;
      for (const auto& [reason, n] : r.rejected_by_reason) {
        if (!first) std::cout << ", ";
        std::cout << reason << " " << n;
        first = false;
      }
      std::cout << ")";
    }
    std::cout << "\nextracted " << r.extracted << " windows\n"
              << "trained " << r.fragments << " fragments\n";
  }
  return 0;
}

int run_scan(const std::string& prefilter_path, const std::string& precise_path,
             const std::string& target, std::uint32_t fp_floor, unsigned threads,
             bool json) {
  const Prefilter prefilter = load_prefilter(prefilter_path);
  std::optional<CyberNeuron> precise;
  if (!precise_path.empty()) precise = load_neuron(precise_path);

  ScanConfig config;
  config.nearest_floor = fp_floor;
  config.threads = threads;
  const ScanReport report =
      scan_file(target, prefilter, precise ? &*precise : nullptr, config);

  if (json) {
    std::cout << report.to_json() << '\n';
  } else {
    std::cout << "scanned " << report.bytes_scanned << " bytes in " << report.elapsed_ms
              << " ms (" << report.mb_per_s << " MB/s)\n"
              << "candidates " << report.candidates << ", survivors " << report.survivors
              << ", hits " << report.hits.size() << "\n";
    for (const VerifiedHit& hit : report.hits)
      std::cout << (hit.exact ? "exact  " : "nearest") << " " << hit.name << " at offset "
                << hit.offset << " (" << hit.similarity << "/11)\n";
  }
  return report.hits.empty() ? 0 : 1;
}

int run_bench(const std::string& prefilter_path, const std::string& precise_path,
              std::uint64_t size_mb, unsigned reps, unsigned threads, std::uint64_t seed,
              bool json) {
  const Prefilter prefilter = load_prefilter(prefilter_path);
  std::optional<CyberNeuron> precise;
  if (!precise_path.empty()) precise = load_neuron(precise_path);

  const std::vector<std::uint8_t> buffer =
      random_bytes(static_cast<std::size_t>(size_mb) * 1024 * 1024, seed);

  std::vector<BenchResult> rows;
  rows.push_back(bench_scan("prefilter-only", buffer, prefilter, nullptr, reps, threads));
  if (precise)
    rows.push_back(
        bench_scan("prefilter+precise", buffer, prefilter, &*precise, reps, threads));

  if (json) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["size_mb"] = size_mb;
    j["repetitions"] = reps;
    j["threads"] = threads;
    j["rows"] = nlohmann::json::array();
    for (const BenchResult& row : rows)
      j["rows"].push_back({{"stage_set", row.stage_set},
                           {"median_mb_s", row.median_mb_s},
                           {"best_mb_s", row.best_mb_s},
                           {"runs", row.runs}});
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "stage set            median MB/s   best MB/s\n";
    for (const BenchResult& row : rows) {
      std::printf("%-20s %11.1f %11.1f\n", row.stage_set.c_str(), row.median_mb_s,
                  row.best_mb_s);
    }
  }
  return 0;
}

int run_lab(const ExperimentConfig& config, const std::vector<std::uint32_t>& dividers,
            const std::string& csv_path, const std::string& image_path, bool json) {
  std::vector<ExperimentSeries> series;
  if (dividers.empty()) {
    series.push_back(capacity_experiment(config));
  } else {
    series = learning_rate_sweep(config, dividers);
  }
  if (!csv_path.empty()) write_csv(std::filesystem::path(csv_path), series);

  if (!image_path.empty()) {
    // re-train the last configuration's neuron for the table picture
    ExperimentConfig last = config;
    if (!dividers.empty()) last.divider = dividers.back();
    const auto patterns =
        gen_patterns(last.pattern_count, last.n_inputs, last.bits_per_input, last.seed);
    CyberNeuron neuron(last.n_inputs, last.bits_per_input, 100, 20, last.divider);
    neuron.batch_train(patterns, {}, last.epochs);
    export_table_image(neuron, image_path);
  }

  if (json) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["series"] = nlohmann::json::array();
    for (const ExperimentSeries& s : series) {
      const SeriesRow& last = s.rows.back();
      j["series"].push_back({{"divider", s.config.divider},
                             {"epochs_to_full_recall", s.epochs_to_full_recall()},
                             {"final_fraction_learned", last.fraction_learned},
                             {"final_fraction_false", last.fraction_false},
                             {"cumulative_rounds", last.cumulative_rounds}});
    }
    std::cout << j.dump(2) << '\n';
  } else {
    for (const ExperimentSeries& s : series) {
      const SeriesRow& last = s.rows.back();
      std::cout << "divider " << s.config.divider << ": epochs to full recall "
                << s.epochs_to_full_recall() << ", false rate " << last.fraction_false
                << ", rounds " << last.cumulative_rounds << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Table-lookup neuron toolkit: signature database builder, "
               "three-stage byte-stream scanner, and capacity lab"};
  app.require_subcommand(1);
  app.set_config("--config")->description("key=value file overriding defaults");
  app.allow_config_extras(false);

  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool json = false;
  app.add_option("--seed", seed, "seed for every random stream")
      ->envname("CYBERNEURON_SEED");
  app.add_option("--threads", threads, "scanner chunk parallelism")->check(CLI::Range(1u, 256u));
  app.add_flag("--json", json, "machine-readable output");

  // db-build
  auto* db_cmd = app.add_subcommand("db-build", "parse signature files, build artifacts");
  std::vector<std::string> db_paths;
  std::string out_path, precise_out, report_path;
  double min_entropy = 2.0;
  std::size_t max_run = 3;
  std::vector<std::string> header_prefixes;
  db_cmd->add_option("--db", db_paths, "signature files (.db/.ndb/.hdb/.mdb)")
      ->required()
      ->check(CLI::ExistingFile);
  db_cmd->add_option("--out", out_path, "prefilter output file")->required();
  db_cmd->add_option("--precise", precise_out, "also train and save the stage-2 neuron");
  db_cmd->add_option("--report", report_path, "write the filter report as JSON");
  db_cmd->add_option("--min-entropy", min_entropy, "window entropy floor in bits");
  db_cmd->add_option("--max-run", max_run, "longest identical-byte run allowed in a window");
  db_cmd->add_option("--header-prefix", header_prefixes,
                     "hex prefix a window must not start with (repeatable)");

  // scan
  auto* scan_cmd = app.add_subcommand("scan", "run the detection pipeline over a file");
  std::string pf_path, precise_path, target;
  std::uint32_t fp_floor = 8;
  scan_cmd->add_option("--prefilter", pf_path, "prefilter file")
      ->required()
      ->check(CLI::ExistingFile);
  scan_cmd->add_option("--precise", precise_path, "stage-2 neuron file")
      ->check(CLI::ExistingFile);
  scan_cmd->add_option("--target", target, "file to scan")->required()->check(CLI::ExistingFile);
  scan_cmd->add_option("--fp-floor", fp_floor, "nearest-match floor, matched bytes of 11")
      ->check(CLI::Range(0u, 11u));

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "throughput over an in-memory buffer");
  std::string bench_pf, bench_precise;
  std::uint64_t size_mb = 0;
  unsigned reps = 3;
  bench_cmd->add_option("--prefilter", bench_pf, "prefilter file")
      ->required()
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--precise", bench_precise, "stage-2 neuron file")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--size-mb", size_mb, "buffer size in MiB")
      ->required()
      ->check(CLI::Range(std::uint64_t{1}, std::uint64_t{4096}));
  bench_cmd->add_option("--reps", reps, "repetitions")->check(CLI::Range(1u, 100u));

  // lab
  auto* lab_cmd = app.add_subcommand("lab", "capacity and learning-rate experiments");
  lab_cmd->require_subcommand(1);
  ExperimentConfig config;
  std::string csv_path, image_path;
  std::vector<std::uint32_t> dividers;
  auto add_lab_options = [&](CLI::App* cmd) {
    cmd->add_option("--inputs", config.n_inputs, "number of inputs");
    cmd->add_option("--bits", config.bits_per_input, "bits per input");
    cmd->add_option("--patterns", config.pattern_count, "patterns to train");
    cmd->add_option("--bytes", config.pattern_bytes, "bytes per pattern");
    cmd->add_option("--epochs", config.epochs, "epoch budget");
    cmd->add_option("--probes", config.probe_count, "probes per false-rate measurement");
    cmd->add_option("--csv", csv_path, "series output file");
    cmd->add_option("--image", image_path, "trained-table picture (PGM)");
  };
  auto* cap_cmd = lab_cmd->add_subcommand("capacity", "one training series");
  add_lab_options(cap_cmd);
  cap_cmd->add_option("--divider", config.divider, "reciprocal of the learning coefficient");
  auto* sweep_cmd = lab_cmd->add_subcommand("lr-sweep", "series per divider");
  add_lab_options(sweep_cmd);
  sweep_cmd->add_option("--dividers", dividers, "dividers to sweep")
      ->required()
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (db_cmd->parsed()) {
      FilterRules rules = FilterRules::defaults();
      rules.min_entropy_bits = min_entropy;
      rules.max_repeat_run = max_run;
      if (!header_prefixes.empty()) {
        rules.header_prefixes.clear();
        for (const std::string& hex : header_prefixes)
          rules.header_prefixes.push_back(parse_hex_prefix(hex));
      }
      return run_db_build(db_paths, out_path, precise_out, report_path, rules, json);
    }
    if (scan_cmd->parsed())
      return run_scan(pf_path, precise_path, target, fp_floor, threads, json);
    if (bench_cmd->parsed())
      return run_bench(bench_pf, bench_precise, size_mb, reps, threads, seed, json);
    if (lab_cmd->parsed()) {
      config.seed = seed;
      return run_lab(config, sweep_cmd->parsed() ? dividers : std::vector<std::uint32_t>{},
                     csv_path, image_path, json);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
