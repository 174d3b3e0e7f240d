#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cyberneuron/lab.hpp"
#include "cyberneuron/neuron.hpp"
#include "cyberneuron/neuron_io.hpp"
#include "cyberneuron/rng.hpp"
#include "cyberneuron/scanner.hpp"
#include "cyberneuron/sigdb.hpp"

namespace py = pybind11;
using namespace cyberneuron;

namespace {

std::vector<std::uint8_t> to_bytes(const py::bytes& data) {
  const std::string_view view = data;
  return std::vector<std::uint8_t>(view.begin(), view.end());
}

TrainOutcome train_with_seed(CyberNeuron& neuron, const Pattern& pattern, Strategy strategy,
                             std::uint64_t seed, std::uint32_t max_rounds, bool add) {
  Rng rng(seed);
  Rng* rng_ptr = strategy == Strategy::Random ? &rng : nullptr;
  return add ? neuron.train_add(pattern, strategy, rng_ptr, max_rounds)
             : neuron.train_remove(pattern, strategy, rng_ptr, max_rounds);
}

py::dict report_to_dict(const ScanReport& report) {
  py::dict d;
  d["bytes_scanned"] = report.bytes_scanned;
  d["elapsed_ms"] = report.elapsed_ms;
  d["mb_per_s"] = report.mb_per_s;
  d["candidates"] = report.candidates;
  d["survivors"] = report.survivors;
  py::list hits;
  for (const VerifiedHit& hit : report.hits) {
    py::dict h;
    h["name"] = hit.name;
    h["offset"] = hit.offset;
    h["kind"] = hit.exact ? "exact" : "nearest";
    h["similarity"] = hit.similarity;
    hits.append(std::move(h));
  }
  d["hits"] = std::move(hits);
  return d;
}

}  // namespace

PYBIND11_MODULE(_cyberneuron, m) {
  m.doc() = "Table-lookup neuron, signature database tooling and block scanner";

  py::enum_<Classification>(m, "Classification")
      .value("Known", Classification::Known)
      .value("Partial", Classification::Partial)
      .value("Unknown", Classification::Unknown);

  py::enum_<Strategy>(m, "Strategy")
      .value("Sequential", Strategy::Sequential)
      .value("Random", Strategy::Random);

  py::enum_<TrainStatus>(m, "TrainStatus")
      .value("Converged", TrainStatus::Converged)
      .value("Saturated", TrainStatus::Saturated)
      .value("RoundLimit", TrainStatus::RoundLimit);

  py::class_<TrainOutcome>(m, "TrainOutcome")
      .def_readonly("status", &TrainOutcome::status)
      .def_readonly("rounds", &TrainOutcome::rounds)
      .def_readonly("total_cell_increments", &TrainOutcome::total_cell_increments)
      .def("__repr__", [](const TrainOutcome& o) {
        return "TrainOutcome(rounds=" + std::to_string(o.rounds) + ")";
      });

  py::class_<CyberNeuron>(m, "CyberNeuron")
      .def(py::init<std::uint32_t, std::uint32_t, std::int32_t, std::int32_t, std::uint32_t,
                    std::int32_t, std::int32_t>(),
           py::arg("n_inputs"), py::arg("bits_per_input"), py::arg("threshold") = 100,
           py::arg("threshold2") = 20, py::arg("divider") = 4, py::arg("cell_min") = -126,
           py::arg("cell_max") = 127)
      .def_property_readonly("n_inputs", &CyberNeuron::n_inputs)
      .def_property_readonly("bits_per_input", &CyberNeuron::bits_per_input)
      .def_property_readonly("table_size", &CyberNeuron::table_size)
      .def_property_readonly("threshold", &CyberNeuron::threshold)
      .def_property_readonly("threshold2", &CyberNeuron::threshold2)
      .def("cell", &CyberNeuron::cell)
      .def("set_cell", &CyberNeuron::set_cell)
      .def("evaluate",
           [](const CyberNeuron& n, const Pattern& p) {
             const ActivationTrace trace = n.evaluate(p);
             return py::make_tuple(trace.output, trace.active_cells);
           })
      .def("output", [](const CyberNeuron& n, const Pattern& p) { return n.evaluate(p).output; })
      .def("classify", &CyberNeuron::classify)
      .def("train_add",
           [](CyberNeuron& n, const Pattern& p, Strategy strategy, std::uint64_t seed,
              std::uint32_t max_rounds) {
             return train_with_seed(n, p, strategy, seed, max_rounds, true);
           },
           py::arg("pattern"), py::arg("strategy") = Strategy::Sequential, py::arg("seed") = 0,
           py::arg("max_rounds") = kDefaultMaxRounds)
      .def("train_remove",
           [](CyberNeuron& n, const Pattern& p, Strategy strategy, std::uint64_t seed,
              std::uint32_t max_rounds) {
             return train_with_seed(n, p, strategy, seed, max_rounds, false);
           },
           py::arg("pattern"), py::arg("strategy") = Strategy::Sequential, py::arg("seed") = 0,
           py::arg("max_rounds") = kDefaultMaxRounds)
      .def("serialize",
           [](const CyberNeuron& n) {
             const auto bytes = serialize(n);
             return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
           })
      .def_static("deserialize",
                  [](const py::bytes& data) { return deserialize(to_bytes(data)); })
      .def("save", &save_neuron)
      .def_static("load", &load_neuron)
      .def("__eq__", [](const CyberNeuron& a, const CyberNeuron& b) { return a == b; });

  m.def("gen_patterns", &gen_patterns, py::arg("count"), py::arg("n_inputs"),
        py::arg("bits_per_input"), py::arg("seed"));
  m.def("false_recognition_rate",
        [](const CyberNeuron& neuron, const std::vector<Pattern>& trained,
           std::size_t probe_count, std::uint64_t seed) {
          return false_recognition_rate(neuron, trained, probe_count, seed);
        });
  m.def("export_table_image", &export_table_image);

  m.def("capacity_experiment", [](std::uint32_t n_inputs, std::uint32_t bits_per_input,
                                  std::uint32_t pattern_count, std::uint32_t pattern_bytes,
                                  std::uint32_t divider, std::uint32_t epochs,
                                  std::uint32_t probe_count, std::uint64_t seed) {
    ExperimentConfig config{n_inputs, bits_per_input, pattern_count,
                            pattern_bytes, divider, epochs, probe_count, seed};
    const ExperimentSeries series = capacity_experiment(config);
    py::list rows;
    for (const SeriesRow& row : series.rows)
      rows.append(py::make_tuple(row.divider, row.epoch, row.fraction_learned,
                                 row.fraction_false, row.cumulative_rounds));
    return rows;
  });

  // signature database surface
  py::class_<Window11>(m, "Window11")
      .def_property_readonly("bytes",
                             [](const Window11& w) {
                               return py::bytes(reinterpret_cast<const char*>(w.bytes.data()),
                                                w.bytes.size());
                             })
      .def_readonly("owner", &Window11::owner)
      .def_readonly("offset_in_body", &Window11::offset_in_body);

  py::class_<FilterReport>(m, "FilterReport")
      .def_readonly("loaded", &FilterReport::loaded)
      .def_readonly("rejected", &FilterReport::rejected)
      .def_readonly("extracted", &FilterReport::extracted)
      .def_readonly("fragments", &FilterReport::fragments)
      .def_readonly("parse_errors", &FilterReport::parse_errors)
      .def_readonly("rejected_by_reason", &FilterReport::rejected_by_reason)
      .def("to_json", &FilterReport::to_json);

  py::class_<FragmentSet>(m, "FragmentSet")
      .def_property_readonly("entry_count",
                             [](const FragmentSet& s) { return s.entries.size(); })
      .def_property_readonly("owner_names",
                             [](const FragmentSet& s) { return s.owner_names; });

  py::class_<LoadResult>(m, "LoadResult")
      .def_readonly("fragments", &LoadResult::fragments)
      .def_readonly("windows", &LoadResult::windows)
      .def_readonly("report", &LoadResult::report);

  m.def("load_database", [](const std::vector<std::filesystem::path>& paths) {
    return load_database(paths, FilterRules::defaults());
  });

  // scanner surface
  py::class_<Prefilter>(m, "Prefilter")
      .def_static("build", [](const FragmentSet& set) { return build_prefilter(set); })
      .def("fire",
           [](const Prefilter& pf, const py::bytes& block) {
             return pf.fire(std::span<const std::uint8_t>(to_bytes(block)));
           })
      .def("save", &save_prefilter)
      .def_static("load", &load_prefilter)
      .def_property_readonly("nonzero_cells", &Prefilter::nonzero_cells);

  m.def("build_precise", [](const std::vector<Window11>& windows) {
    return build_precise(windows);
  });

  m.def("scan",
        [](const py::bytes& data, const Prefilter& prefilter, const CyberNeuron* precise,
           std::uint32_t nearest_floor, unsigned threads) {
          const auto buffer = to_bytes(data);
          ScanConfig config;
          config.nearest_floor = nearest_floor;
          config.threads = threads;
          return report_to_dict(scan(buffer, prefilter, precise, config));
        },
        py::arg("data"), py::arg("prefilter"), py::arg("precise") = nullptr,
        py::arg("nearest_floor") = 8, py::arg("threads") = 1);

  m.def("measure_fp_rate", &measure_fp_rate, py::arg("prefilter"), py::arg("byte_count"),
        py::arg("seed"));
}
