#include "cyberneuron/neuron_io.hpp"

#include <fstream>

#include "cyberneuron/byteio.hpp"

namespace cyberneuron {

namespace io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) throw FormatError("error reading " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw FormatError("error writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto raw = read_file(path);
  return std::string(raw.begin(), raw.end());
}

}  // namespace io

std::vector<std::uint8_t> serialize(const CyberNeuron& neuron) {
  io::Writer w;
  w.magic("CNR1");
  w.u32(neuron.n_inputs());
  w.u32(neuron.bits_per_input());
  w.i32(neuron.threshold());
  w.i32(neuron.threshold2());
  w.u32(neuron.divider());
  w.i32(neuron.cell_min());
  w.i32(neuron.cell_max());
  for (std::int32_t c : neuron.cells()) w.i16(static_cast<std::int16_t>(c));
  return w.take();
}

CyberNeuron deserialize(std::span<const std::uint8_t> data) {
  io::Reader r(data);
  r.expect_magic("CNR1");
  const std::uint32_t n_inputs = r.u32();
  const std::uint32_t bits = r.u32();
  const std::int32_t threshold = r.i32();
  const std::int32_t threshold2 = r.i32();
  const std::uint32_t divider = r.u32();
  const std::int32_t cell_min = r.i32();
  const std::int32_t cell_max = r.i32();
  CyberNeuron neuron = [&] {
    try {
      return CyberNeuron(n_inputs, bits, threshold, threshold2, divider, cell_min, cell_max);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("invalid neuron header: ") + e.what());
    }
  }();
  const std::size_t m = neuron.table_size();
  for (std::size_t t = 0; t < n_inputs; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::int32_t v = r.i16();
      if (v < cell_min || v > cell_max) throw FormatError("cell value outside declared bounds");
      if (v != 0) neuron.set_cell(t, i, v);
    }
  }
  r.expect_end();
  return neuron;
}

void save_neuron(const CyberNeuron& neuron, const std::filesystem::path& path) {
  io::write_file(path, serialize(neuron));
}

CyberNeuron load_neuron(const std::filesystem::path& path) {
  return deserialize(io::read_file(path));
}

}  // namespace cyberneuron
