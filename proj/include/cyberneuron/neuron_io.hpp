#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cyberneuron/neuron.hpp"

namespace cyberneuron {

// Neuron file, magic "CNR1", little-endian: u32 n_inputs, u32 bits_per_input,
// i32 threshold, i32 threshold2, u32 divider, i32 cell_min, i32 cell_max,
// then n_inputs * 2^bits_per_input cells as signed 16-bit, table-major.
std::vector<std::uint8_t> serialize(const CyberNeuron& neuron);
CyberNeuron deserialize(std::span<const std::uint8_t> data);

void save_neuron(const CyberNeuron& neuron, const std::filesystem::path& path);
CyberNeuron load_neuron(const std::filesystem::path& path);

}  // namespace cyberneuron
