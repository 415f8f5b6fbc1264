#pragma once

#include <string>
#include <vector>

#include "asmap/nn.hpp"

namespace asmap {

// Self-describing binary container: magic "ASMAPNN1", little-endian, then a
// sequence of records (u32 name length, name bytes, u32 dim count, u64 dims,
// raw 64-bit floats) until EOF. Used for model checkpoints and feature
// archives.
struct Record {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<double> data;
};

struct Container {
    std::vector<Record> records;

    const Record* find(const std::string& name) const;
    Record& add(std::string name, std::vector<std::size_t> dims,
                std::vector<double> data);
};

void write_container(const std::string& path, const Container& c);
Container read_container(const std::string& path);  // throws IoError

// Model <-> container. The checkpoint carries the architecture spec and the
// band-selection fingerprint alongside the parameter tensors.
Container model_to_container(const Model& model, const std::vector<std::size_t>& band_selection);
Model model_from_container(const Container& c, std::vector<std::size_t>* band_selection = nullptr);

void save_model(const std::string& path, const Model& model,
                const std::vector<std::size_t>& band_selection);
Model load_model(const std::string& path, std::vector<std::size_t>* band_selection = nullptr);

}  // namespace asmap
