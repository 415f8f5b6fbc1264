#include "asmap/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "asmap/dataset.hpp"

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian");

namespace asmap {

namespace {

constexpr char kMagic[8] = {'A', 'S', 'M', 'A', 'P', 'N', 'N', '1'};

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
bool read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return static_cast<bool>(in);
}

}  // namespace

const Record* Container::find(const std::string& name) const {
    for (const auto& r : records)
        if (r.name == name) return &r;
    return nullptr;
}

Record& Container::add(std::string name, std::vector<std::size_t> dims,
                       std::vector<double> data) {
    records.push_back({std::move(name), std::move(dims), std::move(data)});
    return records.back();
}

void write_container(const std::string& path, const Container& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    for (const auto& r : c.records) {
        write_pod(out, static_cast<std::uint32_t>(r.name.size()));
        out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
        write_pod(out, static_cast<std::uint32_t>(r.dims.size()));
        for (std::size_t d : r.dims) write_pod(out, static_cast<std::uint64_t>(d));
        out.write(reinterpret_cast<const char*>(r.data.data()),
                  static_cast<std::streamsize>(r.data.size() * sizeof(double)));
    }
    if (!out) throw IoError("write failed: '" + path + "'");
}

Container read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError("'" + path + "' is not an ASMAPNN1 container");

    Container c;
    for (;;) {
        std::uint32_t name_len = 0;
        if (!read_pod(in, name_len)) break;  // clean EOF
        Record r;
        r.name.resize(name_len);
        in.read(r.name.data(), name_len);
        std::uint32_t dim_count = 0;
        if (!read_pod(in, dim_count))
            throw IoError("truncated record in '" + path + "'");
        std::size_t total = 1;
        for (std::uint32_t i = 0; i < dim_count; ++i) {
            std::uint64_t d = 0;
            if (!read_pod(in, d)) throw IoError("truncated dims in '" + path + "'");
            r.dims.push_back(static_cast<std::size_t>(d));
            total *= static_cast<std::size_t>(d);
        }
        r.data.resize(total);
        in.read(reinterpret_cast<char*>(r.data.data()),
                static_cast<std::streamsize>(total * sizeof(double)));
        if (!in) throw IoError("truncated data in '" + path + "'");
        c.records.push_back(std::move(r));
    }
    return c;
}

Container model_to_container(const Model& model,
                             const std::vector<std::size_t>& band_selection) {
    Container c;
    const auto& s = model.spec;
    c.add("__meta__", {10},
          {static_cast<double>(s.kind == ModelKind::Cnn ? 1 : 0),
           static_cast<double>(s.in_channels), static_cast<double>(s.in_h),
           static_cast<double>(s.in_w), static_cast<double>(s.in_dim),
           static_cast<double>(s.n_classes), static_cast<double>(s.hidden),
           s.dropout_rate, s.relu_hidden ? 1.0 : 0.0,
           static_cast<double>(model.flat_dim)});
    std::vector<double> bands(band_selection.begin(), band_selection.end());
    const std::size_t n_bands = bands.size();  // sized before the move below
    c.add("__bands__", {n_bands}, std::move(bands));
    for (std::size_t i = 0; i < model.params.size(); ++i)
        c.add(model.param_names[i], model.params[i].shape, model.params[i].data);
    return c;
}

Model model_from_container(const Container& c, std::vector<std::size_t>* band_selection) {
    const Record* meta = c.find("__meta__");
    if (!meta || meta->data.size() < 9) throw IoError("checkpoint: missing __meta__");
    ModelSpec spec;
    spec.kind = meta->data[0] != 0.0 ? ModelKind::Cnn : ModelKind::Mlp;
    spec.in_channels = static_cast<std::size_t>(meta->data[1]);
    spec.in_h = static_cast<std::size_t>(meta->data[2]);
    spec.in_w = static_cast<std::size_t>(meta->data[3]);
    spec.in_dim = static_cast<std::size_t>(meta->data[4]);
    spec.n_classes = static_cast<std::size_t>(meta->data[5]);
    spec.hidden = static_cast<std::size_t>(meta->data[6]);
    spec.dropout_rate = meta->data[7];
    spec.relu_hidden = meta->data[8] != 0.0;

    Rng rng(0);
    Model model = init_params(rng, spec);
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        const Record* r = c.find(model.param_names[i]);
        if (!r) throw IoError("checkpoint: missing record '" + model.param_names[i] + "'");
        if (r->dims != model.params[i].shape)
            throw IoError("checkpoint: shape mismatch for '" + model.param_names[i] + "'");
        model.params[i].data = r->data;
    }
    if (band_selection) {
        band_selection->clear();
        if (const Record* b = c.find("__bands__"))
            for (double v : b->data)
                band_selection->push_back(static_cast<std::size_t>(v));
    }
    return model;
}

void save_model(const std::string& path, const Model& model,
                const std::vector<std::size_t>& band_selection) {
    write_container(path, model_to_container(model, band_selection));
}

Model load_model(const std::string& path, std::vector<std::size_t>* band_selection) {
    return model_from_container(read_container(path), band_selection);
}

}  // namespace asmap
