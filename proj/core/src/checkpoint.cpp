#include "soe/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "soe/errors.hpp"

namespace soe {

namespace {

constexpr char kMagic[4] = {'S', 'O', 'E', 'D'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw IoError("checkpoint truncated");
    }
    return v;
}

void write_tensor(std::ofstream& out, const Tensor& t) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) {
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(t.extent(i)));
    }
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(t.size())));
}

Tensor read_tensor(std::ifstream& in) {
    const std::uint32_t rank = read_pod<std::uint32_t>(in);
    if (rank == 0 || rank > 4) {
        throw IoError("checkpoint weight block has invalid rank");
    }
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) {
        shape.push_back(static_cast<std::int64_t>(read_pod<std::uint64_t>(in)));
    }
    const std::int64_t n = numel(shape);
    if (n <= 0 || n > (1 << 28)) {
        throw IoError("checkpoint weight block has invalid extents");
    }
    std::vector<double> data(static_cast<std::size_t>(n));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(sizeof(double) * data.size()));
    if (!in) {
        throw IoError("checkpoint truncated inside a weight block");
    }
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace

void save_checkpoint(const DenoiserModel& model, const std::filesystem::path& path) {
    model.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open checkpoint for writing: " + path.string());
    }
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);

    const DenoiserConfig& c = model.config;
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.latent_channels));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.latent_h));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.latent_w));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.total_steps));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.token_dim));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.feat_dim));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.ff_dim));
    write_pod<double>(out, c.mask_attention_gain);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(c.layers.size()));
    for (const AttentionLayerConfig& l : c.layers) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(l.h));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(l.w));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(l.heads));
    }
    for (const Tensor* w : model.weights()) {
        write_tensor(out, *w);
    }
    if (!out) {
        throw IoError("checkpoint write failed: " + path.string());
    }
}

DenoiserModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path.string());
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("not a model checkpoint: " + path.string());
    }
    const std::uint32_t version = read_pod<std::uint32_t>(in);
    if (version != kVersion) {
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    }

    DenoiserModel m;
    DenoiserConfig& c = m.config;
    c.latent_channels = static_cast<int>(read_pod<std::uint32_t>(in));
    c.latent_h = static_cast<int>(read_pod<std::uint32_t>(in));
    c.latent_w = static_cast<int>(read_pod<std::uint32_t>(in));
    c.total_steps = static_cast<int>(read_pod<std::uint32_t>(in));
    c.token_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    c.feat_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    c.ff_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    c.mask_attention_gain = read_pod<double>(in);
    const std::uint32_t n_layers = read_pod<std::uint32_t>(in);
    if (n_layers == 0 || n_layers > 64) {
        throw IoError("checkpoint layer count out of range");
    }
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        AttentionLayerConfig l;
        l.h = static_cast<int>(read_pod<std::uint32_t>(in));
        l.w = static_cast<int>(read_pod<std::uint32_t>(in));
        l.heads = static_cast<int>(read_pod<std::uint32_t>(in));
        c.layers.push_back(l);
    }
    m.input_layout = "z_t*" + std::to_string(c.latent_channels) + " | mask | z_masked*" +
                     std::to_string(c.latent_channels) + " | coords*2 | time*4";

    m.w_in = read_tensor(in);
    m.w_skip = read_tensor(in);
    m.w_out = read_tensor(in);
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        DenoiserModel::LayerWeights lw;
        lw.w_q = read_tensor(in);
        lw.w_qm = read_tensor(in);
        lw.w_k = read_tensor(in);
        lw.w_v = read_tensor(in);
        lw.w_ff1 = read_tensor(in);
        lw.w_ff2 = read_tensor(in);
        m.layers.push_back(std::move(lw));
    }
    try {
        m.validate();
    } catch (const Error& e) {
        throw IoError(std::string("checkpoint is inconsistent: ") + e.what());
    }
    return m;
}

}  // namespace soe
