#include "hdrcm/net.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "hdrcm/checkpoint.hpp"

namespace hdrcm {

void NetConfig::validate() const {
    if (depth != 3)
        throw std::invalid_argument("NetConfig: the architecture is built for depth 3");
    if (base_channels < 2)
        throw std::invalid_argument("NetConfig: base_channels must be >= 2");
    for (int c : stage_channels())
        if (c > 8 && c % 8 != 0)
            throw std::invalid_argument(
                "NetConfig: stage widths above 8 must be multiples of 8 (group size)");
    if (blocks_per_stage < 1)
        throw std::invalid_argument("NetConfig: blocks_per_stage must be >= 1");
    if (time_embed_dim < 4 || time_embed_dim % 2 != 0)
        throw std::invalid_argument("NetConfig: time_embed_dim must be even and >= 4");
    if (in_channels != 6 || out_channels != 3)
        throw std::invalid_argument("NetConfig: expected 6 input / 3 output channels");
    if (data_scale <= 0.0) throw std::invalid_argument("NetConfig: data_scale must be > 0");
    if (eps_t <= 0.0) throw std::invalid_argument("NetConfig: eps_t must be > 0");
}

namespace {

constexpr char kMagic[] = "HDRCMCK1\n";

void put_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f, const std::string& path) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error(path + ": truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32_block(std::ofstream& f, const std::vector<float>& v) {
    if constexpr (std::endian::native == std::endian::little) {
        f.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * 4));
    } else {
        for (float x : v) {
            std::uint32_t u;
            std::memcpy(&u, &x, 4);
            put_u32(f, u);  // reuse: writes LE (mismatched stream type avoided below)
        }
    }
}

}  // namespace

const CheckpointTensor* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

const std::string* Checkpoint::config_value(const std::string& key) const {
    for (const auto& kv : config)
        if (kv.first == key) return &kv.second;
    return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f.write(kMagic, sizeof(kMagic) - 1);

    std::ostringstream cfg;
    for (const auto& kv : ck.config) cfg << kv.first << " = " << kv.second << "\n";
    const std::string cfg_text = cfg.str();
    put_u32(f, static_cast<std::uint32_t>(cfg_text.size()));
    f.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));

    put_u32(f, static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& t : ck.tensors) {
        put_u32(f, static_cast<std::uint32_t>(t.name.size()));
        f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_u32(f, static_cast<std::uint32_t>(t.dims.size()));
        std::size_t n = 1;
        for (std::uint32_t d : t.dims) {
            put_u32(f, d);
            n *= d;
        }
        if (n != t.data.size())
            throw std::runtime_error("save_checkpoint: dims/data mismatch for " + t.name);
        put_f32_block(f, t.data);
    }
    if (!f) throw std::runtime_error(path + ": write error");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open for reading");
    char magic[sizeof(kMagic) - 1];
    if (!f.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw std::runtime_error(path + ": not a checkpoint (bad magic)");

    Checkpoint ck;
    const std::uint32_t cfg_len = get_u32(f, path);
    std::string cfg_text(cfg_len, '\0');
    if (!f.read(cfg_text.data(), cfg_len)) throw std::runtime_error(path + ": truncated");
    std::istringstream cfg(cfg_text);
    std::string line;
    while (std::getline(cfg, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        ck.config.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    }

    const std::uint32_t n_tensors = get_u32(f, path);
    ck.tensors.resize(n_tensors);
    for (auto& t : ck.tensors) {
        const std::uint32_t name_len = get_u32(f, path);
        t.name.resize(name_len);
        if (!f.read(t.name.data(), name_len)) throw std::runtime_error(path + ": truncated");
        const std::uint32_t rank = get_u32(f, path);
        t.dims.resize(rank);
        std::size_t n = 1;
        for (auto& d : t.dims) {
            d = get_u32(f, path);
            n *= d;
        }
        t.data.resize(n);
        if constexpr (std::endian::native == std::endian::little) {
            if (!f.read(reinterpret_cast<char*>(t.data.data()),
                        static_cast<std::streamsize>(n * 4)))
                throw std::runtime_error(path + ": truncated tensor payload");
        } else {
            for (auto& x : t.data) {
                const std::uint32_t u = get_u32(f, path);
                std::memcpy(&x, &u, 4);
            }
        }
    }
    return ck;
}

}  // namespace hdrcm
