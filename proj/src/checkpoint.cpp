#include "caan/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace caan {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'A', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i) & 0xff));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    const unsigned char* p;
    std::size_t n;
    std::size_t pos = 0;
    std::string where;

    void need(std::size_t bytes) {
        if (pos + bytes > n) throw TruncatedError(where + ": checkpoint truncated at byte " + std::to_string(pos));
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str(std::size_t len) {
        need(len);
        std::string s(reinterpret_cast<const char*>(p + pos), len);
        pos += len;
        return s;
    }
};

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put_u32(out, static_cast<std::uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) put_u32(out, static_cast<std::uint32_t>(t.dim(i)));
    for (double v : t.values()) put_f32(out, static_cast<float>(v));
}

void read_tensor_into(Reader& r, const std::string& expected_name, Tensor& t) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    if (name != expected_name)
        throw IoError(r.where + ": expected tensor '" + expected_name + "', found '" + name + "'");
    const std::uint32_t ndim = r.u32();
    Shape shape;
    for (std::uint32_t i = 0; i < ndim; ++i) shape.push_back(static_cast<int>(r.u32()));
    if (shape != t.shape())
        throw DimensionError(r.where + ": tensor '" + name + "' has shape " + shape_str(shape) +
                             ", config requires " + shape_str(t.shape()));
    auto& vals = t.values();
    for (auto& v : vals) v = static_cast<double>(r.f32());
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainingConfig& cfg, const Generator& g,
                     const Discriminator& d) {
    std::string out;
    out.append(kMagic, 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(cfg.feature_dim));
    put_u32(out, static_cast<std::uint32_t>(cfg.base_channels));
    put_u32(out, static_cast<std::uint32_t>(cfg.score_hidden));
    put_u32(out, static_cast<std::uint32_t>(cfg.disc_hidden));
    put_f32(out, cfg.alpha);
    put_u64(out, cfg.seed);
    put_u32(out, static_cast<std::uint32_t>(g.params().size() + d.params().size()));
    for (std::size_t i = 0; i < g.params().size(); ++i)
        put_tensor(out, "g." + g.param_names()[i], g.params()[i]);
    for (std::size_t i = 0; i < d.params().size(); ++i)
        put_tensor(out, "d." + d.param_names()[i], d.params()[i]);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to checkpoint " + path.string());
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint " + path.string());
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (data.size() < 8 || std::memcmp(data.data(), kMagic, 8) != 0)
        throw BadMagicError(path.string() + ": not a CAAN checkpoint");
    Reader r{reinterpret_cast<const unsigned char*>(data.data()), data.size(), 8, path.string()};
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw VersionError(path.string() + ": unsupported checkpoint version " + std::to_string(version));

    LoadedModel model;
    model.config.feature_dim = static_cast<int>(r.u32());
    model.config.base_channels = static_cast<int>(r.u32());
    model.config.score_hidden = static_cast<int>(r.u32());
    model.config.disc_hidden = static_cast<int>(r.u32());
    model.config.alpha = r.f32();
    model.config.seed = r.u64();

    model.generator = std::make_unique<Generator>(model.config.generator_config(), 0);
    model.discriminator = std::make_unique<Discriminator>(model.config.discriminator_config(), 0);

    const std::uint32_t count = r.u32();
    const std::uint32_t expected = static_cast<std::uint32_t>(model.generator->params().size() +
                                                              model.discriminator->params().size());
    if (count != expected)
        throw IoError(path.string() + ": holds " + std::to_string(count) + " tensors, config requires " +
                      std::to_string(expected));
    for (std::size_t i = 0; i < model.generator->params().size(); ++i)
        read_tensor_into(r, "g." + model.generator->param_names()[i], model.generator->params()[i]);
    for (std::size_t i = 0; i < model.discriminator->params().size(); ++i)
        read_tensor_into(r, "d." + model.discriminator->param_names()[i], model.discriminator->params()[i]);
    if (r.pos != data.size()) throw IoError(path.string() + ": trailing bytes after tensors");
    return model;
}

}  // namespace caan
