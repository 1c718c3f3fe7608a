#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fiberlab/hashing.hpp"
#include "fiberlab/spectral.hpp"

namespace fiberlab {

namespace {

constexpr char kMagic[8] = {'F', 'L', 'E', 'I', 'G', 'E', 'N', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::vector<std::uint8_t>& buf, T v) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>)
        bits = std::bit_cast<std::uint64_t>(v);
    else
        bits = static_cast<std::uint64_t>(v);
    for (std::size_t b = 0; b < sizeof(T); ++b) buf.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    template <class T>
    T get() {
        std::uint64_t bits = 0;
        for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<std::uint64_t>(buf[pos + b]) << (8 * b);
        pos += sizeof(T);
        if constexpr (std::is_same_v<T, double>)
            return std::bit_cast<double>(bits);
        else
            return static_cast<T>(bits);
    }
};

std::array<std::uint32_t, 3> node_counts(const DiscreteManifold& M) {
    std::array<std::uint32_t, 3> n{0, 0, 0};
    if (M.is_grid())
        for (int a = 0; a < M.dim(); ++a) n[a] = static_cast<std::uint32_t>(M.grid().n[a]);
    else
        n[0] = static_cast<std::uint32_t>(M.size());
    return n;
}

}  // namespace

std::string eigen_cache_key(const DiscreteManifold& M, int count, std::optional<double> theta_max) {
    std::ostringstream s;
    s.precision(17);
    s << M.spec().canonical() << ";count=" << count;
    if (theta_max) s << ";theta_max=" << *theta_max;
    if (!M.is_grid()) s << ";mesh=" << sha256_file(M.spec().mesh_path);
    return s.str();
}

void save_eigen_cache(const std::string& path, const DiscreteManifold& M, const std::string& key,
                      const std::vector<EigenPair>& pairs) {
    std::vector<std::uint8_t> buf(kMagic, kMagic + 8);
    put(buf, kVersion);
    put(buf, static_cast<std::uint32_t>(M.dim()));
    for (auto c : node_counts(M)) put(buf, c);
    put(buf, static_cast<std::uint64_t>(M.size()));
    put(buf, static_cast<std::uint64_t>(pairs.size()));
    const Digest kh = sha256(key);
    buf.insert(buf.end(), kh.begin(), kh.end());
    for (const auto& e : pairs) put(buf, e.theta);
    for (const auto& e : pairs) put(buf, e.residual);
    for (const auto& e : pairs)
        for (Eigen::Index i = 0; i < e.u.size(); ++i) put(buf, e.u(i));
    const Digest sum = sha256(buf);
    buf.insert(buf.end(), sum.begin(), sum.end());

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write eigen cache '" + path + "'");
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!out) throw Error("failed writing eigen cache '" + path + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error("cannot move eigen cache into '" + path + "'");
}

std::optional<std::vector<EigenPair>> load_eigen_cache(const std::string& path, const DiscreteManifold& M,
                                                       const std::string& key) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    const std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 8 + 4 * 5 + 16 + 64) return std::nullopt;
    if (std::memcmp(buf.data(), kMagic, 8) != 0) return std::nullopt;
    const std::size_t body = buf.size() - 32;
    const Digest sum = sha256(std::span<const std::uint8_t>(buf.data(), body));
    if (!std::equal(sum.begin(), sum.end(), buf.begin() + static_cast<std::ptrdiff_t>(body))) return std::nullopt;

    Reader r{buf, 8};
    if (r.get<std::uint32_t>() != kVersion) return std::nullopt;
    if (r.get<std::uint32_t>() != static_cast<std::uint32_t>(M.dim())) return std::nullopt;
    for (auto c : node_counts(M))
        if (r.get<std::uint32_t>() != c) return std::nullopt;
    if (r.get<std::uint64_t>() != M.size()) return std::nullopt;
    const auto count = r.get<std::uint64_t>();
    const Digest kh = sha256(key);
    if (!std::equal(kh.begin(), kh.end(), buf.begin() + static_cast<std::ptrdiff_t>(r.pos))) return std::nullopt;
    r.pos += 32;
    if (r.pos + count * (2 + M.size()) * 8 != body) return std::nullopt;

    std::vector<EigenPair> pairs(count);
    for (auto& e : pairs) e.theta = r.get<double>();
    for (auto& e : pairs) e.residual = r.get<double>();
    for (auto& e : pairs) {
        e.u.resize(static_cast<Eigen::Index>(M.size()));
        for (Eigen::Index i = 0; i < e.u.size(); ++i) e.u(i) = r.get<double>();
    }
    return pairs;
}

}  // namespace fiberlab
