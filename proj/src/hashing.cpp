#include <fstream>
#include <iterator>
#include <vector>

#include <openssl/evp.h>

#include "fiberlab/hashing.hpp"
#include "fiberlab/types.hpp"

namespace fiberlab {

Digest sha256(std::span<const std::uint8_t> bytes) {
    Digest d{};
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), d.data(), &len, EVP_sha256(), nullptr) || len != d.size())
        throw Error("SHA-256 digest failed");
    return d;
}

Digest sha256(const std::string& text) {
    return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string to_hex(const Digest& d) {
    static const char* hex = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : d) {
        s.push_back(hex[b >> 4]);
        s.push_back(hex[b & 15]);
    }
    return s;
}

std::string sha256_hex(const std::string& text) { return to_hex(sha256(text)); }

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "' for hashing");
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(data);
}

}  // namespace fiberlab
