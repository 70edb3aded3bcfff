#include "textrobust/hashing.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace textrobust {

std::string checksum_hex(std::string_view content) {
    const std::uint64_t h = fnv1a64(content);
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) {
        out[15 - i] = digits[(h >> (4 * i)) & 0xf];
    }
    return out;
}

std::string file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for checksum: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return checksum_hex(buf.str());
}

}  // namespace textrobust
