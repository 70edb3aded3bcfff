#include "textrobust/unicode.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace textrobust {

bool utf8_decode(std::string_view in, std::u32string& out) {
    out.clear();
    out.reserve(in.size());
    std::size_t i = 0;
    while (i < in.size()) {
        const unsigned char b0 = static_cast<unsigned char>(in[i]);
        char32_t cp = 0;
        std::size_t len = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xe0) == 0xc0) {
            cp = b0 & 0x1f;
            len = 2;
        } else if ((b0 & 0xf0) == 0xe0) {
            cp = b0 & 0x0f;
            len = 3;
        } else if ((b0 & 0xf8) == 0xf0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            return false;
        }
        if (i + len > in.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char bk = static_cast<unsigned char>(in[i + k]);
            if ((bk & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (bk & 0x3f);
        }
        // reject overlong encodings, surrogates, out-of-range values
        static constexpr std::array<char32_t, 5> min_for_len = {0, 0, 0x80, 0x800, 0x10000};
        if (len > 1 && cp < min_for_len[len]) return false;
        if (cp >= 0xd800 && cp <= 0xdfff) return false;
        if (cp > 0x10ffff) return false;
        out.push_back(cp);
        i += len;
    }
    return true;
}

std::u32string utf8_decode_or_throw(std::string_view in) {
    std::u32string out;
    if (!utf8_decode(in, out)) {
        throw std::runtime_error("malformed UTF-8 input");
    }
    return out;
}

std::string utf8_encode(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
    return out;
}

std::string utf8_encode(std::u32string_view in) {
    std::string out;
    out.reserve(in.size());
    for (char32_t cp : in) out += utf8_encode(cp);
    return out;
}

bool is_space(char32_t cp) {
    switch (cp) {
        case 0x09:
        case 0x0a:
        case 0x0b:
        case 0x0c:
        case 0x0d:
        case 0x20:
        case 0x85:
        case 0xa0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202f:
        case 0x205f:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200a;
    }
}

namespace {

struct Range {
    char32_t lo;
    char32_t hi;
};

// P* and S* general categories over the blocks this toolkit can meet:
// ASCII, Latin-1, general punctuation, currency, arrows/math/technical,
// box/geometric/misc symbols, dingbats, supplemental punctuation, CJK
// punctuation. Number-like and letter-like codepoints inside those blocks
// (e.g. U+00B2 SUPERSCRIPT TWO, U+2460 CIRCLED DIGIT ONE) are excluded.
constexpr Range kPunctSymbolRanges[] = {
    {0x21, 0x2f},     {0x3a, 0x40},     {0x5b, 0x60},     {0x7b, 0x7e},
    {0xa1, 0xa9},     {0xab, 0xac},     {0xae, 0xb1},     {0xb4, 0xb4},
    {0xb6, 0xb8},     {0xbb, 0xbb},     {0xbf, 0xbf},     {0xd7, 0xd7},
    {0xf7, 0xf7},     {0x2010, 0x2027}, {0x2030, 0x205e}, {0x20a0, 0x20bf},
    {0x2190, 0x23ff}, {0x2500, 0x2775}, {0x2794, 0x2bff}, {0x2e00, 0x2e7f},
    {0x3001, 0x303f}, {0xfe50, 0xfe6f}, {0xff01, 0xff0f}, {0xff1a, 0xff20},
    {0xff3b, 0xff40}, {0xff5b, 0xff65},
};

}  // namespace

bool is_punct_or_symbol(char32_t cp) {
    const auto* end = std::end(kPunctSymbolRanges);
    const auto* it = std::upper_bound(
        std::begin(kPunctSymbolRanges), end, cp,
        [](char32_t v, const Range& r) { return v < r.lo; });
    if (it == std::begin(kPunctSymbolRanges)) return false;
    --it;
    return cp >= it->lo && cp <= it->hi;
}

char32_t simple_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xc0 && cp <= 0xde && cp != 0xd7) return cp + 0x20;  // Latin-1 uppercase
    if (cp >= 0x100 && cp <= 0x17e) {
        // Latin Extended-A mostly alternates upper/lower
        if (cp == 0x130) return 0x69;   // İ → i
        if (cp == 0x131) return cp;     // ı has no lower
        if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
        if (cp >= 0x14a && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
        if (cp == 0x178) return 0xff;   // Ÿ → ÿ
        if (cp >= 0x179 && cp <= 0x17e) return (cp % 2 == 1) ? cp + 1 : cp;
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    return cp;
}

char32_t simple_upper(char32_t cp) {
    if (cp >= 'a' && cp <= 'z') return cp - 0x20;
    if (cp >= 0xe0 && cp <= 0xfe && cp != 0xf7) return cp - 0x20;
    if (cp >= 0x100 && cp <= 0x17e) {
        if (cp == 0x131) return 0x49;  // ı → I
        if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 0) ? cp - 1 : cp;
        if (cp >= 0x14a && cp <= 0x177) return (cp % 2 == 1) ? cp - 1 : cp;
        if (cp >= 0x179 && cp <= 0x17e) return (cp % 2 == 0) ? cp - 1 : cp;
        return (cp % 2 == 1) ? cp - 1 : cp;
    }
    if (cp == 0xff) return 0x178;
    return cp;
}

}  // namespace textrobust
