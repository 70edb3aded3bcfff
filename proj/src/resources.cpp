#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "textrobust/hashing.hpp"
#include "textrobust/perturbation.hpp"
#include "textrobust/unicode.hpp"

namespace textrobust {

using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("resources: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

char32_t single_scalar(const std::string& s, const std::string& where) {
    const std::u32string d = utf8_decode_or_throw(s);
    if (d.size() != 1) {
        throw std::runtime_error("resources: " + where + ": '" + s +
                                 "' must be exactly one scalar");
    }
    return d[0];
}

std::map<char32_t, std::u32string> scalar_map(const json& j, const std::string& where) {
    if (!j.is_object()) throw std::runtime_error("resources: " + where + " must be an object");
    std::map<char32_t, std::u32string> out;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_string()) {
            throw std::runtime_error("resources: " + where + "['" + key + "'] must be a string");
        }
        const std::u32string scalars = utf8_decode_or_throw(value.get<std::string>());
        if (scalars.empty()) {
            throw std::runtime_error("resources: " + where + "['" + key + "'] is empty");
        }
        out[single_scalar(key, where)] = scalars;
    }
    return out;
}

std::map<std::string, std::vector<std::string>> parse_lexicon_tsv(
    const std::string& content, const std::string& where) {
    std::map<std::string, std::vector<std::string>> out;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error("resources: " + where + " line " + std::to_string(line_no) +
                                     ": expected surface<TAB>replacements");
        }
        const std::string surface = line.substr(0, tab);
        std::vector<std::string> replacements;
        std::string field;
        std::istringstream rest(line.substr(tab + 1));
        while (std::getline(rest, field, '|')) {
            if (!field.empty()) replacements.push_back(field);
        }
        if (surface.empty() || replacements.empty()) {
            throw std::runtime_error("resources: " + where + " line " + std::to_string(line_no) +
                                     ": empty surface or replacement list");
        }
        out[surface] = std::move(replacements);
    }
    return out;
}

}  // namespace

LanguageResources load_resources(const std::filesystem::path& pack_manifest) {
    const auto dir = pack_manifest.parent_path();
    json pack;
    try {
        pack = json::parse(slurp(pack_manifest));
    } catch (const json::exception& e) {
        throw std::runtime_error("resources: malformed pack manifest " + pack_manifest.string() +
                                 ": " + e.what());
    }

    LanguageResources res;
    auto component = [&](const char* name) -> std::optional<std::pair<std::string, std::string>> {
        if (!pack.contains(name)) return std::nullopt;
        const std::string rel = pack.at(name).get<std::string>();
        const std::string content = slurp(dir / rel);
        res.file_checksums[name] = checksum_hex(content);
        return std::make_pair(rel, content);
    };

    if (auto c = component("keyboard_adjacency")) {
        res.keyboard_adjacency = scalar_map(json::parse(c->second), "keyboard_adjacency");
    }
    if (auto c = component("ocr_confusions")) {
        res.ocr_confusions = scalar_map(json::parse(c->second), "ocr_confusions");
    }
    if (auto c = component("diacritic_fold")) {
        for (const auto& [key, value] : scalar_map(json::parse(c->second), "diacritic_fold")) {
            if (value.size() != 1) {
                throw std::runtime_error("resources: diacritic_fold values must be one scalar");
            }
            res.diacritic_fold[key] = value[0];
        }
    }
    if (auto c = component("ortho_rules")) {
        const json rules = json::parse(c->second);
        if (!rules.is_array()) throw std::runtime_error("resources: ortho_rules must be an array");
        for (const auto& r : rules) {
            OrthoRule rule;
            rule.pattern = r.at("pattern").get<std::string>();
            rule.replacement = r.at("replacement").get<std::string>();
            rule.non_initial = r.value("non_initial", false);
            res.ortho_rules.push_back(std::move(rule));
        }
    }
    if (auto c = component("alphabet")) {
        const json a = json::parse(c->second);
        res.alphabet = utf8_decode_or_throw(a.at("scalars").get<std::string>());
    }
    if (auto c = component("relation_lexicon")) {
        res.relation_lexicon = parse_lexicon_tsv(c->second, c->first);
    }

    res.validate();
    return res;
}

}  // namespace textrobust
