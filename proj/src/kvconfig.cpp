#include "uwf/kvconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "uwf/errors.hpp"

namespace uwf {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\'')))
        return v.substr(1, v.size() - 2);
    return v;
}

std::string strip_comment(const std::string& line) {
    bool in_quote = false;
    char quote = 0;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quote) {
            if (c == quote) in_quote = false;
        } else if (c == '"' || c == '\'') {
            in_quote = true;
            quote = c;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

std::vector<std::string> split_array(const std::string& body, const std::string& where) {
    std::vector<std::string> out;
    std::string cur;
    bool in_quote = false;
    char quote = 0;
    for (char c : body) {
        if (in_quote) {
            cur += c;
            if (c == quote) in_quote = false;
        } else if (c == '"' || c == '\'') {
            cur += c;
            in_quote = true;
            quote = c;
        } else if (c == ',') {
            out.push_back(unquote(trim(cur)));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (in_quote) throw Error(Err::SyntaxError, "unterminated quote in " + where);
    std::string last = trim(cur);
    if (!last.empty() || !out.empty()) out.push_back(unquote(last));
    return out;
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        size_t colon = body.find(':');
        if (colon == std::string::npos)
            throw Error(Err::SyntaxError,
                        origin + ":" + std::to_string(lineno) + ": expected 'key: value'");
        KvEntry e;
        e.key = trim(body.substr(0, colon));
        e.line = lineno;
        if (e.key.empty())
            throw Error(Err::SyntaxError,
                        origin + ":" + std::to_string(lineno) + ": empty key");
        std::string value = trim(body.substr(colon + 1));
        if (!value.empty() && value.front() == '[') {
            if (value.back() != ']')
                throw Error(Err::SyntaxError,
                            origin + ":" + std::to_string(lineno) + ": unterminated array");
            e.is_array = true;
            e.array = split_array(value.substr(1, value.size() - 2),
                                  origin + ":" + std::to_string(lineno));
        } else {
            e.scalar = unquote(value);
        }
        cfg.entries_.push_back(std::move(e));
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Err::IoError, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

bool KvConfig::has(const std::string& key) const { return find(key) != nullptr; }

const KvEntry* KvConfig::find(const std::string& key) const {
    for (const auto& e : entries_)
        if (e.key == key) return &e;
    return nullptr;
}

void KvConfig::missing(const std::string& key) const {
    throw Error(Err::ConfigError, origin_ + ": missing key '" + key + "'");
}

std::string KvConfig::get_string(const std::string& key) const {
    const KvEntry* e = find(key);
    if (!e) missing(key);
    return e->scalar;
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    const KvEntry* e = find(key);
    return e ? e->scalar : fallback;
}

long long parse_int_strict(const std::string& text, const std::string& what) {
    char* end = nullptr;
    errno = 0;
    long long v = std::strtoll(text.c_str(), &end, 10);
    if (errno != 0 || end == text.c_str() || *end != '\0')
        throw Error(Err::ConfigError, what + ": not an integer: '" + text + "'");
    return v;
}

double parse_double_strict(const std::string& text, const std::string& what) {
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(text.c_str(), &end);
    if (errno != 0 || end == text.c_str() || *end != '\0')
        throw Error(Err::ConfigError, what + ": not a number: '" + text + "'");
    return v;
}

long long KvConfig::get_int(const std::string& key) const {
    return parse_int_strict(get_string(key), origin_ + " '" + key + "'");
}

long long KvConfig::get_int(const std::string& key, long long fallback) const {
    const KvEntry* e = find(key);
    return e ? parse_int_strict(e->scalar, origin_ + " '" + key + "'") : fallback;
}

double KvConfig::get_double(const std::string& key) const {
    return parse_double_strict(get_string(key), origin_ + " '" + key + "'");
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    const KvEntry* e = find(key);
    return e ? parse_double_strict(e->scalar, origin_ + " '" + key + "'") : fallback;
}

VTime KvConfig::get_duration(const std::string& key, VTime fallback) const {
    const KvEntry* e = find(key);
    return e ? vtime_from_seconds(parse_double_strict(e->scalar, origin_ + " '" + key + "'"))
             : fallback;
}

std::vector<std::string> KvConfig::get_array(const std::string& key) const {
    const KvEntry* e = find(key);
    if (!e) missing(key);
    if (!e->is_array) return {e->scalar};
    return e->array;
}

std::vector<KvConfig> KvConfig::split_blocks(const std::string& block_key) const {
    std::vector<KvConfig> blocks;
    for (const auto& e : entries_) {
        if (e.key == block_key) {
            KvConfig b;
            b.origin_ = origin_;
            blocks.push_back(std::move(b));
        } else if (blocks.empty()) {
            throw Error(Err::ConfigError,
                        origin_ + ": '" + e.key + "' before first '" + block_key + "'");
        }
        if (!blocks.empty()) blocks.back().entries_.push_back(e);
    }
    return blocks;
}

}  // namespace uwf
