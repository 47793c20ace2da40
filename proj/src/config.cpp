#include "xfmr/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace xfmr {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    Config cfg = parse_string(ss.str(), path);
    std::size_t slash = path.find_last_of('/');
    cfg.base_dir_ = slash == std::string::npos ? "." : path.substr(0, slash);
    return cfg;
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        cfg.set(key, value);
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
    auto it = index_.find(key);
    if (it != index_.end()) {
        entries_[it->second].second = value;
    } else {
        index_[key] = entries_.size();
        entries_.emplace_back(key, value);
    }
}

const std::string& Config::raw(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw ConfigError("missing config key: " + key);
    return entries_[it->second].second;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
}

double Config::number(const std::string& key) const {
    const std::string& s = raw(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError("config key " + key + " is not a number: '" + s + "'");
    return v;
}

double Config::number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

long long Config::integer(const std::string& key) const {
    const std::string& s = raw(key);
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError("config key " + key + " is not an integer: '" + s + "'");
    return v;
}

long long Config::integer(const std::string& key, long long fallback) const {
    return has(key) ? integer(key) : fallback;
}

bool Config::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string s = raw(key);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError("config key " + key + " is not a boolean: '" + s + "'");
}

std::vector<double> Config::number_list(const std::string& key) const {
    const std::string& s = raw(key);
    std::vector<double> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::string t = trim(item);
        if (t.empty()) continue;
        char* end = nullptr;
        double v = std::strtod(t.c_str(), &end);
        if (end == t.c_str() || *end != '\0')
            throw ConfigError("config key " + key + " has a non-numeric list item: '" + t + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("config key " + key + " is an empty list");
    return out;
}

std::vector<std::string> Config::subsections(const std::string& prefix) const {
    std::vector<std::string> out;
    const std::string p = prefix + ".";
    for (const auto& [key, value] : entries_) {
        if (key.rfind(p, 0) != 0) continue;
        std::string rest = key.substr(p.size());
        std::size_t dot = rest.find('.');
        if (dot == std::string::npos) continue;  // direct key, not a subsection
        std::string name = rest.substr(0, dot);
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    }
    return out;
}

std::vector<std::string> Config::keys_under(const std::string& prefix) const {
    std::vector<std::string> out;
    const std::string p = prefix + ".";
    for (const auto& [key, value] : entries_) {
        if (key.rfind(p, 0) != 0) continue;
        std::string rest = key.substr(p.size());
        if (rest.find('.') == std::string::npos) out.push_back(rest);
    }
    return out;
}

std::vector<std::string> Config::all_keys() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [key, value] : entries_) out.push_back(key);
    return out;
}

std::string Config::resolve_path(const std::string& relative) const {
    if (relative.empty() || relative.front() == '/') return relative;
    return base_dir_ + "/" + relative;
}

}  // namespace xfmr
