#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace xfmr {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structured-text configuration: `key = value` pairs under nested
/// `[section.subsection]` headers. Keys are addressed by their full dotted
/// path. `#` and `;` start comments. Declaration order is preserved so that
/// section listings are stable.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return index_.count(key) != 0; }

    const std::string& raw(const std::string& key) const;
    std::string str(const std::string& key) const { return raw(key); }
    std::string str(const std::string& key, const std::string& fallback) const;
    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    long long integer(const std::string& key) const;
    long long integer(const std::string& key, long long fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::vector<double> number_list(const std::string& key) const;

    /// Names of the direct child sections of `prefix`, in declaration order.
    /// E.g. with sections [target.a] and [target.b], subsections("target")
    /// returns {"a", "b"}.
    std::vector<std::string> subsections(const std::string& prefix) const;

    /// Keys declared directly under `prefix` (one level), declaration order.
    std::vector<std::string> keys_under(const std::string& prefix) const;

    /// Every key, full dotted path, declaration order.
    std::vector<std::string> all_keys() const;

    /// Directory of the file this config was parsed from ("." for strings);
    /// used to resolve relative paths referenced by values.
    const std::string& base_dir() const { return base_dir_; }
    std::string resolve_path(const std::string& relative) const;

    void set(const std::string& key, const std::string& value);

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
    std::string base_dir_ = ".";
};

}  // namespace xfmr
