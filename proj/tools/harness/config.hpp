#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcgs {

/// Malformed configuration. `what()` carries "source:line: field 'key': ...".
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string &msg, int line, std::string key)
        : std::runtime_error(msg), line_(line), key_(std::move(key)) {}
    int line() const { return line_; }
    const std::string &key() const { return key_; }

private:
    int line_;
    std::string key_;
};

/// Flat `key = value` text with `[section]` headers. Keys are addressed as
/// "section.key"; keys before the first header live in section "run".
/// `#` and `;` start comments.
class Config {
public:
    static Config parse(std::istream &in, const std::string &source = "<config>");
    static Config load(const std::filesystem::path &path);

    bool has(const std::string &key) const { return entries_.count(key) != 0; }

    std::string get_string(const std::string &key, const std::string &fallback);
    double get_double(const std::string &key, double fallback);
    int get_int(const std::string &key, int fallback);
    std::uint64_t get_u64(const std::string &key, std::uint64_t fallback);
    bool get_bool(const std::string &key, bool fallback);

    /// Command-line override; recorded as line 0.
    void set(const std::string &key, const std::string &value);

    /// Throws ConfigError for the first key not in `allowed`.
    void require_known(const std::set<std::string> &allowed) const;

    /// Every value read so far (defaults included), grouped by section.
    std::string dump_resolved() const;

    /// ConfigError pointing at `key`.
    [[noreturn]] void fail(const std::string &key, const std::string &what) const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };

    std::string source_;
    std::map<std::string, Entry> entries_;
    std::map<std::string, std::string> resolved_;
};

}  // namespace dcgs
