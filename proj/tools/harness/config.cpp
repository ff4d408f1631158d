#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace dcgs {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string &s) {
    const auto pos = s.find_first_of("#;");
    return pos == std::string::npos ? s : s.substr(0, pos);
}

}  // namespace

Config Config::parse(std::istream &in, const std::string &source) {
    Config cfg;
    cfg.source_ = source;
    std::string section = "run";
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError(source + ":" + std::to_string(line_no) + ": malformed section header '" + line + "'",
                                  line_no, "");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'",
                              line_no, "");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key", line_no, "");
        const std::string full = section + "." + key;
        if (cfg.entries_.count(full))
            throw ConfigError(source + ":" + std::to_string(line_no) + ": field '" + full + "' given twice", line_no,
                              full);
        cfg.entries_[full] = {trim(line.substr(eq + 1)), line_no};
    }
    return cfg;
}

Config Config::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file", 0, "");
    return parse(in, path.string());
}

void Config::fail(const std::string &key, const std::string &what) const {
    auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    const std::string where = line > 0 ? source_ + ":" + std::to_string(line) : source_ + ":<command line>";
    throw ConfigError(where + ": field '" + key + "': " + what, line, key);
}

std::string Config::get_string(const std::string &key, const std::string &fallback) {
    auto it = entries_.find(key);
    const std::string v = it == entries_.end() ? fallback : it->second.value;
    resolved_[key] = v;
    return v;
}

double Config::get_double(const std::string &key, double fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        std::ostringstream os;
        os.precision(17);
        os << fallback;
        resolved_[key] = os.str();
        return fallback;
    }
    const std::string &s = it->second.value;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != s.size()) fail(key, "expected a number, got '" + s + "'");
    resolved_[key] = s;
    return v;
}

int Config::get_int(const std::string &key, int fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        resolved_[key] = std::to_string(fallback);
        return fallback;
    }
    const std::string &s = it->second.value;
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'");
    resolved_[key] = s;
    return v;
}

std::uint64_t Config::get_u64(const std::string &key, std::uint64_t fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        resolved_[key] = std::to_string(fallback);
        return fallback;
    }
    const std::string &s = it->second.value;
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        fail(key, "expected an unsigned integer, got '" + s + "'");
    resolved_[key] = s;
    return v;
}

bool Config::get_bool(const std::string &key, bool fallback) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        resolved_[key] = fallback ? "true" : "false";
        return fallback;
    }
    std::string s = it->second.value;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    bool v;
    if (s == "true" || s == "1" || s == "yes" || s == "on")
        v = true;
    else if (s == "false" || s == "0" || s == "no" || s == "off")
        v = false;
    else
        fail(key, "expected a boolean, got '" + it->second.value + "'");
    resolved_[key] = v ? "true" : "false";
    return v;
}

void Config::set(const std::string &key, const std::string &value) { entries_[key] = {value, 0}; }

void Config::require_known(const std::set<std::string> &allowed) const {
    for (const auto &[key, entry] : entries_)
        if (!allowed.count(key)) fail(key, "unknown field");
}

std::string Config::dump_resolved() const {
    std::ostringstream os;
    std::string current;
    for (const auto &[key, value] : resolved_) {
        const auto dot = key.find('.');
        const std::string section = key.substr(0, dot);
        if (section != current) {
            if (!current.empty()) os << '\n';
            os << '[' << section << "]\n";
            current = section;
        }
        os << key.substr(dot + 1) << " = " << value << '\n';
    }
    return os.str();
}

}  // namespace dcgs
