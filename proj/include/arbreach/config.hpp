#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arbreach/error.hpp"
#include "arbreach/market_data.hpp"

namespace arbreach {

/// Flat `key = value` settings with dotted keys. `#` starts a comment.
///
/// Getters record which keys were read so that leftovers (usually typos)
/// can be rejected with check_all_used().
class KeyValues {
public:
    KeyValues() = default;

    static KeyValues parse(std::istream& in, std::string_view source = "<config>") {
        KeyValues kv;
        kv.source_ = std::string(source);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::string_view sv = detail::trim(line);
            if (sv.empty()) continue;
            const auto eq = sv.find('=');
            const std::string where = kv.source_ + ":" + std::to_string(lineno);
            if (eq == std::string_view::npos) throw ValidationError(where + ": expected 'key = value'");
            std::string key(detail::trim(sv.substr(0, eq)));
            std::string value(detail::trim(sv.substr(eq + 1)));
            if (key.empty()) throw ValidationError(where + ": empty key");
            if (!kv.values_.emplace(key, value).second) throw ValidationError(where + ": duplicate key '" + key + "'");
        }
        return kv;
    }

    static KeyValues load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open config file '" + path + "'");
        return parse(in, path);
    }

    /// Sorted `key = value` lines; the text the config hash is computed over.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }
    const std::string& source() const { return source_; }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::optional<std::string> get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string get_string(const std::string& key, std::string fallback) const { return get(key).value_or(fallback); }

    double get_double(const std::string& key, double fallback) const {
        auto v = get(key);
        return v ? to_double(key, *v) : fallback;
    }

    std::optional<double> get_optional_double(const std::string& key) const {
        auto v = get(key);
        if (!v) return std::nullopt;
        return to_double(key, *v);
    }

    long long get_int(const std::string& key, long long fallback) const {
        auto v = get(key);
        return v ? to_int(key, *v) : fallback;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ValidationError("config key '" + key + "': expected true|false, got '" + *v + "'");
    }

    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        std::vector<double> out;
        for (const auto& item : split_list(*v)) out.push_back(to_double(key, item));
        return out;
    }

    std::vector<long long> get_ints(const std::string& key, std::vector<long long> fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        std::vector<long long> out;
        for (const auto& item : split_list(*v)) out.push_back(to_int(key, item));
        return out;
    }

    /// List of `a:b` pairs, e.g. `5:7, 3:8`.
    std::vector<std::pair<double, double>> get_pairs(const std::string& key,
                                                     std::vector<std::pair<double, double>> fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        std::vector<std::pair<double, double>> out;
        for (const auto& item : split_list(*v)) out.push_back(parse_pair(key, item));
        return out;
    }

    void check_all_used() const {
        std::string unknown;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
        if (!unknown.empty()) throw ValidationError(source_ + ": unknown config keys: " + unknown);
    }

    static std::vector<std::string> split_list(std::string_view s) {
        std::vector<std::string> out;
        std::size_t pos = 0;
        while (pos <= s.size()) {
            auto c = s.find(',', pos);
            auto item = detail::trim(s.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
            if (!item.empty()) out.emplace_back(item);
            if (c == std::string_view::npos) break;
            pos = c + 1;
        }
        return out;
    }

    static std::pair<double, double> parse_pair(const std::string& key, std::string_view item) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos)
            throw ValidationError("config key '" + key + "': expected 'a:b', got '" + std::string(item) + "'");
        return {to_double(key, detail::trim(item.substr(0, colon))), to_double(key, detail::trim(item.substr(colon + 1)))};
    }

private:
    static double to_double(const std::string& key, std::string_view v) {
        auto d = detail::parse_double(v);
        if (!d) throw ValidationError("config key '" + key + "': not a number: '" + std::string(v) + "'");
        return *d;
    }

    static long long to_int(const std::string& key, std::string_view v) {
        v = detail::trim(v);
        long long out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size())
            throw ValidationError("config key '" + key + "': not an integer: '" + std::string(v) + "'");
        return out;
    }

    std::string source_ = "<config>";
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

} // namespace arbreach
