#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Line-oriented UTF-8 config dialect shared by every config file:
//   # comment            ; comment
//   [section]
//   key = value          (value is everything after the first '=', trimmed)
//   bare entry           (a line without '=' inside list-style sections)
namespace serpmine::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Entry {
    std::string section;
    std::string key;
    std::string value;
    bool has_value = false;
    int line = 0;
};

std::vector<Entry> parse(std::string_view text, const std::string& origin);

// Reads a whole file; throws ConfigError naming the path when unreadable.
std::string read_file(const std::filesystem::path& path);

bool to_bool(const Entry& e, const std::string& origin);
std::int64_t to_int(const Entry& e, const std::string& origin);
double to_double(const Entry& e, const std::string& origin);

[[noreturn]] void fail(const Entry& e, const std::string& origin, const std::string& what);

} // namespace serpmine::config
