#include "serpmine/record_store.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "serpmine/csv.hpp"
#include "serpmine/repository.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace serpmine {

namespace {

constexpr const char* kFormat = "serpmine-store/1";

std::string join_values(const ValueSet& values) {
    std::string out;
    for (const auto& v : values) {
        if (!out.empty()) out += kValueSeparator;
        out += v;
    }
    return out;
}

ValueSet split_values(std::string_view cell) {
    ValueSet out;
    if (cell.empty()) return out;
    std::size_t pos = 0;
    while (true) {
        auto sep = cell.find(kValueSeparator, pos);
        auto piece = cell.substr(pos, sep == std::string_view::npos ? std::string_view::npos : sep - pos);
        if (!piece.empty()) out.emplace(piece);
        if (sep == std::string_view::npos) break;
        pos = sep + 1;
    }
    return out;
}

void check_record(const StoreSchema& schema, const Record& record) {
    for (const auto& [name, values] : record.values) {
        if (std::find(schema.attributes.begin(), schema.attributes.end(), name) == schema.attributes.end())
            throw StoreError("record has attribute '" + name + "' not in table " + schema.table);
        for (const auto& v : values)
            if (v.empty() || v.find(kValueSeparator) != std::string::npos)
                throw StoreError("unstorable value in attribute '" + name + "'");
    }
}

Record normalized(const StoreSchema& schema, const Record& record) {
    Record out;
    for (const auto& a : schema.attributes) out.values[a] = record.at(a);
    return out;
}

} // namespace

StoreSchema StoreSchema::from(const ExtractionConfig& config) {
    return StoreSchema{config.table_name, config.attribute_names(), config.key_attributes};
}

FileRecordStore::FileRecordStore(fs::path path, StoreSchema schema, int lock_fd)
    : path_(std::move(path)), schema_(std::move(schema)), lock_fd_(lock_fd) {}

FileRecordStore::FileRecordStore(FileRecordStore&& other) noexcept
    : path_(std::move(other.path_)),
      schema_(std::move(other.schema_)),
      rows_(std::move(other.rows_)),
      lock_fd_(std::exchange(other.lock_fd_, -1)) {}

FileRecordStore::~FileRecordStore() {
    if (lock_fd_ >= 0) {
        ::flock(lock_fd_, LOCK_UN);
        ::close(lock_fd_);
    }
}

FileRecordStore FileRecordStore::open(const fs::path& path, const StoreSchema& schema) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    auto lock_path = path.string() + ".lock";
    int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw StoreError("cannot open lock file '" + lock_path + "': " + std::strerror(errno));
    if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd);
        throw StoreError("store '" + path.string() + "' is locked by another writer");
    }
    FileRecordStore store(path, schema, fd);
    if (fs::exists(path)) {
        std::string text;
        try {
            text = read_file_bytes(path);
        } catch (const RepositoryError& err) {
            throw StoreError(err.what());
        }
        StoreSchema expected = schema;
        store.load(text);
        if (!(store.schema_ == expected))
            throw StoreError("store '" + path.string() + "' was created with a different table definition");
    }
    return store;
}

FileRecordStore FileRecordStore::read_snapshot(const fs::path& path) {
    std::string text;
    try {
        text = read_file_bytes(path);
    } catch (const RepositoryError&) {
        throw StoreError("cannot read store '" + path.string() + "'");
    }
    FileRecordStore store(path, {}, -1);
    store.load(text);
    return store;
}

void FileRecordStore::load(const std::string& text) {
    try {
        auto j = json::parse(text);
        if (j.at("format").get<std::string>() != kFormat) throw StoreError("unsupported store format");
        schema_.table = j.at("table").get<std::string>();
        schema_.attributes = j.at("attributes").get<std::vector<std::string>>();
        schema_.key_attributes = j.at("keys").get<std::vector<std::string>>();
        rows_.clear();
        for (const auto& row : j.at("records")) {
            Record r;
            for (const auto& a : schema_.attributes) {
                auto values = row.at(a).get<std::vector<std::string>>();
                r.values[a] = ValueSet(values.begin(), values.end());
            }
            rows_[record_key(r, schema_.key_attributes)] = std::move(r);
        }
    } catch (const json::exception& err) {
        throw StoreError("corrupt store '" + path_.string() + "': " + err.what());
    }
}

std::optional<Record> FileRecordStore::find(const std::string& key) const {
    auto it = rows_.find(key);
    if (it == rows_.end()) return std::nullopt;
    return it->second;
}

void FileRecordStore::put(const Record& record) {
    if (lock_fd_ < 0) throw StoreError("store '" + path_.string() + "' is open read-only");
    check_record(schema_, record);
    auto row = normalized(schema_, record);
    rows_[record_key(row, schema_.key_attributes)] = std::move(row);
}

std::vector<Record> FileRecordStore::records() const {
    std::vector<Record> out;
    out.reserve(rows_.size());
    for (const auto& [key, r] : rows_) out.push_back(r);
    return out;
}

std::string FileRecordStore::serialize() const {
    json j;
    j["format"] = kFormat;
    j["table"] = schema_.table;
    j["attributes"] = schema_.attributes;
    j["keys"] = schema_.key_attributes;
    j["records"] = json::array();
    for (const auto& [key, r] : rows_) {
        json row = json::object();
        for (const auto& a : schema_.attributes) {
            const auto& values = r.at(a);
            row[a] = std::vector<std::string>(values.begin(), values.end());
        }
        j["records"].push_back(std::move(row));
    }
    return j.dump(1) + "\n";
}

void FileRecordStore::commit() {
    if (lock_fd_ < 0) throw StoreError("store '" + path_.string() + "' is open read-only");
    auto tmp = path_;
    tmp += ".tmp";
    try {
        write_file_bytes(tmp, serialize());
        fs::rename(tmp, path_);
    } catch (const std::exception& err) {
        throw StoreError(std::string("commit failed: ") + err.what());
    }
}

std::optional<Record> MemoryRecordStore::find(const std::string& key) const {
    auto it = rows_.find(key);
    if (it == rows_.end()) return std::nullopt;
    return it->second;
}

void MemoryRecordStore::put(const Record& record) {
    check_record(schema_, record);
    auto row = normalized(schema_, record);
    rows_[record_key(row, schema_.key_attributes)] = std::move(row);
}

std::vector<Record> MemoryRecordStore::records() const {
    std::vector<Record> out;
    for (const auto& [key, r] : rows_) out.push_back(r);
    return out;
}

std::string export_csv(const StoreSchema& schema, const std::vector<Record>& records) {
    std::string out = csv::format_row(schema.attributes);
    for (const auto& r : records) {
        csv::Row row;
        for (const auto& a : schema.attributes) row.push_back(join_values(r.at(a)));
        out += csv::format_row(row);
    }
    return out;
}

CsvTable import_csv(std::string_view text) {
    auto rows = csv::parse(text);
    if (rows.empty()) throw StoreError("empty CSV: missing header row");
    CsvTable table;
    table.attributes = rows.front();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != table.attributes.size())
            throw StoreError("CSV row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) +
                             " cells, expected " + std::to_string(table.attributes.size()));
        Record r;
        for (std::size_t c = 0; c < row.size(); ++c) r.values[table.attributes[c]] = split_values(row[c]);
        table.records.push_back(std::move(r));
    }
    return table;
}

} // namespace serpmine
