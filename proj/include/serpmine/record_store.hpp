#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "serpmine/extraction.hpp"

namespace serpmine {

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StoreSchema {
    std::string table;
    std::vector<std::string> attributes;
    std::vector<std::string> key_attributes;

    static StoreSchema from(const ExtractionConfig& config);
    friend bool operator==(const StoreSchema&, const StoreSchema&) = default;
};

// Separator between values of a set-valued cell in exports.
inline constexpr char kValueSeparator = '\x1f';

// Keyed tabular store of set-valued records.
class RecordStore {
public:
    virtual ~RecordStore() = default;

    virtual const StoreSchema& schema() const = 0;
    virtual std::optional<Record> find(const std::string& key) const = 0;
    // Inserts or replaces the row with the record's key.
    virtual void put(const Record& record) = 0;
    // All rows ordered by key.
    virtual std::vector<Record> records() const = 0;
    virtual void commit() = 0;
};

// Single-file store. Writers hold an advisory lock on "<path>.lock" for their
// lifetime and commit by atomically replacing the file; readers opened with
// read_snapshot() see the last committed state.
class FileRecordStore final : public RecordStore {
public:
    // Opens for writing, creating an empty store when the file is absent. An
    // existing file must carry the same schema.
    static FileRecordStore open(const std::filesystem::path& path, const StoreSchema& schema);
    static FileRecordStore read_snapshot(const std::filesystem::path& path);

    FileRecordStore(FileRecordStore&& other) noexcept;
    FileRecordStore& operator=(FileRecordStore&&) = delete;
    ~FileRecordStore() override;

    const StoreSchema& schema() const override { return schema_; }
    std::optional<Record> find(const std::string& key) const override;
    void put(const Record& record) override;
    std::vector<Record> records() const override;
    void commit() override;

    // Canonical serialization; equal stores produce equal bytes.
    std::string serialize() const;

private:
    FileRecordStore(std::filesystem::path path, StoreSchema schema, int lock_fd);
    void load(const std::string& text);

    std::filesystem::path path_;
    StoreSchema schema_;
    std::map<std::string, Record> rows_;
    int lock_fd_ = -1;
};

// In-memory store with the same semantics; handy for tests and dry runs.
class MemoryRecordStore final : public RecordStore {
public:
    explicit MemoryRecordStore(StoreSchema schema) : schema_(std::move(schema)) {}

    const StoreSchema& schema() const override { return schema_; }
    std::optional<Record> find(const std::string& key) const override;
    void put(const Record& record) override;
    std::vector<Record> records() const override;
    void commit() override { ++commits_; }
    int commits() const noexcept { return commits_; }

private:
    StoreSchema schema_;
    std::map<std::string, Record> rows_;
    int commits_ = 0;
};

// CSV with a header of attribute names; each cell holds the sorted values
// joined by kValueSeparator.
std::string export_csv(const StoreSchema& schema, const std::vector<Record>& records);

struct CsvTable {
    std::vector<std::string> attributes;
    std::vector<Record> records;
};

CsvTable import_csv(std::string_view text);

} // namespace serpmine
