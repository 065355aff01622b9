#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "serpmine/extraction.hpp"
#include "serpmine/record_store.hpp"
#include "serpmine/repository.hpp"

namespace serpmine {

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, std::uint64_t pages_processed)
        : std::runtime_error(what + " (after " + std::to_string(pages_processed) + " pages)"),
          pages_processed_(pages_processed) {}
    std::uint64_t pages_processed() const noexcept { return pages_processed_; }

private:
    std::uint64_t pages_processed_;
};

enum class IntegrationAction {
    Inserted,   // no stored record with the same key
    Skipped,    // stored record has cosine similarity 1
    Merged,     // differing cells replaced by their union
    Absorbed,   // similarity < 1 but every new value was already stored
};

const char* to_string(IntegrationAction action);

// Aligns `incoming` with the stored record sharing its key attributes and
// inserts, skips or union-merges it. Does not commit.
IntegrationAction integrate_record(const Record& incoming, RecordStore& store, const ExtractionConfig& config);

struct IntegrationReport {
    std::uint64_t pages_visited = 0;   // keyword-gated pages parsed
    std::uint64_t gated_out = 0;       // mirrored links rejected by the keyword gate
    std::uint64_t no_record = 0;       // pages that yielded no complete record
    std::uint64_t inserted = 0;
    std::uint64_t merged = 0;
    std::uint64_t skipped = 0;
    std::uint64_t absorbed = 0;
    std::vector<std::string> warnings;

    std::string to_json() const;
};

// Walks the finalized mirror depth-first from the stored result pages,
// following only links into the mirror, and integrates every keyword-gated
// page's record. Commits once at the end.
IntegrationReport run_wdics(const RepositoryManifest& repo, const ExtractionConfig& config, RecordStore& store);

} // namespace serpmine
