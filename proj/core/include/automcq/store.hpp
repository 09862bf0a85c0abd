#pragma once

// Single-directory document store: an append-only write log (one checksummed
// JSON record per line, fsync'd before put() returns) plus a compacted
// snapshot. Opening replays snapshot + log; a torn final record is dropped.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace automcq {

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DocumentStore {
 public:
  static constexpr std::string_view kLogFile = "wal.log";
  static constexpr std::string_view kSnapshotFile = "snapshot.json";

  // Creates the directory if needed. Throws StoreError when it cannot be
  // created, read or written.
  explicit DocumentStore(std::filesystem::path dir);
  ~DocumentStore();

  DocumentStore(const DocumentStore &) = delete;
  DocumentStore &operator=(const DocumentStore &) = delete;

  // Replaces the document; durable on return.
  void put(std::string_view collection, std::string_view id, const nlohmann::json &doc);

  std::optional<nlohmann::json> get(std::string_view collection, std::string_view id) const;

  // Documents in id order.
  std::vector<nlohmann::json> list(std::string_view collection) const;
  std::vector<nlohmann::json> list_prefix(std::string_view collection, std::string_view id_prefix) const;

  // Writes a snapshot of the current state and truncates the log.
  void snapshot();

  std::uint64_t sequence() const;
  std::size_t log_records() const;
  const std::filesystem::path &directory() const noexcept { return dir_; }

 private:
  using Collection = std::map<std::string, nlohmann::json, std::less<>>;

  void load_snapshot();
  void replay_log();
  void open_log();
  void apply(const std::string &collection, const std::string &id, nlohmann::json doc);

  std::filesystem::path dir_;
  int log_fd_ = -1;
  std::uint64_t sequence_ = 0;
  std::size_t log_records_ = 0;
  std::map<std::string, Collection, std::less<>> collections_;
  mutable std::shared_mutex mutex_;
};

}  // namespace automcq
