#include "automcq/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "automcq/common.hpp"

namespace automcq {

using json = nlohmann::json;

namespace {

std::string errno_text() { return std::strerror(errno); }

std::string checksum_hex(std::string_view payload) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(payload)));
  return buf;
}

void write_all(int fd, std::string_view data, const std::filesystem::path &path) {
  while (!data.empty()) {
    const auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StoreError("write to " + path.string() + " failed: " + errno_text());
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void sync_fd(int fd, const std::filesystem::path &path) {
  if (::fsync(fd) != 0) throw StoreError("fsync of " + path.string() + " failed: " + errno_text());
}

void sync_directory(const std::filesystem::path &dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

DocumentStore::DocumentStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    throw StoreError("cannot create data directory " + dir_.string() +
                     (ec ? ": " + ec.message() : std::string()));
  }
  load_snapshot();
  replay_log();
  open_log();
}

DocumentStore::~DocumentStore() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

void DocumentStore::load_snapshot() {
  const auto path = dir_ / kSnapshotFile;
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot read " + path.string());
  auto snapshot = json::parse(in, nullptr, false);
  if (snapshot.is_discarded() || !snapshot.is_object()) {
    throw StoreError("snapshot " + path.string() + " is corrupt");
  }
  sequence_ = snapshot.value("sequence", std::uint64_t{0});
  for (auto &[name, docs] : snapshot.at("collections").items()) {
    auto &collection = collections_[name];
    for (auto &[id, doc] : docs.items()) collection.emplace(id, std::move(doc));
  }
}

void DocumentStore::replay_log() {
  const auto path = dir_ / kLogFile;
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto content = buffer.str();

  std::size_t offset = 0;
  std::size_t good_end = 0;
  while (offset < content.size()) {
    const auto newline = content.find('\n', offset);
    if (newline == std::string::npos) break;  // torn tail
    const std::string_view line(content.data() + offset, newline - offset);
    const auto tab = line.find('\t');
    if (tab != 16) break;
    const auto payload = line.substr(tab + 1);
    if (checksum_hex(payload) != line.substr(0, 16)) break;
    auto record = json::parse(payload, nullptr, false);
    if (record.is_discarded() || !record.is_object()) break;

    try {
      const auto seq = record.at("seq").get<std::uint64_t>();
      if (seq > sequence_) {
        apply(record.at("c").get<std::string>(), record.at("id").get<std::string>(),
              std::move(record.at("doc")));
        sequence_ = seq;
      }
    } catch (const json::exception &) {
      break;
    }
    ++log_records_;
    offset = newline + 1;
    good_end = offset;
  }

  if (good_end < content.size()) {
    std::error_code ec;
    std::filesystem::resize_file(path, good_end, ec);
    if (ec) throw StoreError("cannot truncate torn log " + path.string() + ": " + ec.message());
  }
}

void DocumentStore::open_log() {
  const auto path = dir_ / kLogFile;
  log_fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (log_fd_ < 0) throw StoreError("cannot open " + path.string() + ": " + errno_text());
}

void DocumentStore::apply(const std::string &collection, const std::string &id, json doc) {
  collections_[collection][id] = std::move(doc);
}

void DocumentStore::put(std::string_view collection, std::string_view id, const json &doc) {
  std::unique_lock lock(mutex_);
  const auto seq = sequence_ + 1;
  const json record{{"seq", seq}, {"c", collection}, {"id", id}, {"doc", doc}};
  const auto payload = record.dump();
  const auto line = checksum_hex(payload) + "\t" + payload + "\n";
  const auto path = dir_ / kLogFile;
  const auto size_before = ::lseek(log_fd_, 0, SEEK_END);
  try {
    write_all(log_fd_, line, path);
    sync_fd(log_fd_, path);
  } catch (const StoreError &) {
    // Keep the log parseable for records appended after this failure.
    if (size_before >= 0) [[maybe_unused]] auto rc = ::ftruncate(log_fd_, size_before);
    throw;
  }
  apply(std::string(collection), std::string(id), doc);
  sequence_ = seq;
  ++log_records_;
}

std::optional<json> DocumentStore::get(std::string_view collection, std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto c = collections_.find(collection);
  if (c == collections_.end()) return std::nullopt;
  auto it = c->second.find(id);
  if (it == c->second.end()) return std::nullopt;
  return std::optional<json>(std::in_place, it->second);
}

std::vector<json> DocumentStore::list(std::string_view collection) const {
  return list_prefix(collection, "");
}

std::vector<json> DocumentStore::list_prefix(std::string_view collection,
                                             std::string_view id_prefix) const {
  std::shared_lock lock(mutex_);
  std::vector<json> out;
  auto c = collections_.find(collection);
  if (c == collections_.end()) return out;
  for (auto it = c->second.lower_bound(id_prefix); it != c->second.end(); ++it) {
    if (it->first.compare(0, id_prefix.size(), id_prefix) != 0) break;
    out.push_back(it->second);
  }
  return out;
}

void DocumentStore::snapshot() {
  std::unique_lock lock(mutex_);
  json collections = json::object();
  for (const auto &[name, docs] : collections_) {
    json entries = json::object();
    for (const auto &[id, doc] : docs) entries[id] = doc;
    collections[name] = std::move(entries);
  }
  const json snapshot{{"sequence", sequence_}, {"collections", std::move(collections)}};

  const auto final_path = dir_ / kSnapshotFile;
  auto tmp_path = final_path;
  tmp_path += ".tmp";
  const int fd = ::open(tmp_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw StoreError("cannot write " + tmp_path.string() + ": " + errno_text());
  try {
    write_all(fd, snapshot.dump(), tmp_path);
    sync_fd(fd, tmp_path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) throw StoreError("cannot install snapshot: " + ec.message());
  sync_directory(dir_);

  // Records up to sequence_ are now covered by the snapshot; replay skips
  // them even if truncation below is interrupted.
  if (::ftruncate(log_fd_, 0) != 0) {
    throw StoreError("cannot truncate log: " + errno_text());
  }
  sync_fd(log_fd_, dir_ / kLogFile);
  log_records_ = 0;
}

std::uint64_t DocumentStore::sequence() const {
  std::shared_lock lock(mutex_);
  return sequence_;
}

std::size_t DocumentStore::log_records() const {
  std::shared_lock lock(mutex_);
  return log_records_;
}

}  // namespace automcq
