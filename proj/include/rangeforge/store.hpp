#pragma once

// Durable storage: one directory per instance holding
//   events.jsonl  append-only log, one record per line
//   state.json    snapshot of the instance after its last committed command
//
// A mutation appends its records (fsync) and then replaces the snapshot
// (write tmp, fsync, rename). The snapshot's next_seq is the commit point:
// records at or past it belong to a mutation that never committed and are
// cut off on recovery, as is a torn final line.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rangeforge/core/result.hpp"
#include "rangeforge/core/rng.hpp"
#include "rangeforge/instance.hpp"
#include "rangeforge/json_io.hpp"

namespace rangeforge {

namespace fs = std::filesystem;

struct StoreError {
  std::string code;  // E_CORRUPT, E_VERSION, E_IO
  std::string message;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Low-level file helpers.

namespace detail {

inline std::string errno_text(const std::string& what, const fs::path& p) {
  return what + " " + p.string() + ": " + std::strerror(errno);
}

inline void write_all(int fd, std::string_view data, const fs::path& p) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(errno_text("write", p));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

inline void fsync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Replaces `p` atomically with `data`.
inline void atomic_write(const fs::path& p, std::string_view data) {
  const fs::path tmp = p.string() + ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError(errno_text("open", tmp));
  try {
    write_all(fd, data, tmp);
    if (::fsync(fd) != 0) throw IoError(errno_text("fsync", tmp));
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), p.c_str()) != 0) throw IoError(errno_text("rename", tmp));
  fsync_dir(p.parent_path());
}

inline std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Snapshots.

inline constexpr int kSnapshotFormatVersion = 1;

// {"body": ..., "checksum": fnv1a(body.dump()), "format_version": 1}
inline std::string encode_snapshot(const json& body) {
  const std::string text = body.dump();
  return json{{"format_version", kSnapshotFormatVersion},
              {"checksum", detail::hex64(stable_hash(text))},
              {"body", body}}
             .dump();
}

inline Result<json, StoreError> decode_snapshot(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return StoreError{"E_CORRUPT", "snapshot is not valid JSON"};
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer())
    return StoreError{"E_CORRUPT", "snapshot has no format_version"};
  const auto version = doc["format_version"].get<std::int64_t>();
  if (version != kSnapshotFormatVersion)
    return StoreError{"E_VERSION", "snapshot format " + std::to_string(version) + " is not supported (expected " +
                                       std::to_string(kSnapshotFormatVersion) + ")"};
  if (!doc.contains("body") || !doc.contains("checksum") || !doc["checksum"].is_string())
    return StoreError{"E_CORRUPT", "snapshot is missing its body or checksum"};
  if (detail::hex64(stable_hash(doc["body"].dump())) != doc["checksum"].get<std::string>())
    return StoreError{"E_CORRUPT", "snapshot checksum mismatch"};
  return std::move(doc["body"]);
}

// Instance plus the log position it is consistent with.
struct StoredInstance {
  RangeInstance instance;
  std::uint64_t next_seq = 1;
};

inline std::string snapshot_instance(const RangeInstance& inst, std::uint64_t next_seq) {
  return encode_snapshot(json{{"instance", inst.to_body()}, {"next_seq", next_seq}});
}

inline Result<StoredInstance, StoreError> restore_instance(std::string_view text) {
  auto body = decode_snapshot(text);
  if (!body) return body.error();
  try {
    auto inst = RangeInstance::from_body(body->at("instance"));
    if (!inst) return StoreError{inst.error().code, inst.error().message};
    return StoredInstance{std::move(inst.value()), body->at("next_seq").get<std::uint64_t>()};
  } catch (const std::exception& e) {
    return StoreError{"E_CORRUPT", e.what()};
  }
}

inline Result<StoredInstance, StoreError> restore_instance_file(const fs::path& p) {
  auto text = detail::read_file(p);
  if (!text) return StoreError{"E_IO", "cannot read " + p.string()};
  return restore_instance(*text);
}

// ---------------------------------------------------------------------------
// Event log.

struct EventRecord {
  std::uint64_t seq = 0;
  Tick tick = 0;
  std::string kind;
  json payload;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

inline void to_json(json& j, const EventRecord& r) {
  j = json{{"seq", r.seq}, {"tick", r.tick}, {"kind", r.kind}, {"payload", r.payload}};
}
inline void from_json(const json& j, EventRecord& r) {
  r.seq = j.at("seq").get<std::uint64_t>();
  r.tick = j.at("tick").get<Tick>();
  r.kind = j.at("kind").get<std::string>();
  r.payload = j.at("payload");
}

inline bool is_event_kind(std::string_view k) {
  for (const char* known : {"lifecycle", "flow", "alert", "drop", "anomaly", "inject", "delivery"})
    if (k == known) return true;
  return false;
}

// Append-only JSON Lines log with an in-memory mirror for queries.
class EventLog {
 public:
  EventLog() = default;
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  ~EventLog() { close(); }

  // Opens (creating if needed) and recovers the log. Records with seq >=
  // commit_seq are discarded; pass 0 to keep everything that parses.
  Result<bool, StoreError> open(const fs::path& path, std::uint64_t commit_seq = 0) {
    close();
    path_ = path;
    records_.clear();
    std::string text = detail::read_file(path).value_or("");
    std::size_t keep = 0, pos = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) break;  // torn tail
      json j = json::parse(std::string_view(text).substr(pos, nl - pos), nullptr, false);
      if (j.is_discarded()) {
        if (text.find('\n', nl + 1) != std::string::npos)
          return StoreError{"E_CORRUPT", path.string() + ": unreadable record at byte " + std::to_string(pos)};
        break;  // torn last record
      }
      EventRecord r;
      try {
        r = j.get<EventRecord>();
      } catch (const std::exception& e) {
        return StoreError{"E_CORRUPT", path.string() + ": " + e.what()};
      }
      if (commit_seq != 0 && r.seq >= commit_seq) break;
      if (r.seq != records_.size() + 1)
        return StoreError{"E_CORRUPT", path.string() + ": seq " + std::to_string(r.seq) + " out of order"};
      records_.push_back(std::move(r));
      pos = nl + 1;
      keep = pos;
    }
    if (commit_seq != 0 && records_.size() + 1 < commit_seq)
      return StoreError{"E_CORRUPT", path.string() + ": log ends before the committed seq " +
                                         std::to_string(commit_seq)};
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) return StoreError{"E_IO", detail::errno_text("open", path)};
    if (keep != text.size()) {
      if (::ftruncate(fd_, static_cast<off_t>(keep)) != 0 || ::fsync(fd_) != 0)
        return StoreError{"E_IO", detail::errno_text("truncate", path)};
    }
    ::lseek(fd_, 0, SEEK_END);
    return true;
  }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  std::uint64_t next_seq() const {
    std::shared_lock lk(mu_);
    return records_.size() + 1;
  }

  // Numbers and durably appends the drafts as one write.
  std::vector<EventRecord> append(const std::vector<EventDraft>& drafts) {
    std::vector<EventRecord> fresh;
    std::string buf;
    {
      std::shared_lock lk(mu_);
      std::uint64_t seq = records_.size() + 1;
      for (const auto& d : drafts) {
        fresh.push_back({seq++, d.tick, d.kind, d.payload});
        buf += json(fresh.back()).dump();
        buf += '\n';
      }
    }
    if (!buf.empty()) {
      if (fd_ < 0) throw IoError("event log is not open");
      detail::write_all(fd_, buf, path_);
      if (::fdatasync(fd_) != 0) throw IoError(detail::errno_text("fsync", path_));
    }
    {
      std::unique_lock lk(mu_);
      records_.insert(records_.end(), fresh.begin(), fresh.end());
    }
    cv_.notify_all();
    return fresh;
  }

  // Records with seq > since, optionally of one kind, in seq order.
  std::vector<EventRecord> query(std::uint64_t since, std::string_view kind = {}) const {
    std::shared_lock lk(mu_);
    std::vector<EventRecord> out;
    for (std::size_t i = since; i < records_.size(); ++i)
      if (kind.empty() || records_[i].kind == kind) out.push_back(records_[i]);
    return out;
  }

  // Blocks until a record past `since` exists or the timeout passes.
  bool wait_past(std::uint64_t since, std::chrono::milliseconds timeout) const {
    std::shared_lock lk(mu_);
    return cv_.wait_for(lk, timeout, [&] { return records_.size() > since; });
  }

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  int fd_ = -1;
  mutable std::shared_mutex mu_;
  mutable std::condition_variable_any cv_;
  std::vector<EventRecord> records_;
};

// ---------------------------------------------------------------------------
// Data directory.

// Exclusive advisory lock on <data_dir>/.lock for the life of the object.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    const fs::path p = dir / ".lock";
    fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError(detail::errno_text("open", p));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw IoError("data directory " + dir.string() + " is in use by another process");
    }
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;
  ~DirLock() {
    if (fd_ >= 0) ::close(fd_);
  }

 private:
  int fd_ = -1;
};

}  // namespace rangeforge
