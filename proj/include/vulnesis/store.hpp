#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vulnesis/domain.hpp"
#include "vulnesis/ingest.hpp"

namespace vulnesis {

namespace fs = std::filesystem;

/// Exclusive non-blocking flock(2) on a file, held for the object's
/// lifetime. A second holder, in this or another process, gets LockHeld.
class FileLock {
 public:
  FileLock(const fs::path& path, const std::string& what);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  FileLock(FileLock&& other) noexcept;
  FileLock& operator=(FileLock&&) = delete;

 private:
  int fd_ = -1;
};

/// Writer lock for one project: <root>/<id>/.lock.
class ProjectLock {
 public:
  ProjectLock(const fs::path& root, const std::string& project_id);

  const std::string& project_id() const { return project_id_; }

 private:
  std::string project_id_;
  FileLock lock_;
};

/// Writer lock for the shared masters: <root>/.masters.lock.
FileLock lock_masters(const fs::path& root);

fs::path project_dir(const fs::path& root, const std::string& project_id);

/// Writes project.json, buildings.jsonl, typologies.json, scenarios.json,
/// masters.json and cartography/<kind>.geojson under <root>/<id>, each file
/// through write-temp-then-rename. Takes the project lock itself.
void save_project(const Project& project, const fs::path& root);
/// Same, for a caller that already holds the lock.
void save_project(const Project& project, const fs::path& root, const ProjectLock& lock);

/// Throws UnknownProject, SchemaTooNew, CorruptFile, UnknownKind.
Project load_project(const fs::path& root, const std::string& project_id);
Project load_project_dir(const fs::path& dir);

bool project_exists(const fs::path& root, const std::string& project_id);

/// System masters at <root>/masters.json; an absent file yields empty masters.
Masters load_masters(const fs::path& root);
void save_masters(const Masters& masters, const fs::path& root);

struct InventoryEntry {
  std::string id;
  std::string name;
  std::string state;
  std::string date;
  std::optional<std::string> error;
};

/// One entry per project directory; unreadable ones carry an error message.
std::vector<InventoryEntry> list_projects(const fs::path& root);

/// Atomic whole-file replacement.
void write_file_atomic(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

}  // namespace vulnesis
