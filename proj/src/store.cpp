#include "vulnesis/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <utility>

#include "vulnesis/error.hpp"
#include "vulnesis/serialize.hpp"

namespace vulnesis {

using nlohmann::json;

namespace {

constexpr const char* kProjectFile = "project.json";
constexpr const char* kBuildingsFile = "buildings.jsonl";
constexpr const char* kTypologiesFile = "typologies.json";
constexpr const char* kScenariosFile = "scenarios.json";
constexpr const char* kMastersFile = "masters.json";
constexpr const char* kCartographyDir = "cartography";

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

void check_version(const json& doc, const std::string& where) {
  auto it = doc.find("schema_version");
  if (it == doc.end() || !it->is_number_integer()) {
    throw Error(ErrorCode::CorruptFile, where + ": missing schema_version");
  }
  const int version = it->get<int>();
  if (version > kSchemaVersion) {
    throw Error(ErrorCode::SchemaTooNew, where + ": schema_version " + std::to_string(version) +
                                             " is newer than supported " +
                                             std::to_string(kSchemaVersion));
  }
}

json parse_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::CorruptFile, path.filename().string() + ": byte " +
                                            std::to_string(e.byte) + ": " + e.what());
  }
}

/// Runs a reader, converting library exceptions into CorruptFile with a
/// position.
template <typename F>
auto guarded(const std::string& where, F&& read) {
  try {
    return read();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BadRequest) throw Error(ErrorCode::CorruptFile, where + ": " + e.what());
    throw Error(e.code(), where + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, where + ": " + e.what());
  }
}

}  // namespace

FileLock::FileLock(const fs::path& path, const std::string& what) {
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    if (err == EWOULDBLOCK) throw Error(ErrorCode::LockHeld, what + " is locked by another writer");
    throw Error(ErrorCode::IoFailure, "cannot lock " + path.string() + ": " + std::strerror(err));
  }
}

FileLock::FileLock(FileLock&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}

FileLock::~FileLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

namespace {

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

}  // namespace

ProjectLock::ProjectLock(const fs::path& root, const std::string& project_id)
    : project_id_(project_id),
      lock_(ensure_dir(project_dir(root, project_id)) / ".lock", "project '" + project_id + "'") {}

FileLock lock_masters(const fs::path& root) {
  return FileLock(ensure_dir(root) / ".masters.lock", "the masters catalogue");
}

fs::path project_dir(const fs::path& root, const std::string& project_id) {
  if (project_id.empty() || project_id == "." || project_id == ".." ||
      project_id.find_first_of("/\\") != std::string::npos || project_id.front() == '.') {
    throw Error(ErrorCode::BadRequest, "invalid project id '" + project_id + "'");
  }
  return root / project_id;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "short write on " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot replace " + path.string());
  }
}

void save_project(const Project& project, const fs::path& root) {
  ProjectLock lock(root, project.id);
  save_project(project, root, lock);
}

void save_project(const Project& project, const fs::path& root, const ProjectLock& lock) {
  if (lock.project_id() != project.id) {
    throw Error(ErrorCode::LockHeld, "lock is for project '" + lock.project_id() + "'");
  }
  const fs::path dir = project_dir(root, project.id);
  std::error_code ec;
  fs::create_directories(dir / kCartographyDir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

  write_file_atomic(dir / kProjectFile, dump(serialize::project_meta_to_json(project)));

  std::vector<const Building*> ordered;
  ordered.reserve(project.buildings.size());
  for (const auto& b : project.buildings) ordered.push_back(&b);
  std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::string lines;
  for (const Building* b : ordered) lines += serialize::building_to_json(*b).dump() + "\n";
  write_file_atomic(dir / kBuildingsFile, lines);

  json typologies = json::array();
  for (const auto& t : project.typologies) typologies.push_back(serialize::typology_to_json(t));
  write_file_atomic(dir / kTypologiesFile,
                    dump({{"schema_version", kSchemaVersion}, {"typologies", typologies}}));

  json scenarios = json::array();
  for (const auto& s : project.scenarios) scenarios.push_back(serialize::scenario_to_json(s));
  write_file_atomic(dir / kScenariosFile,
                    dump({{"schema_version", kSchemaVersion}, {"scenarios", scenarios}}));

  write_file_atomic(dir / kMastersFile,
                    dump({{"schema_version", kSchemaVersion},
                          {"aliases", serialize::aliases_to_json(project.aliases)}}));

  for (auto kind : {LayerKind::Parcels, LayerKind::Blocks, LayerKind::ProjectArea}) {
    const fs::path path = dir / kCartographyDir / (std::string(to_string(kind)) + ".geojson");
    if (const MapLayer* layer = project.layer(kind)) {
      write_file_atomic(path, dump(serialize::layer_to_geojson(*layer)));
    } else {
      fs::remove(path, ec);
    }
  }
}

bool project_exists(const fs::path& root, const std::string& project_id) {
  return fs::exists(project_dir(root, project_id) / kProjectFile);
}

Project load_project(const fs::path& root, const std::string& project_id) {
  const fs::path dir = project_dir(root, project_id);
  if (!fs::exists(dir / kProjectFile)) {
    throw Error(ErrorCode::UnknownProject, "no project '" + project_id + "'");
  }
  return load_project_dir(dir);
}

Project load_project_dir(const fs::path& dir) {
  Project project;
  {
    const json doc = parse_file(dir / kProjectFile);
    check_version(doc, kProjectFile);
    guarded(kProjectFile, [&] {
      serialize::project_meta_from_json(doc, project);
      return 0;
    });
  }

  {
    const std::string text = read_file(dir / kBuildingsFile);
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string where = std::string(kBuildingsFile) + ":" + std::to_string(line_no);
      json doc = json::parse(line, nullptr, false);
      if (doc.is_discarded()) throw Error(ErrorCode::CorruptFile, where + ": malformed JSON");
      check_version(doc, where);
      project.buildings.push_back(guarded(where, [&] { return serialize::building_from_json(doc); }));
    }
    std::sort(project.buildings.begin(), project.buildings.end(),
              [](const Building& a, const Building& b) { return a.id < b.id; });
    auto dup = std::adjacent_find(project.buildings.begin(), project.buildings.end(),
                                  [](const Building& a, const Building& b) { return a.id == b.id; });
    if (dup != project.buildings.end()) {
      throw Error(ErrorCode::CorruptFile, std::string(kBuildingsFile) + ": duplicate id " +
                                              std::to_string(dup->id));
    }
  }

  {
    const json doc = parse_file(dir / kTypologiesFile);
    check_version(doc, kTypologiesFile);
    guarded(kTypologiesFile, [&] {
      for (const auto& t : doc.at("typologies")) project.typologies.push_back(serialize::typology_from_json(t));
      return 0;
    });
  }
  {
    const json doc = parse_file(dir / kScenariosFile);
    check_version(doc, kScenariosFile);
    guarded(kScenariosFile, [&] {
      for (const auto& s : doc.at("scenarios")) project.scenarios.push_back(serialize::scenario_from_json(s));
      return 0;
    });
  }
  {
    const json doc = parse_file(dir / kMastersFile);
    check_version(doc, kMastersFile);
    guarded(kMastersFile, [&] {
      project.aliases = serialize::aliases_from_json(doc.value("aliases", json::object()));
      return 0;
    });
  }
  for (auto kind : {LayerKind::Parcels, LayerKind::Blocks, LayerKind::ProjectArea}) {
    const std::string name = std::string(to_string(kind)) + ".geojson";
    const fs::path path = dir / kCartographyDir / name;
    if (!fs::exists(path)) continue;
    const std::string text = read_file(path);
    const json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::CorruptFile, name + ": malformed JSON");
    check_version(doc, name);
    const std::string key_property = doc.value("key_property", "key");
    project.layers[kind] = guarded(name, [&] {
      try {
        return parse_layer(text, kind, key_property);
      } catch (const Error& e) {
        throw Error(ErrorCode::CorruptFile, e.what());
      }
    });
  }
  return project;
}

Masters load_masters(const fs::path& root) {
  const fs::path path = root / kMastersFile;
  if (!fs::exists(path)) return Masters{};
  const json doc = parse_file(path);
  check_version(doc, kMastersFile);
  return guarded(kMastersFile, [&] { return serialize::masters_from_json(doc); });
}

void save_masters(const Masters& masters, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  write_file_atomic(root / kMastersFile, dump(serialize::masters_to_json(masters)));
}

std::vector<InventoryEntry> list_projects(const fs::path& root) {
  std::vector<InventoryEntry> out;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return out;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (!entry.is_directory()) continue;
    if (entry.path().filename().string().starts_with(".")) continue;
    dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    InventoryEntry item;
    item.id = dir.filename().string();
    try {
      if (!fs::exists(dir / kProjectFile)) {
        throw Error(ErrorCode::CorruptFile, "missing project.json");
      }
      Project p = load_project_dir(dir);
      item.name = p.name;
      item.state = std::string(to_string(p.state));
      item.date = p.date;
    } catch (const Error& e) {
      item.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace vulnesis
