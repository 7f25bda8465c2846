#include <fstream>
#include <sstream>

#include "evoplace/error.hpp"
#include "evoplace/run_store.hpp"

namespace evoplace::store {

namespace fs = std::filesystem;

std::string dump_line(const json& record) { return record.dump(-1, ' ', false, json::error_handler_t::replace); }

RunStore::RunStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create run directory " + dir_.string() + ": " + ec.message());
}

json RunStore::open_log(const std::string& file, const json& meta) {
  if (auto h = header(file)) {
    for (const auto& [k, v] : meta.items())
      if (h->contains(k) && (*h)[k] != v)
        throw Error(ErrorCode::InvalidArgument, file + ": stored '" + k + "' differs from this run (" + (*h)[k].dump() +
                                                    " vs " + v.dump() + ")");
    read(file, true);
    return *h;
  }
  json h = {{"record", "header"}, {"schema", kSchemaVersion}};
  for (const auto& [k, v] : meta.items()) h[k] = v;
  {
    std::lock_guard lock(mu_);
    std::ofstream out(dir_ / file, std::ios::trunc | std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir_ / file).string());
    out << dump_line(h) << '\n';
  }
  return h;
}

void RunStore::append(const std::string& file, const json& record) {
  const std::string line = dump_line(record) + "\n";
  std::lock_guard lock(mu_);
  std::ofstream out(dir_ / file, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to " + (dir_ / file).string());
  out << line;
  out.flush();
}

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::optional<json> RunStore::header(const std::string& file) const {
  std::lock_guard lock(mu_);
  const std::string text = slurp(dir_ / file);
  const auto nl = text.find('\n');
  if (text.empty() || nl == std::string::npos) return std::nullopt;
  json h;
  try {
    h = json::parse(text.substr(0, nl));
  } catch (const json::exception&) {
    throw Error(ErrorCode::CorruptStore, file + ": unreadable header (record 0)");
  }
  if (!h.is_object() || h.value("record", "") != "header")
    throw Error(ErrorCode::CorruptStore, file + ": first line is not a header (record 0)");
  if (h.value("schema", 0) != kSchemaVersion)
    throw Error(ErrorCode::CorruptStore, file + ": unsupported schema " + h["schema"].dump());
  return h;
}

std::vector<json> RunStore::read(const std::string& file, bool repair) const {
  std::lock_guard lock(mu_);
  const fs::path path = dir_ / file;
  const std::string text = slurp(path);
  std::vector<json> out;
  std::size_t pos = 0, index = 0, good_end = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      // torn tail from an interrupted append
      if (repair) fs::resize_file(path, good_end);
      break;
    }
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) {
      good_end = pos;
      continue;
    }
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      throw Error(ErrorCode::CorruptStore, file + ": unreadable record " + std::to_string(index));
    }
    if (!rec.is_object()) throw Error(ErrorCode::CorruptStore, file + ": record " + std::to_string(index) + " is not an object");
    if (index == 0 && rec.value("record", "") == "header") {
      good_end = pos;
      ++index;
      continue;
    }
    out.push_back(std::move(rec));
    good_end = pos;
    ++index;
  }
  return out;
}

void RunStore::write_json(const std::string& file, const json& value) const {
  const fs::path target = dir_ / file;
  const fs::path tmp = dir_ / (file + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    out << value.dump(2) << '\n';
  }
  fs::rename(tmp, target);
}

std::optional<json> RunStore::read_json(const std::string& file) const {
  const fs::path p = dir_ / file;
  if (!fs::exists(p)) return std::nullopt;
  try {
    return json::parse(slurp(p));
  } catch (const json::exception&) {
    throw Error(ErrorCode::CorruptStore, file + ": unreadable JSON");
  }
}

}  // namespace evoplace::store
