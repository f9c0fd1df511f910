#include "scicomm/jsonl.hpp"

#include <fstream>
#include <sstream>

namespace scicomm {

namespace {

bool is_blank(const std::string& line) {
  for (char c : line) {
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

}  // namespace

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open file: " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) {
      throw ParseError(path.string(), line_no, "malformed JSON");
    }
    if (!obj.is_object()) {
      throw ParseError(path.string(), line_no, "expected a JSON object");
    }
    fn(line_no, obj);
  }
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::vector<json> records;
  for_each_jsonl(path, [&](std::size_t, const json& obj) { records.push_back(obj); });
  return records;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  json value = json::parse(buf.str(), nullptr, false);
  if (value.is_discarded()) {
    throw ParseError(path.string(), 0, "malformed JSON");
  }
  return value;
}

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write file: " + path.string());
  }
  for (const auto& rec : records) {
    out << rec.dump() << '\n';
  }
}

void write_json(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot write file: " + path.string());
  }
  out << value.dump(2) << '\n';
}

void warn_unknown_fields(const json& obj, const std::vector<std::string>& known,
                         const std::string& record_kind, WarningLog& warnings) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool found = false;
    for (const auto& k : known) {
      if (it.key() == k) {
        found = true;
        break;
      }
    }
    if (!found) {
      warnings.add(record_kind + ":" + it.key(),
                   "ignoring unknown field '" + it.key() + "' in " + record_kind +
                       " records");
    }
  }
}

std::string bytes_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  for (int shift = 60; shift >= 0; shift -= 4) {
    os << ((h >> shift) & 0xf);
  }
  return os.str();
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return bytes_digest(buf.str());
}

}  // namespace scicomm
