#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scicomm/errors.hpp"

namespace scicomm {

using json = nlohmann::json;

// Calls fn(line_number, object) for every non-blank line. Line numbers are
// 1-based. Malformed JSON or a non-object line raises ParseError with the
// offending line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(std::size_t, const json&)>& fn);

std::vector<json> read_jsonl(const std::filesystem::path& path);

json read_json_file(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path,
                 const std::vector<json>& records);

void write_json(const std::filesystem::path& path, const json& value);

// Records a one-time notice for every field of obj not listed in known.
void warn_unknown_fields(const json& obj, const std::vector<std::string>& known,
                         const std::string& record_kind, WarningLog& warnings);

// FNV-1a 64-bit over the file bytes, hex encoded. Used for run-manifest input
// digests; not a cryptographic hash.
std::string file_digest(const std::filesystem::path& path);

std::string bytes_digest(const std::string& bytes);

}  // namespace scicomm
