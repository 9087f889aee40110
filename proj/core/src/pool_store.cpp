// Copyright 2026 The xlaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "xlaug/pool_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "xlaug/error.hpp"

namespace xlaug {
namespace {

constexpr char kVecMagic[4] = {'X', 'V', 'E', 'C'};
constexpr std::uint32_t kVecVersion = 1;
constexpr std::size_t kVecHeaderSize = 4 + 4 + 8 + 4;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIoFailure, "read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot open for writing " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::kIoFailure, "write failed: " + path.string());
}

Instance parse_record(const std::string& line, std::size_t line_no) {
  auto malformed = [&](const std::string& why) {
    return Error(ErrorKind::kMalformedRecord,
                 "line " + std::to_string(line_no) + ": " + why, line_no);
  };
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw malformed(e.what());
  }
  if (!record.is_object()) throw malformed("record is not an object");

  auto require_string = [&](const char* key) -> std::string {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string()) {
      throw malformed(std::string("missing string field '") + key + "'");
    }
    return it->get<std::string>();
  };

  Instance inst;
  inst.id = line_no;
  inst.text = require_string("text");
  inst.language = require_string("lang");
  inst.source_task = require_string("task");
  auto label = record.find("label");
  if (label == record.end() || !label->is_number_integer()) {
    throw malformed("missing integer field 'label'");
  }
  const auto value = label->get<std::int64_t>();
  if (value != 0 && value != 1) throw malformed("label must be 0 or 1");
  inst.label = static_cast<int>(value);
  if (inst.text.empty()) throw malformed("empty text");
  if (!is_language_code(inst.language)) {
    throw malformed("language '" + inst.language + "' is not a two-letter code");
  }
  return inst;
}

}  // namespace

VectorBlock::VectorBlock(std::size_t dim, std::vector<float> data)
    : dim_(dim), data_(std::move(data)) {
  if (dim_ == 0 && !data_.empty()) {
    throw Error(ErrorKind::kDimMismatch, "dim 0 with non-empty data");
  }
  if (dim_ != 0 && data_.size() % dim_ != 0) {
    throw Error(ErrorKind::kDimMismatch, "data length is not a multiple of dim");
  }
}

void VectorBlock::append(std::span<const float> values) {
  if (values.size() != dim_) {
    throw Error(ErrorKind::kDimMismatch, "expected dim " + std::to_string(dim_) +
                                             ", got " + std::to_string(values.size()));
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

void Pool::add(Instance instance, std::span<const float> embedding) {
  if (vectors.dim() == 0 && vectors.empty()) vectors = VectorBlock(embedding.size());
  vectors.append(embedding);
  instance.id = instances.size();
  instances.push_back(std::move(instance));
}

PoolView::PoolView(const Pool& pool, std::vector<std::size_t> selected)
    : pool_(&pool), selected_(std::move(selected)) {
  std::sort(selected_.begin(), selected_.end());
  selected_.erase(std::unique(selected_.begin(), selected_.end()), selected_.end());
  if (!selected_.empty() && selected_.back() >= pool.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "view row " + std::to_string(selected_.back()) + " out of range",
                selected_.back());
  }
}

PoolView PoolView::all(const Pool& pool) {
  std::vector<std::size_t> rows(pool.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return PoolView(pool, std::move(rows));
}

bool PoolView::contains(std::size_t row) const {
  return std::binary_search(selected_.begin(), selected_.end(), row);
}

bool is_language_code(std::string_view code) {
  return code.size() == 2 && code[0] >= 'a' && code[0] <= 'z' && code[1] >= 'a' &&
         code[1] <= 'z';
}

void validate_pool(const Pool& pool) {
  if (pool.instances.size() != pool.vectors.count()) {
    throw Error(ErrorKind::kCountMismatch,
                std::to_string(pool.instances.size()) + " records vs " +
                    std::to_string(pool.vectors.count()) + " vectors");
  }
  for (std::size_t i = 0; i < pool.instances.size(); ++i) {
    const Instance& inst = pool.instances[i];
    if (inst.id != i || inst.text.empty() || (inst.label != 0 && inst.label != 1) ||
        !is_language_code(inst.language)) {
      throw Error(ErrorKind::kMalformedRecord, "invalid instance at row " + std::to_string(i), i);
    }
  }
  const std::size_t dim = pool.vectors.dim();
  const auto data = pool.vectors.data();
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!std::isfinite(data[k])) {
      const std::size_t row = k / dim;
      throw Error(ErrorKind::kNonFiniteVector, "non-finite value in row " + std::to_string(row),
                  row);
    }
  }
}

std::vector<Instance> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path.string());
  std::vector<Instance> instances;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    instances.push_back(parse_record(line, line_no));
    ++line_no;
  }
  if (in.bad()) throw Error(ErrorKind::kIoFailure, "read failed: " + path.string());
  return instances;
}

void write_manifest(std::span<const Instance> instances, const std::filesystem::path& path) {
  std::string out;
  for (const Instance& inst : instances) {
    nlohmann::ordered_json record;
    record["text"] = inst.text;
    record["label"] = inst.label;
    record["lang"] = inst.language;
    record["task"] = inst.source_task;
    out += record.dump();
    out += '\n';
  }
  write_file(path, out);
}

VectorBlock read_vectors(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kVecHeaderSize || std::memcmp(p, kVecMagic, 4) != 0) {
    throw Error(ErrorKind::kBadHeader, path.string() + ": missing XVEC magic");
  }
  const auto version = get_le(p + 4, 4);
  const auto count = get_le(p + 8, 8);
  const auto dim = get_le(p + 16, 4);
  if (version != kVecVersion) {
    throw Error(ErrorKind::kBadHeader,
                path.string() + ": unsupported version " + std::to_string(version));
  }
  if (dim == 0) throw Error(ErrorKind::kBadHeader, path.string() + ": dim must be positive");
  const std::size_t payload = bytes.size() - kVecHeaderSize;
  if (count > std::numeric_limits<std::size_t>::max() / 4 / dim || count * dim * 4 != payload) {
    throw Error(ErrorKind::kBadHeader, path.string() + ": header declares count " +
                                           std::to_string(count) + " and dim " +
                                           std::to_string(dim) + " but the payload is " +
                                           std::to_string(payload) + " bytes");
  }
  std::vector<float> data(count * dim);
  const unsigned char* src = p + kVecHeaderSize;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data.data(), src, payload);
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(src + 4 * i, 4)));
    }
  }
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!std::isfinite(data[k])) {
      const std::size_t row = k / dim;
      throw Error(ErrorKind::kNonFiniteVector,
                  path.string() + ": non-finite value in row " + std::to_string(row), row);
    }
  }
  return VectorBlock(dim, std::move(data));
}

void write_vectors(const VectorBlock& block, const std::filesystem::path& path) {
  if (block.dim() == 0 || block.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::kBadHeader, "cannot write vectors with dim " +
                                           std::to_string(block.dim()));
  }
  std::string out;
  const auto values = block.data();
  out.reserve(kVecHeaderSize + values.size() * 4);
  out.append(kVecMagic, 4);
  put_u32(out, kVecVersion);
  put_u64(out, block.count());
  put_u32(out, static_cast<std::uint32_t>(block.dim()));
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  write_file(path, out);
}

Pool load_pool(const std::filesystem::path& manifest_path,
               const std::filesystem::path& vectors_path) {
  Pool pool;
  pool.vectors = read_vectors(vectors_path);
  pool.instances = read_manifest(manifest_path);
  if (pool.instances.size() != pool.vectors.count()) {
    throw Error(ErrorKind::kCountMismatch,
                manifest_path.string() + " has " + std::to_string(pool.instances.size()) +
                    " records but " + vectors_path.string() + " has " +
                    std::to_string(pool.vectors.count()) + " vectors");
  }
  return pool;
}

void write_pool(const Pool& pool, const std::filesystem::path& manifest_path,
                const std::filesystem::path& vectors_path) {
  validate_pool(pool);
  write_manifest(pool.instances, manifest_path);
  write_vectors(pool.vectors, vectors_path);
}

std::filesystem::path default_vectors_path(const std::filesystem::path& manifest) {
  const std::string name = manifest.string();
  constexpr std::string_view kSuffix = ".pool.jsonl";
  if (name.size() > kSuffix.size() && name.ends_with(kSuffix)) {
    return name.substr(0, name.size() - kSuffix.size()) + ".vec";
  }
  return name + ".vec";
}

StatsReport pool_stats(const Pool& pool) {
  StatsReport report;
  report.total = pool.size();
  report.dim = pool.dim();
  std::size_t hateful = 0;
  for (const Instance& inst : pool.instances) {
    hateful += static_cast<std::size_t>(inst.label);
    ++report.languages[inst.language].count;
    TaskStats& task = report.tasks[inst.source_task];
    ++task.count;
    task.hateful += static_cast<std::size_t>(inst.label);
  }
  if (report.total == 0) return report;
  const auto total = static_cast<double>(report.total);
  report.hate_fraction = static_cast<double>(hateful) / total;
  for (auto& [code, lang] : report.languages) {
    lang.percent = 100.0 * static_cast<double>(lang.count) / total;
  }
  for (auto& [name, task] : report.tasks) {
    task.hate_fraction = static_cast<double>(task.hateful) / static_cast<double>(task.count);
  }
  return report;
}

PoolView filter_pool(const Pool& pool, const std::set<std::string>& exclude_languages,
                     const std::set<std::string>& exclude_tasks) {
  std::vector<std::size_t> rows;
  rows.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Instance& inst = pool.instances[i];
    if (exclude_languages.contains(inst.language) || exclude_tasks.contains(inst.source_task)) {
      continue;
    }
    rows.push_back(i);
  }
  return PoolView(pool, std::move(rows));
}

}  // namespace xlaug
