// Copyright 2026 The stanfc Authors
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

#include "stan/cli/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "stan/common/error.hpp"

namespace stan::cli {
namespace {

struct Entry {
  std::string name;
  ad::Shape shape;
  std::size_t offset = 0;
};

void put_double(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

double get_double(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

template <class Fn>
void visit_tensors(const training::TrainedModel& m, Fn&& fn) {
  const ad::Tensor mean = ad::Tensor::row(m.scaler.mean);
  const ad::Tensor scale = ad::Tensor::row(m.scaler.scale);
  fn("scaler.mean", mean);
  fn("scaler.scale", scale);
  for (std::size_t loc = 0; loc < m.params.size(); ++loc) {
    m.params[loc].for_each(
        [&](std::string_view name, const ad::Tensor& t) {
          fn(std::to_string(loc) + "." + std::string(name), t);
        },
        true);
  }
}

[[noreturn]] void fail(const std::string& source, const std::string& what) {
  throw ParseError(source + ": " + what);
}

std::size_t parse_size(const std::string& token, const std::string& source, const std::string& what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(token, &pos);
  } catch (const std::exception&) {
    fail(source, "bad " + what + " '" + token + "'");
  }
  if (pos != token.size() || token.empty() || token[0] == '-') fail(source, "bad " + what + " '" + token + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string serialize_archive(const ModelArchive& archive) {
  std::ostringstream head;
  head << kArchiveMagic << '\n';
  for (const auto& [key, value] : model_settings(archive.settings)) {
    head << "setting " << key << " = " << value << '\n';
  }
  for (const auto& p : archive.model.params) head << "location " << p.location_id << '\n';
  std::string payload;
  visit_tensors(archive.model, [&](const std::string& name, const ad::Tensor& t) {
    head << "tensor " << name << ' ' << t.rank();
    for (std::size_t e : t.shape()) head << ' ' << e;
    head << ' ' << payload.size() << '\n';
    for (double v : t.storage()) put_double(payload, v);
  });
  head << "end " << payload.size() << '\n';
  return head.str() + payload;
}

ModelArchive parse_archive(const std::string& bytes, const std::string& source) {
  const auto magic_end = bytes.find('\n');
  if (magic_end == std::string::npos || bytes.compare(0, magic_end, kArchiveMagic) != 0) {
    fail(source, "bad magic: expected " + std::string(kArchiveMagic));
  }
  ModelArchive archive;
  std::vector<std::string> ids;
  std::vector<Entry> entries;
  std::size_t pos = magic_end + 1;
  std::size_t line_no = 1;
  std::optional<std::size_t> payload_bytes;
  while (!payload_bytes) {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) fail(source, "truncated header after line " + std::to_string(line_no));
    const std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const std::string where = "line " + std::to_string(line_no);
    const auto sp = line.find(' ');
    const std::string kind = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (kind == "setting") {
      const auto eq = rest.find(" = ");
      if (eq == std::string::npos) fail(source, where + ": malformed setting");
      try {
        apply_setting(archive.settings, rest.substr(0, eq), rest.substr(eq + 3));
      } catch (const Error& e) {
        fail(source, where + ": " + e.what());
      }
    } else if (kind == "location") {
      if (rest.empty()) fail(source, where + ": empty location id");
      ids.push_back(rest);
    } else if (kind == "tensor") {
      std::istringstream in(rest);
      std::vector<std::string> tok;
      for (std::string t; in >> t;) tok.push_back(t);
      if (tok.size() < 3) fail(source, where + ": malformed tensor entry");
      Entry e;
      e.name = tok[0];
      const std::size_t rank = parse_size(tok[1], source, "rank at " + where);
      if (tok.size() != rank + 3 || rank == 0) fail(source, where + ": tensor '" + e.name + "' rank does not match its extents");
      for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t ext = parse_size(tok[2 + i], source, "extent at " + where);
        if (ext == 0) fail(source, where + ": tensor '" + e.name + "' has a zero extent");
        e.shape.push_back(ext);
      }
      e.offset = parse_size(tok.back(), source, "offset at " + where);
      entries.push_back(std::move(e));
    } else if (kind == "end") {
      payload_bytes = parse_size(rest, source, "payload size");
    } else {
      fail(source, where + ": unknown record '" + kind + "'");
    }
  }
  if (bytes.size() - pos != *payload_bytes) {
    fail(source, "payload holds " + std::to_string(bytes.size() - pos) + " bytes, header declares " +
                     std::to_string(*payload_bytes));
  }

  // Offsets must tile the payload in manifest order.
  std::size_t expected_offset = 0;
  std::map<std::string, const Entry*> by_name;
  for (const auto& e : entries) {
    std::size_t count = 1;
    for (std::size_t x : e.shape) count *= x;
    if (e.offset != expected_offset) {
      fail(source, "tensor '" + e.name + "' offset " + std::to_string(e.offset) + ", expected " +
                       std::to_string(expected_offset));
    }
    expected_offset += count * 8;
    if (expected_offset > *payload_bytes) fail(source, "tensor '" + e.name + "' runs past the payload");
    if (!by_name.emplace(e.name, &e).second) fail(source, "duplicate tensor '" + e.name + "'");
  }
  if (expected_offset != *payload_bytes) fail(source, "payload has trailing bytes");

  const char* payload = bytes.data() + pos;
  auto read = [&](const std::string& name, const ad::Shape& shape) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) fail(source, "missing tensor '" + name + "'");
    if (it->second->shape != shape) {
      fail(source, "tensor '" + name + "' has shape " + ad::shape_string(it->second->shape) +
                       ", expected " + ad::shape_string(shape));
    }
    ad::Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = get_double(payload + it->second->offset + 8 * i);
    return t;
  };

  const auto mean_it = by_name.find("scaler.mean");
  if (mean_it == by_name.end()) fail(source, "missing tensor 'scaler.mean'");
  const std::size_t width = mean_it->second->shape.back();
  auto& model = archive.model;
  model.config = archive.settings.train;
  model.scaler.mean = read("scaler.mean", {1, width}).storage();
  model.scaler.scale = read("scaler.scale", {1, width}).storage();
  try {
    model.config.validate();
  } catch (const Error& e) {
    fail(source, std::string("invalid settings: ") + e.what());
  }
  const auto shape = model.config.shape(width);
  std::size_t consumed = 2;
  for (std::size_t loc = 0; loc < ids.size(); ++loc) {
    auto params = model::init_params(shape, 0, ids[loc]);
    params.for_each(
        [&](std::string_view name, ad::Tensor& t) {
          t = read(std::to_string(loc) + "." + std::string(name), t.shape());
          ++consumed;
        },
        true);
    model.params.push_back(std::move(params));
  }
  if (consumed != entries.size()) fail(source, "archive lists tensors that the model does not use");
  return archive;
}

void save_archive(const ModelArchive& archive, const std::filesystem::path& path) {
  const std::string bytes = serialize_archive(archive);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write archive " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing archive " + path.string());
}

ModelArchive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open archive " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_archive(buf.str(), path.string());
}

}  // namespace stan::cli
