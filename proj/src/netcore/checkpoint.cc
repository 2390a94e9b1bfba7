// Copyright 2026 The xlvc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xlvc/netcore/checkpoint.h"

#include <bit>
#include <fstream>
#include <sstream>
#include <tuple>

namespace xlvc {

namespace {

constexpr const char* kMagicLine = "xlvc-checkpoint 1";

}  // namespace

void Checkpoint::SetMeta(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of(" \t\n") != std::string::npos)
    throw Error("checkpoint meta key '" + key + "' must be a single token");
  if (value.find('\n') != std::string::npos) throw Error("checkpoint meta value must be one line");
  for (auto& [k, v] : meta)
    if (k == key) {
      v = value;
      return;
    }
  meta.emplace_back(key, value);
}

std::optional<std::string> Checkpoint::FindMeta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return std::nullopt;
}

const std::string& Checkpoint::Meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw Error("checkpoint has no meta entry '" + key + "'");
}

void Checkpoint::AddTensor(const std::string& name, Matrix value) {
  if (FindTensor(name)) throw Error("checkpoint: duplicate tensor '" + name + "'");
  if (name.find_first_of(" \t\n") != std::string::npos) throw Error("checkpoint: bad tensor name '" + name + "'");
  tensors.emplace_back(name, std::move(value));
}

const Matrix* Checkpoint::FindTensor(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return &m;
  return nullptr;
}

const Matrix& Checkpoint::Tensor(const std::string& name) const {
  const Matrix* m = FindTensor(name);
  if (!m) throw Error("checkpoint has no tensor '" + name + "'");
  return *m;
}

void Checkpoint::AddParams(const ParamStore& params, const std::string& prefix) {
  for (int i = 0; i < params.size(); ++i) AddTensor(prefix + params.name(i), params.value(i));
}

void Checkpoint::LoadParams(ParamStore& params, const std::string& prefix) const {
  for (int i = 0; i < params.size(); ++i) {
    const Matrix& m = Tensor(prefix + params.name(i));
    if (m.rows() != params.value(i).rows() || m.cols() != params.value(i).cols())
      throw Error("checkpoint tensor '" + prefix + params.name(i) + "' has wrong shape");
    params.value(i) = m;
  }
}

void WriteCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ostringstream header;
  header << kMagicLine << "\n";
  header << "seed " << ckpt.seed << "\n";
  header << "config_hash " << (ckpt.config_hash.empty() ? "-" : ckpt.config_hash) << "\n";
  for (const auto& [k, v] : ckpt.meta) header << "meta " << k << " " << v << "\n";
  for (const auto& [n, m] : ckpt.tensors) header << "tensor " << n << " " << m.rows() << " " << m.cols() << "\n";
  header << "end\n";

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write checkpoint " + path.string());
  const std::string h = header.str();
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  std::string buf;
  for (const auto& [n, m] : ckpt.tensors) {
    buf.clear();
    buf.reserve(m.size() * 8);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const uint64_t bits = std::bit_cast<uint64_t>(m(r, c));
        for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
      }
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!os) throw Error("write failed: " + path.string());
}

Checkpoint ReadCheckpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kMagicLine) throw Error(path.string() + ": not an xlvc checkpoint");
  Checkpoint ckpt;
  std::vector<std::tuple<std::string, int, int>> shapes;
  bool ended = false;
  while (std::getline(is, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "seed") {
      ls >> ckpt.seed;
    } else if (tag == "config_hash") {
      ls >> ckpt.config_hash;
      if (ckpt.config_hash == "-") ckpt.config_hash.clear();
    } else if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
      ckpt.meta.emplace_back(key, rest);
    } else if (tag == "tensor") {
      std::string name;
      int rows = 0, cols = 0;
      ls >> name >> rows >> cols;
      if (!ls || rows < 0 || cols < 0) throw Error(path.string() + ": malformed tensor line '" + line + "'");
      shapes.emplace_back(name, rows, cols);
    } else {
      throw Error(path.string() + ": unexpected header line '" + line + "'");
    }
  }
  if (!ended) throw Error(path.string() + ": missing 'end' marker");
  for (const auto& [name, rows, cols] : shapes) {
    std::string buf(static_cast<std::size_t>(rows) * cols * 8, '\0');
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() != static_cast<std::streamsize>(buf.size()))
      throw Error(path.string() + ": truncated data for tensor '" + name + "'");
    Matrix m(rows, cols);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c, p += 8) {
        uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<uint64_t>(p[b]) << (8 * b);
        m(r, c) = std::bit_cast<double>(bits);
      }
    ckpt.tensors.emplace_back(name, std::move(m));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw Error(path.string() + ": trailing bytes after tensors");
  return ckpt;
}

}  // namespace xlvc
