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

#include "xlvc/features/feature_file.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace xlvc {

namespace {

void PutU16(std::vector<unsigned char>& buf, uint16_t v) {
  buf.push_back(static_cast<unsigned char>(v & 0xff));
  buf.push_back(static_cast<unsigned char>(v >> 8));
}

void PutU32(std::vector<unsigned char>& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

uint16_t GetU16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

uint32_t GetU32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

void WriteFeatureFile(const std::filesystem::path& path, uint16_t kind_code, const Matrix& matrix) {
  if (matrix.rows() < 1 || matrix.cols() < 1)
    throw FeatureFileError(FeatureFileError::Code::kEmptyShape,
                           path.string() + ": refusing to write empty matrix (" +
                               std::to_string(matrix.rows()) + "x" + std::to_string(matrix.cols()) + ")");
  const auto frames = static_cast<uint32_t>(matrix.rows());
  const auto dim = static_cast<uint32_t>(matrix.cols());

  std::vector<unsigned char> buf;
  buf.reserve(kFeatureFileHeaderBytes + 4ull * frames * dim);
  buf.insert(buf.end(), {'X', 'V', 'C', 'F'});
  PutU16(buf, kFeatureFileVersion);
  PutU16(buf, kind_code);
  PutU32(buf, dim);
  PutU32(buf, frames);
  for (uint32_t t = 0; t < frames; ++t)
    for (uint32_t d = 0; d < dim; ++d)
      PutU32(buf, std::bit_cast<uint32_t>(static_cast<float>(matrix(t, d))));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FeatureFileError(FeatureFileError::Code::kIo, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw FeatureFileError(FeatureFileError::Code::kIo, "write failed: " + path.string());
}

FeatureFile ReadFeatureFile(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FeatureFileError(FeatureFileError::Code::kIo, "cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  if (buf.size() < kFeatureFileHeaderBytes)
    throw FeatureFileError(FeatureFileError::Code::kTruncated,
                           path.string() + ": truncated header (" + std::to_string(buf.size()) + " bytes)");
  if (std::memcmp(buf.data(), "XVCF", 4) != 0)
    throw FeatureFileError(FeatureFileError::Code::kBadMagic, path.string() + ": bad magic");
  const uint16_t version = GetU16(buf.data() + 4);
  if (version != kFeatureFileVersion)
    throw FeatureFileError(FeatureFileError::Code::kUnsupportedVersion,
                           path.string() + ": unsupported version " + std::to_string(version));
  FeatureFile out;
  out.kind_code = GetU16(buf.data() + 6);
  const uint32_t dim = GetU32(buf.data() + 8);
  const uint32_t frames = GetU32(buf.data() + 12);
  if (dim == 0 || frames == 0)
    throw FeatureFileError(FeatureFileError::Code::kEmptyShape, path.string() + ": zero dim or frame count");

  const uint64_t expected = 4ull * dim * frames;
  const uint64_t actual = buf.size() - kFeatureFileHeaderBytes;
  if (actual < expected)
    throw FeatureFileError(FeatureFileError::Code::kTruncated,
                           path.string() + ": truncated payload, expected " + std::to_string(expected) +
                               " bytes, found " + std::to_string(actual));
  if (actual > expected)
    throw FeatureFileError(FeatureFileError::Code::kTrailingBytes,
                           path.string() + ": payload length " + std::to_string(actual) + " exceeds expected " +
                               std::to_string(expected));

  out.matrix.resize(frames, dim);
  const unsigned char* p = buf.data() + kFeatureFileHeaderBytes;
  for (uint32_t t = 0; t < frames; ++t)
    for (uint32_t d = 0; d < dim; ++d, p += 4) out.matrix(t, d) = std::bit_cast<float>(GetU32(p));
  return out;
}

Matrix ReadFeatureMatrix(const std::filesystem::path& path, KindCode expected) {
  FeatureFile f = ReadFeatureFile(path);
  if (f.kind_code != static_cast<uint16_t>(expected))
    throw Error(path.string() + ": kind code " + std::to_string(f.kind_code) + ", expected " +
                std::to_string(static_cast<int>(expected)));
  return std::move(f.matrix);
}

KindCode PpgKindCode(PpgKind kind) {
  switch (kind) {
    case PpgKind::kMonoA: return KindCode::kMonoAPpg;
    case PpgKind::kMonoB: return KindCode::kMonoBPpg;
    case PpgKind::kBilingualStacked: return KindCode::kBilingualPpg;
    case PpgKind::kMixedLingual: break;
  }
  return KindCode::kMixedPpg;
}

}  // namespace xlvc
