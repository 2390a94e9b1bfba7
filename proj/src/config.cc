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

#include "xlvc/config.h"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace xlvc {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
  return out;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char tmp[32];
    std::snprintf(tmp, sizeof(tmp), "%.*g", prec, v);
    if (std::strtod(tmp, nullptr) == v) return tmp;
  }
  return buf;
}

std::vector<KeyValueEntry> ParseKeyValues(const std::string& text, const std::string& origin) {
  std::vector<KeyValueEntry> out;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    KeyValueEntry e{Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)), lineno};
    if (e.key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<KeyValueEntry> ReadKeyValueFile(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ParseKeyValues(ss.str(), path.string());
}

void ConfigSchema::Bind(const std::string& key, int* field, const std::string& doc) {
  order_.push_back(key);
  fields_[key] = {[key, field](const std::string& v) { *field = ParseNumber<int>(key, v); },
                  [field] { return std::to_string(*field); }, doc};
}

void ConfigSchema::Bind(const std::string& key, double* field, const std::string& doc) {
  order_.push_back(key);
  fields_[key] = {[key, field](const std::string& v) {
                    char* end = nullptr;
                    const double d = std::strtod(v.c_str(), &end);
                    if (v.empty() || end != v.c_str() + v.size())
                      throw ConfigError("invalid value '" + v + "' for key '" + key + "'");
                    *field = d;
                  },
                  [field] { return FormatDouble(*field); }, doc};
}

void ConfigSchema::Bind(const std::string& key, uint64_t* field, const std::string& doc) {
  order_.push_back(key);
  fields_[key] = {[key, field](const std::string& v) { *field = ParseNumber<uint64_t>(key, v); },
                  [field] { return std::to_string(*field); }, doc};
}

void ConfigSchema::Bind(const std::string& key, bool* field, const std::string& doc) {
  order_.push_back(key);
  fields_[key] = {[key, field](const std::string& v) {
                    if (v == "true" || v == "1") *field = true;
                    else if (v == "false" || v == "0") *field = false;
                    else throw ConfigError("invalid boolean '" + v + "' for key '" + key + "'");
                  },
                  [field] { return std::string(*field ? "true" : "false"); }, doc};
}

void ConfigSchema::Bind(const std::string& key, std::string* field, const std::string& doc) {
  order_.push_back(key);
  fields_[key] = {[field](const std::string& v) { *field = v; }, [field] { return *field; }, doc};
}

void ConfigSchema::Set(const std::string& key, const std::string& value) const {
  auto it = fields_.find(key);
  if (it == fields_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(value);
}

void ConfigSchema::Apply(const std::vector<KeyValueEntry>& entries, const std::string& origin) const {
  for (const auto& e : entries) {
    try {
      Set(e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(origin + ":" + std::to_string(e.line) + ": " + err.what());
    }
  }
}

std::string ConfigSchema::Echo() const {
  std::ostringstream os;
  for (const auto& key : order_) os << key << " = " << fields_.at(key).get() << "\n";
  return os.str();
}

std::string ConfigSchema::Documentation() const {
  std::ostringstream os;
  for (const auto& key : order_) {
    const auto& f = fields_.at(key);
    os << key << " = " << f.get() << "    # " << f.doc << "\n";
  }
  return os.str();
}

}  // namespace xlvc
