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

#ifndef XLVC_CONFIG_H_
#define XLVC_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "xlvc/common.h"

namespace xlvc {

// Flat `key = value` text. '#' starts a comment; blank lines are skipped.
// Sections are expressed through dotted key prefixes ("train.lr").
struct KeyValueEntry {
  std::string key;
  std::string value;
  int line = 0;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

std::vector<KeyValueEntry> ParseKeyValues(const std::string& text, const std::string& origin = "<config>");
std::vector<KeyValueEntry> ReadKeyValueFile(const std::filesystem::path& path);

// Binds config keys to typed fields. Applying entries with an unbound key is
// an error; Echo() prints every bound key with its current value.
class ConfigSchema {
 public:
  void Bind(const std::string& key, int* field, const std::string& doc);
  void Bind(const std::string& key, double* field, const std::string& doc);
  void Bind(const std::string& key, uint64_t* field, const std::string& doc);
  void Bind(const std::string& key, bool* field, const std::string& doc);
  void Bind(const std::string& key, std::string* field, const std::string& doc);

  void Apply(const std::vector<KeyValueEntry>& entries, const std::string& origin = "<config>") const;
  void Set(const std::string& key, const std::string& value) const;
  bool Has(const std::string& key) const { return fields_.count(key) > 0; }

  std::string Echo() const;
  std::string Documentation() const;

 private:
  struct Field {
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
    std::string doc;
  };
  std::vector<std::string> order_;
  std::map<std::string, Field> fields_;
};

std::string FormatDouble(double v);

}  // namespace xlvc

#endif  // XLVC_CONFIG_H_
