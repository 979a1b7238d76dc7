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

#pragma once

#include <filesystem>
#include <string>

#include "stan/cli/config.hpp"
#include "stan/training/trainer.hpp"

namespace stan::cli {

inline constexpr const char* kArchiveMagic = "STAN-ARCHIVE-1";

// Trained parameters, feature statistics and the settings that produced them.
// `settings.graph.tau` always holds the threshold the training graph used.
struct ModelArchive {
  RunConfig settings;
  training::TrainedModel model;
};

// Layout: magic line; `setting <key> = <value>` lines; `location <id>` lines;
// `tensor <name> <rank> <extents...> <offset>` lines; `end <bytes>`; then the
// little-endian float64 payload. Offsets are byte positions in the payload.
std::string serialize_archive(const ModelArchive& archive);
ModelArchive parse_archive(const std::string& bytes, const std::string& source);

void save_archive(const ModelArchive& archive, const std::filesystem::path& path);
ModelArchive load_archive(const std::filesystem::path& path);

}  // namespace stan::cli
