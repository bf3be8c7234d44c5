// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mavid/core_types.hpp"
#include "mavid/nn.hpp"

namespace mavid {

// Layout (little-endian):
//   "MVCK" | u32 version | str component | str stage | u64 step
//   | str config echo | u64 config hash | u32 n | n * (str name | i32 rows | i32 cols | f64[rows*cols])
//   | str rng state
// Strings are u32-length prefixed bytes.
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::string component;  // "creator" or "conductor"
    std::string stage;      // training stage that produced it
    uint64_t step = 0;
    std::string config_text;
    uint64_t config_hash = 0;
    std::vector<std::pair<std::string, Mat>> blobs;
    std::string rng_state;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ck);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// Copies every store parameter into `ck.blobs` under its registered name.
void export_params(const nn::ParamStore& store, Checkpoint& ck);
// Loads parameters by name; missing names or shape differences raise ConfigMismatch.
void import_params(nn::ParamStore& store, const Checkpoint& ck);

}  // namespace mavid
