// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "mavid/binary_io.hpp"

namespace mavid {

namespace {
constexpr char kMagic[] = "MVCK";
constexpr uint32_t kMaxBlobs = 1u << 20;
}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
    io::write_magic(os, kMagic);
    io::write_u32(os, kCheckpointVersion);
    io::write_string(os, ck.component);
    io::write_string(os, ck.stage);
    io::write_u64(os, ck.step);
    io::write_string(os, ck.config_text);
    io::write_u64(os, ck.config_hash);
    io::write_u32(os, static_cast<uint32_t>(ck.blobs.size()));
    for (const auto& [name, m] : ck.blobs) {
        io::write_string(os, name);
        io::write_i32(os, static_cast<int32_t>(m.rows()));
        io::write_i32(os, static_cast<int32_t>(m.cols()));
        for (Eigen::Index i = 0; i < m.size(); ++i) io::write_f64(os, m.data()[i]);
    }
    io::write_string(os, ck.rng_state);
    if (!os) fail(ErrorCode::IoError, "checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& is) {
    io::expect_magic(is, kMagic, "checkpoint");
    const uint32_t version = io::read_u32(is);
    if (version != kCheckpointVersion)
        fail(ErrorCode::FormatError, "unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    ck.component = io::read_string(is);
    ck.stage = io::read_string(is);
    ck.step = io::read_u64(is);
    ck.config_text = io::read_string(is);
    ck.config_hash = io::read_u64(is);
    const uint32_t n = io::read_u32(is);
    if (n > kMaxBlobs) fail(ErrorCode::FormatError, "implausible blob count");
    for (uint32_t b = 0; b < n; ++b) {
        std::string name = io::read_string(is);
        const int32_t rows = io::read_i32(is), cols = io::read_i32(is);
        if (rows < 0 || cols < 0 || static_cast<int64_t>(rows) * cols > (1 << 26))
            fail(ErrorCode::FormatError, "bad blob shape for " + name);
        Mat m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = io::read_f64(is);
        ck.blobs.emplace_back(std::move(name), std::move(m));
    }
    ck.rng_state = io::read_string(is);
    return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) fail(ErrorCode::IoError, "cannot write " + tmp);
        write_checkpoint(os, ck);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "cannot open checkpoint " + path);
    return read_checkpoint(is);
}

void export_params(const nn::ParamStore& store, Checkpoint& ck) {
    for (const auto& [name, var] : store.entries()) ck.blobs.emplace_back(name, var.value());
}

void import_params(nn::ParamStore& store, const Checkpoint& ck) {
    for (auto& [name, var] : store.entries()) {
        const Mat* found = nullptr;
        for (const auto& [n, m] : ck.blobs)
            if (n == name) found = &m;
        if (!found) fail(ErrorCode::ConfigMismatch, "checkpoint lacks parameter " + name);
        if (found->rows() != var.rows() || found->cols() != var.cols())
            fail(ErrorCode::ConfigMismatch, "checkpoint shape differs for " + name);
        ag::Var v = var;
        v.mutable_value() = *found;
    }
}

}  // namespace mavid
