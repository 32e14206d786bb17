// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace slidesplat {

inline constexpr char kModelMagic[4] = {'S', 'S', 'W', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Little-endian window-model blob. Layout, in order:
///   magic "SSWM", u32 version,
///   u32 N_g, u32 M, u32 sh_degree, i32 frame_start, i32 frame_end, u32 mode, u64 seed,
///   u32 iterations, f32 final_loss,
///   f32 means[N*3], quaternions[N*4] (w,x,y,z), log_scales[N*3], opacity_logits[N],
///       sh[N*3K] (basis-major, channel-minor), alpha[N*M],
///   u32 mlp_modes, u32 frequencies, u32 depth, u32 width, u32 skip_count, u32 skip_after[],
///   u32 layer_count, then per layer: u32 f_in, u32 f_out, u32 activation (0 relu, 1 linear),
///       f32 weights[M][f_in][f_out] row-major, f32 biases[M][f_out],
///   f32 norm_mean[3], f32 norm_std[3].
/// Every float array is stored as 32-bit IEEE values.
std::vector<std::uint8_t> encode_model(const WindowModel &model);
/// Throws ParseError on a bad magic, unsupported version, or truncated/oversized payload.
WindowModel decode_model(const std::vector<std::uint8_t> &bytes);

/// zlib crc32 of a byte buffer.
std::uint32_t crc32_of(const std::vector<std::uint8_t> &bytes);

/// Writes the blob and returns its crc32.
std::uint32_t save_model(const std::filesystem::path &path, const WindowModel &model);
/// Reads a blob; when `expected_crc` is given a mismatch throws DataError.
WindowModel load_model(const std::filesystem::path &path, const std::uint32_t *expected_crc = nullptr);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path);
void write_file_bytes(const std::filesystem::path &path, const std::vector<std::uint8_t> &bytes);

} // namespace slidesplat
