#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>

#include "madapter/toy_task.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

inline constexpr char kCheckpointMagic[4] = {'M', 'A', 'D', 'A'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers u32 little-endian:
///   "MADA" version count
///   count × { name_len name rank dims... f32 data }
///   config_len config_json
void save_checkpoint(std::ostream& out, const Seq2SeqModel& model);
void save_checkpoint(const std::filesystem::path& path, const Seq2SeqModel& model);

/// Throws FormatError on bad magic, version, truncation, or a tensor set
/// that does not match the stored config.
std::unique_ptr<Seq2SeqModel> load_checkpoint(std::istream& in);
std::unique_ptr<Seq2SeqModel> load_checkpoint(const std::filesystem::path& path);

}  // namespace MADAPTER_NS
}  // namespace madapter
