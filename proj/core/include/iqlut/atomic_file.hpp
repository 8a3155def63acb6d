#pragma once

#include <filesystem>
#include <functional>
#include <string_view>

namespace iqlut {

/// Runs `writer` against a temporary sibling of `target` and renames it into
/// place on success. On any exception the temporary is removed and the
/// exception propagates, so `target` is never left half-written.
void write_atomically(const std::filesystem::path& target,
                      const std::function<void(const std::filesystem::path&)>& writer);

void write_file_atomically(const std::filesystem::path& target, std::string_view bytes);

}  // namespace iqlut
