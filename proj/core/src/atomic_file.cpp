#include "iqlut/atomic_file.hpp"

#include <unistd.h>

#include <fstream>
#include <string>

#include "iqlut/error.hpp"

namespace iqlut {

void write_atomically(const std::filesystem::path& target,
                      const std::function<void(const std::filesystem::path&)>& writer) {
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  try {
    writer(tmp);
    std::filesystem::rename(tmp, target);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

void write_file_atomically(const std::filesystem::path& target, std::string_view bytes) {
  write_atomically(target, [&](const std::filesystem::path& tmp) {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw DataError("short write to " + tmp.string());
  });
}

}  // namespace iqlut
