#include "run_context.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <zlib.h>

#include "iqlut/dataset.hpp"
#include "iqlut/error.hpp"

namespace iqlut::cli {

namespace {

uLong crc_of_file(const std::filesystem::path& path, uLong crc) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot read {}", path.string()));
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
}

json option_value(const CLI::Option* opt) {
  if (opt->count() == 0) {
    if (opt->get_expected_max() == 0) return json(false);
    const std::string d = opt->get_default_str();
    return d.empty() ? json(nullptr) : json(d);
  }
  const auto results = opt->results();
  if (opt->get_expected_max() == 0) return json(true);
  if (results.size() == 1) return json(results[0]);
  return json(results);
}

}  // namespace

RunContext::RunContext() : start_(std::chrono::steady_clock::now()) {}

std::string content_hash(const std::filesystem::path& path) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  if (std::filesystem::is_directory(path)) {
    for (const auto& f : list_images(path)) {
      const std::string name = f.filename().string();
      crc = ::crc32(crc, reinterpret_cast<const Bytef*>(name.data()), static_cast<uInt>(name.size()));
      crc = crc_of_file(f, crc);
    }
  } else {
    crc = crc_of_file(path, crc);
  }
  return fmt::format("crc32:{:08x}", static_cast<std::uint32_t>(crc));
}

void RunContext::add_input(const std::string& role, const std::filesystem::path& path) {
  inputs_[role] = {{"path", path.string()}, {"hash", content_hash(path)}};
}

void RunContext::add_output(const std::string& role, const std::filesystem::path& path) {
  outputs_[role] = path.string();
}

void RunContext::emit(json record) const {
  std::fputs((record.dump() + "\n").c_str(), stdout);
  std::fflush(stdout);
}

json RunContext::manifest(const CLI::App& sub, int exit_code, const std::string& error) const {
  json config = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "version") continue;
    config[name] = option_value(opt);
  }
  config["threads"] = threads;
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  json m = {{"record", "manifest"},
            {"command", command_},
            {"config", config},
            {"inputs", inputs_},
            {"outputs", exit_code == 0 ? outputs_ : json::object()},
            {"tool_version", IQLUT_VERSION},
            {"wall_clock_s", wall},
            {"exit_code", exit_code}};
  if (!error.empty()) m["error"] = error;
  return m;
}

}  // namespace iqlut::cli
