#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace iqlut::cli {

using json = nlohmann::json;

// Collects what a run read and wrote; main() turns it into the manifest.
class RunContext {
 public:
  RunContext();

  void set_command(std::string name) { command_ = std::move(name); }
  const std::string& command() const { return command_; }

  // Records a file or directory input with its content hash.
  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_output(const std::string& role, const std::filesystem::path& path);

  // One JSON object per line on stdout.
  void emit(json record) const;

  json manifest(const CLI::App& sub, int exit_code, const std::string& error) const;

  int threads = 1;

 private:
  std::string command_;
  json inputs_ = json::object();
  json outputs_ = json::object();
  std::chrono::steady_clock::time_point start_;
};

// "crc32:<hex>" of a file; for a directory, of the sorted (name, crc) list
// of its supported images.
std::string content_hash(const std::filesystem::path& path);

}  // namespace iqlut::cli
