// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef GIBBSDIV_SPAWN_UTIL_HPP
#define GIBBSDIV_SPAWN_UTIL_HPP

#include <array>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <sys/wait.h>

namespace spawnutil {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

// Runs a shell command, capturing stdout (append "2>&1" to merge stderr).
inline RunResult run(const std::string& command) {
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed for: " + command);
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    result.output.append(buf.data(), got);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace spawnutil

#endif
