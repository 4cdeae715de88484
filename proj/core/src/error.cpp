#include "tpt/error.hpp"

#include <fmt/format.h>

namespace tpt {

ParseError::ParseError(std::filesystem::path path, std::size_t line, const std::string& what)
    : Error(fmt::format("{}:{}: {}", path.string(), line, what)), path_(std::move(path)), line_(line) {}

IoError::IoError(std::filesystem::path path, const std::string& what)
    : Error(fmt::format("{}: {}", path.string(), what)), path_(std::move(path)) {}

IntegrityError::IntegrityError(std::filesystem::path path, const std::string& what)
    : Error(fmt::format("integrity check failed for {}: {}", path.string(), what)), path_(std::move(path)) {}

StageError::StageError(std::string stage, int round, const std::string& cause)
    : Error(fmt::format("stage '{}' failed in round {}: {}", stage, round, cause)),
      stage_(std::move(stage)),
      round_(round),
      cause_(cause) {}

}  // namespace tpt
