#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace tpt {

// Base for every error raised by the library. Callers that only need a
// message can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed line in a line-record file.
class ParseError : public Error {
public:
    ParseError(std::filesystem::path path, std::size_t line, const std::string& what);
    const std::filesystem::path& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::filesystem::path path_;
    std::size_t line_;
};

// Data parsed fine but breaks a domain invariant (duplicate id, two
// ground-truth variants, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    IoError(std::filesystem::path path, const std::string& what);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

// A stored artifact no longer matches the digest recorded for it.
class IntegrityError : public Error {
public:
    IntegrityError(std::filesystem::path path, const std::string& what);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// An external process (trainer hook) violated its side of a file contract.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// The execution sandbox could not be set up at all; distinct from the
// judged program failing.
class SandboxError : public Error {
public:
    using Error::Error;
};

// Raised by the round driver when a stage fails; wraps the cause.
class StageError : public Error {
public:
    StageError(std::string stage, int round, const std::string& cause);
    const std::string& stage() const noexcept { return stage_; }
    int round() const noexcept { return round_; }
    const std::string& cause() const noexcept { return cause_; }

private:
    std::string stage_;
    int round_;
    std::string cause_;
};

}  // namespace tpt
