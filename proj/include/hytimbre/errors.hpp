#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hytimbre {

// Error taxonomy used across the library:
//   dimension / shape problems  -> std::invalid_argument
//   numeric-domain problems     -> std::domain_error
//   broken caller contracts     -> std::logic_error
//   bad configuration values    -> ConfigError
//   malformed binary files      -> FormatError (carries the byte offset)

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace hytimbre
