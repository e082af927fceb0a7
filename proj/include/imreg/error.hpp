#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace imreg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument or broken precondition on input data.
struct InvalidArgument : Error {
  using Error::Error;
};

// Rank-deficient geometry: collinear point sets, collapsed rotation averages.
struct DegenerateError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& path, std::uint64_t offset, const std::string& what)
      : Error(path + " (byte " + std::to_string(offset) + "): " + what),
        path(path), byte_offset(offset) {}

  std::string path;
  std::uint64_t byte_offset;
};

// Offset 4 is the count field of the descriptor file.
struct CountMismatchError : ParseError {
  CountMismatchError(const std::string& path, std::uint64_t keypoints, std::uint64_t descriptors)
      : ParseError(path, 4,
                   "descriptor count " + std::to_string(descriptors) +
                       " does not match keypoint count " + std::to_string(keypoints)),
        keypoint_count(keypoints), descriptor_count(descriptors) {}

  std::uint64_t keypoint_count;
  std::uint64_t descriptor_count;
};

}  // namespace imreg
