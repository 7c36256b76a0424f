#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace guidelab {

using Vector = Eigen::VectorXd;
/// One point per row; rows are contiguous.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by a caller-supplied argument.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A floating-point state became non-finite or a loss diverged.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Model and schedule disagree on which diffusion they belong to.
class MismatchError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  enum class Kind { bad_magic, version_mismatch, truncated, checksum, malformed, io };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline const char* to_string(FormatError::Kind kind) {
  switch (kind) {
    case FormatError::Kind::bad_magic: return "bad_magic";
    case FormatError::Kind::version_mismatch: return "version_mismatch";
    case FormatError::Kind::truncated: return "truncated";
    case FormatError::Kind::checksum: return "checksum";
    case FormatError::Kind::malformed: return "malformed";
    case FormatError::Kind::io: return "io";
  }
  return "unknown";
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// FNV-1a over raw bytes; used for fingerprints and manifest hashes.
inline std::uint64_t fnv1a(const void* data, std::size_t size,
                           std::uint64_t hash = 0xcbf29ce484222325ULL) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace guidelab
