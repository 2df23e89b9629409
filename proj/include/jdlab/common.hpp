#ifndef JDLAB_COMMON_HPP
#define JDLAB_COMMON_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace jdlab {

using PointId = std::uint32_t;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Bad input from the caller: malformed spec, out-of-range parameter, ...
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The operation needs data the space does not carry (e.g. no graph distance).
class UnsupportedOperation : public UserError {
 public:
  using UserError::UserError;
};

/// A solver failed to converge or produced a non-finite result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw UserError(msg);
}

/// Real-valued function on the points of a space.
using Field = std::vector<double>;

inline std::vector<PointId> indices_of(const std::vector<bool>& mask) {
  std::vector<PointId> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(static_cast<PointId>(i));
  return out;
}

}  // namespace jdlab

#endif  // JDLAB_COMMON_HPP
