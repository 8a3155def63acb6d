#include "iqlut/error.hpp"

namespace iqlut {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kData:
      return 3;
    case ErrorKind::kIntegrity:
      return 4;
    case ErrorKind::kNumerical:
      return 5;
  }
  return 1;
}

}  // namespace iqlut
