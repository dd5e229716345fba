#include "sturmian/numfmt.hpp"

#include <cmath>
#include <cstdio>

namespace sturmian {

std::string format_real(double x) {
  if (x == 0.0) x = 0.0;  // drop the sign of negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace sturmian
