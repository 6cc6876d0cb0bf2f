#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace dic {

/// Locale-independent, reproducible double formatting for CSV and tables.
/// Infinity renders as "inf" (the PSNR identical-pair sentinel).
inline std::string fmt_double(double v, int precision = 10) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

}  // namespace dic
