#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "binsreg/csv.hpp"

namespace fixtures {

// 60 rows on 10 distinct x values plus one row with a missing outcome; too
// few distinct values for any nonparametric procedure.
inline std::string gated_csv() {
  std::ostringstream s;
  s << "y,x,w,c\n";
  for (int i = 0; i < 60; ++i) {
    if (i == 4) s << "NA,3,1,0\n";
    const int x = i % 10;
    s << binsreg::csv::format_double(std::round((0.5 * x + ((i * 7) % 5 - 2) * 0.1) * 1000) / 1000) << ',' << x
      << ',' << (i * 3) % 4 << ',' << i % 6 << '\n';
  }
  return s.str();
}

inline const char* const kGatedFitArgs[] = {"--y", "y", "--x", "x", "--w", "w", "--line", "1,1", "--cb", "1,1",
                                            "--ci", "0,0", "--polyreg", "1", "--noplot"};
inline const char* const kGatedTestArgs[] = {"--y", "y", "--x", "x", "--testmodelpoly", "1"};

}  // namespace fixtures
