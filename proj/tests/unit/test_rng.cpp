#include <doctest.h>

#include <cmath>

#include "binsreg/rng.hpp"

using namespace binsreg;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  CHECK(Philox4x32::generate({0, 0, 0, 0}, {0, 0}) ==
        Philox4x32::Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        Philox4x32::Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        Philox4x32::Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal streams: reproducible, distinct, standard moments") {
  NormalStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.next();
    CHECK(va == b.next());
    differs_stream |= va != c.next();
    differs_seed |= va != d.next();
  }
  CHECK(differs_stream);
  CHECK(differs_seed);

  NormalStream s(1, 0);
  const int n = 400000;
  double m1 = 0, m2 = 0, m4 = 0;
  int beyond = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.next();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
    beyond += std::abs(z) > 1.959964;
  }
  CHECK(std::abs(m1 / n) < 0.01);
  CHECK(std::abs(m2 / n - 1.0) < 0.01);
  CHECK(std::abs(m4 / n - 3.0) < 0.05);
  CHECK(std::abs(static_cast<double>(beyond) / n - 0.05) < 0.002);
}
