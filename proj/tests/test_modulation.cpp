#include <doctest.h>

TEST_SUITE("modulation") {}
