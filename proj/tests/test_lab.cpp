#include <doctest.h>

TEST_SUITE("lab") {}
