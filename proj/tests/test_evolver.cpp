#include <doctest.h>

TEST_SUITE("evolver") {}
