#include <doctest.h>

TEST_SUITE("functionals") {}
