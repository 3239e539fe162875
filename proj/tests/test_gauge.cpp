#include <doctest.h>

TEST_SUITE("gauge") {}
