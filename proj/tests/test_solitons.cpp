#include <doctest.h>

TEST_SUITE("solitons") {}
