#include "test_support.hpp"
#include <gtest/gtest.h>
