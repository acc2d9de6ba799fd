#include <gtest/gtest.h>

// The packaged gtest_main archive was built with a different LTO version.
int main(int argc, char** argv) {
  testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
