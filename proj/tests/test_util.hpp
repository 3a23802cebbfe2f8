#pragma once

#include <gtest/gtest.h>

#include "tensens/error.hpp"

#define EXPECT_TS_ERROR(stmt, expected_code)                                                  \
  do {                                                                                        \
    try {                                                                                     \
      stmt;                                                                                   \
      ADD_FAILURE() << "expected " << ::tensens::to_string(expected_code) << ", nothing thrown"; \
    } catch (const ::tensens::Error& e_) {                                                    \
      EXPECT_EQ(e_.code(), expected_code) << e_.what();                                       \
    }                                                                                         \
  } while (0)
