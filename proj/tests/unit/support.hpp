#pragma once

#include <gtest/gtest.h>

#include "dtdss/error.hpp"

// Passes when `statement` throws dtdss::Error carrying `expected`.
#define EXPECT_DTDSS_ERROR(statement, expected)                                   \
    do {                                                                          \
        try {                                                                     \
            statement;                                                            \
            ADD_FAILURE() << "no exception from " #statement;                     \
        } catch (const ::dtdss::Error& e_) {                                      \
            EXPECT_EQ(e_.code(), expected) << e_.what();                          \
        }                                                                         \
    } while (0)
