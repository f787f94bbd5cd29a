#pragma once

#include <optional>

#include "fracsing/error.hpp"

// Code of the fracsing::Error thrown by f, or nullopt when f returns.
template <class F>
std::optional<fracsing::ErrorCode> thrown_code(F&& f) {
    try {
        f();
    } catch (const fracsing::Error& e) {
        return e.code();
    }
    return std::nullopt;
}
