// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace omnifx {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand extents do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed on-disk data or configuration text.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace omnifx
