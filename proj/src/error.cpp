// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/error.hpp"

namespace slidesplat {

const char *to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::MissingFlow: return "MissingFlow";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::EmptySeedCloud: return "EmptySeedCloud";
    case ErrorKind::MissingImage: return "MissingImage";
    case ErrorKind::NearPiRotation: return "NearPiRotation";
    case ErrorKind::OverlapMismatch: return "OverlapMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::DataError: return "DataError";
    case ErrorKind::NumericFailure: return "NumericFailure";
    case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

} // namespace slidesplat
