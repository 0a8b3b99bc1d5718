#pragma once

#include <stdexcept>
#include <string>

namespace boxgraph {

/// Malformed or inconsistent input data (files, records, model/config mismatch).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad invocation: unknown flags, conflicting options.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace boxgraph
