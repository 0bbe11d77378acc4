#pragma once

#include <stdexcept>
#include <string>

namespace dynprop {

// Malformed input files, dangling references, missing artifacts.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An iterative kernel hit its iteration cap, or training produced non-finite values.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dynprop
